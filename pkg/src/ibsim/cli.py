"""Command-line entry point.

Subcommands: ``run`` executes one scenario and writes its artifacts,
``sweep`` runs a template across a parameter grid into one aggregated CSV,
``validate`` checks a scenario file against the schema, ``list-scenarios``
prints the bundled scenario names.

Exit codes: 0 success, 1 missing file or runtime failure, 2 validation
error (bad JSON, schema violation, grid over the cap), 3 an embedded
assertion failed.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import csv
import itertools
import json
import os
import sys

from ibsim.beliefs import UpdateMode
from ibsim.errors import ScenarioError
from ibsim.runner import run_scenario, write_outputs
from ibsim.scenario import (
    Scenario,
    bundled_scenario_names,
    load_bundled,
    load_scenario,
    scenario_from_dict,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2
EXIT_ASSERTION = 3

DEFAULT_GRID_CAP = 512


def _resolve(ref: str) -> Scenario:
    """A scenario argument is a file path or a bundled scenario name."""
    if os.path.exists(ref):
        return load_scenario(ref)
    if ref in bundled_scenario_names():
        return load_bundled(ref)
    raise FileNotFoundError(f"no such file or bundled scenario: {ref!r}")


def _mode_of(args) -> UpdateMode | None:
    return UpdateMode(args.mode) if args.mode else None


def _cmd_run(args) -> int:
    scn = _resolve(args.scenario)
    result = run_scenario(scn, mode=_mode_of(args), horizon=args.horizon, seed=args.seed)
    out_dir = args.out or os.path.join("runs", scn.name)
    write_outputs(result, out_dir)
    sys.stdout.write(result.report())
    sys.stdout.write(f"artifacts written to {out_dir}\n")
    return EXIT_OK if result.ok else EXIT_ASSERTION


def _cmd_validate(args) -> int:
    scn = _resolve(args.scenario)
    sys.stdout.write(f"{scn.name}: valid ({scn.kind})\n")
    return EXIT_OK


def _cmd_list(args) -> int:
    for name in bundled_scenario_names():
        sys.stdout.write(name + "\n")
    return EXIT_OK


# ------------------------------------------------------------------ sweep


def _set_dotted(data: dict, path: str, value) -> None:
    """Apply one grid override; ``priors.X`` keeps the prior normalized."""
    parts = path.split(".")
    if parts[0] == "priors" and len(parts) == 2:
        priors = data["priors"]
        hid = parts[1]
        if hid not in priors:
            raise ScenarioError(f"grid override for unknown prior {hid!r}")
        rest = [k for k in priors if k != hid]
        rest_sum = sum(priors[k] for k in rest)
        priors[hid] = value
        if rest:
            if rest_sum > 0.0:
                scale = (1.0 - value) / rest_sum
                for k in rest:
                    priors[k] *= scale
            else:
                share = (1.0 - value) / len(rest)
                for k in rest:
                    priors[k] = share
        return
    node = data
    for key in parts[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ScenarioError(f"grid path {path!r} does not address a mapping")
    node[parts[-1]] = value


def _sweep_point(template: dict, overrides: dict, args) -> dict:
    data = copy.deepcopy(template)
    for path, value in overrides.items():
        _set_dotted(data, path, value)
    row: dict = {"overrides": overrides}
    try:
        scn = scenario_from_dict(data)
        result = run_scenario(scn, mode=_mode_of(args), horizon=args.horizon, seed=args.seed)
    except ScenarioError as exc:
        row.update(status="invalid", detail=str(exc))
        return row
    except Exception as exc:  # a degenerate point must not sink the sweep
        row.update(status="error", detail=f"{type(exc).__name__}: {exc}")
        return row
    conv = result.summary.get("convergence_steps")
    if not result.ok:
        status = "assert_fail"
    elif conv is None and result.summary.get("final_probs"):
        status = "no_convergence"
    else:
        status = "ok"
    row.update(
        status=status,
        detail="",
        convergence_steps=conv,
        final_probs=result.summary.get("final_probs") or {},
        game_outcome=result.summary.get("game_outcome"),
    )
    return row


def _cmd_sweep(args) -> int:
    if not os.path.exists(args.template):
        raise FileNotFoundError(f"no such file: {args.template}")
    if not os.path.exists(args.grid):
        raise FileNotFoundError(f"no such file: {args.grid}")
    with open(args.template, "r", encoding="utf-8") as fh:
        try:
            template = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"template is not valid JSON: {exc}") from exc
    scenario_from_dict(template)  # template must validate before any point runs
    with open(args.grid, "r", encoding="utf-8") as fh:
        try:
            grid = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"grid is not valid JSON: {exc}") from exc
    parameters = grid.get("parameters", {})
    if not isinstance(parameters, dict):
        raise ScenarioError("grid 'parameters' must be an object of lists")

    names = list(parameters)
    combos: list[dict] = []
    if names:
        for values in itertools.product(*(parameters[n] for n in names)):
            combos.append(dict(zip(names, values)))
    if len(combos) > args.max_points:
        raise ScenarioError(
            f"grid has {len(combos)} points, over the cap of {args.max_points}"
        )

    rows: list[dict] = []
    if combos:
        with concurrent.futures.ThreadPoolExecutor(
            max_workers=min(8, len(combos))
        ) as pool:
            futures = [pool.submit(_sweep_point, template, c, args) for c in combos]
            rows = [f.result() for f in futures]  # order-stable: grid index order

    hyp_ids = sorted({hid for r in rows for hid in r.get("final_probs", {})})
    out_dir = args.out or "sweep"
    os.makedirs(out_dir, exist_ok=True)
    out_path = os.path.join(out_dir, "sweep.csv")
    header = (
        ["grid_index"] + names + ["status", "convergence_steps"]
        + [f"final_p[{hid}]" for hid in hyp_ids] + ["game_outcome", "detail"]
    )
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for idx, row in enumerate(rows):
            conv = row.get("convergence_steps")
            record = [idx]
            record += [row["overrides"][n] for n in names]
            record += [row["status"], "" if conv is None else conv]
            record += [
                "%.12g" % row["final_probs"][hid] if hid in row.get("final_probs", {}) else ""
                for hid in hyp_ids
            ]
            record += [row.get("game_outcome") or "", row.get("detail", "")]
            writer.writerow(record)
    flagged = sum(1 for r in rows if r["status"] != "ok")
    sys.stdout.write(
        f"{len(rows)} grid points, {flagged} flagged; aggregated CSV at {out_path}\n"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ibsim",
        description="Testimony-updating simulation laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_overrides(p):
        p.add_argument("--horizon", type=int, default=None,
                       help="override step/round budget")
        p.add_argument("--seed", type=int, default=None, help="override RNG seed")
        p.add_argument("--mode", choices=["chained", "standard"], default=None,
                       help="override update mode")

    p_run = sub.add_parser("run", help="execute one scenario")
    p_run.add_argument("scenario", help="scenario file or bundled scenario name")
    p_run.add_argument("--out", default=None, help="output directory")
    add_overrides(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a template across a parameter grid")
    p_sweep.add_argument("template", help="scenario template file")
    p_sweep.add_argument("--grid", required=True, help="grid JSON file")
    p_sweep.add_argument("--out", default=None, help="output directory")
    p_sweep.add_argument("--max-points", type=int, default=DEFAULT_GRID_CAP,
                         help="grid size cap")
    add_overrides(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("scenario", help="scenario file or bundled scenario name")
    p_val.set_defaults(func=_cmd_validate)

    p_list = sub.add_parser("list-scenarios", help="print bundled scenario names")
    p_list.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RUNTIME
    except ScenarioError as exc:
        sys.stderr.write(f"validation error: {exc}\n")
        return EXIT_VALIDATION
    except Exception as exc:
        sys.stderr.write(f"runtime error: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
