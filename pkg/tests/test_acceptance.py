"""Acceptance gate: nine numbered criteria, one verdict line each.

Every criterion runs the bundled scenario (or a direct construction) and
collects failures instead of asserting mid-stream, so the verdict line is
emitted either way. Tolerances are pinned here and nowhere else.
"""

import time
from fractions import Fraction

from conftest import VERDICTS

from ibsim.beliefs import (
    BeliefState,
    LearnabilityProbe,
    UpdateMode,
    Verdict,
    learnability_probe,
    simulate,
)
from ibsim.hypotheses import EvaluationHypothesis
from ibsim.literals import Literal
from ibsim.runner import run_scenario, write_outputs
from ibsim.scenario import load_bundled
from ibsim.schedules import Constant
from ibsim.streams import TestimonyStream

EXACT = 0.0            # asserted with ==
ROUNDED_TOL = 5e-3     # two-decimal checkpoint values
MARGINAL_TOL = 1e-2    # terminal stream marginal
SELF_TOL = 1e-12       # self-consistency of the stage-2 marginal
ORACLE_TOL = 1e-12     # probe posterior vs exact-rational oracle


def _verdict(num: int, label: str, elapsed: float, failures: list[str]) -> None:
    ok = not failures
    line = f"[{'PASS' if ok else 'FAIL'}] {num}. {label} ({elapsed:.2f}s)"
    VERDICTS.append(line)
    print(line)
    assert ok, line + "\n  " + "\n  ".join(failures)


def _collect(result, failures: list[str]) -> None:
    for a in result.summary["assertions"]:
        if not a["ok"]:
            failures.append(f"{a['name']}: {a['detail']}")


def _cap(elapsed: float, cap: float, failures: list[str]) -> None:
    if elapsed > cap:
        failures.append(f"runtime {elapsed:.2f}s exceeds the {cap:.0f}s cap")


def test_01_walkthrough_exact_arithmetic():
    failures: list[str] = []
    t0 = time.perf_counter()

    result = run_scenario(load_bundled("two-hypothesis-walkthrough"))
    _collect(result, failures)

    stream = TestimonyStream("t", (frozenset({Literal("a")}),), repeats=True)
    hyps = [
        EvaluationHypothesis("h1", {"t": Constant(0.8)}),
        EvaluationHypothesis("h2", {"t": Constant(0.2)}),
    ]
    state = BeliefState.initial({"h1": 0.6, "h2": 0.4}, ("t",), UpdateMode.CHAINED)
    state = simulate(state, stream, 5, hyps)
    marg = state.marginal_trace("t")      # stages 1..5
    probs = state.prob_trace("h1")        # steps 0..5

    checks = [
        ("stage-1 marginal is exactly 0.56", marg[0] == 0.56),
        ("stage-2 posterior within 5e-3 of the rounded 0.86",
         abs(probs[2] - 0.86) <= ROUNDED_TOL),
        ("stage-3 posterior is exactly 0.96", probs[3] == 0.96),
        ("stage-3 marginal is exactly 0.776", marg[2] == 0.776),
        ("stage-4 posterior within 5e-3 of the rounded 0.99",
         abs(probs[4] - 0.99) <= ROUNDED_TOL),
        ("stage-5 marginal within 0.01 of 0.8", abs(marg[4] - 0.8) <= MARGINAL_TOL),
        # the two-decimal stage-2 marginal in circulation (0.74) is not
        # self-consistent; the chain pins it to exactly 5/7
        ("stage-2 marginal within 1e-12 of 5/7",
         abs(marg[1] - float(Fraction(5, 7))) <= SELF_TOL),
    ]
    failures += [name for name, ok in checks if not ok]

    elapsed = time.perf_counter() - t0
    _cap(elapsed, 1.0, failures)
    _verdict(1, "two-hypothesis walkthrough matches exact arithmetic", elapsed, failures)


def test_02_dominant_schedule_battery():
    failures: list[str] = []
    t0 = time.perf_counter()
    result = run_scenario(load_bundled("monotone-dominance-battery"))
    _collect(result, failures)
    if result.summary["battery_summary"].get("configs") != 50:
        failures.append(f"expected 50 configurations, ran {result.summary['battery_summary'].get('configs')}")
    elapsed = time.perf_counter() - t0
    _cap(elapsed, 5.0, failures)
    _verdict(2, "belief concentrates on the dominant schedule in 50 seeded runs",
             elapsed, failures)


def test_03_trust_extremes():
    failures: list[str] = []
    t0 = time.perf_counter()
    result = run_scenario(load_bundled("trusted-stream-convergence"))
    _collect(result, failures)
    elapsed = time.perf_counter() - t0
    _verdict(3, "trusted stream reaches 0.999 while the conflicting rival stays below 1e-3",
             elapsed, failures)


def test_04_rival_evidence_collapse():
    failures: list[str] = []
    t0 = time.perf_counter()
    result = run_scenario(load_bundled("rival-evidence-collapse"))
    _collect(result, failures)
    elapsed = time.perf_counter() - t0
    _verdict(4, "evidence carried only by the rival falls below 1e-6", elapsed, failures)


def test_05_learnability_probe_and_oracle():
    failures: list[str] = []
    t0 = time.perf_counter()
    result = run_scenario(load_bundled("blocked-learning-probe"))
    _collect(result, failures)

    # the control run, replayed against an exact-rational two-hypothesis
    # oracle built from the binary values of the same constants
    steps = 200
    stream = TestimonyStream("t", (frozenset({Literal("a")}),), repeats=True)
    hyps = [
        EvaluationHypothesis("hA", {"t": Constant(0.6)}),
        EvaluationHypothesis("hB", {"t": Constant(0.1)}),
    ]
    state = BeliefState.initial({"hA": 0.5, "hB": 0.5}, ("t",), UpdateMode.CHAINED)
    probe = LearnabilityProbe(
        target_id="object_h", prior=0.3, ideal_posterior=0.8,
        evidence=Literal("a"), evidence_likelihood=0.9,
    )
    got = learnability_probe(probe, state, steps, stream, {"t": stream}, hyps)

    pA, pB = Fraction(0.5), Fraction(0.5)
    lA, lB = Fraction(0.6), Fraction(0.1)
    scale = Fraction(0.9) * Fraction(0.3)
    oracle = [Fraction(0.3)]
    for k in range(steps):
        if k > 0:  # the first observation only initializes the marginal
            wA, wB = pA * lA, pB * lB
            pA, pB = wA / (wA + wB), wB / (wA + wB)
        m = pA * lA + pB * lB
        oracle.append(min(Fraction(1), max(Fraction(0), scale / m)))

    if got.verdict is not Verdict.LEARNABLE:
        failures.append(f"control verdict {got.verdict.value}")
    worst = max(abs(p - float(o)) for p, o in zip(got.posteriors, oracle))
    if worst > ORACLE_TOL:
        failures.append(f"control posterior drifts {worst:g} from the exact oracle")
    if not got.losses[-1] < got.losses[0]:
        failures.append("control loss did not improve")

    elapsed = time.perf_counter() - t0
    _verdict(5, "zero-evidence rule freezes the probe; the control run learns and "
                "matches the exact oracle", elapsed, failures)


def test_06_reactive_completeness_battery():
    failures: list[str] = []
    t0 = time.perf_counter()
    result = run_scenario(load_bundled("reactive-generator-battery"))
    _collect(result, failures)
    if result.summary["battery_summary"].get("configs") != 50:
        failures.append(f"expected 50 seeds, ran {result.summary['battery_summary'].get('configs')}")
    elapsed = time.perf_counter() - t0
    _cap(elapsed, 30.0, failures)
    _verdict(6, "reactive generators stay argumentatively complete with exact closure "
                "across 50 seeds", elapsed, failures)


def test_07_game_suite():
    failures: list[str] = []
    t0 = time.perf_counter()

    standoff = run_scenario(load_bundled("knowledge-first-standoff"))
    _collect(standoff, failures)
    if standoff.summary["battery_summary"].get("variants") != 20:
        failures.append(f"expected 20 proposer variants, ran {standoff.summary['battery_summary'].get('variants')}")
    if standoff.summary["battery_summary"].get("horizon") != 1000:
        failures.append(f"expected 1000-round horizon, got {standoff.summary['battery_summary'].get('horizon')}")

    escape = run_scenario(load_bundled("discount-escape"))
    _collect(escape, failures)

    split = run_scenario(load_bundled("split-attention-stationarity"))
    _collect(split, failures)

    elapsed = time.perf_counter() - t0
    _verdict(7, "knowledge-first play never accepts, discounting accepts by round 2, "
                "split-attention marginals stay exactly (0.6, 0.4)", elapsed, failures)


def test_08_mode_equivalence():
    failures: list[str] = []
    t0 = time.perf_counter()
    result = run_scenario(load_bundled("mode-equivalence"))
    _collect(result, failures)
    worst = result.summary["battery_summary"].get("worst_gap", 1.0)
    if worst > 1e-12:
        failures.append(f"worst posterior gap {worst:g} exceeds 1e-12")
    elapsed = time.perf_counter() - t0
    _verdict(8, "chained and standard updating agree within 1e-12 on constant schedules",
             elapsed, failures)


def test_09_deterministic_traces(tmp_path):
    failures: list[str] = []
    t0 = time.perf_counter()
    for name in (
        "two-hypothesis-walkthrough",
        "reactive-generator-battery",
        "split-attention-stationarity",
    ):
        scn = load_bundled(name)
        pair = []
        for tag in ("a", "b"):
            out = tmp_path / f"{name}-{tag}"
            write_outputs(run_scenario(scn), out)
            pair.append((out / "trace.csv").read_bytes())
        if pair[0] != pair[1]:
            failures.append(f"{name}: traces differ between same-seed runs")
        if not pair[0]:
            failures.append(f"{name}: empty trace")
    elapsed = time.perf_counter() - t0
    _verdict(9, "same-seed reruns produce byte-identical traces", elapsed, failures)
