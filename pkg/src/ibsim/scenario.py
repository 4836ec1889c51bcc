"""Scenario files: a small JSON dialect for runnable experiments.

Three kinds. "reproduce" runs a fixed stream/hypothesis configuration for a
number of steps and checks expectations against the trace. "proposition"
runs one of the named batteries (seeded multi-configuration suites).
"game" plays one persuasion game from an explicit configuration.

Validation is two-phase: structural (JSON schema) and semantic (referential
integrity between blocks). Both raise ScenarioError with the offending path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import jsonschema

from ibsim.beliefs import BeliefState, UpdateMode
from ibsim.errors import ScenarioError
from ibsim.generators import StreamSpec, build_stream
from ibsim.hypotheses import EvaluationHypothesis
from ibsim.schedules import schedule_from_json
from ibsim.streams import TestimonyStream

BATTERIES = (
    "dominant-convergence",
    "trusted-stream-convergence",
    "rival-evidence-collapse",
    "blocked-learning-probe",
    "reactive-completeness",
    "knowledge-first-standoff",
    "discount-escape",
    "mode-equivalence",
)

_SCHEDULE_SCHEMA = {
    "type": "object",
    "oneOf": [
        {
            "properties": {"kind": {"const": "constant"}, "c": {"type": "number"}},
            "required": ["kind", "c"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "monotone"},
                "start": {"type": "number"},
                "limit": {"type": "number"},
                "rate": {"type": "number"},
            },
            "required": ["kind", "start", "limit", "rate"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "complement"},
                "base": {"$ref": "#/$defs/schedule"},
            },
            "required": ["kind", "base"],
            "additionalProperties": False,
        },
    ],
}

_STREAM_SCHEMA = {
    "type": "object",
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "kind": {"enum": ["explicit", "constant", "reactive"]},
        "core": {"type": "array", "items": {"type": "string"}},
        "stages": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
        "repeat": {"type": "boolean"},
    },
    "required": ["id", "kind"],
    "additionalProperties": False,
}

_HYPOTHESIS_SCHEMA = {
    "type": "object",
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "schedules": {
            "type": "object",
            "additionalProperties": {"$ref": "#/$defs/schedule"},
            "minProperties": 1,
        },
        "pwmc_for": {"type": "string"},
    },
    "required": ["id", "schedules"],
    "additionalProperties": False,
}

_GAME_SCHEMA = {
    "type": "object",
    "properties": {
        "condition": {"enum": ["persuasion", "interpretive_blindness"]},
        "constraint": {"enum": ["knowledge_first", "discount"]},
        "t_stream": {"type": "string"},
        "rival_stream": {"type": "string"},
        "horizon": {"type": "integer", "minimum": 1},
        "post_stages": {"type": "integer", "minimum": 0},
        "accept_mass": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "jury": {
            "type": "object",
            "properties": {
                "size": {"type": "integer", "minimum": 1},
                "candidates": {"type": "array", "items": {"type": "string"}},
                "orderings": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "spine": {
            "type": "object",
            "properties": {
                "depth": {"type": "integer", "minimum": 2},
                "base_hypothesis": {"type": "string"},
                "support": {"type": "number"},
                "score": {"type": "number"},
            },
            "required": ["depth", "base_hypothesis"],
            "additionalProperties": False,
        },
        "e_strategy": {"type": "string"},
        "f_strategy": {"type": "string"},
    },
    "required": ["condition", "constraint", "t_stream", "rival_stream"],
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"schedule": _SCHEDULE_SCHEMA},
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "kind": {"enum": ["reproduce", "proposition", "game"]},
        "description": {"type": "string"},
        "notes": {"type": "string"},
        "mode": {"enum": ["chained", "standard"]},
        "steps": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "streams": {"type": "array", "items": _STREAM_SCHEMA},
        "hypotheses": {"type": "array", "items": _HYPOTHESIS_SCHEMA},
        "priors": {"type": "object", "additionalProperties": {"type": "number"}},
        "attended": {"type": "array", "items": {"type": "string"}},
        "tracked": {"type": "array", "items": {"type": "string"}},
        "battery": {"enum": list(BATTERIES)},
        "battery_params": {"type": "object"},
        "game": _GAME_SCHEMA,
        "expected": {"type": "object"},
    },
    "required": ["name", "kind"],
    "additionalProperties": False,
}


def validate_scenario(data: dict) -> None:
    """Structural then semantic validation; raises ScenarioError."""
    try:
        jsonschema.validate(data, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as err:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ScenarioError(f"at {path}: {err.message}") from err

    kind = data["kind"]
    if kind == "reproduce":
        for block in ("streams", "hypotheses", "priors", "steps"):
            if block not in data:
                raise ScenarioError(f"reproduce scenario needs a {block!r} block")
    if kind == "proposition" and "battery" not in data:
        raise ScenarioError("proposition scenario needs a 'battery' name")
    if kind == "game":
        if "game" not in data:
            raise ScenarioError("game scenario needs a 'game' block")
        for block in ("streams", "hypotheses", "priors"):
            if block not in data:
                raise ScenarioError(f"game scenario needs a {block!r} block")

    stream_ids = [s["id"] for s in data.get("streams", [])]
    if len(set(stream_ids)) != len(stream_ids):
        raise ScenarioError("duplicate stream ids")
    hyp_ids = [h["id"] for h in data.get("hypotheses", [])]
    if len(set(hyp_ids)) != len(hyp_ids):
        raise ScenarioError("duplicate hypothesis ids")

    for h in data.get("hypotheses", []):
        for sid in h["schedules"]:
            if sid not in stream_ids:
                raise ScenarioError(f"hypothesis {h['id']!r} schedules unknown stream {sid!r}")
        if "pwmc_for" in h and h["pwmc_for"] not in h["schedules"]:
            raise ScenarioError(
                f"hypothesis {h['id']!r}: pwmc_for must name one of its own channels"
            )
    for hid in data.get("priors", {}):
        if hid not in hyp_ids:
            raise ScenarioError(f"prior for unknown hypothesis {hid!r}")
    for block in ("attended", "tracked"):
        for sid in data.get(block, []):
            if sid not in stream_ids:
                raise ScenarioError(f"{block} names unknown stream {sid!r}")
    game = data.get("game")
    if game is not None:
        for key in ("t_stream", "rival_stream"):
            if game[key] not in stream_ids:
                raise ScenarioError(f"game.{key} names unknown stream {game[key]!r}")
        for cid in game.get("jury", {}).get("candidates", []):
            if cid not in hyp_ids:
                raise ScenarioError(f"jury candidate {cid!r} is not a declared hypothesis")
        spine = game.get("spine")
        if spine is not None and spine["base_hypothesis"] not in hyp_ids:
            raise ScenarioError(
                f"spine base {spine['base_hypothesis']!r} is not a declared hypothesis"
            )


@dataclass(frozen=True)
class Scenario:
    data: dict

    @property
    def name(self) -> str:
        return self.data["name"]

    @property
    def kind(self) -> str:
        return self.data["kind"]

    @property
    def mode(self) -> UpdateMode:
        return UpdateMode.STANDARD if self.data.get("mode") == "standard" else UpdateMode.CHAINED

    @property
    def expected(self) -> dict:
        return self.data.get("expected", {})

    def build_streams(self, length: int | None = None) -> dict[str, TestimonyStream]:
        out = {}
        for raw in self.data.get("streams", []):
            spec = StreamSpec.from_json(raw)
            out[spec.id] = build_stream(spec, length)
        return out

    def build_hypotheses(self) -> list[EvaluationHypothesis]:
        out = []
        for raw in self.data.get("hypotheses", []):
            schedules = {sid: schedule_from_json(s) for sid, s in raw["schedules"].items()}
            out.append(
                EvaluationHypothesis(raw["id"], schedules, pwmc_for=raw.get("pwmc_for"))
            )
        return out

    def initial_state(self, mode: UpdateMode | None = None) -> BeliefState:
        tracked = tuple(self.data.get("tracked") or [s["id"] for s in self.data["streams"]])
        return BeliefState.initial(
            dict(self.data["priors"]), tracked=tracked, mode=mode or self.mode
        )

    def attended_ids(self) -> tuple[str, ...]:
        att = self.data.get("attended")
        if att:
            return tuple(att)
        return tuple(s["id"] for s in self.data.get("streams", []))


def scenario_from_dict(data: dict) -> Scenario:
    validate_scenario(data)
    return Scenario(data)


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ScenarioError(f"cannot read scenario {path!r}: {err}") from err
    return scenario_from_dict(data)


def bundled_scenario_names() -> list[str]:
    root = resources.files("ibsim") / "scenarios"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str) -> Scenario:
    root = resources.files("ibsim") / "scenarios"
    candidate = root / f"{name}.json"
    if not candidate.is_file():
        known = ", ".join(bundled_scenario_names())
        raise ScenarioError(f"no bundled scenario {name!r} (have: {known})")
    return scenario_from_dict(json.loads(candidate.read_text(encoding="utf-8")))
