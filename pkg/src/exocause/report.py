"""JSON run reports and their schema."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from . import __version__
from .direction import DirectionDecision

_TEST = {
    "type": "object",
    "required": ["statistic", "p_value", "b_effective"],
    "properties": {
        "statistic": {"type": "number", "minimum": 0},
        "p_value": {"type": "number", "minimum": 0, "maximum": 1},
        "b_effective": {"type": "integer", "minimum": 1},
        "permutations": {"type": "integer", "minimum": 1},
    },
}

OUTCOMES = ["XcausesY", "YcausesX", "NonIdentifiable", "ConfounderSuspected"]

RUN_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "RunReport",
    "type": "object",
    "required": ["version", "input", "config", "tests", "outcome", "wall_seconds"],
    "properties": {
        "version": {"type": "string"},
        "input": {"type": "object"},
        "config": {
            "type": "object",
            "required": ["b", "grid_count", "permutations", "alpha", "subsample_cap", "seed", "gp"],
            "properties": {
                "b": {"type": "integer", "minimum": 1},
                "grid_count": {"type": "integer", "minimum": 2},
                "permutations": {"type": "integer", "minimum": 1},
                "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "subsample_cap": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "gp": {"type": "object"},
            },
        },
        "tests": {
            "type": "object",
            "required": ["xy", "yx"],
            "properties": {"xy": _TEST, "yx": _TEST},
        },
        "outcome": {"enum": OUTCOMES},
        "wall_seconds": {"type": "number", "minimum": 0},
        "metadata": {"type": "object"},
        "baselines": {"type": "object"},
    },
}

BENCHMARK_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "BenchmarkSummary",
    "type": "object",
    "required": ["version", "pairs", "summary"],
    "properties": {
        "version": {"type": "string"},
        "pairs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["file", "truth", "report", "verdict"],
                "properties": {
                    "file": {"type": "string"},
                    "truth": {"enum": ["x->y", "y->x"]},
                    "report": RUN_REPORT_SCHEMA,
                    "verdict": {"enum": ["correct", "wrong", "non_identifiable", "confounder"]},
                },
            },
        },
        "summary": {"type": "object"},
    },
}


@dataclass
class RunReport:
    input: dict
    config: dict
    tests: dict
    outcome: str
    wall_seconds: float
    version: str = __version__
    metadata: dict = field(default_factory=dict)
    baselines: dict = field(default_factory=dict)

    @classmethod
    def from_decision(cls, decision: DirectionDecision, input_desc: dict,
                      wall_seconds: float, metadata: dict | None = None) -> "RunReport":
        cfg = decision.config_echo
        tests = {}
        for key, res in (("xy", decision.test_xy), ("yx", decision.test_yx)):
            tests[key] = {"statistic": res.statistic, "p_value": res.p_value,
                          "b_effective": res.b_effective, "permutations": res.permutations}
        meta = {
            "standardized": True,
            "latent_scale": "unit-variance",
            "deriv_floor": cfg.gp.deriv_floor if cfg else None,
        }
        meta.update(metadata or {})
        return cls(input=input_desc, config=cfg.as_dict() if cfg else {}, tests=tests,
                   outcome=decision.outcome.value, wall_seconds=wall_seconds, metadata=meta)

    def to_dict(self) -> dict:
        d = asdict(self)
        order = ["version", "input", "config", "tests", "outcome", "wall_seconds", "metadata"]
        out = {k: d[k] for k in order}
        if self.baselines:
            out["baselines"] = d["baselines"]
        return out

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(input=d["input"], config=d["config"], tests=d["tests"], outcome=d["outcome"],
                   wall_seconds=d["wall_seconds"], version=d["version"],
                   metadata=d.get("metadata", {}), baselines=d.get("baselines", {}))

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))
