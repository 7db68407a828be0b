"""Solve reports: a flat, key-ordered record of what a solve did."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

SCHEMA = "sddsolve.report/1"


@dataclass
class SolveReport:
    status: str = "ok"
    mode: str = "recursive"
    eps_requested: float = 0.0
    residual_achieved: float = float("nan")
    error_bound: float = float("nan")
    outer_iterations: int = 0
    refinement_rounds: int = 0
    components: int = 1
    gremban: bool = False
    projected_rhs: bool = False
    chain: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    seed: int = 0
    config: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = SCHEMA
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_plain)

    @classmethod
    def from_json(cls, text: str) -> "SolveReport":
        d = json.loads(text)
        schema = d.pop("schema", None)
        if schema != SCHEMA:
            raise ValueError(f"unknown report schema {schema!r}")
        return cls(**d)


def _plain(x):
    # numpy scalars and arrays
    if hasattr(x, "tolist"):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")
