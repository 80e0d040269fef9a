"""Pipeline configuration shared by the CLI commands."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .classgrid import GridParams, make_grid


@dataclass(frozen=True)
class PipelineConfig:
    alpha: int = 6
    p_percent: float = 10.0
    delta_a: float = 8.0
    delta_b: float = 8.0
    min_count: int = 500
    # Alternative threshold: percentage of all corpus samples (500 of 109,885,440 ~ 0.000455 %).
    min_percent: float | None = None
    # (height, width) for histogram building; None keeps native resolution.
    histogram_resize: tuple | None = (56, 56)
    psi_override: float | None = None
    huber_delta: float = 1.0

    def __post_init__(self):
        make_grid(self.alpha)
        if self.p_percent <= 0:
            raise ValueError("p_percent must be positive")
        if self.delta_a < 0 or self.delta_b < 0:
            raise ValueError("delta_a/delta_b must be >= 0")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if self.min_percent is not None and self.min_percent <= 0:
            raise ValueError("min_percent must be positive")
        if self.psi_override is not None and self.psi_override <= 0:
            raise ValueError("psi_override must be positive")
        if self.histogram_resize is not None:
            size = tuple(int(v) for v in self.histogram_resize)
            if len(size) != 2 or min(size) < 1:
                raise ValueError(f"bad histogram_resize {self.histogram_resize}")
            object.__setattr__(self, "histogram_resize", size)

    @property
    def grid(self) -> GridParams:
        return make_grid(self.alpha)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if d["histogram_resize"] is not None:
            d["histogram_resize"] = list(d["histogram_resize"])
        return d

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes) -> "PipelineConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))
