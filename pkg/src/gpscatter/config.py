"""Flat JSON experiment configuration.

Keys (all optional in a file; defaults below, then per-command defaults,
then the file, then command-line flags)::

    grid.d, grid.N, grid.L            lattice
    solve.dt, solve.T                 time step and horizon
    solve.sigma, solve.s              H^{sigma,s} norm (s = d/2 - 1 when null)
    data.seed, data.amplitude         datum seed and sup-norm amplitude
    data.profile                      "gaussian" | "random"
    data.width                        packet width of the gaussian profile
    decay.R, decay.q, decay.route     linear decay sweep (q may be "inf")
    decay.times                       sample times (null: 6 log-spaced in [10, 100])
    strichartz.p, strichartz.q        space-time exponents (p null: admissible)
    estimates.trials                  trilinear trials per spread
    bilipschitz.pairs                 number of data pairs
    tol_scale                         multiplies every acceptance tolerance
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

DEFAULTS: dict = {
    "grid.d": 2,
    "grid.N": 64,
    "grid.L": 8 * math.pi,
    "solve.dt": 0.1,
    "solve.T": 16.0,
    "solve.sigma": 0.0,
    "solve.s": None,
    "data.seed": 0,
    "data.amplitude": 0.02,
    "data.profile": "gaussian",
    "data.width": 2.0,
    "decay.R": 1.0,
    "decay.q": "inf",
    "decay.route": "oracle",
    "decay.times": None,
    "strichartz.p": None,
    "strichartz.q": 4.0,
    "estimates.trials": 20,
    "bilipschitz.pairs": 2,
    "tol_scale": 1.0,
}

COMMAND_DEFAULTS: dict[str, dict] = {
    "verify-identities": {},
    "linear-decay": {"grid.d": 3},
    "stationary-phase": {"grid.d": 3},
    "strichartz": {"grid.d": 2, "grid.N": 128, "grid.L": 64 * math.pi, "solve.T": 20.0, "solve.dt": 0.5},
    "scatter": {"grid.d": 4, "grid.N": 24, "grid.L": 12 * math.pi},
    "evolve": {"grid.d": 2, "grid.N": 64, "grid.L": 40.0, "solve.T": 4.0},
    "wave-operator": {"grid.d": 4, "grid.N": 24, "grid.L": 12 * math.pi},
    "estimates": {"grid.d": 4, "grid.N": 16, "grid.L": 4 * math.pi},
    "bilipschitz": {"grid.d": 4, "grid.N": 24, "grid.L": 12 * math.pi},
}


class ConfigError(ValueError):
    """Unreadable or inconsistent configuration."""


@dataclass
class ExperimentConfig:
    command: str
    values: dict = field(default_factory=dict)
    out: str = "out"

    def __getitem__(self, key: str):
        return self.values[key]

    @classmethod
    def build(cls, command: str, file_values: dict | None = None, overrides: dict | None = None, out: str = "out") -> ExperimentConfig:
        if command not in COMMAND_DEFAULTS:
            raise ConfigError(f"unknown command {command!r}")
        vals = dict(DEFAULTS)
        vals.update(COMMAND_DEFAULTS[command])
        for src in (file_values or {}, overrides or {}):
            for k, v in src.items():
                if k not in DEFAULTS:
                    raise ConfigError(f"unknown config key {k!r}")
                if v is not None or k in ("solve.s", "decay.times", "strichartz.p"):
                    vals[k] = v
        cfg = cls(command, vals, out)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        v = self.values
        try:
            if int(v["grid.d"]) != v["grid.d"] or int(v["grid.N"]) != v["grid.N"]:
                raise ConfigError("grid.d and grid.N must be integers")
            for k in ("grid.L", "solve.dt", "tol_scale"):
                if not float(v[k]) > 0:
                    raise ConfigError(f"{k} must be positive, got {v[k]}")
            if float(v["solve.T"]) < 0:
                raise ConfigError("solve.T must be nonnegative")
            if float(v["data.amplitude"]) < 0:
                raise ConfigError("data.amplitude must be nonnegative")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @property
    def s(self) -> float:
        s = self.values["solve.s"]
        return self.values["grid.d"] / 2 - 1 if s is None else float(s)

    def to_json(self) -> dict:
        return {"command": self.command, "out": self.out, **self.values}

    @classmethod
    def from_json(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        command = data.pop("command")
        out = data.pop("out", "out")
        return cls.build(command, data, out=out)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


def load_file(path) -> dict:
    """Read a flat JSON config; parse errors report line and column."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a JSON object")
    data.pop("command", None)
    data.pop("out", None)
    for k in data:
        if k not in DEFAULTS:
            raise ConfigError(f"{p}: unknown key {k!r}")
    return data
