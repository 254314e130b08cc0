"""Flat key=value run configuration shared by the CLI and config files."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

from .errors import ConfigError

COMMANDS = ("classify", "simulate", "curve", "local", "verify", "enumerate")


@dataclass(frozen=True)
class RunConfig:
    command: Optional[str] = None
    model: Optional[str] = None
    mu: Optional[float] = None
    mu_list: Optional[tuple] = None
    kappa: Optional[float] = None
    zeta: Optional[float] = None
    seed: int = 0
    n: int = 100
    grid: Optional[str] = None
    exclude: Optional[tuple] = None
    oracle: str = "auto"
    eps_tail: float = 1e-9
    rel_tol: float = 1e-10
    k_max: Optional[int] = None
    M: Optional[int] = None
    only: Optional[tuple] = None
    json: bool = False
    out: Optional[str] = None

    def merged(self, **overrides):
        """Copy with every non-None override applied (flags win over the file)."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name}={_format(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        known = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"config line {lineno}: unknown key {key!r}")
            values[key] = _parse(key, value)
        cfg = cls(**values)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def validate(self):
        if self.command is not None and self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if not self.eps_tail > 0 or not self.rel_tol > 0:
            raise ConfigError("eps_tail and rel_tol must be > 0")
        if self.exclude is not None and not self.exclude[0] < self.exclude[1]:
            raise ConfigError(f"excluded window must satisfy lo < hi, got {self.exclude}")


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(_format(x) for x in v)
    return str(v)


def parse_float_list(value):
    try:
        return tuple(float(s) for s in value.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {value!r}") from exc


def parse_pair(value):
    pair = parse_float_list(value)
    if len(pair) != 2:
        raise ConfigError(f"expected 'lo,hi', got {value!r}")
    return pair


def _parse(key, value):
    try:
        if key in ("mu", "kappa", "zeta", "eps_tail", "rel_tol"):
            return float(value)
        if key in ("seed", "n", "k_max", "M"):
            return int(value)
        if key == "json":
            if value.lower() not in ("true", "false"):
                raise ConfigError(f"json must be true or false, got {value!r}")
            return value.lower() == "true"
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    if key == "mu_list":
        return parse_float_list(value)
    if key == "exclude":
        return parse_pair(value)
    if key == "only":
        return tuple(s.strip() for s in value.split(",") if s.strip())
    return value
