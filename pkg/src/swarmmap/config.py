"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored, keys are case-sensitive, and
every key may appear at most once. Lists are separated by commas and/or
whitespace. Unknown keys are rejected with their line number.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import ConfigError, DomainError
from .model import Params

DEFAULT_ANT_DENSITY = 0.04


def _float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _int(text):
    return int(text, 10)


def _bool(text):
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _list(item):
    def parse(text):
        parts = text.replace(",", " ").split()
        if not parts:
            raise ValueError("empty list")
        return tuple(item(p) for p in parts)

    return parse


def _str(text):
    if not text:
        raise ValueError("empty value")
    return text


@dataclass(frozen=True)
class Config:
    """Parsed configuration: model parameters plus run and experiment settings.

    ``habitat`` is ``"constant"``, ``"cross"``, ``"inverted-cross"`` or a
    path to a PGM file (relative paths resolve against ``base_dir``).
    """

    # model
    beta: float = 3.5
    delta: float = 0.2
    eta: float = 0.2
    p: float = 0.0
    evap: float = 0.99
    n_ants: Optional[int] = None
    ant_density: Optional[float] = None
    window_radius: int = 1
    a: float = 1 / 3
    b: float = 1 / 3
    c: float = 1 / 3
    metric: str = "ulam"
    coupling: str = "similarity"
    # run
    steps: int = 1000
    seed: int = 0
    snapshot_every: int = 100
    save_snapshots: bool = False
    # habitat
    habitat: str = "constant"
    habitat_b: str = "inverted-cross"
    width: int = 100
    height: int = 100
    background: int = 128
    arm_thickness: int = 30
    square_sizes: tuple = (2, 3, 4)
    cross_seed: int = 0
    # experiments
    reps: int = 5
    beta_list: tuple = (0.5, 1.5, 2.5, 3.5, 5.0)
    delta_list: tuple = (0.05, 0.2, 0.5)
    baseline_t: int = 10
    order_threshold: float = 0.15
    on_threshold: float = 2.0
    swap_t: int = 500
    max_adapt_steps: int = 1000
    base_dir: str = "."

    def __post_init__(self):
        if self.n_ants is not None and self.ant_density is not None:
            raise DomainError("give n_ants or ant_density, not both")
        if self.ant_density is not None and not 0 < self.ant_density:
            raise DomainError(f"ant_density must be > 0, got {self.ant_density}")
        for name in ("steps", "snapshot_every", "baseline_t", "swap_t", "max_adapt_steps"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.width < 3 or self.height < 3:
            raise DomainError("width and height must be >= 3")
        if not 0 <= self.background <= 255:
            raise DomainError("background must be in [0, 255]")
        self.params_for((self.height, self.width))

    def resolve_n_ants(self, dims: tuple[int, int]) -> int:
        if self.n_ants is not None:
            return self.n_ants
        density = DEFAULT_ANT_DENSITY if self.ant_density is None else self.ant_density
        return max(1, round(density * dims[0] * dims[1]))

    def params_for(self, dims: tuple[int, int]) -> Params:
        return Params(
            beta=self.beta, delta=self.delta, eta=self.eta, p=self.p, evap=self.evap,
            n_ants=self.resolve_n_ants(dims), window_radius=self.window_radius,
            a=self.a, b=self.b, c=self.c, metric=self.metric, coupling=self.coupling,
        )

    @property
    def params(self) -> Params:
        return self.params_for((self.height, self.width))

    def resolve_path(self, value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else Path(self.base_dir) / path

    def replace(self, **changes) -> Config:
        from dataclasses import replace

        return replace(self, **changes)

    def canonical(self) -> str:
        """Stable text form of every setting except ``base_dir``."""
        lines = []
        for f in fields(self):
            if f.name == "base_dir":
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]


_PARSERS = {
    "beta": _float, "delta": _float, "eta": _float, "p": _float, "evap": _float,
    "n_ants": _int, "ant_density": _float, "window_radius": _int,
    "a": _float, "b": _float, "c": _float, "metric": _str, "coupling": _str,
    "steps": _int, "seed": _int, "snapshot_every": _int, "save_snapshots": _bool,
    "habitat": _str, "habitat_b": _str, "width": _int, "height": _int,
    "background": _int, "arm_thickness": _int, "square_sizes": _list(_int),
    "cross_seed": _int, "reps": _int, "beta_list": _list(_float),
    "delta_list": _list(_float), "baseline_t": _int, "order_threshold": _float,
    "on_threshold": _float, "swap_t": _int, "max_adapt_steps": _int,
}


def parse_config(text: str, base_dir=".") -> Config:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line=lineno)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", line=lineno) from None
    try:
        return Config(base_dir=str(base_dir), **values)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> Config:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)
