"""Experiment configuration read from TOML."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field

from .spaces import DomainError, SpaceKind

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending line or field."""


@dataclass(frozen=True)
class Tolerances:
    rank_tol: float = 1e-8
    verify_tol: float = 1e-8
    align_tol: float = 1e-6
    kernel_tol: float = 1e-4
    match_tol: float = 1e-6
    gap_min: float = 1e4


@dataclass(frozen=True)
class Grid:
    radii: tuple = (0.6, 0.7, 0.8)
    angles: int = 8
    h: float = 1e-2
    kernel_window: int = 200
    points: tuple = (0.6, 0.7, 0.8)  # lambda values for the kernel null-space check
    compare: tuple = (0.5, 0.6, 0.7)  # points for restriction curvatures
    compare_h: float = 2e-4


@dataclass(frozen=True)
class ExperimentConfig:
    space: SpaceKind
    n: int
    window: tuple
    tolerances: Tolerances = field(default_factory=Tolerances)
    grid: Grid = field(default_factory=Grid)
    seed: int = 0

    def echo(self) -> dict:
        sp = {"kind": self.space.name}
        for key in ("r", "s", "a", "b"):
            val = getattr(self.space, key)
            if val is not None:
                sp[key] = val
        if self.space.beta is not None:
            sp["beta"] = list(self.space.beta)
        g = self.grid
        return {
            "space": sp,
            "n": self.n,
            "window": list(self.window),
            "seed": self.seed,
            "tolerances": dict(vars(self.tolerances)),
            "grid": {
                "radii": list(g.radii), "angles": g.angles, "h": g.h, "kernel_window": g.kernel_window,
                "points": [_point_out(z) for z in g.points], "compare": [_point_out(z) for z in g.compare],
                "compare_h": g.compare_h,
            },
        }


def _point_out(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _point_in(v, where: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{where}: expected a number or a [re, im] pair, got {v!r}")


def _num(table: dict, key: str, where: str, kind=float, default=None, positive=False):
    if key not in table:
        if default is None:
            raise ConfigError(f"missing field `{where}.{key}`" if where else f"missing field `{key}`")
        return default
    val = table[key]
    ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    if kind is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    if not ok:
        raise ConfigError(f"field `{where + '.' if where else ''}{key}` must be a {kind.__name__}, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(f"field `{where + '.' if where else ''}{key}` must be positive, got {val!r}")
    return kind(val)


def _space(table) -> SpaceKind:
    if not isinstance(table, dict):
        raise ConfigError("field `space` must be a table")
    kind = table.get("kind")
    if kind is None:
        raise ConfigError("missing field `space.kind`")
    try:
        if kind in ("bergman", "hardy"):
            return SpaceKind(kind, r=_num(table, "r", "space"))
        if kind == "flat":
            return SpaceKind.flat()
        if kind == "geometric":
            return SpaceKind.geometric(_num(table, "s", "space"))
        if kind == "alternating":
            return SpaceKind.alternating(_num(table, "a", "space"), _num(table, "b", "space"))
        if kind == "custom":
            beta = table.get("beta")
            if not isinstance(beta, list) or not beta:
                raise ConfigError("field `space.beta` must be a non-empty list for custom spaces")
            return SpaceKind.custom(beta)
    except (ValueError, DomainError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"field `space`: {exc}") from None
    raise ConfigError(f"field `space.kind`: unknown kind {kind!r}; expected one of {SpaceKind.NAMES}")


def parse_config(text: str, *, seed: int | None = None) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from None
    if "space" not in data:
        raise ConfigError("missing field `space`")
    space = _space(data["space"])
    n = _num(data, "n", "", int)
    if n < 1:
        raise ConfigError(f"field `n` must be >= 1, got {n}")
    win = data.get("window")
    if win is None:
        raise ConfigError("missing field `window`")
    if not (isinstance(win, list) and len(win) == 2 and all(isinstance(x, int) for x in win)):
        raise ConfigError(f"field `window` must be a pair of integers [lo, hi], got {win!r}")
    lo, hi = win
    if hi - lo + 1 < 6 * n:
        raise ConfigError(f"field `window`: length {hi - lo + 1} is shorter than 6n = {6 * n}")
    if space.name == "custom" and len(space.beta) != hi - lo + 1:
        raise ConfigError(f"field `space.beta`: {len(space.beta)} entries for a window of length {hi - lo + 1}")

    tt = data.get("tolerances", {})
    d = Tolerances()
    tol = Tolerances(**{k: _num(tt, k, "tolerances", default=getattr(d, k), positive=True) for k in vars(d)})
    unknown = set(tt) - set(vars(d))
    if unknown:
        raise ConfigError(f"unknown field(s) in `tolerances`: {sorted(unknown)}")

    gt = data.get("grid", {})
    g0 = Grid()
    radii = gt.get("radii", list(g0.radii))
    if not (isinstance(radii, list) and radii and all(isinstance(x, (int, float)) for x in radii)):
        raise ConfigError("field `grid.radii` must be a non-empty list of numbers")
    grid = Grid(
        radii=tuple(float(x) for x in radii),
        angles=_num(gt, "angles", "grid", int, g0.angles, positive=True),
        h=_num(gt, "h", "grid", float, g0.h, positive=True),
        kernel_window=_num(gt, "kernel_window", "grid", int, g0.kernel_window, positive=True),
        points=tuple(_point_in(v, "grid.points") for v in gt.get("points", list(g0.points))),
        compare=tuple(_point_in(v, "grid.compare") for v in gt.get("compare", list(g0.compare))),
        compare_h=_num(gt, "compare_h", "grid", float, g0.compare_h, positive=True),
    )
    cfg_seed = _num(data, "seed", "", int, 0)
    if seed is not None:
        cfg_seed = seed
    if cfg_seed < 0 or cfg_seed >= 2 ** 64:
        raise ConfigError("field `seed` must fit in an unsigned 64-bit integer")
    return ExperimentConfig(space, n, (lo, hi), tol, grid, cfg_seed)


def load_config(path, *, seed: int | None = None) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), seed=seed)
