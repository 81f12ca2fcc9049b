"""Weight sequences, Laurent series and the concrete annulus spaces.

A weighted sequence space L^2(beta) is stored in coordinates: the monomial
z^m has norm beta(m), so ``f = sum fhat(m) z^m`` has squared norm
``sum |fhat(m)|^2 beta(m)^2``.  Only a finite index window [lo, hi] is kept.

Norm normalisations
-------------------
Bergman: area measure on the annulus divided by pi, so ``||z^m||^2 =
(1 - r^(2m+2)) / (m+1)`` and ``-2 log r`` at m = -1.
Hardy: unit mass on each boundary circle, so ``||z^m||^2 = 1 + r^(2m)``.
Weight ratios lambda_m = beta(m+1)/beta(m) do not depend on either constant.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

ALGEBRAIC_TOL = 1e-8
ASYMPTOTIC_TOL = 1e-2


class DomainError(ValueError):
    """A parameter or point lies outside the region where an object is defined."""


def _check_r(r: float) -> None:
    if not (0.0 < r < 1.0) or math.isnan(r):
        raise DomainError(f"r must lie strictly inside (0, 1), got {r!r}")


# ---------------------------------------------------------------------------
# norms of monomials
# ---------------------------------------------------------------------------

def bergman_log_norm_sq(m: int, r: float) -> float:
    """log ||z^m||^2 in the Bergman space of the annulus, overflow-free."""
    _check_r(r)
    m = int(m)
    if m == -1:
        return math.log(-2.0 * math.log(r))
    t = (2 * m + 2) * math.log(r)
    if m >= 0:
        # 1 - r^(2m+2) with t < 0
        return math.log(-math.expm1(t)) - math.log(m + 1)
    # r^(2m+2) - 1 with t > 0, written as e^t (1 - e^-t)
    return t + math.log(-math.expm1(-t)) - math.log(-(m + 1))


def bergman_norm_sq(m: int, r: float) -> float:
    """Squared Bergman norm of z^m on the annulus r < |z| < 1.

    >>> bergman_norm_sq(1, 0.5)
    0.46875
    """
    _check_r(r)
    m = int(m)
    if m == -1:
        return -2.0 * math.log(r)
    return -math.expm1((2 * m + 2) * math.log(r)) / (m + 1)


def hardy_log_norm_sq(m: int, r: float) -> float:
    _check_r(r)
    return float(np.logaddexp(0.0, 2 * int(m) * math.log(r)))


def hardy_norm_sq(m: int, r: float) -> float:
    """Squared Hardy norm of z^m: one unit circle plus the circle of radius r."""
    _check_r(r)
    return 1.0 + r ** (2 * int(m))


# ---------------------------------------------------------------------------
# space kinds and weight sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceKind:
    """Which weight sequence to build.

    ``name`` is one of ``bergman``, ``hardy``, ``flat``, ``geometric``,
    ``alternating`` or ``custom``; the remaining fields are used as needed.
    """

    name: str
    r: float | None = None
    s: float | None = None
    a: float | None = None
    b: float | None = None
    beta: tuple[float, ...] | None = None

    NAMES = ("bergman", "hardy", "flat", "geometric", "alternating", "custom")

    def __post_init__(self):
        if self.name not in self.NAMES:
            raise ValueError(f"unknown space kind {self.name!r}; expected one of {self.NAMES}")
        if self.name in ("bergman", "hardy"):
            if self.r is None:
                raise ValueError(f"{self.name} space needs r")
            _check_r(float(self.r))
        elif self.name == "geometric":
            if self.s is None or not self.s > 0:
                raise ValueError("geometric space needs s > 0")
        elif self.name == "alternating":
            if self.a is None or self.b is None or not (self.a > 0 and self.b > 0):
                raise ValueError("alternating space needs a > 0 and b > 0")
        elif self.name == "custom":
            if self.beta is None:
                raise ValueError("custom space needs a beta list")

    @classmethod
    def bergman(cls, r):
        return cls("bergman", r=float(r))

    @classmethod
    def hardy(cls, r):
        return cls("hardy", r=float(r))

    @classmethod
    def flat(cls):
        return cls("flat")

    @classmethod
    def geometric(cls, s):
        return cls("geometric", s=float(s))

    @classmethod
    def alternating(cls, a, b):
        return cls("alternating", a=float(a), b=float(b))

    @classmethod
    def custom(cls, beta: Iterable[float]):
        return cls("custom", beta=tuple(float(x) for x in beta))

    def describe(self) -> str:
        if self.name in ("bergman", "hardy"):
            return f"{self.name}(r={self.r})"
        if self.name == "geometric":
            return f"geometric(s={self.s})"
        if self.name == "alternating":
            return f"alternating(a={self.a}, b={self.b})"
        if self.name == "custom":
            return f"custom(len={len(self.beta)})"
        return self.name


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """Positive weights beta(m) for m in [window_lo, window_hi].

    Stored as log beta so that wide windows of the Bergman and Hardy spaces
    (where beta grows like r^m) stay finite.
    """

    window_lo: int
    window_hi: int
    log_beta: np.ndarray
    label: str = ""

    def __post_init__(self):
        lb = np.asarray(self.log_beta, dtype=float)
        if self.window_hi < self.window_lo:
            raise ValueError("window_hi must be >= window_lo")
        if lb.shape != (self.window_hi - self.window_lo + 1,):
            raise ValueError("log_beta length does not match the window")
        if not np.all(np.isfinite(lb)):
            raise ValueError("weights must be finite and strictly positive")
        lb.setflags(write=False)
        object.__setattr__(self, "log_beta", lb)

    @classmethod
    def from_beta(cls, lo: int, beta: Sequence[float], label: str = "") -> "WeightSequence":
        beta = np.asarray(beta, dtype=float)
        if beta.ndim != 1 or beta.size == 0:
            raise ValueError("beta must be a non-empty 1-d sequence")
        if np.any(~np.isfinite(beta)) or np.any(beta <= 0):
            raise ValueError("all beta(m) must be finite and > 0")
        return cls(int(lo), int(lo) + beta.size - 1, np.log(beta), label)

    @property
    def size(self) -> int:
        return self.window_hi - self.window_lo + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.window_lo, self.window_hi + 1)

    @property
    def beta(self) -> np.ndarray:
        with np.errstate(over="raise"):
            return np.exp(self.log_beta)

    @property
    def is_unilateral(self) -> bool:
        return self.window_lo >= 0

    def pos(self, m: int) -> int:
        """Array position of index m."""
        if not self.window_lo <= m <= self.window_hi:
            raise IndexError(f"index {m} outside window [{self.window_lo}, {self.window_hi}]")
        return m - self.window_lo

    def log_beta_at(self, m: int) -> float:
        return float(self.log_beta[self.pos(m)])

    def restrict(self, lo: int, hi: int) -> "WeightSequence":
        if lo < self.window_lo or hi > self.window_hi or hi < lo:
            raise ValueError(f"[{lo}, {hi}] is not a sub-window of [{self.window_lo}, {self.window_hi}]")
        return WeightSequence(lo, hi, self.log_beta[lo - self.window_lo: hi - self.window_lo + 1], self.label)

    def balanced(self, n: int) -> "WeightSequence":
        """Trim the top of the window so every residue class mod n has equal length."""
        keep = (self.size // n) * n
        if keep == 0:
            raise ValueError(f"window of length {self.size} is shorter than n={n}")
        return self.restrict(self.window_lo, self.window_lo + keep - 1)

    def inner(self, f: "LaurentSeries", g: "LaurentSeries") -> complex:
        """Weighted inner product sum fhat(m) conj(ghat(m)) beta(m)^2 over the window."""
        total = 0j
        for m, c in f.coeffs.items():
            d = g.coeffs.get(m)
            if d is None:
                continue
            total += c * d.conjugate() * math.exp(2 * self.log_beta_at(m))
        return total


def make_weights(kind: SpaceKind, window: tuple[int, int]) -> WeightSequence:
    """Build beta over ``window = (lo, hi)`` for the given space kind."""
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ValueError("window must satisfy lo <= hi")
    idx = range(lo, hi + 1)
    name = kind.name
    if name == "bergman":
        lb = [0.5 * bergman_log_norm_sq(m, kind.r) for m in idx]
    elif name == "hardy":
        lb = [0.5 * hardy_log_norm_sq(m, kind.r) for m in idx]
    elif name == "flat":
        lb = [0.0] * (hi - lo + 1)
    elif name == "geometric":
        ls = math.log(kind.s)
        lb = [m * ls for m in idx]
    elif name == "alternating":
        # lambda_m = a for even m, b for odd m, anchored at beta(0) = 1
        la, lbb = math.log(kind.a), math.log(kind.b)

        def log_lam(m):
            return la if m % 2 == 0 else lbb

        lb = []
        for m in idx:
            if m >= 0:
                lb.append(sum(log_lam(j) for j in range(m)))
            else:
                lb.append(-sum(log_lam(j) for j in range(m, 0)))
    elif name == "custom":
        if len(kind.beta) != hi - lo + 1:
            raise ValueError(
                f"custom beta has {len(kind.beta)} entries but window [{lo}, {hi}] needs {hi - lo + 1}")
        return WeightSequence.from_beta(lo, kind.beta, kind.describe())
    else:  # pragma: no cover - SpaceKind validates names
        raise ValueError(name)
    return WeightSequence(lo, hi, np.array(lb, dtype=float), kind.describe())


def lambda_weights(w: WeightSequence) -> np.ndarray:
    """Shift weights lambda_m = beta(m+1)/beta(m) for m in [lo, hi-1]."""
    if w.size < 2:
        raise ValueError("need a window of length >= 2")
    return np.exp(np.diff(w.log_beta))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightClass:
    monotone_increasing: bool
    strictly_increasing: bool
    inner_limit_estimate: float
    outer_limit_estimate: float
    is_monotonic_Ar: bool

    def as_dict(self) -> dict:
        return {
            "monotone_increasing": self.monotone_increasing,
            "strictly_increasing": self.strictly_increasing,
            "inner_limit_estimate": self.inner_limit_estimate,
            "outer_limit_estimate": self.outer_limit_estimate,
            "is_monotonic_Ar": self.is_monotonic_Ar,
        }


def classify_weights(w: WeightSequence, r_hint: float, *, tol: float = ASYMPTOTIC_TOL,
                     mono_tol: float = ALGEBRAIC_TOL) -> WeightClass:
    """Scan the shift weights for monotonicity and their limits at both ends.

    The limit estimates are means over the first and last 10% of the
    weights.  A sequence is reported as monotonic-A_r when it increases,
    stays inside (r - tol, 1 + tol), and its two limit estimates are within
    ``tol`` of r and 1.
    """
    if w.size < 3:
        raise ValueError("classification needs a window of length >= 3")
    lam = lambda_weights(w)
    diffs = np.diff(lam)
    monotone = bool(np.all(diffs >= -mono_tol))
    strict = bool(monotone and np.all(diffs > mono_tol))
    k = max(1, int(round(0.1 * lam.size)))
    inner = float(np.mean(lam[:k]))
    outer = float(np.mean(lam[-k:]))
    in_band = bool(np.all((lam > r_hint - tol) & (lam < 1 + tol)))
    is_ar = (monotone and in_band and abs(inner - r_hint) <= tol and abs(outer - 1.0) <= tol)
    return WeightClass(monotone, strict, inner, outer, bool(is_ar))


# ---------------------------------------------------------------------------
# Laurent series
# ---------------------------------------------------------------------------

def _clean(coeffs: Mapping[int, complex]) -> dict[int, complex]:
    return {int(m): complex(c) for m, c in coeffs.items() if c != 0}


@dataclass(frozen=True)
class LaurentSeries:
    """Finitely supported Laurent series sum fhat(m) z^m."""

    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _clean(self.coeffs))

    @classmethod
    def monomial(cls, m: int, c: complex = 1.0) -> "LaurentSeries":
        return cls({m: c})

    @classmethod
    def from_array(cls, lo: int, values: Sequence[complex], *, atol: float = 0.0) -> "LaurentSeries":
        return cls({lo + i: v for i, v in enumerate(values) if abs(v) > atol})

    @property
    def support(self) -> tuple[int, int] | None:
        if not self.coeffs:
            return None
        return min(self.coeffs), max(self.coeffs)

    def __getitem__(self, m: int) -> complex:
        return self.coeffs.get(m, 0j)

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0j) + c
        return LaurentSeries(out)

    def __sub__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self + other.scale(-1.0)

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        return series_multiply(self, other)

    def scale(self, c: complex) -> "LaurentSeries":
        return LaurentSeries({m: c * v for m, v in self.coeffs.items()})

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by z^k."""
        return LaurentSeries({m + k: v for m, v in self.coeffs.items()})

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for m, c in self.coeffs.items():
            out = out + c * z ** m
        return out if out.ndim else complex(out)

    def to_array(self, lo: int, hi: int) -> np.ndarray:
        out = np.zeros(hi - lo + 1, dtype=complex)
        for m, c in self.coeffs.items():
            if not lo <= m <= hi:
                raise ValueError(f"coefficient at {m} lies outside [{lo}, {hi}]")
            out[m - lo] = c
        return out

    def max_abs_diff(self, other: "LaurentSeries") -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self[m] - other[m]) for m in keys), default=0.0)


def series_multiply(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    """Exact convolution of coefficient maps."""
    out: dict[int, complex] = {}
    for i, a in f.coeffs.items():
        for j, b in g.coeffs.items():
            out[i + j] = out.get(i + j, 0j) + a * b
    return LaurentSeries(out)


def residue_decompose(f: LaurentSeries, n: int) -> list[LaurentSeries]:
    """Split f into parts f_0..f_{n-1}, f_k keeping indices congruent to k mod n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    parts: list[dict[int, complex]] = [{} for _ in range(n)]
    for m, c in f.coeffs.items():
        parts[m % n][m] = c
    return [LaurentSeries(p) for p in parts]


def roots_of_unity(n: int) -> np.ndarray:
    return np.array([cmath.exp(2j * math.pi * k / n) for k in range(n)])
