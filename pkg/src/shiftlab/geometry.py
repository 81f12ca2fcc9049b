"""Unitary invariants of weighted shifts: weight alignment, restriction
sub-shifts, spectral radii, reproducing kernels and kernel curvature.

Curvature convention: K(w) = -Laplacian of log ||k_w||^2 with the real
Laplacian d^2/dx^2 + d^2/dy^2, which is 4 d/dw d/dw-bar of the same
function.  Only signs and differences are consumed downstream.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .operators import shift_power
from .spaces import DomainError, LaurentSeries, WeightSequence, lambda_weights, roots_of_unity

KERNEL_MARGIN = 0.02
TAIL_TOL = 1e-12


# ---------------------------------------------------------------------------
# alignment and restrictions
# ---------------------------------------------------------------------------

def weights_align(v: Sequence[float], w: Sequence[float], tol: float = 1e-6) -> int | None:
    """Smallest |k| with |v_m| = |w_{m+k}| (to ``tol``) on the overlap, else None.

    Shifts whose overlap is shorter than half the longer list are not tried.
    """
    v = np.abs(np.asarray(v, dtype=complex))
    w = np.abs(np.asarray(w, dtype=complex))
    need = (max(v.size, w.size) + 1) // 2
    if min(v.size, w.size) < need or need == 0:
        raise ValueError(f"weight lists of lengths {v.size} and {w.size} overlap too little to compare")
    kmax = max(v.size, w.size) // 2
    for kk in range(kmax + 1):
        for k in ((kk, -kk) if kk else (0,)):
            m = np.arange(v.size)
            ok = (m + k >= 0) & (m + k < w.size)
            if ok.sum() < need:
                continue
            if np.max(np.abs(v[m[ok]] - w[m[ok] + k])) <= tol:
                return k
    return None


def restriction_range(w: WeightSequence, n: int, i: int | None = None) -> tuple[int, int]:
    """k-range with n k + i inside the window (for every residue when i is None)."""
    lo, hi = w.window_lo, w.window_hi
    if i is None:
        return -((-lo) // n), (hi - (n - 1)) // n
    return -((-(lo - i)) // n), (hi - i) // n


def restriction_sequence(w: WeightSequence, n: int, i: int, *, common: bool = False) -> WeightSequence:
    """beta_i(k) = beta(n k + i): the weight sequence of M_{z^n} restricted to S_i."""
    if not 0 <= i < n:
        raise ValueError(f"residue must satisfy 0 <= i < n, got {i}")
    k_lo, k_hi = restriction_range(w, n, None if common else i)
    if k_hi < k_lo:
        raise ValueError("window too short for this restriction")
    lb = np.array([w.log_beta_at(n * k + i) for k in range(k_lo, k_hi + 1)])
    return WeightSequence(k_lo, k_hi, lb, f"{w.label} | S_{i} of z^{n}")


def restriction_weights(w: WeightSequence, n: int, i: int) -> np.ndarray:
    """lambda_k = beta(n(k+1) + i) / beta(nk + i) over the available k."""
    seq = restriction_sequence(w, n, i)
    if seq.size < 2:
        raise ValueError("window too short for this restriction")
    return lambda_weights(seq)


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumEstimate:
    outer_radius: float
    inner_radius: float
    unilateral: bool = False

    def contains(self, z: complex, margin: float = KERNEL_MARGIN) -> bool:
        a = abs(z)
        if a >= self.outer_radius * (1 - margin):
            return False
        return self.unilateral or a > self.inner_radius * (1 + margin)


def spectrum_estimate(w: WeightSequence) -> SpectrumEstimate:
    """Extremes of geometric means of the weights over windows a quarter long."""
    lam = lambda_weights(w)
    loglam = np.log(lam)
    k = max(1, lam.size // 4)
    csum = np.concatenate([[0.0], np.cumsum(loglam)])
    gm = (csum[k:] - csum[:-k]) / k
    return SpectrumEstimate(float(np.exp(gm.max())), float(np.exp(gm.min())), w.is_unilateral)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def _log_terms(w: WeightSequence, rho):
    """log(|w|^(2m) / beta(m)^2) for each radius (rows) and window index (cols)."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    m = w.indices.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.log(rho)
        t = 2 * np.outer(lr, m)
    zero = rho == 0
    if np.any(zero):
        t[zero] = np.where(m == 0, 0.0, -np.inf)
    return t - 2 * w.log_beta[None, :]


def log_kernel_norm_sq(w: WeightSequence, rho) -> np.ndarray:
    """log sum_m |w|^(2m) / beta(m)^2 as a function of |w|."""
    return logsumexp(_log_terms(w, rho), axis=1)


def kernel_tail_ratio(w: WeightSequence, rho) -> np.ndarray:
    """Largest window-edge term relative to the truncated kernel norm."""
    t = _log_terms(w, rho)
    total = logsumexp(t, axis=1)
    edge = t[:, -1] if w.is_unilateral else np.maximum(t[:, 0], t[:, -1])
    return np.exp(edge - total)


@dataclass(frozen=True, eq=False)
class KernelVector:
    """Truncated reproducing kernel k_w with coefficients conj(w)^m / beta(m)^2."""

    omega: complex
    weights: WeightSequence
    coeffs: np.ndarray
    norm_sq: float
    tail_ratio: float
    in_domain: bool = True

    @property
    def orthonormal(self) -> np.ndarray:
        """Coordinates in the basis z^m / beta(m)."""
        return self.coeffs * np.exp(self.weights.log_beta)

    @property
    def truncation_ok(self) -> bool:
        return self.tail_ratio <= TAIL_TOL

    def pair(self, f: LaurentSeries) -> complex:
        """<f, k_w> in L^2(beta); equals f(w) for f supported in the window."""
        w = self.weights
        total = 0j
        for m, c in f.coeffs.items():
            pos = w.pos(m)
            total += c * np.conj(self.coeffs[pos]) * math.exp(2 * w.log_beta[pos])
        return complex(total)


def kernel(w: WeightSequence, omega: complex, *, strict: bool = True) -> KernelVector:
    """Reproducing kernel at ``omega``; ``strict`` rejects points near the spectrum's edge."""
    omega = complex(omega)
    spec = spectrum_estimate(w)
    inside = spec.contains(omega)
    if strict and not inside:
        raise DomainError(
            f"|omega| = {abs(omega):.4g} is not inside the annulus "
            f"({spec.inner_radius:.4g}, {spec.outer_radius:.4g}) with a {KERNEL_MARGIN:.0%} margin")
    m = w.indices
    logmag = _log_terms(w, abs(omega))[0]
    phase = np.exp(-1j * m * np.angle(omega)) if omega != 0 else (m == 0).astype(complex)
    # |conj(w)^m / beta^2| = exp(logmag / 2 - log beta)
    coeffs = np.exp(0.5 * logmag - w.log_beta) * phase
    log_norm = float(logsumexp(logmag))
    tail = float(kernel_tail_ratio(w, abs(omega))[0])
    return KernelVector(omega, w, coeffs, math.exp(log_norm), tail, inside)


@dataclass(frozen=True)
class NullspaceReport:
    lam: complex
    n: int
    residuals: list
    predicted: list
    tol: float
    status: str  # "pass", "flagged" (truncation-dominated) or "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict:
        return {"lambda": [self.lam.real, self.lam.imag], "n": self.n, "residuals": list(self.residuals),
                "predicted_truncation": list(self.predicted), "tol": self.tol, "status": self.status}


def kernel_nullspace_check(w: WeightSequence, n: int, lam: complex, tol: float = 1e-4) -> NullspaceReport:
    """Residuals ||(A - lam^n)^* k_{lam w_k}|| / ||k|| for A = M_{z^n} and each n-th root w_k.

    In exact arithmetic the only nonzero entries of the residual come from
    the top n window indices, where the truncated adjoint has no partner
    row.  ``predicted`` is that truncation term; a residual above ``tol``
    that matches it is reported as "flagged" rather than as a failure.
    """
    lam = complex(lam)
    A = shift_power(w, n, balance=False).matrix
    d = A.shape[0]
    target = lam ** n
    residuals, predicted = [], []
    for wk in roots_of_unity(n):
        kv = kernel(w, lam * wk, strict=False)
        u = kv.orthonormal
        r = A.conj().T @ u - np.conj(target) * u
        nu = np.linalg.norm(u)
        residuals.append(float(np.linalg.norm(r) / nu))
        predicted.append(float(abs(target) * np.linalg.norm(u[d - n:]) / nu))
    worst = max(residuals)
    if worst <= tol:
        status = "pass"
    elif all(abs(a - b) <= 1e-8 * max(1.0, b) for a, b in zip(residuals, predicted)):
        status = "flagged"
    else:
        status = "fail"
    return NullspaceReport(lam, n, residuals, predicted, tol, status)


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Polar grid: every radius times ``angles`` equally spaced arguments."""

    radii: tuple
    angles: int = 8

    def points(self) -> np.ndarray:
        th = 2 * np.pi * np.arange(self.angles) / self.angles
        return np.array([r * np.exp(1j * t) for r in self.radii for t in th])


@dataclass(frozen=True, eq=False)
class CurvatureField:
    grid: np.ndarray
    values: np.ndarray
    stencil_h: float
    max_tail: float = 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["x", "y", "value"])
        for z, k in zip(self.grid, self.values):
            wr.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(k))])
        return buf.getvalue()


def _laplacian_log_norm(w: WeightSequence, pts: np.ndarray, h: float) -> np.ndarray:
    """Five-point Laplacian of log ||k||^2 at each point."""
    offs = np.array([0, h, -h, 1j * h, -1j * h])
    allpts = (pts[:, None] + offs[None, :]).ravel()
    L = log_kernel_norm_sq(w, np.abs(allpts)).reshape(pts.size, 5)
    return (L[:, 1:].sum(axis=1) - 4 * L[:, 0]) / h ** 2


def curvature_at(w: WeightSequence, pts, h: float) -> np.ndarray:
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    return -_laplacian_log_norm(w, pts, h)


def curvature_field(w: WeightSequence, grid, h: float, *, annulus: tuple[float, float] | None = None,
                    check_tail: bool = True) -> CurvatureField:
    """K(w) = -Laplacian log ||k_w||^2 on every grid point.

    Every stencil point must stay 2h inside the annulus (taken from
    ``spectrum_estimate`` unless given), and the kernel series must be
    converged to ``TAIL_TOL`` at the window edges.
    """
    pts = grid.points() if isinstance(grid, GridSpec) else np.atleast_1d(np.asarray(grid, dtype=complex))
    if h <= 0:
        raise ValueError("h must be positive")
    if annulus is None:
        spec = spectrum_estimate(w)
        inner = 0.0 if spec.unilateral else spec.inner_radius
        annulus = (inner, spec.outer_radius)
    inner, outer = annulus
    rad = np.abs(pts)
    unilateral = w.is_unilateral and inner == 0.0
    low_ok = rad >= inner + 2 * h if not unilateral else np.ones_like(rad, dtype=bool)
    if not np.all(low_ok & (rad <= outer - 2 * h)):
        bad = pts[~(low_ok & (rad <= outer - 2 * h))]
        raise DomainError(f"stencil of width {h} leaves the annulus ({inner:.4g}, {outer:.4g}) at {bad[:3]}")
    offs = np.array([0, h, -h, 1j * h, -1j * h])
    tails = kernel_tail_ratio(w, np.abs((pts[:, None] + offs[None, :]).ravel()))
    max_tail = float(tails.max())
    if check_tail and max_tail > TAIL_TOL:
        raise DomainError(f"kernel series not converged on this window (edge ratio {max_tail:.2e}); widen the window")
    return CurvatureField(pts, curvature_at(w, pts, h), h, max_tail)


def richardson_ratio(w: WeightSequence, omega: complex, h: float) -> float:
    """(K_h - K_{h/2}) / (K_{h/2} - K_{h/4}); close to 4 for a second-order stencil."""
    k = curvature_at(w, [omega], h)[0]
    k2 = curvature_at(w, [omega], h / 2)[0]
    k4 = curvature_at(w, [omega], h / 4)[0]
    return float((k - k2) / (k2 - k4))


def stencil_error(w: WeightSequence, pts, h: float) -> np.ndarray:
    """Richardson estimate of the discretisation error of K_h."""
    return 4.0 / 3.0 * np.abs(curvature_at(w, pts, h) - curvature_at(w, pts, h / 2))


@dataclass(frozen=True)
class CurvatureComparison:
    omegas: list
    curvatures: list  # per omega, one value per residue class
    errors: list
    gaps: list  # per omega, min pairwise gap
    thresholds: list  # per omega, 10 x largest stencil error
    in_domain: list
    passed: bool

    def as_dict(self) -> dict:
        return {
            "omegas": [[complex(z).real, complex(z).imag] for z in self.omegas],
            "curvatures": [list(map(float, c)) for c in self.curvatures],
            "stencil_errors": [list(map(float, e)) for e in self.errors],
            "min_gaps": list(map(float, self.gaps)),
            "thresholds": list(map(float, self.thresholds)),
            "in_domain": list(self.in_domain),
            "passed": self.passed,
        }


def restriction_curvatures_distinct(w: WeightSequence, n: int, omega, h: float = 2e-4) -> CurvatureComparison:
    """Compare kernel curvatures of the n restriction sub-shifts of M_{z^n}.

    All restrictions use the same k-range so that equivalent sub-shifts give
    identical truncated kernels.  Passes when, at some sampled point, every
    pairwise gap exceeds ten times the larger stencil-error estimate.
    """
    omegas = [complex(omega)] if np.isscalar(omega) else [complex(z) for z in omega]
    subs = [restriction_sequence(w, n, i, common=True) for i in range(n)]
    specs = [spectrum_estimate(s) for s in subs]
    curv, errs, gaps, thr, dom = [], [], [], [], []
    ok_any = False
    for z in omegas:
        ks = np.array([curvature_at(s, [z], h)[0] for s in subs])
        es = np.array([stencil_error(s, [z], h)[0] for s in subs])
        inside = all(sp.contains(z) for sp in specs)
        if n == 1:
            g, t = float("inf"), 0.0
            ok = True
        else:
            pair_gaps = [abs(ks[i] - ks[j]) for i in range(n) for j in range(i + 1, n)]
            pair_thr = [10 * max(es[i], es[j]) for i in range(n) for j in range(i + 1, n)]
            g, t = float(min(pair_gaps)), float(max(pair_thr))
            ok = inside and all(a > b for a, b in zip(pair_gaps, pair_thr))
        ok_any = ok_any or ok
        curv.append(ks)
        errs.append(es)
        gaps.append(g)
        thr.append(t)
        dom.append(inside)
    return CurvatureComparison(omegas, curv, errs, gaps, thr, dom, ok_any)


def weights_csv(w: WeightSequence) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["m", "log_beta", "lambda"])
    lam = list(lambda_weights(w)) + [float("nan")] if w.size > 1 else [float("nan")]
    for m, lb, l in zip(w.indices, w.log_beta, lam):
        wr.writerow([int(m), repr(float(lb)), repr(float(l))])
    return buf.getvalue()
