"""Truncated matrices of shifts, shift powers and multiplication operators.

Every matrix is the compression of an operator on L^2(beta) to the basis
window [lo, hi]: images that would leave the window are dropped.  Two
coordinate systems are in play and are kept explicit:

* ``ORTHOGONAL``: the monomials z^m (matrix entries of M_phi are phi_hat(m-k));
* ``ORTHONORMAL``: e_m = z^m / beta(m), where the adjoint is the conjugate
  transpose.
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, replace

import numpy as np

from .spaces import LaurentSeries, WeightSequence, lambda_weights


class BasisMode(enum.Enum):
    ORTHOGONAL = "orthogonal"
    ORTHONORMAL = "orthonormal"


class ModeError(ValueError):
    """An adjoint-dependent computation was asked of an orthogonal-basis matrix."""


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    matrix: np.ndarray
    basis_lo: int
    basis_hi: int
    basis_mode: BasisMode
    weights: WeightSequence
    # offset of the single nonzero diagonal, when the matrix is a shift power
    band: int | None = None

    def __post_init__(self):
        a = np.asarray(self.matrix)
        d = self.basis_hi - self.basis_lo + 1
        if a.shape != (d, d):
            raise ValueError(f"matrix shape {a.shape} does not match window size {d}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.basis_lo, self.basis_hi + 1)

    def require_orthonormal(self, what: str = "this computation") -> None:
        if self.basis_mode is not BasisMode.ORTHONORMAL:
            raise ModeError(f"{what} needs the orthonormal basis; got {self.basis_mode.value}")

    @property
    def H(self) -> np.ndarray:
        """Adjoint matrix (orthonormal mode only)."""
        self.require_orthonormal("the adjoint")
        return self.matrix.conj().T

    def with_matrix(self, matrix, band=None) -> "TruncatedOperator":
        return replace(self, matrix=matrix, band=band)


def _scale(w: WeightSequence) -> np.ndarray:
    """beta(m) / beta(k) as a matrix, computed from logs."""
    lb = w.log_beta
    return np.exp(lb[:, None] - lb[None, :])


def shift_matrix(w: WeightSequence) -> TruncatedOperator:
    """M_z in the orthonormal basis: entry (m+1, m) is lambda_m."""
    lam = lambda_weights(w)
    a = np.zeros((w.size, w.size))
    a[np.arange(1, w.size), np.arange(w.size - 1)] = lam
    return TruncatedOperator(a, w.window_lo, w.window_hi, BasisMode.ORTHONORMAL, w, band=1)


def power_matrix(A: TruncatedOperator, n: int) -> TruncatedOperator:
    """A^n.  For a single-band A the band offset is tracked."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = np.linalg.matrix_power(A.matrix, n)
    band = A.band * n if A.band is not None else None
    return A.with_matrix(out, band=band)


def shift_power(w: WeightSequence, n: int, *, balance: bool = True) -> TruncatedOperator:
    """Truncated M_{z^n} in the orthonormal basis.

    With ``balance`` the window is first trimmed at the top so that all n
    residue classes have the same length; otherwise the compressions to two
    classes differ in size and can never be unitarily equivalent.
    """
    if balance:
        w = w.balanced(n)
    return power_matrix(shift_matrix(w), n)


@dataclass(frozen=True)
class MultiplierSymbol:
    series: LaurentSeries
    sup_estimate: float = float("nan")

    @classmethod
    def from_series(cls, series: LaurentSeries, r: float | None = None, *, npts: int = 64):
        if r is None:
            return cls(series)
        return cls(series, grid_sup(series, r, npts=npts))


def grid_sup(phi: LaurentSeries, inner: float, outer: float = 1.0, *, npts: int = 64) -> float:
    """max |phi| over a polar grid of the closed annulus inner <= |z| <= outer."""
    rad = np.linspace(inner, outer, npts)
    ang = np.linspace(0.0, 2 * np.pi, 4 * npts, endpoint=False)
    z = rad[:, None] * np.exp(1j * ang[None, :])
    return float(np.max(np.abs(phi(z))))


def multiplier_matrix(phi, w: WeightSequence, mode: BasisMode = BasisMode.ORTHONORMAL) -> TruncatedOperator:
    """Compression of M_phi to the window of ``w``.

    Orthogonal basis: entry (m, k) = phi_hat(m - k).
    Orthonormal basis: entry (m, k) = phi_hat(m - k) beta(m) / beta(k).
    """
    series = phi.series if isinstance(phi, MultiplierSymbol) else phi
    d = w.size
    clipped = sorted(j for j in series.coeffs if abs(j) > d - 1)
    if clipped:
        raise ValueError(f"symbol coefficients at {clipped} cannot act inside a window of length {d}")
    diff = np.arange(d)[:, None] - np.arange(d)[None, :]
    a = np.zeros((d, d), dtype=complex)
    for j, c in series.coeffs.items():
        a[diff == j] = c
    if mode is BasisMode.ORTHONORMAL:
        a = a * _scale(w)
    if np.all(a.imag == 0):
        a = a.real
    band = None
    if len(series.coeffs) == 1:
        band = next(iter(series.coeffs))
    return TruncatedOperator(a, w.window_lo, w.window_hi, mode, w, band=band)


def to_orthonormal(X: np.ndarray, w: WeightSequence) -> np.ndarray:
    """Monomial-coordinate matrix to orthonormal coordinates."""
    return X * _scale(w)


def to_monomial(X: np.ndarray, w: WeightSequence) -> np.ndarray:
    """Orthonormal-coordinate matrix to monomial coordinates."""
    return X / _scale(w)


def residue_projection(w: WeightSequence, n: int, k: int) -> np.ndarray:
    """Diagonal 0/1 projection onto span{z^m : m = k mod n} (same in both bases)."""
    return np.diag((w.indices % n == k % n).astype(float))


def self_commutator(A: TruncatedOperator) -> TruncatedOperator:
    """[A*, A] = A*A - AA*."""
    A.require_orthonormal("the self-commutator")
    a = A.matrix
    ah = a.conj().T
    c = ah @ a - a @ ah
    c = 0.5 * (c + c.conj().T)
    return A.with_matrix(c, band=0 if A.band is not None else None)


def interior_slice(A: TruncatedOperator, width: int) -> slice:
    return slice(width, A.dim - width)


def operator_norm(A) -> float:
    """Largest singular value."""
    a = A.matrix if isinstance(A, TruncatedOperator) else np.asarray(A)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def matrix_csv(A, lo: int = 0) -> str:
    """Nonzero entries as ``row,col,re,im`` with window indices as labels."""
    if isinstance(A, TruncatedOperator):
        a, lo = A.matrix, A.basis_lo
    else:
        a = np.asarray(A)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["row", "col", "re", "im"])
    rows, cols = np.nonzero(a)
    for i, j in zip(rows, cols):
        v = complex(a[i, j])
        wr.writerow([int(i) + lo, int(j) + lo, repr(v.real), repr(v.imag)])
    return buf.getvalue()


def read_matrix_csv(text: str, lo: int, hi: int) -> np.ndarray:
    d = hi - lo + 1
    out = np.zeros((d, d), dtype=complex)
    rd = csv.DictReader(io.StringIO(text))
    for row in rd:
        out[int(row["row"]) - lo, int(row["col"]) - lo] = complex(float(row["re"]), float(row["im"]))
    return out
