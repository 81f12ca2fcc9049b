"""Commutants of truncated operators and the symbols of their elements.

The commutant {X : XA = AX} is the null space of the linear map
X -> XA - AX on d x d matrices; the *-commutant adds X -> XA* - A*X.  Both
are found from singular values of the vectorised map.

For a single-band A (a shift power, A e_j = c_j e_{j+n}) every scalar
equation of either map touches at most two unknowns, X[i, j+n] and
X[i-n, j], which lie on the same "chain" {(p + tn, q + tn)}.  The map is
therefore block diagonal over chains, its singular values are the union of
the per-chain singular values, and each chain can be solved on its own.
This is used for windows wider than ``DENSE_LIMIT``.
"""
from __future__ import annotations

import warnings
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .operators import (BasisMode, TruncatedOperator, multiplier_matrix, residue_projection,
                        shift_power, to_monomial, _scale)
from .spaces import LaurentSeries, WeightSequence, roots_of_unity

DENSE_LIMIT = 41
RANK_TOL = 1e-8


class CommutantError(ValueError):
    """A matrix that was supposed to commute does not."""


@dataclass(frozen=True, eq=False)
class CommutantBasis:
    """Frobenius-orthonormal basis of a (star-)commutant.

    ``singular_values`` holds every singular value of the vectorised
    commutator map, sorted in decreasing order; the last ``dim`` of them are
    the ones treated as zero.
    """

    elements: list
    singular_values: np.ndarray
    rank_tolerance: float
    star: bool
    method: str
    gap_ratio: float
    ill_conditioned: bool = False
    chains: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.elements)

    def stack(self) -> np.ndarray:
        """Elements as rows of a (dim, d*d) array."""
        if not self.elements:
            return np.zeros((0, 0))
        return np.array([x.ravel() for x in self.elements])

    def project(self, X: np.ndarray) -> np.ndarray:
        """Orthogonal projection of X onto the span (Frobenius inner product)."""
        B = self.stack()
        coef = B.conj() @ X.ravel()
        return (coef @ B).reshape(X.shape)


def _gap(sv: np.ndarray, ndrop: int) -> float:
    """Smallest kept singular value over largest dropped one."""
    kept = sv[: sv.size - ndrop]
    dropped = sv[sv.size - ndrop:]
    if kept.size == 0 or dropped.size == 0:
        return float("inf")
    top = dropped.max()
    if top == 0:
        return float("inf")
    return float(kept.min() / top)


def commutator_map(a: np.ndarray, star: bool) -> np.ndarray:
    """Matrix of X -> XA - AX (and X -> XA* - A*X) on row-major vec(X)."""
    d = a.shape[0]
    eye = np.eye(d)
    blocks = [np.kron(eye, a.T) - np.kron(a, eye)]
    if star:
        ah = a.conj().T
        blocks.append(np.kron(eye, ah.T) - np.kron(ah, eye))
    return np.vstack(blocks)


def _dense_basis(a: np.ndarray, tol: float, star: bool):
    d = a.shape[0]
    if np.iscomplexobj(a) and np.all(a.imag == 0):
        a = a.real
    m = commutator_map(a, star)
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    if s.size < d * d:
        s = np.concatenate([s, np.zeros(d * d - s.size)])
    smax = s[0] if s.size else 0.0
    null = s <= tol * smax if smax > 0 else np.ones_like(s, dtype=bool)
    elements = [vh[k].conj().reshape(d, d) for k in np.flatnonzero(null)]
    return elements, s, int(null.sum()), []


def _chain_key(p, q, n):
    lo = np.minimum(p, q)
    return p - q, lo % n, lo // n


def _band_basis(a: np.ndarray, n: int, tol: float, star: bool):
    """Per-chain solve for A with a single nonzero diagonal A[j + n, j]."""
    d = a.shape[0]
    c = np.zeros(d, dtype=a.dtype)
    c[: d - n] = a[np.arange(n, d), np.arange(d - n)]
    ii, jj = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()

    rows = []  # (unknown1 or None, coef1, unknown2 or None, coef2)
    # (XA - AX)[i, j] = c_j X[i, j+n] - c_{i-n} X[i-n, j]
    rows.append((ii, jj + n, np.where(jj + n < d, c[np.minimum(jj, d - 1)], 0),
                 ii - n, jj, np.where(ii - n >= 0, -c[np.clip(ii - n, 0, d - 1)], 0)))
    if star:
        cc = c.conj()
        # (XA* - A*X)[i, j] = conj(c_{j-n}) X[i, j-n] - conj(c_i) X[i+n, j]
        rows.append((ii, jj - n, np.where(jj - n >= 0, cc[np.clip(jj - n, 0, d - 1)], 0),
                     ii + n, jj, np.where(ii + n < d, -cc[np.minimum(ii, d - 1)], 0)))

    groups: dict = defaultdict(list)
    for p1, q1, c1, p2, q2, c2 in rows:
        ok1 = (p1 >= 0) & (p1 < d) & (q1 >= 0) & (q1 < d) & (c1 != 0)
        ok2 = (p2 >= 0) & (p2 < d) & (q2 >= 0) & (q2 < d) & (c2 != 0)
        live = ok1 | ok2
        for r in np.flatnonzero(live):
            entry = []
            if ok1[r]:
                entry.append((int(p1[r]), int(q1[r]), c1[r]))
            if ok2[r]:
                entry.append((int(p2[r]), int(q2[r]), c2[r]))
            p0, q0, _ = entry[0]
            key = (p0 - q0, min(p0, q0) % n)
            groups[key].append(entry)

    # every unknown belongs to exactly one chain, with or without equations
    members: dict = defaultdict(list)
    delta, res, pos = _chain_key(ii, jj, n)
    for k in range(ii.size):
        members[(int(delta[k]), int(res[k]))].append((int(pos[k]), int(ii[k]), int(jj[k])))

    dtype = np.result_type(a.dtype, float)
    chain_svs = []
    chain_vecs = []
    for key, mem in members.items():
        mem.sort()
        local = {(p, q): t for t, (_, p, q) in enumerate(mem)}
        L = len(mem)
        eqs = groups.get(key, [])
        sys = np.zeros((max(len(eqs), 1), L), dtype=dtype)
        for r, entry in enumerate(eqs):
            for p, q, coef in entry:
                sys[r, local[(p, q)]] += coef
        _, s, vh = np.linalg.svd(sys, full_matrices=True)
        if s.size < L:
            s = np.concatenate([s, np.zeros(L - s.size)])
        chain_svs.append(s)
        chain_vecs.append((key, mem, vh))

    s_all = np.sort(np.concatenate(chain_svs))[::-1]
    smax = s_all[0] if s_all.size else 0.0
    thresh = tol * smax
    elements, chains = [], []
    for (key, mem, vh), s in zip(chain_vecs, chain_svs):
        for k in np.flatnonzero(s <= thresh if smax > 0 else np.ones_like(s, dtype=bool)):
            x = np.zeros((d, d), dtype=dtype)
            v = vh[k].conj()
            for t, (_, p, q) in enumerate(mem):
                x[p, q] = v[t]
            elements.append(x)
            chains.append(key)
    ndrop = int((s_all <= thresh).sum()) if smax > 0 else s_all.size
    return elements, s_all, ndrop, chains


def _basis(A: TruncatedOperator, tol: float, star: bool, method: str) -> CommutantBasis:
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.asarray(A.matrix)
    if method == "auto":
        banded = A.band is not None and A.band >= 1
        method = "band" if banded and A.dim > DENSE_LIMIT else "dense"
    if method == "band":
        if A.band is None or A.band < 1:
            raise ValueError("the band solver needs a single-band matrix with positive offset")
        elements, s, ndrop, chains = _band_basis(a, A.band, tol, star)
    elif method == "dense":
        elements, s, ndrop, chains = _dense_basis(a, tol, star)
    else:
        raise ValueError(f"unknown method {method!r}")
    gap = _gap(s, ndrop)
    ill = gap < 10
    if ill:
        warnings.warn(f"commutant null space is poorly separated (gap ratio {gap:.3g})", RuntimeWarning)
    return CommutantBasis(elements, s, tol, star, method, gap, ill, chains)


def commutant_basis(A: TruncatedOperator, tol: float = RANK_TOL, *, method: str = "auto") -> CommutantBasis:
    """Basis of {X : XA = AX}; null space = singular values below tol * max."""
    return _basis(A, tol, False, method)


def star_commutant_basis(A: TruncatedOperator, tol: float = RANK_TOL, *, method: str = "auto") -> CommutantBasis:
    """Basis of {X : XA = AX and XA* = A*X}, the algebra of reducing projections."""
    A.require_orthonormal("the *-commutant")
    return _basis(A, tol, True, method)


def commutator_residual(X: np.ndarray, A: np.ndarray) -> float:
    """||XA - AX||_F / (||A||_F ||X||_F)."""
    den = np.linalg.norm(A) * np.linalg.norm(X)
    if den == 0:
        return 0.0
    return float(np.linalg.norm(X @ A - A @ X) / den)


# ---------------------------------------------------------------------------
# symbols and twist coefficients
# ---------------------------------------------------------------------------

def extract_symbols(X: np.ndarray, n: int, w: WeightSequence, *, mode: BasisMode = BasisMode.ORTHONORMAL,
                    tol: float = 1e-8) -> list[LaurentSeries]:
    """Symbols F_0..F_{n-1} with X f = sum_i F_i f_i, in monomial coefficients.

    F_k(z) = X(z^k) / z^k.  The coefficient of z^j in F_k is the common
    monomial-coordinate value of X along the chain {(m + j, m) : m = k mod n};
    where the column of z^k itself cannot see offset j inside the window,
    the other columns of the chain supply it.  Each chain value is a
    least-squares fit in orthonormal coordinates, so that rebuilding X from
    the symbols does not amplify rounding noise by the weight ratios.
    """
    X = np.asarray(X)
    if X.shape != (w.size, w.size):
        raise ValueError("X does not match the weight window")
    if mode is BasisMode.ORTHOGONAL:
        X = X * _scale(w)
    A = shift_power(w, n, balance=False).matrix
    res = commutator_residual(X, A)
    if res > tol:
        raise CommutantError(f"X is not in the commutant of M_z^{n}: relative residual {res:.3e}")

    d = w.size
    idx = w.indices
    p, m = np.meshgrid(idx, idx, indexing="ij")
    offset = (p - m).ravel()
    resid = (m % n).ravel()
    s = _scale(w).ravel()
    x = X.ravel()
    out = []
    for k in range(n):
        sel = resid == k
        coeffs = {}
        off_k, s_k, x_k = offset[sel], s[sel], x[sel]
        for j in np.unique(off_k):
            g = off_k == j
            sg = s_k[g]
            top = sg.max()
            sn = sg / top
            coeffs[int(j)] = complex(np.sum(sn * x_k[g]) / (np.sum(sn * sn) * top))
        out.append(LaurentSeries(coeffs))
    return out


def rebuild_from_symbols(F: list[LaurentSeries], w: WeightSequence) -> np.ndarray:
    """sum_i M_{F_i} P_i in orthonormal coordinates."""
    n = len(F)
    total = np.zeros((w.size, w.size), dtype=complex)
    for i, Fi in enumerate(F):
        if not Fi.coeffs:
            continue
        total += multiplier_matrix(Fi, w, BasisMode.ORTHONORMAL).matrix @ residue_projection(w, n, i)
    return total


@dataclass(frozen=True)
class TwistCoefficients:
    """a_0..a_{n-1} with T f(z) = sum_k a_k(z) f(z w_k), w_k = exp(2 pi i k / n)."""

    a: list
    omega: np.ndarray

    @property
    def n(self) -> int:
        return len(self.a)


def _dft(series: list[LaurentSeries], sign: int, scale: float) -> list[LaurentSeries]:
    n = len(series)
    keys = sorted(set().union(*(s.coeffs for s in series))) if series else []
    if not keys:
        return [LaurentSeries() for _ in range(n)]
    vals = np.array([[s[m] for m in keys] for s in series])  # (n, len(keys))
    k = np.arange(n)
    kernel = np.exp(sign * 2j * np.pi * np.outer(k, k) / n) * scale
    out = kernel @ vals
    return [LaurentSeries(dict(zip(keys, row))) for row in out]


def symbols_to_twist(F: list[LaurentSeries]) -> TwistCoefficients:
    """a_i = (1/n) sum_k F_k w_i^{-k}."""
    n = len(F)
    return TwistCoefficients(_dft(F, -1, 1.0 / n), roots_of_unity(n))


def twist_to_symbols(tw: TwistCoefficients) -> list[LaurentSeries]:
    """F_k = sum_i a_i w_i^k."""
    return _dft(tw.a, +1, 1.0)


def twist_apply(tw: TwistCoefficients, f: LaurentSeries, z: complex) -> complex:
    return complex(sum(ak(z) * f(z * wk) for ak, wk in zip(tw.a, tw.omega)))
