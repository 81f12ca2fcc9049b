"""Reducing-subspace lattices of truncated shift powers.

Reducing subspaces are the ranges of orthogonal projections in the
*-commutant.  When that algebra is abelian it is spanned by finitely many
mutually orthogonal minimal projections, found here as the spectral
projections of a random self-adjoint element; the lattice is then every 0/1
sum of them.  A non-abelian algebra contains a full matrix block and the
lattice is a continuum.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .commutant import RANK_TOL, CommutantBasis, star_commutant_basis
from .operators import TruncatedOperator, residue_projection

DISCRETE = "Discrete"
CONTINUUM = "Continuum"


class LatticeError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ReducingLattice:
    kind: str
    minimal_projections: list = field(default_factory=list)
    members: list = field(default_factory=list)  # (bitmask, projection)
    algebra_dims: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def size(self) -> int | None:
        return len(self.members) if self.kind == DISCRETE else None


@dataclass(frozen=True)
class ReducingReport:
    idempotent: float
    selfadjoint: float
    commutes: float
    commutes_adjoint: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.idempotent, self.selfadjoint, self.commutes, self.commutes_adjoint) <= self.tol

    def as_dict(self) -> dict:
        return {"idempotent": self.idempotent, "selfadjoint": self.selfadjoint,
                "commutes": self.commutes, "commutes_adjoint": self.commutes_adjoint,
                "tol": self.tol, "passed": self.passed}


def verify_reducing(P: np.ndarray, A: TruncatedOperator, tol: float = 1e-8) -> ReducingReport:
    """Frobenius residuals of P^2 - P, P - P*, PA - AP and PA* - A*P."""
    a = A.matrix
    ah = A.H
    P = np.asarray(P)
    f = np.linalg.norm
    return ReducingReport(float(f(P @ P - P)), float(f(P - P.conj().T)),
                          float(f(P @ a - a @ P)), float(f(P @ ah - ah @ P)), tol)


def is_abelian(basis: CommutantBasis, tol: float) -> tuple[bool, float]:
    """Largest pairwise commutator norm among the basis elements."""
    worst = 0.0
    els = basis.elements
    for i in range(len(els)):
        for j in range(i + 1, len(els)):
            c = els[i] @ els[j] - els[j] @ els[i]
            worst = max(worst, float(np.linalg.norm(c)))
    return worst <= tol, worst


def _random_selfadjoint(elements, rng) -> np.ndarray:
    h = np.zeros_like(elements[0], dtype=complex)
    for x in elements:
        c = rng.normal() + 1j * rng.normal()
        h += c * x
    return 0.5 * (h + h.conj().T)


def _cluster(vals: np.ndarray, tol: float):
    """Group sorted eigenvalues; returns (groups, ambiguous)."""
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    gaps = np.diff(vals)
    cut = gaps > tol * scale
    ambiguous = bool(np.any(cut & (gaps < 10 * tol * scale)))
    groups, start = [], 0
    for k in np.flatnonzero(cut):
        groups.append(np.arange(start, k + 1))
        start = k + 1
    groups.append(np.arange(start, vals.size))
    min_gap = float(gaps[cut].min() / scale) if np.any(cut) else float("inf")
    return groups, ambiguous, min_gap


def spectral_projections(elements, rng, *, tol: float, expected: int, retries: int = 5):
    """Minimal projections of an abelian *-algebra from one random Hermitian element."""
    for _ in range(retries):
        h = _random_selfadjoint(elements, rng)
        vals, vecs = np.linalg.eigh(h)
        groups, ambiguous, min_gap = _cluster(vals, tol)
        if ambiguous or len(groups) != expected:
            continue
        projs = []
        for g in groups:
            v = vecs[:, g]
            projs.append(v @ v.conj().T)
        return projs, min_gap
    raise LatticeError(f"could not separate {expected} eigenvalue clusters after {retries} attempts")


def _center(elements, tol: float) -> list[np.ndarray]:
    """Basis of the centre of the algebra spanned by ``elements``."""
    k = len(elements)
    cols = []
    for i in range(k):
        cols.append(np.concatenate([(elements[i] @ b - b @ elements[i]).ravel() for b in elements]))
    m = np.array(cols).T
    _, s, vh = np.linalg.svd(m)
    s = np.concatenate([s, np.zeros(k - s.size)])
    null = s <= tol * max(s[0], 1e-300)
    out = []
    for row in vh[null]:
        z = sum(c * x for c, x in zip(row.conj(), elements))
        out.append(z)
    return out


def _block_dims(elements, rng, tol: float) -> list[int]:
    center = _center(elements, tol)
    projs, _ = spectral_projections(center, rng, tol=tol, expected=len(center))
    dims = []
    for q in projs:
        compressed = np.array([(q @ x @ q).ravel() for x in elements])
        rank = np.linalg.matrix_rank(compressed, tol=tol * max(np.linalg.norm(compressed, 2), 1e-300))
        dims.append(int(round(np.sqrt(rank))))
    return sorted(dims)


def reducing_lattice(A: TruncatedOperator, tol: float = RANK_TOL, *, seed: int = 0,
                     basis: CommutantBasis | None = None, verify_tol: float = 1e-8) -> ReducingLattice:
    """Enumerate the reducing subspaces of A from its *-commutant."""
    A.require_orthonormal("the reducing lattice")
    rng = np.random.default_rng(seed)
    if basis is None:
        basis = star_commutant_basis(A, tol)
    abelian, worst = is_abelian(basis, 1e-8)
    diag = {"star_commutant_dim": basis.dim, "gap_ratio": basis.gap_ratio,
            "max_commutator": worst, "method": basis.method}
    if not abelian:
        dims = _block_dims(basis.elements, rng, 1e-8)
        return ReducingLattice(CONTINUUM, algebra_dims=dims, diagnostics=diag)

    projs, min_gap = spectral_projections(basis.elements, rng, tol=1e-8, expected=basis.dim)
    # order by the smallest basis index carried, for reproducible bitmasks
    projs.sort(key=lambda p: int(np.argmax(np.abs(np.diag(p)) > 0.5)))
    diag["eigen_gap"] = min_gap
    members = []
    for bits in range(2 ** len(projs)):
        p = np.zeros_like(projs[0])
        for k, q in enumerate(projs):
            if bits >> k & 1:
                p = p + q
        members.append((bits, p))
    worst_member = max(verify_reducing(p, A, verify_tol).as_dict()[key]
                       for _, p in members
                       for key in ("idempotent", "selfadjoint", "commutes", "commutes_adjoint"))
    diag["max_member_residual"] = worst_member
    return ReducingLattice(DISCRETE, projs, members, diagnostics=diag)


@dataclass(frozen=True)
class ResidueMatch:
    projection: int
    residue: int
    distance: float


def match_minimal_to_residues(L: ReducingLattice, n: int, A: TruncatedOperator) -> list[ResidueMatch]:
    """Greedy match of minimal projections to the diagonal residue-class projections."""
    if L.kind != DISCRETE:
        raise LatticeError("only a discrete lattice has minimal projections to match")
    if len(L.minimal_projections) != n:
        raise LatticeError(f"lattice has {len(L.minimal_projections)} minimal projections, expected {n}")
    w = A.weights.restrict(A.basis_lo, A.basis_hi)
    targets = [residue_projection(w, n, k) for k in range(n)]
    pairs = sorted((float(np.linalg.norm(p - t)), i, k)
                   for i, p in enumerate(L.minimal_projections) for k, t in enumerate(targets))
    used_p, used_k, out = set(), set(), []
    for dist, i, k in pairs:
        if i in used_p or k in used_k:
            continue
        used_p.add(i)
        used_k.add(k)
        out.append(ResidueMatch(i, k, dist))
    return sorted(out, key=lambda m: m.projection)


def off_diagonal_mass(P: np.ndarray, A: TruncatedOperator, n: int) -> float:
    """Frobenius mass of P outside the residue-class diagonal blocks."""
    res = A.indices % n
    mask = res[:, None] != res[None, :]
    return float(np.linalg.norm(np.where(mask, P, 0)))


def brute_force_diagonal_reducing(A: TruncatedOperator, tol: float = 1e-10) -> list[np.ndarray]:
    """All diagonal 0/1 projections that reduce A.  Exponential; small windows only."""
    d = A.dim
    if d > 16:
        raise ValueError("brute-force search is limited to windows of at most 16 points")
    a, ah = A.matrix, A.H
    found = []
    for bits in itertools.product((0.0, 1.0), repeat=d):
        p = np.diag(bits)
        if np.linalg.norm(p @ a - a @ p) <= tol and np.linalg.norm(p @ ah - ah @ p) <= tol:
            found.append(p)
    return found
