"""Commutant bases, symbol extraction and twist coefficients."""
import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftlab.commutant import (CommutantError, commutant_basis, commutator_residual, extract_symbols,
                                rebuild_from_symbols, star_commutant_basis, symbols_to_twist,
                                twist_apply, twist_to_symbols, TwistCoefficients)
from shiftlab.lattice import is_abelian
from shiftlab.operators import (BasisMode, TruncatedOperator, residue_projection, shift_matrix, shift_power,
                                to_monomial)
from shiftlab.spaces import LaurentSeries, SpaceKind, make_weights, roots_of_unity


def oracle_dim(a, star, rtol=1e-9):
    """Brute-force null space of X -> (XA - AX [, XA* - A*X]) on column-major vec(X)."""
    d = a.shape[0]
    eye = np.eye(d)
    # vec(XA) = (A^T kron I) vec X, vec(AX) = (I kron A) vec X   (column-major)
    blocks = [np.kron(a.T, eye) - np.kron(eye, a)]
    if star:
        ah = a.conj().T
        blocks.append(np.kron(ah.T, eye) - np.kron(eye, ah))
    m = np.vstack(blocks)
    return sla.null_space(m, rcond=rtol).shape[1]


def _op(kind, window, n, balance=True):
    return shift_power(make_weights(kind, window), n, balance=balance)


BERGMAN = SpaceKind.bergman(0.5)


def test_identity_commutant_is_everything():
    w = make_weights(SpaceKind.flat(), (0, 4))
    eye = TruncatedOperator(np.eye(5), 0, 4, BasisMode.ORTHONORMAL, w)
    assert commutant_basis(eye).dim == 25


def test_flat_shift_commutant_is_polynomials():
    A = shift_matrix(make_weights(SpaceKind.flat(), (0, 4)))
    B = commutant_basis(A)
    assert B.dim == 5 == oracle_dim(A.matrix, star=False)
    for x in B.elements:
        # upper-left to lower-right Toeplitz and lower triangular
        assert np.allclose(np.triu(x, 1), 0, atol=1e-10)
        for k in range(5):
            assert np.ptp(np.diag(x, -k)) < 1e-10


def test_bergman_z2_plain_commutant_matches_oracle():
    A = _op(BERGMAN, (-8, 8), 2, balance=False)
    B = commutant_basis(A)
    assert B.dim == oracle_dim(A.matrix, star=False)
    # the truncation is nilpotent with Jordan blocks of sizes 9 and 8 (the residue classes),
    # so the commutant has dimension sum_{i,j} min(p_i, p_j)
    assert B.dim == 9 + 8 + 8 + 8
    assert B.gap_ratio >= 1e4


@pytest.mark.parametrize("kind,window,n,expect", [
    (BERGMAN, (-16, 16), 2, 2),
    (BERGMAN, (-18, 18), 3, 3),
    (SpaceKind.flat(), (-16, 16), 2, 4),
    (SpaceKind.alternating(0.5, 2.0), (-16, 16), 2, 4),
])
def test_star_commutant_dimension_examples(kind, window, n, expect):
    A = _op(kind, window, n)
    B = star_commutant_basis(A)
    assert B.dim == expect
    assert B.gap_ratio >= 1e4


@pytest.mark.parametrize("kind", [BERGMAN, SpaceKind.flat(), SpaceKind.alternating(0.5, 2.0)])
def test_star_dimension_brute_force_small_window(kind):
    A = _op(kind, (-6, 6), 2)
    assert star_commutant_basis(A).dim == oracle_dim(A.matrix, star=True)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("kind,half", [(BERGMAN, 8), (SpaceKind.bergman(0.3), 8), (SpaceKind.hardy(0.5), 4),
                                       (SpaceKind.hardy(0.7), 4)])
def test_dimension_law(kind, half, n):
    A = _op(kind, (-half * n, half * n), n)
    B = star_commutant_basis(A)
    assert B.dim == n
    assert B.gap_ratio >= 1e4


@pytest.mark.parametrize("n,window", [(2, (-16, 16)), (3, (-16, 16)), (4, (-16, 16))])
def test_dense_and_band_agree(n, window):
    A = _op(BERGMAN, window, n)
    for star in (False, True):
        fn = star_commutant_basis if star else commutant_basis
        dense, band = fn(A, method="dense"), fn(A, method="band")
        assert dense.dim == band.dim
        for x in band.elements:
            assert np.linalg.norm(dense.project(x) - x) <= 1e-8


def test_band_handles_wide_windows():
    A = _op(BERGMAN, (-64, 64), 3)
    B = star_commutant_basis(A)
    assert B.method == "band" and B.dim == 3
    for x in B.elements:
        assert commutator_residual(x, A.matrix) <= 1e-8
        assert commutator_residual(x, A.H) <= 1e-8


def test_basis_is_orthonormal_and_commutes():
    A = _op(BERGMAN, (-10, 10), 2)
    B = commutant_basis(A)
    S = B.stack()
    gram = S.conj() @ S.T if S.shape[0] == B.dim else S.conj().T @ S
    assert np.allclose(gram, np.eye(B.dim), atol=1e-10)
    for x in B.elements:
        assert commutator_residual(x, A.matrix) <= 1e-8


def test_star_commutant_closed_under_products_and_adjoint():
    for kind in (BERGMAN, SpaceKind.flat()):
        A = _op(kind, (-8, 8), 2)
        B = star_commutant_basis(A)
        for x in B.elements:
            assert np.linalg.norm(B.project(x.conj().T) - x.conj().T) <= 1e-8
            for y in B.elements:
                p = x @ y
                assert np.linalg.norm(B.project(p) - p) <= 1e-8 * max(1.0, np.linalg.norm(p))


def test_abelian_detection():
    for kind in (BERGMAN, SpaceKind.hardy(0.5)):
        ok, worst = is_abelian(star_commutant_basis(_op(kind, (-12, 12), 2)), 1e-8)
        assert ok and worst <= 1e-8
    ok, worst = is_abelian(star_commutant_basis(_op(SpaceKind.flat(), (-8, 8), 2)), 1e-8)
    assert not ok and worst > 1e-2


# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------

def test_symbol_examples(bergman):
    w = bergman(0.5, (-8, 8))
    n = 2
    A = shift_power(w, n, balance=False).matrix
    for F in extract_symbols(A, n, w):
        assert F.max_abs_diff(LaurentSeries.monomial(n)) <= 1e-12
    for F in extract_symbols(np.eye(w.size), n, w):
        assert F.max_abs_diff(LaurentSeries.monomial(0)) <= 1e-12
    F0, F1 = extract_symbols(residue_projection(w, n, 0), n, w)
    assert F0.max_abs_diff(LaurentSeries.monomial(0)) <= 1e-12
    assert F1.max_abs_diff(LaurentSeries()) <= 1e-12


def test_extract_rejects_non_commuting(bergman, rng):
    w = bergman(0.5, (-6, 6))
    with pytest.raises(CommutantError):
        extract_symbols(rng.normal(size=(13, 13)), 2, w)


def test_monomial_mode_input(bergman):
    w = bergman(0.5, (-8, 8))
    A = shift_power(w, 2, balance=False).matrix
    for F in extract_symbols(to_monomial(A, w), 2, w, mode=BasisMode.ORTHOGONAL):
        assert F.max_abs_diff(LaurentSeries.monomial(2)) <= 1e-12


def _interior_cols(X, n):
    return X[:, n:-n]


@pytest.mark.parametrize("n", [2, 3])
def test_every_basis_element_rebuilds(bergman, n):
    w = bergman(0.5, (-16, 16))
    B = commutant_basis(shift_power(w, n, balance=False))
    for x in B.elements:
        F = extract_symbols(x, n, w)
        err = np.linalg.norm(_interior_cols(rebuild_from_symbols(F, w) - x, n))
        assert err <= 1e-8


def test_twist_examples():
    tw = symbols_to_twist([LaurentSeries.monomial(0)] * 3)
    assert tw.a[0].max_abs_diff(LaurentSeries.monomial(0)) <= 1e-15
    assert all(a.max_abs_diff(LaurentSeries()) <= 1e-15 for a in tw.a[1:])
    tw = symbols_to_twist([LaurentSeries.monomial(0), LaurentSeries()])
    assert tw.a[0][0] == pytest.approx(0.5) and tw.a[1][0] == pytest.approx(0.5)
    tw = symbols_to_twist([LaurentSeries.monomial(3)] * 3)
    assert tw.a[0].max_abs_diff(LaurentSeries.monomial(3)) <= 1e-15
    assert all(a.max_abs_diff(LaurentSeries()) <= 1e-15 for a in tw.a[1:])


def test_twist_apply_examples():
    f = LaurentSeries({0: 1, 1: 1})
    ident = symbols_to_twist([LaurentSeries.monomial(0)] * 2)
    even = symbols_to_twist([LaurentSeries.monomial(0), LaurentSeries()])
    for z in (0.7, 0.55 + 0.4j):
        assert twist_apply(ident, f, z) == pytest.approx(f(z), abs=1e-14)
        assert twist_apply(even, f, z) == pytest.approx(1.0, abs=1e-14)


coeff = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)
symbol = st.dictionaries(st.integers(-6, 6), coeff, max_size=5).map(LaurentSeries)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.lists(symbol, min_size=n, max_size=n)))
def test_fourier_roundtrip(F):
    back = twist_to_symbols(symbols_to_twist(F))
    assert max(a.max_abs_diff(b) for a, b in zip(F, back)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2 ** 32 - 1))
def test_twist_apply_matches_matrix_action(n, seed):
    # analytic symbols give exact members of the truncated commutant
    rng = np.random.default_rng(seed)
    w = make_weights(BERGMAN, (-16, 16))
    F = [LaurentSeries({m: complex(rng.normal(), rng.normal()) for m in range(0, 4)}) for _ in range(n)]
    X = rebuild_from_symbols(F, w)
    assert commutator_residual(X, shift_power(w, n, balance=False).matrix) <= 1e-12
    tw = symbols_to_twist(extract_symbols(X, n, w))
    f = LaurentSeries({m: complex(rng.normal(), rng.normal()) for m in range(-4, 5)})
    g = LaurentSeries.from_array(-16, to_monomial(X, w) @ f.to_array(-16, 16))
    z = rng.uniform(0.55, 0.95) * np.exp(2j * np.pi * rng.uniform())
    assert abs(g(z) - twist_apply(tw, f, z)) <= 1e-8


def test_twist_roots():
    tw = TwistCoefficients([LaurentSeries()] * 4, roots_of_unity(4))
    assert tw.n == 4
    assert np.allclose(tw.omega ** 4, 1)
