import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rkhs_sep import moments
from rkhs_sep.kernels import (BallEmbedding, BergmanTailError, Constant, Dirichlet, DomainError,
                              FiniteRank, Fock, KernelError, PolyMap, Power, Product, Pullback,
                              Sum, Szego, TableMap, Tensor, WeightedBergman, as_points,
                              bidisk_pair, construct)

from conftest import disk_points


def bergman():
    return WeightedBergman()


def disk_kernels():
    return {
        "szego": Szego(),
        "dirichlet": Dirichlet(),
        "szego^2": Power(Szego(), 2),
        "szego^2.5": Power(Szego(), 2.5),
        "ball": BallEmbedding(PolyMap.linear([[0.6]])),
        "szego*z^3": Pullback(Szego(), PolyMap.monomial(3)),
        "szego+dirichlet": Sum(Szego(), Dirichlet()),
        "bergman": bergman(),
    }


disk_coord = st.complex_numbers(max_magnitude=0.95, allow_nan=False, allow_infinity=False)


# -- examples ---------------------------------------------------------------------

def test_szego_values():
    k = Szego()
    assert k(0, 0.5) == 1
    z, w = 0.3 + 0.2j, -0.5j
    assert k(z, w) == pytest.approx(1 / (1 - z * np.conj(w)), rel=1e-15)


def test_power_one_is_identity(rng):
    z = disk_points(rng, 20)
    a = Szego().matrix(z)
    b = Power(Szego(), 1).matrix(z)
    assert np.max(np.abs(a - b)) == 0.0


def test_tensor_on_diagonal_equals_square(rng):
    diag = Pullback(Tensor(Szego(), Szego()), PolyMap.diagonal(2))
    z = disk_points(rng, 15)
    a = diag.matrix(z)
    b = Power(Szego(), 2).matrix(z)
    assert np.max(np.abs(a - b) / np.abs(b)) < 1e-13


def test_fock_values():
    k = Fock(1.0)
    assert k(1 + 1j, 0.5) == pytest.approx(np.exp((1 + 1j) * 0.5), rel=1e-15)
    corr = abs(k(0, 1)) ** 2 / (k(0, 0).real * k(1, 1).real)
    assert corr == pytest.approx(math.exp(-1), rel=1e-14)


def test_dirichlet_removable_singularity():
    k = Dirichlet()
    assert k(0, 0.7) == 1
    mpmath.mp.dps = 40
    for p in (1e-4, 9.99e-4, 1.001e-3, 3e-3j, 0.2 + 0.1j):
        exact = complex(-mpmath.log(1 - mpmath.mpc(p)) / mpmath.mpc(p))
        assert abs(k(2 * p, 0.5) - exact) < 4e-16 * abs(exact)


def test_bidisk_ell_at_origin():
    _, ell, _ = bidisk_pair()
    c0 = math.exp(moments.get_table().log_c[0])
    assert ell((0, 0), (0, 0)).real == pytest.approx(2 / c0, rel=1e-12)


def test_bergman_at_origin_and_real_axis():
    k = bergman()
    c = moments.get_table().c
    assert k(0, 0.5) == pytest.approx(1 / c[0], rel=1e-14)
    direct = np.sum(0.25 ** np.arange(400) / c[:400])
    assert k(0.5, 0.5).real == pytest.approx(direct, rel=1e-14)


def test_bidisk_s_form():
    s, _, _ = bidisk_pair()
    z, w = (0.3, 0.2j), (-0.1, 0.4)
    expect = 1 / (2 - z[0] * np.conj(w[0]) - z[1] * np.conj(w[1]))
    assert s(z, w) == pytest.approx(expect, rel=1e-15)


def test_finite_rank_table_and_default():
    k = FiniteRank([((0.5,), [1, 0]), ((0.25,), [0, 2j])], [1, 1])
    assert k(0.5, 0.25) == 0
    assert k(0.25, 0.25) == 4
    assert k(0.1, 0.5) == 1  # default vector [1, 1] against [1, 0]


# -- errors ------------------------------------------------------------------------

def test_power_requires_nonvanishing():
    with pytest.raises(KernelError, match="non-vanishing"):
        Power(Sum(Szego(), Szego()), 1.5)
    with pytest.raises(KernelError):
        Power(Dirichlet(), 2)
    with pytest.raises(KernelError):
        Power(bergman(), 2)
    with pytest.raises(KernelError, match=">= 1"):
        Power(Szego(), 0.5)


@pytest.mark.parametrize("make", [
    lambda: Product(Szego(), Fock(dim=2)),
    lambda: Sum(Tensor(Szego(), Szego()), Szego()),
    lambda: Pullback(Szego(), PolyMap.diagonal(2)),
])
def test_dimension_mismatch(make):
    with pytest.raises(KernelError, match="dim|C\\^"):
        make()


def test_finite_rank_zero_vector():
    with pytest.raises(KernelError, match="zero vector"):
        FiniteRank([((0.5,), [0, 0])], [1, 0])


def test_domain_errors():
    with pytest.raises(DomainError):
        Szego()(1.0, 0)
    with pytest.raises(DomainError):
        bergman()(0.995, 0)
    with pytest.raises(DomainError):
        Szego()((0.1, 0.2), 0)


def test_bergman_tail_error_small_table(tmp_path, monkeypatch):
    monkeypatch.setenv(moments.CACHE_ENV, str(tmp_path))
    k = WeightedBergman(n_max=30)
    with pytest.raises(BergmanTailError, match="n_max"):
        k(0.99, 0.99)
    assert k(0.1, 0.2) != 0


@pytest.mark.parametrize("spec", ["nope", {"type": "wavelet"}, 3, {"type": "power", "t": 2}])
def test_construct_rejects(spec):
    with pytest.raises(KernelError):
        construct(spec)


def test_constant_needs_positive():
    with pytest.raises(KernelError):
        Constant(0.0)


# -- serialization -----------------------------------------------------------------

def all_kernels():
    s, ell, big_k = bidisk_pair()
    return list(disk_kernels().values()) + [
        Fock(0.5), Fock(1.0, dim=2), Constant(2.0),
        FiniteRank([((0.5,), [1, 0])], [0, 1]),
        Product(Szego(), FiniteRank([((0.5,), [1, 0])], [0, 1])),
        Pullback(Szego(), TableMap(1, 1, [((0.5,), (0.1,))], (0.0,))),
        s, ell, big_k,
    ]


@pytest.mark.parametrize("k", all_kernels(), ids=lambda k: json.dumps(k.to_json())[:40])
def test_json_roundtrip(k):
    again = construct(json.dumps(k.to_json()))
    assert again.to_json() == k.to_json()
    assert again.kernel_id == k.kernel_id
    assert again.nonvanishing == k.nonvanishing


def test_shorthands():
    assert isinstance(construct("szego"), Szego)
    assert isinstance(construct("Bergman"), WeightedBergman)
    assert construct("fock").alpha == 1.0


def test_nonvanishing_flags():
    assert Szego().nonvanishing and Fock().nonvanishing and Constant(1).nonvanishing
    assert not Dirichlet().nonvanishing and not bergman().nonvanishing
    assert not Sum(Szego(), Szego()).nonvanishing
    assert Product(Szego(), Fock()).nonvanishing
    assert Pullback(Szego(), PolyMap.monomial(2)).nonvanishing
    assert not FiniteRank([], [1]).nonvanishing


def test_as_points_forms():
    assert as_points([[0.5, 0.0]]).shape == (1, 1)
    assert as_points([[0.5, 0.0, 0.1, 0.2]]).shape == (1, 2)
    assert as_points([(0.5, 0.1j)]).shape == (1, 2)
    assert as_points([0.5, 1j]).shape == (2, 1)
    with pytest.raises(DomainError):
        as_points([[0.5, 0.0], [0.1, 0.2, 0.3, 0.4]])
    with pytest.raises(KernelError):
        as_points([[0.5, 0.0, 1.0]])


# -- properties ----------------------------------------------------------------------

@pytest.mark.parametrize("name", list(disk_kernels()))
@given(z=disk_coord, w=disk_coord)
def test_hermitian(name, z, w):
    k = disk_kernels()[name]
    a, b = k(z, w), k(w, z)
    assert abs(a - np.conj(b)) < 1e-12 * max(1.0, abs(a))


@pytest.mark.parametrize("name", list(disk_kernels()))
def test_psd_random_lists(name, rng):
    k = disk_kernels()[name]
    for size in (2, 5, 12):
        z = disk_points(rng, size, 0.95)
        g = k.matrix(z)
        assert np.max(np.abs(g - g.conj().T)) < 1e-12 * np.max(np.abs(g))
        lo = np.linalg.eigvalsh(0.5 * (g + g.conj().T))[0]
        assert lo >= -1e-9 * np.max(g.diagonal().real)


@given(z=st.complex_numbers(max_magnitude=3, allow_nan=False),
       w=st.complex_numbers(max_magnitude=3, allow_nan=False),
       alpha=st.sampled_from([0.5, 1.0, 2.0]))
def test_fock_closed_form(z, w, alpha):
    k = Fock(alpha)
    g = k.matrix([z, w])
    corr = abs(g[0, 1]) ** 2 / (g[0, 0].real * g[1, 1].real)
    assert abs(corr - math.exp(-alpha * abs(z - w) ** 2)) < 1e-12


@pytest.mark.parametrize("base", [Szego(), Dirichlet(), WeightedBergman()],
                         ids=["szego", "dirichlet", "bergman"])
@given(a=disk_coord, b=disk_coord, c=disk_coord, d=disk_coord)
def test_bidisk_grid_identity(base, a, b, c, d):
    k_sum = Sum(Pullback(base, PolyMap.coordinate(0, 2)), Pullback(base, PolyMap.coordinate(1, 2)))
    pts = [(a, c), (a, d), (b, c), (b, d)]
    g = k_sum.matrix(pts)
    v = np.array([1, -1, -1, 1])
    form = abs(v @ g @ v)
    scale = np.abs(v) @ np.abs(g) @ np.abs(v)
    assert form <= 1e-12 * scale


@pytest.mark.parametrize("m", [2, 3, 5])
def test_power_consistency(rng, m):
    z = disk_points(rng, 10)
    for k in (Szego(), Fock(0.7), Product(Szego(), Constant(2.0))):
        a = Power(k, m).matrix(z)
        b = k.matrix(z) ** m
        assert np.max(np.abs(a - b) / np.abs(b)) < 1e-12


def test_szego_log_small_argument():
    mpmath.mp.dps = 40
    z = np.array([[1e-6 + 2e-6j]])
    got = Szego().log_block(z, np.array([[0.5]]))[0, 0]
    exact = complex(-mpmath.log(1 - mpmath.mpc(0.5e-6, 1e-6)))
    assert abs(got - exact) < 1e-15 * abs(exact)


def test_fractional_power_branch(rng):
    # continuous logarithm: Szego^t = (1 - z w*)^(-t) on the principal branch
    z = disk_points(rng, 10, 0.99)
    t = 1.7
    a = Power(Szego(), t).matrix(z)
    p = z[:, None] * np.conj(z)[None, :]
    assert np.max(np.abs(a - (1 - p) ** (-t)) / np.abs(a)) < 1e-12
