import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rkhs_sep.gram import (GramMatrix, SingularSpanError, dist_to_span_batch, dist_to_span_det,
                           dist_to_span_proj, gram, n_weak_separation, pseudo_distance,
                           riesz_bounds)
from rkhs_sep.kernels import (Dirichlet, FiniteRank, Fock, KernelError, Power, Product, Szego,
                              WeightedBergman, construct)

from conftest import disk_points

disk_coord = st.complex_numbers(max_magnitude=0.9, allow_nan=False, allow_infinity=False)


def szego_pd(z, w):
    return abs(z - w) / abs(1 - z * np.conj(w))


# -- gram -----------------------------------------------------------------------------

def test_symmetric_pair():
    r = 0.6
    g = gram("szego", [r, -r])
    # <k_-r, k_r> / (||k_r|| ||k_-r||) = (1 - r^2) / (1 + r^2)
    assert g.entries[0, 1] == pytest.approx((1 - r * r) / (1 + r * r), abs=1e-15)
    assert g.entries[0, 1].imag == 0


def test_single_point():
    g = gram("szego", [0.3j])
    assert g.entries.shape == (1, 1) and g.entries[0, 0] == 1


def test_fock_pair():
    for alpha in (0.5, 2.0):
        g = gram(Fock(alpha), [0, 1])
        assert abs(g.entries[0, 1]) ** 2 == pytest.approx(math.exp(-alpha), rel=1e-14)


def test_entry_convention():
    # G[i, j] = k(p_j, p_i) / norms
    z = [0.1 + 0.2j, -0.4j]
    g = gram("szego", z, normalized=False)
    assert g.entries[0, 1] == pytest.approx(1 / (1 - z[1] * np.conj(z[0])))
    assert np.allclose(g.diag_norms ** 2, [1 / (1 - abs(x) ** 2) for x in z])
    assert np.allclose(g.normalized_entries(), gram("szego", z).entries)


def test_invariants(rng):
    g = gram(Power(Szego(), 2), disk_points(rng, 9))
    e = g.entries
    assert np.max(np.abs(e - e.conj().T)) < 1e-12
    assert np.max(np.abs(np.diag(e) - 1)) < 1e-12
    assert np.linalg.eigvalsh(e)[0] >= -1e-9
    assert isinstance(g, GramMatrix) and g.size == 9


def test_duplicate_points_rejected():
    with pytest.raises(ValueError, match="coincide"):
        gram("szego", [0.1, 0.2, 0.1])


def test_orthogonal_finite_rank_factor():
    g = gram(Product(Szego(), FiniteRank([((0.5,), [1, 0])], [0, 1])), [0.5, 0.4])
    assert abs(g.entries[0, 1]) == 0


def test_json_shape():
    d = gram("szego", [0.1, 0.2j]).to_json()
    assert d["entries"][0][1] == [pytest.approx(d["entries"][0][1][0]), pytest.approx(d["entries"][0][1][1])]
    assert len(d["points"]) == 2 and d["normalized"] is True


# -- pseudo_distance -----------------------------------------------------------------

def test_szego_distance_values():
    assert pseudo_distance("szego", 0, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert pseudo_distance("szego", 0.3j, 0.3j) == 0.0


def test_bergman_boundary_limit():
    k = WeightedBergman()
    d = [pseudo_distance(k, 0, 1 - 2.0 ** -j) for j in range(1, 7)]
    assert all(b > a for a, b in zip(d, d[1:]))
    assert d[-1] > 0.99


@given(z=disk_coord, w=disk_coord)
def test_szego_closed_form(z, w):
    d = pseudo_distance("szego", z, w)
    assert abs(d - szego_pd(z, w)) < 1e-9


KERNELS = {
    "szego": Szego(), "dirichlet": Dirichlet(), "szego^2": Power(Szego(), 2),
    "fock": Fock(1.0), "bergman": WeightedBergman(),
}


@pytest.mark.parametrize("name", list(KERNELS))
@given(x=disk_coord, y=disk_coord, z=disk_coord)
def test_pseudometric_axioms(name, x, y, z):
    k = KERNELS[name]
    dxy, dyz, dxz = (pseudo_distance(k, *p) for p in ((x, y), (y, z), (x, z)))
    assert 0 <= dxz <= 1
    assert dxy == pytest.approx(pseudo_distance(k, y, x), abs=1e-12)
    assert dxz <= dxy + dyz + 1e-10


# -- distance to span ------------------------------------------------------------------

def test_orthonormal_case():
    e = np.eye(3)
    k = Product(Szego(), FiniteRank([((0.5,), e[0]), ((0.5j,), e[1]), ((-0.5,), e[2])], e[0]))
    g = gram(k, [0.5, 0.5j, -0.5])
    assert dist_to_span_det(g, 0, [1, 2]) == pytest.approx(1.0, abs=1e-15)
    assert dist_to_span_proj(g, 0, [1, 2]) == pytest.approx(1.0, abs=1e-15)


def test_two_point_reduces_to_pseudometric():
    z = [0.2 + 0.1j, -0.6j]
    g = gram("szego", z)
    d = pseudo_distance("szego", *z)
    assert dist_to_span_det(g, 0, [1]) == pytest.approx(d, rel=1e-12)
    assert dist_to_span_proj(g, 1, [0]) == pytest.approx(d, rel=1e-12)


def test_det_and_proj_agree_szego(rng):
    for _ in range(20):
        g = gram("szego", disk_points(rng, 5))
        a, b = dist_to_span_det(g, 2, [0, 1, 3, 4]), dist_to_span_proj(g, 2, [0, 1, 3, 4])
        assert abs(a - b) <= 1e-8 * b


def test_singular_span_refused():
    g = np.ones((3, 3))
    with pytest.raises(SingularSpanError):
        dist_to_span_det(g, 0, [1, 2])
    assert dist_to_span_proj(g, 0, [1, 2]) < 1e-7


def test_duplicate_direction_in_span(rng):
    g = gram("szego", disk_points(rng, 5)).entries
    # append a copy of column 3 as index 5
    big = np.zeros((6, 6), dtype=complex)
    big[:5, :5] = g
    big[5, :5] = g[3]
    big[:5, 5] = g[:, 3]
    big[5, 5] = 1
    a = dist_to_span_proj(big, 0, [1, 3])
    b = dist_to_span_proj(big, 0, [1, 3, 5])
    assert abs(a - b) < 1e-7


def test_span_validation():
    g = gram("szego", [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        dist_to_span_proj(g, 0, [])
    with pytest.raises(ValueError):
        dist_to_span_det(g, 0, [0, 1])


def test_unnormalized_input_normalized_internally():
    z = [0.1, 0.5j, -0.3]
    raw = gram("szego", z, normalized=False)
    norm = gram("szego", z)
    assert dist_to_span_proj(raw, 0, [1, 2]) == pytest.approx(dist_to_span_proj(norm, 0, [1, 2]), rel=1e-12)
    assert dist_to_span_proj(raw.entries, 0, [1, 2]) == pytest.approx(dist_to_span_proj(norm, 0, [1, 2]), rel=1e-12)


def test_span_monotonicity(rng):
    g = gram(Dirichlet(), disk_points(rng, 7))
    others = [1, 2, 3, 4, 5, 6]
    prev = 1.0
    for m in range(1, 7):
        d = dist_to_span_proj(g, 0, others[:m])
        assert d <= prev + 1e-12
        prev = d


def test_batch_matches_single(rng):
    g = gram("szego", disk_points(rng, 6)).entries
    anchors = [0, 1, 5]
    spans = [[1, 2], [0, 3], [2, 4]]
    batch = dist_to_span_batch(g, anchors, spans)
    single = [dist_to_span_det(g, a, s) for a, s in zip(anchors, spans)]
    assert np.allclose(batch, single, rtol=1e-10, atol=0)


# -- n-weak separation -------------------------------------------------------------------

def test_eps2_is_min_pairwise(rng):
    z = disk_points(rng, 8)
    rep = n_weak_separation("szego", z, 2)
    pair = min(szego_pd(a, b) for a, b in itertools.combinations(z, 2))
    assert rep.eps(2) == pytest.approx(pair, rel=1e-10)
    assert rep.min_pair == rep.eps(2)
    i, j = rep.min_pair_indices
    assert szego_pd(z[i], z[j]) == pytest.approx(pair, rel=1e-10)


def test_eps_nonincreasing(rng):
    rep = n_weak_separation(Power(Szego(), 2), disk_points(rng, 8), 6)
    eps = [rep.eps(m) for m in range(2, 7)]
    assert all(b <= a + 1e-12 for a, b in zip(eps, eps[1:]))
    assert not rep.partial


def test_witness_attains_minimum(rng):
    z = disk_points(rng, 7)
    rep = n_weak_separation("szego", z, 4)
    lv = rep.levels[4]
    g = gram("szego", z)
    assert dist_to_span_proj(g, lv.anchor, list(lv.span)) == pytest.approx(lv.eps, rel=1e-12)
    brute = min(dist_to_span_proj(g, a, [i for i in c if i != a])
                for c in itertools.combinations(range(7), 4) for a in c)
    assert lv.eps == pytest.approx(brute, rel=1e-12)


def test_budget_truncation_is_deterministic(rng):
    z = disk_points(rng, 10)
    a = n_weak_separation("szego", z, 3, budget=50)
    b = n_weak_separation("szego", z, 3, budget=50)
    assert a.partial and a.levels[3].evaluated == 50
    assert a.levels[3].total == math.comb(10, 3) * 3
    assert a.to_json() == b.to_json()
    full = n_weak_separation("szego", z, 3)
    assert full.eps(3) <= a.eps(3)


def test_budget_prefix_order(rng):
    # the first evaluated subsets are {0,1,2} with anchors 0, 1, 2
    z = disk_points(rng, 6)
    g = gram("szego", z)
    rep = n_weak_separation("szego", z, 3, budget=3)
    expect = min(dist_to_span_proj(g, a, [i for i in (0, 1, 2) if i != a]) for a in (0, 1, 2))
    assert rep.eps(3) == pytest.approx(expect, rel=1e-12)
    assert set(rep.levels[3].span) | {rep.levels[3].anchor} == {0, 1, 2}


def test_tie_break_first_in_order():
    # four orthonormal kernel functions: every subset ties at distance 1
    e = np.eye(4)
    pts = [0.1, 0.2, 0.3, 0.4]
    k = Product(Szego(), FiniteRank([((p,), v) for p, v in zip(pts, e)], e[0]))
    rep = n_weak_separation(k, pts, 3)
    assert rep.levels[3].anchor == 0 and rep.levels[3].span == (1, 2)


@pytest.mark.parametrize("n,budget", [(1, 10), (5, 10), (2, 0)])
def test_separation_errors(n, budget):
    with pytest.raises(ValueError):
        n_weak_separation("szego", [0.1, 0.2, 0.3], n, budget=budget)


def test_report_json_roundtrip(rng):
    rep = n_weak_separation("szego", disk_points(rng, 5), 3)
    d = rep.to_json()
    assert [lv["n"] for lv in d["levels"]] == [2, 3]
    assert d["partial"] is False and d["n_points"] == 5


# -- Riesz bounds ----------------------------------------------------------------------

def test_riesz_identity_and_rank_one():
    assert riesz_bounds(np.eye(4)) == pytest.approx((1.0, 1.0))
    lo, hi = riesz_bounds(np.ones((3, 3)))
    assert abs(lo) < 1e-15 and hi == pytest.approx(3.0)


def test_riesz_exponential_sequence():
    # regression baseline for the dyadic radial sequence: (1.893e-4, 5.489) at j <= 8
    lo, hi = riesz_bounds(gram("szego", [1 - 2.0 ** -j for j in range(1, 9)]))
    assert lo == pytest.approx(1.8931523e-4, rel=1e-6)
    assert hi == pytest.approx(5.4887856, rel=1e-6)
    # extremes level off as the sequence grows
    lo30, hi30 = riesz_bounds(gram("szego", [1 - 2.0 ** -j for j in range(1, 31)]))
    assert 1e-5 < lo30 <= lo and hi <= hi30 < 10


def test_kernel_construct_passthrough():
    k = construct({"type": "szego"})
    assert gram(k, [0.1]).kernel_id == gram("szego", [0.1]).kernel_id


def test_raises_on_kernel_failure():
    with pytest.raises(KernelError):
        gram("szego", [1.5])
