import json
import math

import numpy as np
import pytest

from rkhs_sep.constructions import (FLOORS, OMEGA, dependent_vectors, gen_bidisk, gen_rho_relation,
                                    gen_roots_of_unity, gen_thm8, generate, relation_residual,
                                    verify)
from rkhs_sep.gram import gram
from rkhs_sep.kernels import WeightedBergman


@pytest.fixture(scope="module")
def bidisk_report():
    return verify(gen_bidisk(6))


# -- dependent vectors ---------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 6])
def test_dependent_vectors(n):
    v = dependent_vectors(n)
    assert v.shape == (n, n - 1)
    assert np.array_equal(v[-1], np.ones(n - 1))
    assert np.linalg.matrix_rank(v) == n - 1


# -- roots of unity ------------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5])
def test_roots_paper_constant(n):
    case = gen_roots_of_unity(n)
    s = case.s.block(case.points, case.points)
    assert np.max(np.abs(s - 4 / 3)) < 1e-14
    rep = verify(case)
    assert rep.passed, rep.to_markdown()
    assert rep.claim("eps_n_vanishes").value < 1e-6


def test_roots_literal_radius():
    case = gen_roots_of_unity(4, "literal")
    assert case.extra["radius"] == 0.5
    s = case.s.block(case.points, case.points)
    assert np.max(np.abs(s - 1 / (1 - 4.0**-4))) < 1e-14
    assert verify(case).claim("l_gram_singular").passed


@pytest.mark.parametrize("kw", [dict(n=2), dict(n=4, radius_mode="half")])
def test_roots_errors(kw):
    with pytest.raises(ValueError):
        gen_roots_of_unity(**kw)


# -- thm8 -----------------------------------------------------------------------------

def test_thm8_layout():
    case = gen_thm8(3, 12)
    # d(3) = 6, so packets 6..12 each contribute three points at indices 4, 5, 6
    assert len(case.points) == 3 * 7
    assert {lb["index"] for lb in case.labels} == {4, 5, 6}
    assert [lb["packet"] for lb in case.labels[::3]] == list(range(6, 13))
    r = np.abs(case.points[:, 0])
    assert np.allclose(r, [1 - 2.0**-lb["packet"] for lb in case.labels], rtol=0, atol=1e-15)


def test_thm8_verifies():
    rep = verify(gen_thm8(3, 12))
    assert rep.passed, rep.to_markdown()
    assert rep.claim("eps2_floor").value >= FLOORS["thm8_eps2"]
    d = rep.measurements["packet_distance"]
    assert all(b < a for a, b in zip(d, d[1:])) and d[-1] < 1e-2


def test_thm8_packet_triples_dependent_in_limit():
    # distances shrink toward zero as the packets tighten
    d = verify(gen_thm8(3, 14)).measurements["packet_distance"]
    assert d[-1] < d[0] / 4


@pytest.mark.parametrize("kw", [dict(n=2), dict(n=3, packets=5), dict(n=3, rho=1.0),
                                dict(n=3, rho=0.4)])
def test_thm8_errors(kw):
    with pytest.raises(ValueError):
        gen_thm8(**kw)


# -- bidisk ---------------------------------------------------------------------------

def test_bidisk_relation_and_floor(bidisk_report):
    assert bidisk_report.claim("k_relation").passed
    assert bidisk_report.claim("pair_distance_floor").passed
    assert bidisk_report.claim("l_det_halved").passed
    assert bidisk_report.claim("eps_max_decreasing").passed


def test_bidisk_measurements(bidisk_report):
    m = bidisk_report.measurements
    assert len(m["l_det"]) == 6
    assert np.allclose(m["l_det"], [0.1950, 0.09606, 0.08608, 0.09319, 0.06250, 0.01194], rtol=2e-3)
    assert min(m["pair_distance_min"]) > 0.7


def test_bidisk_cap():
    with pytest.raises(ValueError, match="radius cap"):
        gen_bidisk(7)
    with pytest.raises(ValueError):
        gen_bidisk(0)


def test_bidisk_custom_cap():
    case = gen_bidisk(2, WeightedBergman(radius_cap=0.9))
    assert case.params["bergman"]["radius_cap"] == 0.9


# -- rho -----------------------------------------------------------------------------

def test_rho_relation_residual():
    case = gen_rho_relation()
    rep = verify(case)
    assert rep.passed
    assert max(rep.measurements["residual"]) < 1e-12


def test_rho_relation_coefficients_matter():
    q = np.array([0.3, OMEGA * 0.3, -OMEGA * 0.3, -0.3])[:, None]
    case = gen_rho_relation()
    g = case.s.block(q, q).T
    assert relation_residual(g, (1, -1, 1, -1)) < 1e-12
    assert relation_residual(g, (1, 1, 1, 1)) > 1e-3


def test_rho_zero_point():
    with pytest.raises(ValueError):
        gen_rho_relation([0.0])


# -- replay / output --------------------------------------------------------------------

@pytest.mark.parametrize("make", [
    lambda: gen_thm8(3, 8),
    lambda: gen_roots_of_unity(5),
    lambda: gen_bidisk(3),
    lambda: gen_rho_relation([0.2, 0.1j]),
], ids=["thm8", "roots", "bidisk", "rho"])
def test_replay_deterministic(make):
    case = make()
    text = json.dumps(case.to_json(), sort_keys=True)
    again = generate(case.case_id, json.loads(text)["params"])
    assert json.dumps(again.to_json(), sort_keys=True) == text
    a = verify(case).to_json()
    b = verify(again).to_json()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_unknown_case():
    with pytest.raises(ValueError, match="unknown case"):
        generate("spiral", {})


def test_markdown_report():
    md = verify(gen_roots_of_unity(3)).to_markdown()
    assert md.startswith("# Verification: roots_of_unity")
    assert "| s_gram_constant | PASS |" in md
    assert md.rstrip().endswith("Overall: PASS")


def test_failed_claim_is_reported_not_raised():
    rep = verify(gen_roots_of_unity(3))
    rep.claims[0].passed = False
    assert not rep.passed
    assert "Overall: FAIL" in rep.to_markdown()


def test_thm8_gram_psd():
    case = gen_thm8(3, 8)
    g = gram(case.ell, case.points).entries
    assert np.linalg.eigvalsh(g)[0] > -1e-12
    assert math.isclose(float(np.real(g[0, 0])), 1.0, rel_tol=1e-14)
