import numpy as np
import pytest

from hhverify.convexity import (
    GRID_T,
    GRID_XY,
    CertificationError,
    certify,
    max_modulus,
    sample_triples,
    sampled_terms,
)
from hhverify.funcspace import Interval, PhiMap, make_builtin_function, make_builtin_h

from conftest import F_FAMILY, PHI_FAMILY, UNIT, identity, linear, square

LATTICE = GRID_XY * GRID_XY * GRID_T


def test_square_is_an_equality_case_at_c_one(h_linear):
    cert = certify(square(), identity(), h_linear, 1.0, samples=512, seed=3)
    assert cert.holds
    assert abs(cert.max_violation) <= cert.slack


def test_linear_is_convex(h_linear):
    assert certify(linear(), identity(), h_linear, 0.0, samples=512).holds


def test_linear_is_not_strongly_convex(h_linear):
    cert = certify(linear(), identity(), h_linear, 0.5, samples=512)
    assert not cert.holds
    x, y, t = cert.worst_point
    # the worst triple maximises 0.5 t (1-t) (x-y)^2: far ends, t near 1/2
    assert abs(x - y) == pytest.approx(1.0)
    assert t == pytest.approx(0.5, abs=0.05)
    assert cert.max_violation == pytest.approx(0.5 * t * (1 - t), rel=1e-9)


def test_certificate_is_auditable(h_linear):
    cert = certify(square(), identity(), h_linear, 0.2, samples=100, seed=9)
    assert cert.samples_used == LATTICE + 100
    assert cert.seed == 9
    assert cert.c == 0.2
    assert cert.function and cert.phi and cert.h
    x, y, t = cert.worst_point
    assert 0 <= x <= 1 and 0 <= y <= 1 and 0 < t < 1


def test_triples_stay_in_domain_and_open_t():
    iv = Interval(-2.0, 3.0)
    x, y, t = sample_triples(PHI_FAMILY["power_warp"](iv), 5000, 1)
    assert x.min() >= iv.a and x.max() <= iv.b
    assert y.min() >= iv.a and y.max() <= iv.b
    assert t.min() > 0 and t.max() < 1


def test_sampling_is_seeded():
    phi = identity()
    a = sample_triples(phi, 50, 5)
    b = sample_triples(phi, 50, 5)
    c = sample_triples(phi, 50, 6)
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    assert not np.array_equal(a[0], c[0])


def test_zero_samples_rejected(h_linear):
    with pytest.raises(CertificationError):
        certify(square(), identity(), h_linear, 0.0, samples=0)


def test_max_modulus_of_square(h_linear):
    assert max_modulus(square(), identity(), h_linear, samples=2048) == pytest.approx(1.0, abs=1e-6)


def test_max_modulus_of_linear(h_linear):
    assert max_modulus(linear(slope=2.5, offset=-1), identity(), h_linear) == pytest.approx(0.0, abs=1e-9)


def test_max_modulus_with_h_one_dominates(h_one):
    assert max_modulus(square(), identity(), h_one) >= 1.0 - 1e-9


def test_degenerate_phi_is_an_explicit_error(h_linear):
    flat = PhiMap(lambda x: np.full_like(np.asarray(x, dtype=float), 0.5), UNIT, "flat")
    with pytest.raises(CertificationError, match="degenerate"):
        max_modulus(square(), flat, h_linear)


@pytest.mark.parametrize("fname", list(F_FAMILY))
@pytest.mark.parametrize("pname", list(PHI_FAMILY))
def test_certify_holds_at_max_modulus(fname, pname, h_linear):
    f, phi = F_FAMILY[fname](), PHI_FAMILY[pname]()
    c_star = max_modulus(f, phi, h_linear, samples=1024, seed=4)
    assert certify(f, phi, h_linear, c_star, samples=1024, seed=4).holds


@pytest.mark.parametrize("fname", list(F_FAMILY))
def test_certify_fails_just_above_max_modulus(fname, h_linear):
    # strictly convex families; the excess is 1e-3 of the sampled scale
    f, phi = F_FAMILY[fname](), identity()
    terms = sampled_terms(f, phi, h_linear, 1024, 4)
    c_star = max_modulus(f, phi, h_linear, samples=1024, seed=4)
    assert not certify(f, phi, h_linear, c_star + 1e-3 * terms.scale, samples=1024, seed=4).holds


def test_defect_is_additive_in_c(h_linear):
    terms = sampled_terms(F_FAMILY["exp"](), PHI_FAMILY["affine"](), h_linear, 300, 2)
    c1, c2 = 0.3, 4.0
    # equal up to the rounding of two products
    np.testing.assert_allclose(terms.defect(c2) - terms.defect(c1), (c2 - c1) * terms.spread, rtol=1e-12, atol=1e-15)


def test_defect_matches_the_definition_pointwise(h_linear):
    f, phi = square(), PHI_FAMILY["power_warp"]()
    terms = sampled_terms(f, phi, h_linear, 50, 8)
    c = 0.7
    px, py, t = phi(terms.x), phi(terms.y), terms.t
    direct = f(t * px + (1 - t) * py) - t * f(px) - (1 - t) * f(py) + c * t * (1 - t) * (px - py) ** 2
    np.testing.assert_allclose(terms.defect(c), direct, atol=1e-15)


def test_monotone_in_c_on_seeded_cases(h_linear):
    rng = np.random.default_rng(50)
    for seed in range(50):
        fname = list(F_FAMILY)[seed % 3]
        pname = list(PHI_FAMILY)[(seed // 3) % 3]
        f, phi = F_FAMILY[fname](), PHI_FAMILY[pname]()
        c1 = max_modulus(f, phi, h_linear, samples=256, seed=seed) * rng.uniform(0.5, 1.0)
        assert certify(f, phi, h_linear, c1, samples=256, seed=seed).holds
        for c2 in rng.uniform(0, c1, 3):
            assert certify(f, phi, h_linear, c2, samples=256, seed=seed).holds


@pytest.mark.parametrize("fname", list(F_FAMILY))
def test_larger_h_keeps_the_certificate(fname, h_linear, h_one):
    # needs g >= 0, which holds for every family here
    f, phi = F_FAMILY[fname](), identity()
    t = np.arange(1, GRID_T + 1) / (GRID_T + 1)
    assert np.all(h_linear(t) <= h_one(t))
    c = max_modulus(f, phi, h_linear, samples=512, seed=1)
    assert certify(f, phi, h_linear, c, samples=512, seed=1).holds
    assert certify(f, phi, h_one, c, samples=512, seed=1).holds


def test_nonnegativity_is_reported_not_required(h_linear):
    negative = make_builtin_function("poly", [-2, 0, 1], UNIT)
    cert = certify(negative, identity(), h_linear, 1.0, samples=128)
    assert not cert.nonnegative
    assert cert.holds
    assert certify(square(), identity(), h_linear, 1.0, samples=128).nonnegative


def test_slack_scales_with_the_function(h_linear):
    big = make_builtin_function("poly", [0, 0, 1e6], UNIT)
    cert = certify(big, identity(), h_linear, 1e6, samples=256)
    assert cert.slack == pytest.approx(1e-9 * 1e6)
    assert cert.holds


def test_power_h_certifies_square():
    # t^s >= t on (0,1), so h_power dominates h_linear for nonnegative g
    h = make_builtin_h("h_power", 0.5)
    assert certify(square(), identity(), h, 1.0, samples=256).holds
