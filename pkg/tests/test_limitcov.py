import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from setcov import geometry as G
from setcov import kernels as K
from setcov import limitcov as LC
from setcov.errors import GeometryError, NearCancellationError, UnsupportedPairError

# frozen from tests/oracles/derive.py
DISK_RIESZ = {1.0: 8.0 / 3.0, 0.5: 2.7110818713107006}
INTERVAL_LIMIT_M04 = 1.2630971387586651

UNIT_DISK = G.ball([0, 0], 1)


def test_interval_closed_form_examples():
    assert LC.limit_cov_interval(1, 2, 0.0) == 1.0
    assert LC.limit_cov_interval(1, 1, 1.0) == 0.5
    assert LC.limit_cov_interval(1, 2, 1.0) == 1.0
    assert LC.limit_cov_interval(1, 2, -0.4) == pytest.approx(INTERVAL_LIMIT_M04, rel=1e-15)


@pytest.mark.parametrize("alpha", [-0.5, -0.4, 0.0, 0.5, 1.0])
def test_quadrature_matches_interval_closed_form(alpha):
    res = LC.limit_cov(G.interval(0, 1), G.interval(0, 2), alpha)
    assert res.value == pytest.approx(LC.limit_cov_interval(1, 2, alpha), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(-0.9, 1.0))
def test_interval_closed_form_random(s, r, alpha):
    res = LC.limit_cov(G.interval(0, s), G.interval(0, r), alpha)
    assert res.value == pytest.approx(LC.limit_cov_interval(s, r, alpha), rel=1e-9, abs=1e-12)


def test_alpha_zero_is_intersection_volume():
    pairs = [
        (G.box([0, 0], [1, 1]), G.box([0.5, 0], [1.5, 1]), 0.5),
        (G.interval(0, 1), G.interval(2, 3), 0.0),
        (UNIT_DISK, UNIT_DISK, math.pi),
        (G.polygon([(0, 0), (2, 0), (0, 2)]), G.box([0, 0], [1, 1]), 1.0),
    ]
    for D, L, vol in pairs:
        assert LC.limit_cov_alpha0(D, L) == pytest.approx(vol, abs=1e-12)
        assert LC.limit_cov(D, L, 0.0).value == pytest.approx(vol, abs=1e-9)


@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_unit_disk_against_double_integral(alpha):
    assert LC.limit_cov(UNIT_DISK, UNIT_DISK, alpha).value == pytest.approx(
        DISK_RIESZ[alpha], rel=1e-8)


def test_riesz_examples():
    res = LC.limit_cov_riesz(G.interval(0, 1), G.interval(0, 1), 0.5, n=4 * 10 ** 5, seed=2)
    assert abs(res.value - 2 / 3) <= 3 * res.stderr
    res = LC.limit_cov_riesz(UNIT_DISK, G.box([0, 0], [1, 2]), 2.0)
    assert res.value == pytest.approx(2 / (2 * math.pi) * math.pi * 2)
    with pytest.raises(ValueError):
        LC.limit_cov_riesz(UNIT_DISK, UNIT_DISK, 0.5, n=100)
    with pytest.raises(ValueError):
        LC.limit_cov_riesz(UNIT_DISK, UNIT_DISK, -0.2)


def test_symmetry():
    D, L = G.polygon([(0, 0), (1, 0), (0.2, 0.9)]), G.box([0.3, -0.2], [1.1, 0.4])
    for alpha in (-0.5, 0.3, 1.5):
        a = LC.limit_cov(D, L, alpha)
        b = LC.limit_cov(L, D, alpha)
        assert a.value == pytest.approx(b.value, abs=10 * (a.error + b.error) + 1e-12)


def test_alpha_out_of_range():
    for alpha in (-1.0, -1.5, 2.5):
        with pytest.raises(ValueError):
            LC.limit_cov(UNIT_DISK, UNIT_DISK, alpha)


def test_monte_carlo_profile_path():
    L_shape = G.polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    sq = G.box([0.2, 0.2], [0.8, 0.8])
    with pytest.raises(GeometryError):
        LC.limit_cov(L_shape, sq, 1.0)
    prof = G.radial_profile(L_shape, sq, method="monte_carlo", n_mc=2 * 10 ** 5, seed=4)
    res = LC.limit_cov(L_shape, sq, 1.0, profile=prof)
    rz = LC.limit_cov_riesz(L_shape, sq, 1.0, n=10 ** 6, seed=5)
    assert abs(res.value - rz.value) <= 3 * math.hypot(res.stderr, rz.stderr) + res.error


def test_profile_must_cover_support():
    D = G.interval(0, 1)
    prof = G.radial_profile(D, D, n_l=32)
    short = G.CovariogramProfile(D, D, prof.thetas, prof.theta_weights, prof.ls[:-3],
                                 prof.values[:, :-3], prof.derivs[:, :-3], prof.method,
                                 prof.stderr[:, :-3], prof.h, prof.rule)
    with pytest.raises(GeometryError):
        LC.limit_cov(D, D, 0.5, profile=short)


def _families(rng):
    balls = [G.ball(rng.uniform(-1, 1, 2), rng.uniform(0.3, 1)) for _ in range(4)]
    boxes = []
    for _ in range(4):
        lo = rng.uniform(-1, 1, 2)
        boxes.append(G.box(lo, lo + rng.uniform(0.3, 1.5, 2)))
    polys = [G.polygon([(0, 0), (1, 0), (0, 1)]), G.polygon([(0, 0), (2, 0), (2, 1), (0, 1)]),
             G.polygon([(-1, -1), (0.5, -1), (0.5, 0.5)])]
    return balls, boxes, polys


@pytest.mark.parametrize("family", [0, 1, 2])
def test_gram_matrix_psd(family):
    sets = _families(np.random.default_rng(1))[family]
    for alpha in (-0.5, 0.0, 0.5, 1.0):
        M, _ = LC.limit_cov_matrix(sets, alpha)
        assert np.allclose(M, M.T)
        assert np.linalg.eigvalsh(M).min() >= -1e-8 * np.trace(M)


def test_gram_matrix_mixed_kinds_refused():
    with pytest.raises(UnsupportedPairError):
        LC.limit_cov_matrix([G.ball([0, 0], 1), G.box([0, 0], [1, 1])], 0.5)


def test_result_dict():
    d = LC.limit_cov(G.interval(0, 1), G.interval(0, 2), 0.5).to_dict()
    assert set(d) >= {"value", "error_estimate", "alpha", "method"}


# ---------------------------------------------------------------------------
# finite t
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("t", [0.5, 3.0, 1e3])
def test_constant_kernel_is_one_half(t):
    D = G.interval(0, 1)
    assert LC.normalized_cov_finite_t(K.constant_model(1.0), D, D, t) == pytest.approx(0.5, rel=1e-12)


def test_fgn_convergence():
    D, L = G.interval(0, 1), G.interval(0, 2)
    m = K.fgn_model(0.3)
    e2 = abs(LC.normalized_cov_finite_t(m, D, L, 1e2) / INTERVAL_LIMIT_M04 - 1)
    e4 = abs(LC.normalized_cov_finite_t(m, D, L, 1e4) / INTERVAL_LIMIT_M04 - 1)
    assert e4 < 0.02 and e4 < e2


def test_gaussian_convergence():
    D = G.interval(0, 1)
    m = K.gaussian_model(1.0, dim=1)
    e2 = abs(LC.normalized_cov_finite_t(m, D, D, 1e2) - 1)
    e3 = abs(LC.normalized_cov_finite_t(m, D, D, 1e3) - 1)
    e4 = abs(LC.normalized_cov_finite_t(m, D, D, 1e4) - 1)
    assert e3 < 0.01 and e4 < e2


def test_near_cancellation_flagged():
    D = G.interval(0, 1)
    with pytest.raises(NearCancellationError):
        LC.normalized_cov_finite_t(K.fgn_model(0.3), D, D, 1e13)


def test_non_radial_kernel_on_concentric_balls():
    def Kfun(z):
        r = np.linalg.norm(z, axis=1)
        ang = np.arctan2(z[:, 1], z[:, 0])
        return np.exp(-r) * (1 + 0.8 * np.cos(2 * ang))
    aniso = K.CovarianceModel(name="aniso", dim=2, value_at_zero=1.8, K=Kfun)
    iso = K.CovarianceModel(name="exp", dim=2, value_at_zero=1.0, k=lambda r: np.exp(-r))
    D, L = G.ball([0, 0], 1), G.ball([0, 0], 2)
    a = LC.normalized_cov_finite_t(aniso, D, L, 5.0)
    b = LC.normalized_cov_finite_t(iso, D, L, 5.0)
    assert a == pytest.approx(b, rel=1e-8)
    with pytest.raises(GeometryError):
        LC.normalized_cov_finite_t(aniso, D, G.ball([0.5, 0], 1), 5.0)


def test_berry_composed_finite_t_runs():
    from setcov.hermite import expansion_from_coefficients
    m = expansion_from_coefficients({2: 1.0}).composed_model(K.berry_model())
    v = LC.normalized_cov_finite_t(m, UNIT_DISK, UNIT_DISK, 50.0)
    assert v == pytest.approx(DISK_RIESZ[1.0], rel=0.05)


def test_negative_index_with_rounding_level_breakpoints():
    # vertex/edge events of a polygon with itself land within 1e-16 of l = 0
    rng = np.random.default_rng(1003)
    ang = np.sort(rng.uniform(0, 2 * np.pi, 6))
    P = G.polygon(0.8 * np.stack([np.cos(ang), np.sin(ang)], axis=1))
    M, err = LC.limit_cov_matrix([P, P], -0.5)
    assert np.all(np.isfinite(M))
    assert M[0, 1] == pytest.approx(M[0, 0], rel=1e-12)
    assert np.max(err) < 1e-8 * M[0, 0]
