import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from setcov import geometry as G
from setcov.errors import GeometryError, UnsupportedPairError

# frozen from tests/oracles/derive.py
LENS_UNIT_DISKS_AT_1 = 1.2283696986087567


def test_volumes():
    assert G.volume(G.ball([0, 0], 1)) == pytest.approx(math.pi, rel=1e-15)
    assert G.volume(G.box([0, 0], [1, 2])) == 2.0
    assert G.volume(G.polygon([(0, 0), (1, 0), (0, 1)])) == 0.5
    assert G.volume(G.ball([0, 0, 0], 2)) == pytest.approx(32 * math.pi / 3)


def test_perimeters():
    assert G.perimeter(G.interval(0, 3)) == 2
    assert G.perimeter(G.ball([0, 0], 1)) == pytest.approx(2 * math.pi)
    assert G.perimeter(G.box([0, 0], [1, 1])) == pytest.approx(4)
    u = G.union(G.interval(0, 1), G.interval(2, 3))
    assert G.perimeter(u) == 4


def test_diameter_bound():
    assert G.diameter_bound(G.interval(0, 1), G.interval(0, 2)) == 2
    assert G.diameter_bound(G.ball([0, 0], 1), G.ball([0, 0], 1)) == pytest.approx(2)
    assert G.diameter_bound(G.ball([1, 1], 1), G.ball([1, 1], 2)) == pytest.approx(3)
    with pytest.raises(GeometryError):
        G.diameter_bound(G.interval(0, 1), G.ball([0, 0], 1))


def test_invalid_shapes():
    with pytest.raises(GeometryError):
        G.interval(1, 1)
    with pytest.raises(GeometryError):
        G.ball([0, 0], 0)
    with pytest.raises(GeometryError):
        G.polygon([(0, 0), (0, 1), (1, 0)])  # clockwise
    with pytest.raises(GeometryError):
        G.polygon([(0, 0), (1, 1), (1, 0), (0, 1)])  # self-intersecting
    with pytest.raises(GeometryError):
        G.union(G.interval(0, 2), G.interval(1, 3))


def test_interval_covariogram_examples():
    D, L = G.interval(0, 1), G.interval(0, 2)
    assert G.covariogram_exact(D, L, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert G.covariogram_exact(D, L, -0.5) == pytest.approx(1.0, abs=1e-15)
    assert G.covariogram_exact(D, L, 2.5) == 0.0


def test_lens_area():
    D = G.ball([0, 0], 1)
    assert G.covariogram_exact(D, D, [1.0, 0.0]) == pytest.approx(LENS_UNIT_DISKS_AT_1, abs=1e-12)
    est, se = G.covariogram_mc(D, D, [1.0, 0.0], n=10 ** 6, seed=3)
    assert abs(est - LENS_UNIT_DISKS_AT_1) < 3 * se


def test_mc_square_and_support():
    S = G.box([0, 0], [1, 1])
    est, se = G.covariogram_mc(S, S, [0.5, 0.0], n=10 ** 5, seed=1)
    assert abs(est - 0.5) < 3 * se
    est, se = G.covariogram_mc(S, S, [3.0, 0.0], n=10 ** 4, seed=1)
    assert est == 0 and se == 0


def test_mc_deterministic():
    D, L = G.ball([0, 0], 1), G.polygon([(0, 0), (2, 0), (0, 2)])
    a = G.covariogram_mc(D, L, [0.3, -0.2], n=5000, seed=11)
    b = G.covariogram_mc(D, L, [0.3, -0.2], n=5000, seed=11)
    assert a == b


def _random_convex(rng):
    ang = np.sort(rng.uniform(0, 2 * math.pi, rng.integers(3, 8)))
    return rng.uniform(-0.5, 0.5, 2) + rng.uniform(0.4, 1.2) * np.stack(
        [np.cos(ang), np.sin(ang)], axis=1)


def _clipped_area(P, Q, z):
    return G._poly_area(G.clip_convex(Q + z, [tuple(p) for p in P]))


def test_overlap_areas_match_clipping():
    rng = np.random.default_rng(21)
    for _ in range(100):
        P, Q = _random_convex(rng), _random_convex(rng)
        Z = rng.uniform(-2, 2, (10, 2))
        ref = [_clipped_area(P, Q, z) for z in Z]
        assert np.allclose(G.convex_overlap_areas(P, Q, Z), ref, atol=1e-13)


def test_overlap_areas_with_shared_edges():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]])
    Z = np.array([[0.3, 0], [0, 0.4], [0, 1], [1, 0], [0, 0], [0.5, 0.5], [-0.2, 0], [1, 1]])
    got = G.convex_overlap_areas(sq, sq, Z)
    assert np.allclose(got, [0.7, 0.6, 0, 0, 1, 0.25, 0.8, 0], atol=1e-15)


def test_polygon_clip_matches_box():
    sq = G.polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    bx = G.box([0, 0], [1, 1])
    for z in ([0.3, 0.1], [-0.7, 0.45], [0.99, -0.99]):
        assert G.covariogram_exact(sq, sq, z) == pytest.approx(
            G.covariogram_exact(bx, bx, z), abs=1e-12)


def test_nonconvex_pair_routes_to_mc():
    L_shape = G.polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    assert not G.exact_pair_supported(L_shape, L_shape)
    with pytest.raises(UnsupportedPairError):
        G.covariogram_exact(L_shape, L_shape, [0.1, 0.1])
    est, se = G.covariogram_mc(L_shape, L_shape, [0.0, 0.0], n=10 ** 5, seed=0)
    assert abs(est - 3.0) < 3 * se + 1e-12


def test_shape_config_roundtrip():
    cfg = {"kind": "ball", "dim": 2, "center": [0, 0], "radius": 1.0}
    B = G.shape_from_config(cfg)
    assert B.volume() == pytest.approx(math.pi)
    assert G.shape_from_config(B.to_config()).to_config() == B.to_config()


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------
def test_unit_interval_profile_derivative():
    D = G.interval(0, 1)
    prof = G.radial_profile(D, D, n_l=64)
    k = int(np.nonzero(prof.thetas[:, 0] > 0)[0][0])
    inner = (prof.ls > 1e-9) & (prof.ls < 1 - 1e-9)
    np.testing.assert_allclose(prof.derivs[k, inner], 1.0, atol=1e-12)
    assert prof.values[k, -1] == 0.0


def test_concentric_profile_isotropic():
    D, L = G.ball([0, 0], 1), G.ball([0, 0], 2)
    thetas = np.array([[math.cos(a), math.sin(a)] for a in np.linspace(0, 2 * math.pi, 9)])
    prof = G.radial_profile(D, L, thetas=thetas, n_l=32)
    assert np.max(np.ptp(prof.values, axis=0)) < 1e-12


def test_profile_csv(tmp_path):
    prof = G.radial_profile(G.interval(0, 1), G.interval(0, 2), n_l=16)
    path = tmp_path / "p.csv"
    prof.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "theta_index,l,g,dg,stderr"
    assert len(lines) == 1 + prof.values.size


def test_profile_requires_16_nodes():
    with pytest.raises(ValueError):
        G.radial_profile(G.interval(0, 1), G.interval(0, 1), n_l=8)


def test_mc_profile_close_to_exact():
    D, L = G.box([0, 0], [1, 1]), G.ball([0.5, 0.5], 0.5)
    ex = G.radial_profile(D, L, thetas=np.array([[1.0, 0.0]]), n_l=32)
    mc = G.radial_profile(D, L, thetas=np.array([[1.0, 0.0]]), n_l=32,
                          method="monte_carlo", n_mc=2 * 10 ** 5, seed=2)
    assert np.all(np.abs(mc.values - ex.values) <= 4 * mc.stderr + 1e-12)


# ---------------------------------------------------------------------------
# covariogram properties on random shape pairs
# ---------------------------------------------------------------------------
def _rand_shape(rng, kind):
    if kind == "interval":
        a = rng.uniform(-1, 1)
        return G.interval(a, a + rng.uniform(0.2, 2))
    if kind == "box":
        lo = rng.uniform(-1, 1, 2)
        return G.box(lo, lo + rng.uniform(0.2, 2, 2))
    if kind == "ball":
        return G.ball(rng.uniform(-1, 1, 2), rng.uniform(0.2, 1.5))
    n = rng.integers(3, 7)
    ang = np.sort(rng.uniform(0, 2 * math.pi, n))
    rad = rng.uniform(0.4, 1.2)
    c = rng.uniform(-0.5, 0.5, 2)
    return G.polygon(c + rad * np.stack([np.cos(ang), np.sin(ang)], axis=1))


def random_pair(seed):
    rng = np.random.default_rng(seed)
    kind = ["interval", "box", "ball", "polygon"][seed % 4]
    return _rand_shape(rng, kind), _rand_shape(rng, kind), rng


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_symmetry_and_support(seed):
    D, L, rng = random_pair(seed)
    z = rng.uniform(-2, 2, D.dim)
    z = z[0] if D.dim == 1 else z
    assert G.covariogram_exact(D, L, z) == pytest.approx(
        G.covariogram_exact(L, D, -np.asarray(z)), abs=1e-10)
    h = G.diameter_bound(D, L)
    u = rng.normal(size=D.dim)
    far = (h * 1.0001 + 0.01) * u / np.linalg.norm(u)
    assert G.covariogram_exact(D, L, far[0] if D.dim == 1 else far) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_lipschitz(seed):
    D, L, rng = random_pair(seed)
    lip = min(G.perimeter(D), G.perimeter(L))
    for _ in range(5):
        z = rng.uniform(-2, 2, D.dim)
        dz = rng.normal(size=D.dim) * 10 ** rng.uniform(-4, -1)
        a = G.covariogram_exact(D, L, z[0] if D.dim == 1 else z)
        b = G.covariogram_exact(D, L, (z + dz)[0] if D.dim == 1 else z + dz)
        assert abs(a - b) <= (lip + 1e-9) * np.linalg.norm(dz) + 1e-10


def test_g_at_zero_is_volume():
    for seed in range(12):
        D, _, _ = random_pair(seed)
        z = 0.0 if D.dim == 1 else np.zeros(2)
        assert G.covariogram_exact(D, D, z) == pytest.approx(G.volume(D), rel=1e-12)


def test_exact_ray_reconstruction():
    from scipy import integrate
    for seed in range(8):
        D, L, rng = random_pair(seed)
        th = rng.normal(size=D.dim)
        th /= np.linalg.norm(th)
        ray = G.exact_ray(D, L, th)
        for r in rng.uniform(0, ray.h, 3):
            pts = [p for p in ray.breakpoints if r < p < ray.h]
            val, _ = integrate.quad(lambda l: float(ray.neg_dg(np.array([l]))[0]), r, ray.h,
                                    points=pts or None, limit=200, epsabs=1e-12)
            assert val == pytest.approx(float(ray.g(np.array([r]))[0]), abs=1e-8)


def test_batched_ray_derivatives():
    for kind in range(4):
        rays, ls, tags = [], [], []
        for seed in range(kind, 24, 4):
            D, L, rng = random_pair(seed)
            th = rng.normal(size=D.dim)
            ray = G.exact_ray(D, L, th / np.linalg.norm(th))
            pts = rng.uniform(0, ray.h, 50)
            ls.append(pts)
            tags.append(np.full(pts.size, len(rays)))
            rays.append(ray)
        ls, tags = np.concatenate(ls), np.concatenate(tags)
        got = G.rays_neg_dg(rays, ls, tags)
        want = np.concatenate([rays[k].neg_dg(ls[tags == k]) for k in range(len(rays))])
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)
        got = G.rays_g(rays, ls, tags)
        want = np.concatenate([rays[k].g(ls[tags == k]) for k in range(len(rays))])
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)


def test_total_mass_identity():
    from scipy import integrate
    D, L = G.interval(0, 1), G.interval(-0.5, 1.5)
    val, _ = integrate.quad(lambda z: G.covariogram_exact(D, L, z), -3, 3, points=[-1.5, -0.5, 0.5, 1.5], limit=200)
    assert val == pytest.approx(2.0, abs=1e-10)
    D, L = G.ball([0, 0], 1), G.ball([0, 0], 0.5)
    val, _ = integrate.quad(
        lambda r: 2 * math.pi * r * G.covariogram_exact(D, L, [r, 0.0]), 0, 1.5, points=[0.5], limit=200)
    assert val == pytest.approx(math.pi * math.pi / 4, rel=1e-9)


# ---------------------------------------------------------------------------
# indicator Fourier decay
# ---------------------------------------------------------------------------
def test_fourier_decay_disk_interval_square():
    radii = np.geomspace(10, 1000, 400)
    disk = G.indicator_fourier_decay(G.ball([0, 0], 1), radii)
    assert disk.exponents[0] == pytest.approx(-1.5, abs=0.1)
    seg = G.indicator_fourier_decay(G.interval(0, 1), radii)
    assert seg.exponents[0] == pytest.approx(-1.0, abs=0.1)
    sq = G.indicator_fourier_decay(G.box([0, 0], [1, 1]), radii,
                                   directions=[[1, 0], [1 / math.sqrt(2), 1 / math.sqrt(2)]])
    assert sq.exponents[0] == pytest.approx(-1.0, abs=0.1)
    assert sq.exponents[1] == pytest.approx(-2.0, abs=0.15)


def test_fourier_decay_unsupported():
    with pytest.raises(GeometryError):
        G.indicator_fourier_decay(G.polygon([(0, 0), (1, 0), (0, 1)]), np.geomspace(10, 100, 50))


def test_batched_polygon_rays_match_single():
    D = G.polygon([(0, 0), (2, 0), (2.5, 1), (1, 2), (-0.5, 1)])
    L = G.polygon([(0, 0), (1, 0), (0, 1)])
    thetas = G.uniform_directions(2, 12).thetas
    ls = np.linspace(0, 4, 41)
    for th, ray in zip(thetas, G.exact_rays(D, L, thetas)):
        one = G.exact_ray(D, L, th)
        assert np.allclose(ray.g(ls), one.g(ls), atol=1e-14)
        assert np.allclose(ray.neg_dg(ls), one.neg_dg(ls), atol=1e-12)
