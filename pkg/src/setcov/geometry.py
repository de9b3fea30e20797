"""
Cross covariograms of compact sets.

The covariogram of two compact sets D, L in R^d is

    g_{D,L}(z) = Vol(D ∩ (L + z)).

Exact formulas are provided for interval/interval, axis-aligned box/box,
ball/ball and convex-polygon/convex-polygon pairs (plus finite disjoint
unions of those).  Everything else goes through :func:`covariogram_mc`.

Along a ray ``l -> l*theta`` every exact pair is piecewise smooth; the
``_Ray`` objects below expose the kinks so that quadrature panels can be
aligned with them.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc, gammaln

from . import _quad
from .errors import GeometryError, UnsupportedPairError

KINDS = ("interval", "box", "ball", "polygon", "union")

DEFAULT_MC_SAMPLES = 10 ** 6
EXACT_TOL = 1e-10


# ----------------------------------------------------------------------------
# helpers on spheres and balls
# ----------------------------------------------------------------------------
def unit_ball_volume(d):
    """Volume of the unit ball in R^d."""
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0))


def sphere_area(d):
    """Surface measure omega_{d-1} of S^{d-1}; equals 2 for d = 1."""
    return d * unit_ball_volume(d)


# ----------------------------------------------------------------------------
# shapes
# ----------------------------------------------------------------------------
def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CompactSet:
    """A compact set from the supported shape vocabulary.

    Use the factory functions :func:`interval`, :func:`box`, :func:`ball`,
    :func:`polygon` and :func:`union` rather than the constructor.
    """

    kind: str
    dim: int
    params: dict = field(default_factory=dict)
    members: tuple = ()

    # -- geometric functionals -------------------------------------------
    def volume(self):
        return volume(self)

    def perimeter(self):
        return perimeter(self)

    def bounds(self):
        """Axis-aligned bounding box ``(lows, highs)``."""
        k, p = self.kind, self.params
        if k == "interval":
            return np.array([p["a"]]), np.array([p["b"]])
        if k == "box":
            return p["lows"].copy(), p["highs"].copy()
        if k == "ball":
            return p["center"] - p["radius"], p["center"] + p["radius"]
        if k == "polygon":
            v = p["vertices"]
            return v.min(axis=0), v.max(axis=0)
        lo = np.min([m.bounds()[0] for m in self.members], axis=0)
        hi = np.max([m.bounds()[1] for m in self.members], axis=0)
        return lo, hi

    def contains(self, x):
        """Membership test for points ``x`` of shape (n, d) (closed set)."""
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        k, p = self.kind, self.params
        if k == "interval":
            return (x[:, 0] >= p["a"]) & (x[:, 0] <= p["b"])
        if k == "box":
            return np.all((x >= p["lows"]) & (x <= p["highs"]), axis=1)
        if k == "ball":
            d2 = np.sum((x - p["center"]) ** 2, axis=1)
            return d2 <= p["radius"] ** 2
        if k == "polygon":
            return _point_in_polygon(x, p["vertices"], p["convex"])
        out = np.zeros(x.shape[0], dtype=bool)
        for m in self.members:
            out |= m.contains(x)
        return out

    def sample(self, rng, n):
        """Draw ``n`` points uniformly from the set."""
        k, p = self.kind, self.params
        if k == "interval":
            return rng.uniform(p["a"], p["b"], size=(n, 1))
        if k == "box":
            return rng.uniform(p["lows"], p["highs"], size=(n, self.dim))
        if k == "ball":
            g = rng.standard_normal((n, self.dim))
            g /= np.linalg.norm(g, axis=1)[:, None]
            r = p["radius"] * rng.random(n) ** (1.0 / self.dim)
            return p["center"] + g * r[:, None]
        if k == "polygon":
            if p["convex"]:
                return _sample_convex_polygon(rng, p["vertices"], n)
            return _sample_by_rejection(self, rng, n)
        vols = np.array([m.volume() for m in self.members])
        counts = rng.multinomial(n, vols / vols.sum())
        pts = [m.sample(rng, c) for m, c in zip(self.members, counts)]
        pts = np.concatenate(pts, axis=0)
        return pts[rng.permutation(n)]

    def translate(self, z):
        z = np.asarray(z, dtype=float).reshape(self.dim)
        k, p = self.kind, self.params
        if k == "interval":
            return interval(p["a"] + z[0], p["b"] + z[0])
        if k == "box":
            return box(p["lows"] + z, p["highs"] + z)
        if k == "ball":
            return ball(p["center"] + z, p["radius"])
        if k == "polygon":
            return polygon(p["vertices"] + z)
        return union(*[m.translate(z) for m in self.members])

    def scale(self, t):
        """The dilation ``tD = {t x : x in D}`` for ``t > 0``."""
        k, p = self.kind, self.params
        if k == "interval":
            return interval(t * p["a"], t * p["b"])
        if k == "box":
            return box(t * p["lows"], t * p["highs"])
        if k == "ball":
            return ball(t * p["center"], t * p["radius"])
        if k == "polygon":
            return polygon(t * p["vertices"])
        return union(*[m.scale(t) for m in self.members])

    def to_config(self):
        k, p = self.kind, self.params
        if k == "interval":
            return {"kind": k, "dim": 1, "a": float(p["a"]), "b": float(p["b"])}
        if k == "box":
            return {"kind": k, "dim": self.dim, "lows": p["lows"].tolist(),
                    "highs": p["highs"].tolist()}
        if k == "ball":
            return {"kind": k, "dim": self.dim, "center": p["center"].tolist(),
                    "radius": float(p["radius"])}
        if k == "polygon":
            return {"kind": k, "dim": 2, "vertices": p["vertices"].tolist()}
        return {"kind": k, "dim": self.dim,
                "members": [m.to_config() for m in self.members]}

    def __repr__(self):
        return f"CompactSet({self.to_config()})"


def interval(a, b):
    a, b = float(a), float(b)
    if not a < b:
        raise GeometryError(f"interval needs a < b, got [{a}, {b}]")
    return CompactSet("interval", 1, {"a": a, "b": b})


def box(lows, highs):
    lows = _frozen(np.atleast_1d(lows))
    highs = _frozen(np.atleast_1d(highs))
    if lows.shape != highs.shape or lows.ndim != 1:
        raise GeometryError("box lows/highs must be 1-D arrays of equal length")
    if not np.all(lows < highs):
        raise GeometryError("box needs lows[i] < highs[i] for every i")
    return CompactSet("box", lows.size, {"lows": lows, "highs": highs})


def ball(center, radius):
    center = _frozen(np.atleast_1d(center))
    radius = float(radius)
    if not radius > 0:
        raise GeometryError("ball radius must be positive")
    return CompactSet("ball", center.size, {"center": center, "radius": radius})


def polygon(vertices):
    """Simple counter-clockwise polygon in the plane."""
    v = _frozen(np.asarray(vertices, dtype=float))
    if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
        raise GeometryError("polygon needs at least 3 planar vertices")
    if _signed_area(v) <= 0:
        raise GeometryError("polygon vertices must be counter-clockwise")
    if not _is_simple(v):
        raise GeometryError("polygon is not simple")
    return CompactSet("polygon", 2, {"vertices": v, "convex": _is_convex(v)})


def union(*members, check_samples=10 ** 5):
    """Finite union of pairwise disjoint sets (overlaps of measure zero allowed)."""
    flat = []
    for m in members:
        flat.extend(m.members if m.kind == "union" else [m])
    if not flat:
        raise GeometryError("union needs at least one member")
    dims = {m.dim for m in flat}
    if len(dims) != 1:
        raise GeometryError("union members must share a dimension")
    for i in range(len(flat)):
        for j in range(i + 1, len(flat)):
            ov = _overlap_volume(flat[i], flat[j], check_samples)
            if ov > 1e-9 * min(flat[i].volume(), flat[j].volume()):
                raise GeometryError(
                    f"union members {i} and {j} overlap (volume ~ {ov:.3g})")
    return CompactSet("union", dims.pop(), {}, tuple(flat))


def _overlap_volume(A, B, n):
    la, ha = A.bounds()
    lb, hb = B.bounds()
    if np.any(ha < lb) or np.any(hb < la):
        return 0.0
    if exact_pair_supported(A, B):
        return float(covariogram_exact(A, B, np.zeros(A.dim)))
    est, _ = covariogram_mc(A, B, np.zeros(A.dim), n=n, seed=12345)
    return est


def shape_from_config(cfg):
    """Build a :class:`CompactSet` from its JSON description."""
    try:
        kind = cfg["kind"]
        if kind == "interval":
            return interval(cfg["a"], cfg["b"])
        if kind == "box":
            return box(cfg["lows"], cfg["highs"])
        if kind == "ball":
            return ball(cfg["center"], cfg["radius"])
        if kind == "polygon":
            return polygon(cfg["vertices"])
        if kind == "union":
            return union(*[shape_from_config(m) for m in cfg["members"]])
    except KeyError as exc:
        raise GeometryError(f"shape description missing field {exc}") from None
    raise GeometryError(f"unsupported shape kind {cfg.get('kind')!r}")


# ----------------------------------------------------------------------------
# polygons
# ----------------------------------------------------------------------------
def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _is_convex(v):
    e = np.roll(v, -1, axis=0) - v
    cr = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    return bool(np.all(cr >= -1e-12 * np.max(np.abs(e)) ** 2))


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _is_simple(v):
    n = len(v)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return False
    return True


def _point_in_polygon(x, v, convex):
    px, py = x[:, 0], x[:, 1]
    n = len(v)
    if convex:
        inside = np.ones(x.shape[0], dtype=bool)
        for i in range(n):
            ax, ay = v[i]
            bx, by = v[(i + 1) % n]
            inside &= (bx - ax) * (py - ay) - (by - ay) * (px - ax) >= 0
        return inside
    inside = np.zeros(x.shape[0], dtype=bool)
    for i in range(n):
        ax, ay = v[i]
        bx, by = v[(i + 1) % n]
        cond = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ax + (py - ay) * (bx - ax) / (by - ay)
        inside ^= cond & (px < xint)
    return inside


def _sample_convex_polygon(rng, v, n):
    # fan triangulation from vertex 0
    tri = [(v[0], v[i], v[i + 1]) for i in range(1, len(v) - 1)]
    areas = np.array([abs(_signed_area(np.array(t))) for t in tri])
    idx = rng.choice(len(tri), size=n, p=areas / areas.sum())
    r1 = rng.random(n)
    r2 = rng.random(n)
    flip = r1 + r2 > 1
    r1[flip], r2[flip] = 1 - r1[flip], 1 - r2[flip]
    a = np.array([t[0] for t in tri])[idx]
    b = np.array([t[1] for t in tri])[idx]
    c = np.array([t[2] for t in tri])[idx]
    return a + r1[:, None] * (b - a) + r2[:, None] * (c - a)


def _sample_by_rejection(S, rng, n):
    lo, hi = S.bounds()
    out = []
    need = n
    while need > 0:
        x = rng.uniform(lo, hi, size=(max(2 * need, 64), S.dim))
        x = x[S.contains(x)]
        out.append(x[:need])
        need -= len(out[-1])
    return np.concatenate(out, axis=0)


def clip_convex(subject, clip):
    """Sutherland-Hodgman: clip polygon ``subject`` by convex CCW ``clip``."""
    out = [tuple(p) for p in subject]
    m = len(clip)
    for i in range(m):
        if not out:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % m]
        ex, ey = bx - ax, by - ay
        inp = out
        out = []
        px, py = inp[-1]
        ps = ex * (py - ay) - ey * (px - ax)
        for qx, qy in inp:
            qs = ex * (qy - ay) - ey * (qx - ax)
            if qs >= 0:
                if ps < 0:
                    t = ps / (ps - qs)
                    out.append((px + t * (qx - px), py + t * (qy - py)))
                out.append((qx, qy))
            elif ps >= 0:
                t = ps / (ps - qs)
                out.append((px + t * (qx - px), py + t * (qy - py)))
            px, py, ps = qx, qy, qs
    return out


def _poly_area(pts):
    n = len(pts)
    if n < 3:
        return 0.0
    s = 0.0
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return 0.5 * s


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _edge_parts_inside(P, Q, Z, keep_same):
    """Length fractions of each edge of ``P`` lying in ``Q + z``, shape (m, nP).

    Edges collinear with an edge of ``Q + z`` count only when the two run the
    same way and ``keep_same`` is set, so shared boundary is counted once.
    """
    e = np.roll(P, -1, axis=0) - P
    f = np.roll(Q, -1, axis=0) - Q
    scale = max(float(np.ptp(P)), float(np.ptp(Q)), float(np.max(np.abs(Z))), 1.0)
    b = _cross(f[None, :, :], e[:, None, :])                      # (nP, nQ)
    a0 = _cross(f[None, :, :], P[:, None, :] - Q[None, :, :])     # (nP, nQ)
    a = a0[None, :, :] - _cross(f[None, :, :], Z[:, None, :])[:, None, :]
    fn = np.linalg.norm(f, axis=1)
    tol_b = 1e-12 * fn[None, :] * np.linalg.norm(e, axis=1)[:, None]
    tol_a = 1e-12 * scale * fn
    par = np.abs(b) <= tol_b
    with np.errstate(divide="ignore", invalid="ignore"):
        r = -a / b[None, :, :]
    lo = np.max(np.where((b > tol_b)[None], r, 0.0), axis=2, initial=0.0)
    hi = np.min(np.where((b < -tol_b)[None], r, 1.0), axis=2, initial=1.0)
    same = np.sum(f[None, :, :] * e[:, None, :], axis=2) > 0
    on = np.abs(a) <= tol_a[None, None, :]
    blocked = par[None] & ((a < -tol_a[None, None, :]) | (on & ~(same & keep_same)[None]))
    length = np.clip(hi - lo, 0.0, None)
    return np.where(np.any(blocked, axis=2), 0.0, length)


def convex_overlap_areas(P, Q, Z):
    """Areas of ``P \\cap (Q + z)`` for convex CCW polygons and every row ``z`` of ``Z``.

    Green's theorem over the boundary of the intersection, which consists of
    the parts of each polygon's edges inside the other.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    ep = np.roll(P, -1, axis=0) - P
    eq = np.roll(Q, -1, axis=0) - Q
    lp = _edge_parts_inside(P, Q, Z, keep_same=True)
    lq = _edge_parts_inside(Q, P, -Z, keep_same=False)
    area = lp @ _cross(P, ep)
    area += lq @ _cross(Q, eq) + np.sum(lq[:, :, None] * eq[None], axis=1)[:, 1] * Z[:, 0]
    area -= np.sum(lq[:, :, None] * eq[None], axis=1)[:, 0] * Z[:, 1]
    return np.maximum(0.5 * area, 0.0)


def _box_vertices(S):
    lo, hi = S.bounds()
    d = S.dim
    corners = np.array(np.meshgrid(*[[0, 1]] * d, indexing="ij")).reshape(d, -1).T
    return lo + corners * (hi - lo)


def _as_polygon_vertices(S):
    if S.kind == "polygon":
        return S.params["vertices"]
    lo, hi = S.bounds()
    return np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])


# ----------------------------------------------------------------------------
# volume, perimeter, diameter bound
# ----------------------------------------------------------------------------
def volume(D):
    """Lebesgue measure of ``D``."""
    k, p = D.kind, D.params
    if k == "interval":
        return p["b"] - p["a"]
    if k == "box":
        return float(np.prod(p["highs"] - p["lows"]))
    if k == "ball":
        return unit_ball_volume(D.dim) * p["radius"] ** D.dim
    if k == "polygon":
        return abs(_signed_area(p["vertices"]))
    if k == "union":
        return float(sum(volume(m) for m in D.members))
    raise GeometryError(f"unsupported kind {k!r}")


def perimeter(D):
    """Boundary measure; 2 for an interval (two endpoints)."""
    k, p = D.kind, D.params
    if k == "interval":
        return 2.0
    if k == "box":
        w = p["highs"] - p["lows"]
        if D.dim == 1:
            return 2.0
        return float(2.0 * sum(np.prod(np.delete(w, i)) for i in range(D.dim)))
    if k == "ball":
        return sphere_area(D.dim) * p["radius"] ** (D.dim - 1)
    if k == "polygon":
        v = p["vertices"]
        return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))
    return float(sum(perimeter(m) for m in D.members))


def _extreme_pieces(D):
    """List of (points, radius): D lies in the union of hulls of balls."""
    if D.kind == "union":
        out = []
        for m in D.members:
            out.extend(_extreme_pieces(m))
        return out
    if D.kind == "ball":
        return [(D.params["center"][None, :], D.params["radius"])]
    if D.kind == "polygon":
        return [(D.params["vertices"], 0.0)]
    return [(_box_vertices(D), 0.0)]


def diameter_bound(D, L):
    """``h(D - L) = sup_{x in D, y in L} |x - y|``."""
    if D.dim != L.dim:
        raise GeometryError(f"dimension mismatch: {D.dim} vs {L.dim}")
    best = 0.0
    for pd, rd in _extreme_pieces(D):
        for pl, rl in _extreme_pieces(L):
            dist = np.linalg.norm(pd[:, None, :] - pl[None, :, :], axis=2)
            best = max(best, float(dist.max()) + rd + rl)
    return best


# ----------------------------------------------------------------------------
# exact covariograms
# ----------------------------------------------------------------------------
def _pair_kind(D, L):
    if D.dim != L.dim:
        raise GeometryError(f"dimension mismatch: {D.dim} vs {L.dim}")
    if D.kind == "union" or L.kind == "union":
        ms_d = D.members if D.kind == "union" else (D,)
        ms_l = L.members if L.kind == "union" else (L,)
        ok = all(_pair_kind(a, b) is not None for a in ms_d for b in ms_l)
        return "union" if ok else None
    if D.dim == 1:
        return "interval"
    if D.kind == "box" and L.kind == "box":
        return "box"
    if D.kind == "ball" and L.kind == "ball":
        return "ball"
    if D.dim == 2:
        conv = lambda S: S.kind == "box" or (S.kind == "polygon" and S.params["convex"])
        if conv(D) and conv(L):
            return "polygon"
    return None


def exact_pair_supported(D, L):
    return _pair_kind(D, L) is not None


def _as_box_arrays(S):
    lo, hi = S.bounds()
    return np.asarray(lo, float), np.asarray(hi, float)


def _overlap_1d(a1, b1, a2, b2):
    return np.maximum(np.minimum(b1, b2) - np.maximum(a1, a2), 0.0)


def _cap_volume(r, h, d):
    """Volume of a cap of height ``h`` (0 <= h <= 2r) of a d-ball of radius r."""
    h = np.clip(h, 0.0, 2.0 * r)
    big = h > r
    hh = np.where(big, 2.0 * r - h, h)
    if d == 2:
        c = np.clip((r - hh) / r, -1.0, 1.0)
        cap = r * r * np.arccos(c) - (r - hh) * np.sqrt(np.maximum(2 * r * hh - hh * hh, 0.0))
    else:
        x = np.clip((2 * r * hh - hh * hh) / (r * r), 0.0, 1.0)
        cap = 0.5 * unit_ball_volume(d) * r ** d * betainc(0.5 * (d + 1), 0.5, x)
    full = unit_ball_volume(d) * r ** d
    return np.where(big, full - cap, cap)


def ball_intersection_volume(r1, r2, dist, d):
    """Volume of the intersection of two d-balls with centre distance ``dist``.

    The radii may be arrays broadcasting against ``dist``.
    """
    dist = np.asarray(dist, dtype=float)
    r1, r2 = np.broadcast_to(r1, dist.shape), np.broadcast_to(r2, dist.shape)
    out = np.zeros_like(dist)
    inner = dist <= np.abs(r1 - r2)
    out[inner] = unit_ball_volume(d) * np.minimum(r1, r2)[inner] ** d
    lens = (~inner) & (dist < r1 + r2)
    if np.any(lens):
        s, a, b = dist[lens], r1[lens], r2[lens]
        x = (s * s + a * a - b * b) / (2 * s)
        out[lens] = _cap_volume(a, a - x, d) + _cap_volume(b, b - (s - x), d)
    return out


def _ball_lens_slope(r1, r2, dist, d):
    """``-dV/d dist`` for two balls: the (d-1)-volume of their radical disk."""
    dist = np.asarray(dist, dtype=float)
    out = np.zeros_like(dist)
    lens = (dist > abs(r1 - r2)) & (dist < r1 + r2)
    if np.any(lens):
        s = dist[lens]
        x = (s * s + r1 * r1 - r2 * r2) / (2 * s)
        a2 = np.maximum(r1 * r1 - x * x, 0.0)
        out[lens] = unit_ball_volume(d - 1) * a2 ** (0.5 * (d - 1))
    return out


def _g_exact_points(D, L, z, kind):
    # z has shape (n, d)
    if kind == "union":
        ms_d = D.members if D.kind == "union" else (D,)
        ms_l = L.members if L.kind == "union" else (L,)
        total = np.zeros(z.shape[0])
        for a in ms_d:
            for b in ms_l:
                total += _g_exact_points(a, b, z, _pair_kind(a, b))
        return total
    if kind in ("interval", "box"):
        lo1, hi1 = _as_box_arrays(D)
        lo2, hi2 = _as_box_arrays(L)
        ov = _overlap_1d(lo1, hi1, lo2 + z, hi2 + z)
        return np.prod(ov, axis=1)
    if kind == "ball":
        c1, r1 = D.params["center"], D.params["radius"]
        c2, r2 = L.params["center"], L.params["radius"]
        dist = np.linalg.norm(c2 + z - c1, axis=1)
        return ball_intersection_volume(r1, r2, dist, D.dim)
    if kind == "polygon":
        vd = [tuple(p) for p in _as_polygon_vertices(D)]
        vl = _as_polygon_vertices(L)
        return np.array([_poly_area(clip_convex(vl + zz, vd)) for zz in z])
    raise UnsupportedPairError("no exact covariogram for this pair")


def covariogram_exact(D, L, z):
    """Exact ``g_{D,L}(z) = Vol(D ∩ (L + z))``.

    ``z`` may be a single vector (returns a float) or an ``(n, d)`` array.

    Raises
    ------
    UnsupportedPairError
        if no exact path exists (use :func:`covariogram_mc`).
    """
    kind = _pair_kind(D, L)
    if kind is None:
        raise UnsupportedPairError(
            f"no exact covariogram for {D.kind}/{L.kind}; use covariogram_mc")
    z = np.asarray(z, dtype=float)
    single = z.ndim <= 1
    zz = z.reshape(-1, D.dim)
    out = _g_exact_points(D, L, zz, kind)
    h = diameter_bound(D, L)
    out[np.linalg.norm(zz, axis=1) > h] = 0.0
    return float(out[0]) if single else out


# ----------------------------------------------------------------------------
# Monte Carlo covariograms
# ----------------------------------------------------------------------------
_MC_CHUNK = 2 ** 17
MC_PROFILE_DIRECTIONS = 64


def _stratified_points(lo, hi, n, seed):
    """Stratified uniform points in a box, generated chunk by chunk.

    Returns points, stratum ids and the number of strata.  Each chunk uses
    its own stream keyed by ``(seed, chunk index)``.
    """
    d = lo.size
    m = max(1, int((n / 64) ** (1.0 / d)))
    n_strata = m ** d
    per = max(1, n // n_strata)
    total = per * n_strata
    ids = np.repeat(np.arange(n_strata), per)
    cells = np.array(np.unravel_index(ids, (m,) * d)).T
    pts = np.empty((total, d))
    for c, start in enumerate(range(0, total, _MC_CHUNK)):
        stop = min(start + _MC_CHUNK, total)
        rng = np.random.default_rng([seed, c])
        u = rng.random((stop - start, d))
        pts[start:stop] = lo + (cells[start:stop] + u) * (hi - lo) / m
    return pts, ids, n_strata


def _stratified_estimate(hit, ids, n_strata, vol):
    counts = np.bincount(ids, minlength=n_strata)
    hits = np.bincount(ids, weights=hit.astype(float), minlength=n_strata)
    p = hits / counts
    est = vol * float(np.mean(p))
    var = np.sum(p * (1 - p) / counts) / n_strata ** 2
    return est, vol * math.sqrt(var)


def covariogram_mc(D, L, z, n=DEFAULT_MC_SAMPLES, seed=0):
    """Monte Carlo estimate of ``g_{D,L}(z)`` with its standard error.

    Points are stratified over the bounding box of ``D``; the result is
    deterministic for a given ``seed``.
    """
    if n < 10 ** 3:
        raise ValueError("covariogram_mc needs n >= 1000")
    z = np.asarray(z, dtype=float).reshape(D.dim)
    if D.dim != L.dim:
        raise GeometryError(f"dimension mismatch: {D.dim} vs {L.dim}")
    if np.linalg.norm(z) > diameter_bound(D, L):
        return 0.0, 0.0
    lo, hi = D.bounds()
    vol = float(np.prod(hi - lo))
    if not vol > 0:
        raise GeometryError("degenerate bounding box")
    x, ids, ns = _stratified_points(lo, hi, n, seed)
    hit = D.contains(x) & L.contains(x - z)
    return _stratified_estimate(hit, ids, ns, vol)


# ----------------------------------------------------------------------------
# rays: g and -dg/dl along l -> l*theta for exact pairs
# ----------------------------------------------------------------------------
class _Ray:
    """Exact covariogram restricted to a ray, with its kinks."""

    def __init__(self, breakpoints, h):
        bp = np.asarray(breakpoints, dtype=float)
        self.h = h
        # rounding-level slivers would hide the l = 0 endpoint from the
        # singular-weight rule of the first panel
        tol = 1e-14 * max(h, 1.0)
        bp = np.unique(bp[(bp > tol) & (bp < h - tol)])
        if bp.size:
            bp = bp[np.concatenate([[True], np.diff(bp) > tol])]
        self.breakpoints = bp

    def edges(self):
        return np.concatenate([[0.0], self.breakpoints, [self.h]])


class _BoxRay(_Ray):
    def __init__(self, D, L, theta, h):
        self.lo1, self.hi1 = _as_box_arrays(D)
        self.lo2, self.hi2 = _as_box_arrays(L)
        self.theta = theta
        bps = []
        for i, th in enumerate(theta):
            if th != 0:
                for k in (self.lo1[i] - self.lo2[i], self.hi1[i] - self.hi2[i],
                          self.lo1[i] - self.hi2[i], self.hi1[i] - self.lo2[i]):
                    bps.append(k / th)
        super().__init__(bps, h)

    def _parts(self, l):
        z = np.outer(l, self.theta)
        a2 = self.lo2 + z
        b2 = self.hi2 + z
        ov = _overlap_1d(self.lo1, self.hi1, a2, b2)
        slope = ((b2 < self.hi1).astype(float) - (a2 > self.lo1).astype(float))
        slope = np.where(ov > 0, slope * self.theta, 0.0)
        return ov, slope

    def g(self, l):
        ov, _ = self._parts(np.asarray(l, float))
        return np.prod(ov, axis=1)

    def neg_dg(self, l):
        ov, slope = self._parts(np.asarray(l, float))
        d = ov.shape[1]
        total = np.zeros(ov.shape[0])
        for i in range(d):
            others = np.prod(np.delete(ov, i, axis=1), axis=1) if d > 1 else 1.0
            total += slope[:, i] * others
        return -total


class _BallRay(_Ray):
    def __init__(self, D, L, theta, h):
        self.r1, self.r2 = D.params["radius"], L.params["radius"]
        self.delta = L.params["center"] - D.params["center"]
        self.theta = theta
        self.d = D.dim
        b = float(np.dot(self.delta, theta))
        c0 = float(np.dot(self.delta, self.delta))
        bps = [-b]
        for rho in (self.r1 + self.r2, abs(self.r1 - self.r2)):
            disc = b * b - (c0 - rho * rho)
            if disc >= 0:
                s = math.sqrt(disc)
                bps += [-b - s, -b + s]
        super().__init__(bps, h)

    def _dist(self, l):
        v = self.delta + np.outer(l, self.theta)
        return np.linalg.norm(v, axis=1), v

    def g(self, l):
        dist, _ = self._dist(np.asarray(l, float))
        return ball_intersection_volume(self.r1, self.r2, dist, self.d)

    def neg_dg(self, l):
        l = np.asarray(l, float)
        dist, v = self._dist(l)
        with np.errstate(invalid="ignore", divide="ignore"):
            ddist = np.where(dist > 0, (v @ self.theta) / dist, 0.0)
        return _ball_lens_slope(self.r1, self.r2, dist, self.d) * ddist


class _PolygonRay(_Ray):
    """Convex polygons: g is a quadratic in l between vertex/edge events.

    With ``fitted=False`` the panels are set up but the quadratic coefficients
    wait for :meth:`fit`, so many rays can share one area evaluation.
    """

    def __init__(self, D, L, theta, h, fitted=True):
        self.vd = _as_polygon_vertices(D)
        self.vl = _as_polygon_vertices(L)
        bps = list(_vertex_edge_events(self.vd, self.vl, theta))
        bps += list(_vertex_edge_events(self.vl, self.vd, -theta))
        super().__init__(bps, h)
        self.theta = theta
        e = self.edges()
        self._edges = e
        self._mid = 0.5 * (e[:-1] + e[1:])
        self._hw = 0.5 * (e[1:] - e[:-1])
        if fitted:
            self.fit(convex_overlap_areas(self.vd, self.vl, self.sample_offsets()))

    def sample_offsets(self):
        """Translations whose overlap areas :meth:`fit` expects, in order."""
        mid, hw = self._mid, self._hw
        ls = np.concatenate([mid, mid + 0.5 * hw, mid - 0.5 * hw])
        return np.outer(ls, self.theta)

    def fit(self, areas):
        gm, gp, gn = np.split(np.asarray(areas, dtype=float), 3)
        hw = self._hw
        with np.errstate(invalid="ignore", divide="ignore"):
            self._A = gm
            self._B = np.where(hw > 0, (gp - gn) / hw, 0.0)
            self._C = np.where(hw > 0, (gp - 2 * gm + gn) / (0.5 * hw * hw), 0.0)


    def _locate(self, l):
        i = np.clip(np.searchsorted(self._edges, l, side="right") - 1,
                    0, self._mid.size - 1)
        return i, l - self._mid[i]

    def g(self, l):
        l = np.asarray(l, float)
        i, x = self._locate(l)
        out = self._A[i] + self._B[i] * x + self._C[i] * x * x
        return np.where((l >= 0) & (l <= self.h), np.maximum(out, 0.0), 0.0)

    def neg_dg(self, l):
        l = np.asarray(l, float)
        i, x = self._locate(l)
        out = -(self._B[i] + 2 * self._C[i] * x)
        return np.where((l >= 0) & (l <= self.h), out, 0.0)


def _polygon_rays(D, L, thetas, h):
    rays = [_PolygonRay(D, L, th, h, fitted=False) for th in thetas]
    vd, vl = rays[0].vd, rays[0].vl
    Z = np.concatenate([r.sample_offsets() for r in rays])
    # bounds the (rows, edges, edges) temporaries
    chunk = max(1, 2_000_000 // (vd.shape[0] * vl.shape[0]))
    areas = np.concatenate([convex_overlap_areas(vd, vl, Z[k:k + chunk])
                            for k in range(0, Z.shape[0], chunk)])
    for ray, a in zip(rays, np.split(areas, np.cumsum([3 * r._mid.size for r in rays])[:-1])):
        ray.fit(a)
    return rays


def _vertex_edge_events(fixed, moving, theta):
    """Values of l where a vertex of ``moving + l*theta`` meets an edge line of ``fixed``."""
    e = np.roll(fixed, -1, axis=0) - fixed
    normal = np.stack([e[:, 1], -e[:, 0]], axis=1)
    offs = np.sum(normal * fixed, axis=1)
    nt = normal @ theta
    ok = np.abs(nt) > 1e-14
    num = offs[ok][:, None] - normal[ok] @ moving.T
    return (num / nt[ok][:, None]).ravel()


class _UnionRay(_Ray):
    def __init__(self, rays, h):
        self.rays = rays
        bps = np.concatenate([r.breakpoints for r in rays] + [[r.h for r in rays]])
        super().__init__(bps, h)

    def g(self, l):
        return sum(r.g(l) for r in self.rays)

    def neg_dg(self, l):
        return sum(r.neg_dg(l) for r in self.rays)


def _make_ray(D, L, theta, h=None):
    kind = _pair_kind(D, L)
    if kind is None:
        raise UnsupportedPairError(f"no exact covariogram for {D.kind}/{L.kind}")
    theta = np.asarray(theta, dtype=float).reshape(D.dim)
    if h is None:
        h = diameter_bound(D, L)
    if kind == "union":
        ms_d = D.members if D.kind == "union" else (D,)
        ms_l = L.members if L.kind == "union" else (L,)
        rays = [_make_ray(a, b, theta, diameter_bound(a, b)) for a in ms_d for b in ms_l]
        return _UnionRay(rays, h)
    if kind in ("interval", "box"):
        return _BoxRay(D, L, theta, h)
    if kind == "ball":
        return _BallRay(D, L, theta, h)
    return _PolygonRay(D, L, theta, h)


def _padded(arrays, fill):
    m = max(a.size for a in arrays)
    out = np.full((len(arrays), m), fill, dtype=float)
    for k, a in enumerate(arrays):
        out[k, :a.size] = a
    return out


_TABLES = [None, None]


def _polygon_tables(rays):
    # quadrature calls this repeatedly with the same list; keep the last one
    if _TABLES[0] is not rays:
        _TABLES[1] = (_padded([r._edges for r in rays], np.inf),
                      _padded([r._mid for r in rays], 0.0),
                      _padded([r._A for r in rays], 0.0),
                      _padded([r._B for r in rays], 0.0),
                      _padded([r._C for r in rays], 0.0),
                      np.array([r._mid.size for r in rays]),
                      np.array([r.h for r in rays]))
        _TABLES[0] = rays
    return _TABLES[1]


def rays_neg_dg(rays, l, tag):
    """``-dg/dl`` of ``rays[tag[j]]`` at ``l[j]``, vectorised across rays of one kind."""
    return _rays_eval(rays, l, tag, derivative=True)


def rays_g(rays, l, tag):
    """``g`` of ``rays[tag[j]]`` at ``l[j]``, vectorised across rays of one kind."""
    return _rays_eval(rays, l, tag, derivative=False)


def _rays_eval(rays, l, tag, derivative):
    l = np.asarray(l, dtype=float)
    tag = np.asarray(tag)
    kinds = {type(r) for r in rays}
    if kinds == {_BallRay} and len({r.d for r in rays}) == 1:
        d = rays[0].d
        r1 = np.array([r.r1 for r in rays])[tag]
        r2 = np.array([r.r2 for r in rays])[tag]
        th = np.array([r.theta for r in rays])[tag]
        v = np.array([r.delta for r in rays])[tag] + l[:, None] * th
        dist = np.linalg.norm(v, axis=1)
        if not derivative:
            return ball_intersection_volume(r1, r2, dist, d)
        lens = (dist > np.abs(r1 - r2)) & (dist < r1 + r2)
        out = np.zeros(l.size)
        s, a, b = dist[lens], r1[lens], r2[lens]
        x = (s * s + a * a - b * b) / (2 * s)
        slope = unit_ball_volume(d - 1) * np.maximum(a * a - x * x, 0.0) ** (0.5 * (d - 1))
        out[lens] = slope * np.sum(v[lens] * th[lens], axis=1) / s
        return out
    if kinds == {_BoxRay}:
        lo1 = np.array([r.lo1 for r in rays])[tag]
        hi1 = np.array([r.hi1 for r in rays])[tag]
        th = np.array([r.theta for r in rays])[tag]
        z = l[:, None] * th
        a2 = np.array([r.lo2 for r in rays])[tag] + z
        b2 = np.array([r.hi2 for r in rays])[tag] + z
        ov = _overlap_1d(lo1, hi1, a2, b2)
        if not derivative:
            return np.prod(ov, axis=1)
        slope = (b2 < hi1).astype(float) - (a2 > lo1).astype(float)
        slope = np.where(ov > 0, slope * th, 0.0)
        d = ov.shape[1]
        total = np.zeros(l.size)
        for i in range(d):
            others = np.prod(np.delete(ov, i, axis=1), axis=1) if d > 1 else 1.0
            total += slope[:, i] * others
        return -total
    if kinds == {_PolygonRay}:
        E, mid, A, B, C, nmid, h = _polygon_tables(rays)
        nmid, h = nmid[tag], h[tag]
        i = np.sum(E[tag] <= l[:, None], axis=1) - 1
        i = np.clip(i, 0, nmid - 1)
        x = l - mid[tag, i]
        inside = (l >= 0) & (l <= h)
        if not derivative:
            out = A[tag, i] + B[tag, i] * x + C[tag, i] * x * x
            return np.where(inside, np.maximum(out, 0.0), 0.0)
        out = -(B[tag, i] + 2 * C[tag, i] * x)
        return np.where(inside, out, 0.0)
    out = np.empty(l.size)
    order = np.argsort(tag, kind="stable")
    bounds = np.searchsorted(tag[order], np.arange(len(rays) + 1))
    for k, ray in enumerate(rays):
        idx = order[bounds[k]:bounds[k + 1]]
        if idx.size:
            out[idx] = ray.neg_dg(l[idx]) if derivative else ray.g(l[idx])
    return out


def exact_ray(D, L, theta):
    """Exact ``g`` and ``-dg/dl`` along direction ``theta`` (internal API)."""
    return _make_ray(D, L, theta)


def exact_rays(D, L, thetas):
    """:func:`exact_ray` for every row of ``thetas``; polygon pairs share one area pass."""
    thetas = np.asarray(thetas, dtype=float).reshape(-1, D.dim)
    if _pair_kind(D, L) == "polygon" and len(thetas):
        return _polygon_rays(D, L, thetas, diameter_bound(D, L))
    return [_make_ray(D, L, th) for th in thetas]


# ----------------------------------------------------------------------------
# direction rules on S^{d-1}
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class DirectionRule:
    """Quadrature on the sphere: weights sum to ``omega_{d-1}``."""

    thetas: np.ndarray
    weights: np.ndarray
    coarse_weights: np.ndarray = None
    coarse_index: np.ndarray = None
    kind: str = "trapezoid"


def _angles_to_thetas(phi):
    return np.stack([np.cos(phi), np.sin(phi)], axis=1)


def uniform_directions(d, n=64):
    """Uniform rule: d=1 uses {+1, -1}; d=2 the trapezoid rule with n angles."""
    if d == 1:
        return DirectionRule(np.array([[1.0], [-1.0]]), np.array([1.0, 1.0]),
                             kind="two-point")
    if d == 2:
        phi = 2 * np.pi * np.arange(n) / n
        w = np.full(n, 2 * np.pi / n)
        ci = np.arange(0, n, 2)
        return DirectionRule(_angles_to_thetas(phi), w, np.full(ci.size, 4 * np.pi / n),
                             ci, kind="trapezoid")
    if d == 3:
        m = max(n // 2, 2)
        x, wx = np.polynomial.legendre.leggauss(m)
        phi = 2 * np.pi * np.arange(n) / n
        ct, ph = np.meshgrid(x, phi, indexing="ij")
        st = np.sqrt(1 - ct ** 2)
        th = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1).reshape(-1, 3)
        w = (wx[:, None] * np.full(n, 2 * np.pi / n)[None, :]).ravel()
        return DirectionRule(th, w, kind="product")
    raise GeometryError("direction rules are implemented for d <= 3")


def _polytope_vertices(S):
    if S.kind == "union":
        out = [_polytope_vertices(m) for m in S.members]
        return [v for v in out if v is not None] and np.concatenate(
            [v for v in out if v is not None]) or None
    if S.kind in ("box", "polygon"):
        return _as_polygon_vertices(S)
    return None


def _kink_angles(pairs):
    angs = []
    for D, L in pairs:
        vd, vl = _polytope_vertices(D), _polytope_vertices(L)
        for v in (vd, vl):
            if v is not None:
                e = np.roll(v, -1, axis=0) - v
                a = np.arctan2(e[:, 1], e[:, 0])
                angs += list(a) + list(a + np.pi)
        if vd is not None and vl is not None:
            diff = (vd[:, None, :] - vl[None, :, :]).reshape(-1, 2)
            diff = diff[np.linalg.norm(diff, axis=1) > 0]
            a = np.arctan2(diff[:, 1], diff[:, 0])
            angs += list(a) + list(a + np.pi)
    return np.mod(np.asarray(angs, dtype=float), 2 * np.pi)


def _ball_kink_angles(pairs):
    # directions where the ray from the origin grazes a circle of radius
    # |r1 - r2| or r1 + r2 around the centre offset
    angs = []
    for D, L in pairs:
        ms_d = D.members if D.kind == "union" else (D,)
        ms_l = L.members if L.kind == "union" else (L,)
        for a in ms_d:
            for b in ms_l:
                if a.kind != "ball" or b.kind != "ball" or a.dim != 2:
                    continue
                c = np.asarray(b.params["center"]) - np.asarray(a.params["center"])
                dist = float(np.hypot(*c))
                r1, r2 = a.params["radius"], b.params["radius"]
                for rho in (abs(r1 - r2), r1 + r2):
                    if dist > rho:
                        base = math.atan2(c[1], c[0])
                        off = math.asin(rho / dist)
                        angs += [base + off, base - off, base + off + np.pi,
                                 base - off + np.pi]
    return np.mod(np.asarray(angs, dtype=float), 2 * np.pi)


def _concentric_balls(D, L):
    return (D.kind == "ball" and L.kind == "ball"
            and np.allclose(D.params["center"], L.params["center"], atol=0, rtol=0))


def _has_polytope(S):
    if S.kind == "union":
        return any(_has_polytope(m) for m in S.members)
    return S.kind in ("box", "polygon")


def direction_rule(pairs, n=None, panels=32, order=8):
    """Direction quadrature suited to a list of ``(D, L)`` pairs.

    * d = 1: the two-point rule {+1, -1}.
    * d = 2, concentric balls only: a single direction (profiles are radial).
    * d = 2 with polygons, boxes or offset disks: composite Gauss-Legendre in
      the angle with panel edges at the angles where the ray profile has
      kinks (endpoint-smoothed when disks graze).
    * otherwise the uniform trapezoid / product rule with ``n`` nodes.
    """
    pairs = list(pairs)
    d = pairs[0][0].dim
    if d == 1:
        return uniform_directions(1)
    if n is not None or d != 2:
        return uniform_directions(d, n or (64 if d == 2 else 32))
    if all(_concentric_balls(D, L) for D, L in pairs):
        return DirectionRule(np.array([[1.0, 0.0]]), np.array([2 * np.pi]),
                             np.array([2 * np.pi]), np.array([0]), kind="radial")
    ball_kinks = _ball_kink_angles(pairs)
    if ball_kinks.size or any(_has_polytope(D) or _has_polytope(L) for D, L in pairs):
        kinks = np.concatenate([_kink_angles(pairs), ball_kinks])
        grid = 2 * np.pi * np.arange(panels + 1) / panels
        e = np.unique(np.concatenate([grid, kinks]))
        e = e[np.concatenate([[True], np.diff(e) > 1e-12])]
        if e[-1] < 2 * np.pi - 1e-12:
            e = np.append(e, 2 * np.pi)
        else:
            e[-1] = 2 * np.pi
        smooth = ball_kinks.size > 0
        phi, ww = _composite_angles(e[:-1], e[1:], order, smooth)
        phic, wwc = _composite_angles(e[:-1], e[1:], order // 2, smooth)
        thetas = np.concatenate([_angles_to_thetas(phi), _angles_to_thetas(phic)])
        weights = np.concatenate([ww, np.zeros(wwc.size)])
        coarse_i = np.arange(phi.size, phi.size + phic.size)
        return DirectionRule(thetas, weights, wwc, coarse_i, kind="composite-gl")
    return uniform_directions(2, 64)


def _composite_angles(a, b, order, smooth):
    # smooth: phi = a + (b-a)(3s^2 - 2s^3) turns square-root endpoint
    # behaviour into a smooth integrand in s
    x, w = _quad.gauss_legendre(order)
    if not smooth:
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        return ((mid[:, None] + half[:, None] * x[None, :]).ravel(),
                (half[:, None] * w[None, :]).ravel())
    s = 0.5 * (x + 1)
    span = (b - a)[:, None]
    phi = a[:, None] + span * (3 * s * s - 2 * s ** 3)[None, :]
    ww = span * (0.5 * w * 6 * s * (1 - s))[None, :]
    return phi.ravel(), ww.ravel()


def rule_integral(rule, values):
    """Apply a direction rule; returns (value, error estimate)."""
    values = np.asarray(values, dtype=float)
    fine = float(np.dot(rule.weights, values))
    if rule.coarse_weights is None:
        return fine, 0.0
    coarse = float(np.dot(rule.coarse_weights, values[rule.coarse_index]))
    return fine, abs(fine - coarse)


# ----------------------------------------------------------------------------
# radial profiles
# ----------------------------------------------------------------------------
@dataclass
class CovariogramProfile:
    """Samples of ``g_{D,L}(l theta)`` and ``-d/dl g_{D,L}(l theta)``.

    ``values`` and ``derivs`` have shape ``(len(thetas), len(ls))``.
    ``theta_weights`` is the direction quadrature (sums to omega_{d-1}).
    """

    D: CompactSet
    L: CompactSet
    thetas: np.ndarray
    theta_weights: np.ndarray
    ls: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    method: str
    stderr: np.ndarray
    h: float
    rule: DirectionRule = None

    def to_csv(self, path):
        """Columns: theta_index, l, g, dg, stderr (dg is -dg/dl)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta_index", "l", "g", "dg", "stderr"])
            for i in range(len(self.thetas)):
                for j, l in enumerate(self.ls):
                    w.writerow([i, repr(float(l)), repr(float(self.values[i, j])),
                                repr(float(self.derivs[i, j])),
                                repr(float(self.stderr[i, j]))])


def profile_grid(h, n_l=64, ratio=1.15, rel_min=1e-4):
    """``l = 0``, a geometric grid from ``h*rel_min`` (ratio 1.15) and ``n_l`` uniform nodes."""
    k = int(math.ceil(math.log(1.0 / rel_min) / math.log(ratio)))
    geo = h * rel_min * ratio ** np.arange(k + 1)
    grid = np.concatenate([[0.0], geo[geo < h], np.linspace(0, h, n_l), [h]])
    return np.unique(grid)


def _chord_events(S, x, u):
    """Membership of ``x + s u`` for ``s >= 0`` as a start state plus toggle positions.

    Returns ``(inside, toggles)`` where ``toggles`` has shape (n, k), each row
    sorted with ``inf`` padding.  ``S`` must not be a union.
    """
    n = x.shape[0]
    inside = S.contains(x)
    k, p = S.kind, S.params
    if k == "polygon":
        v = p["vertices"]
        e = np.roll(v, -1, axis=0) - v
        # solve x + s u = v_j + tau e_j
        den = e[:, 0] * u[1] - e[:, 1] * u[0]
        w0 = v[None, :, 0] - x[:, None, 0]
        w1 = v[None, :, 1] - x[:, None, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (e[None, :, 0] * w1 - e[None, :, 1] * w0) / den[None, :]
            tau = (u[0] * w1 - u[1] * w0) / den[None, :]
        ok = (den[None, :] != 0) & (tau >= 0) & (tau < 1) & (s > 0)
        tog = np.where(ok, s, np.inf)
        tog.sort(axis=1)
        return inside, tog
    if k in ("interval", "box"):
        lo, hi = S.bounds()
        a = np.full(n, -np.inf)
        b = np.full(n, np.inf)
        for ax in range(S.dim):
            if u[ax] == 0:
                out = (x[:, ax] < lo[ax]) | (x[:, ax] > hi[ax])
                a[out], b[out] = np.inf, -np.inf
                continue
            t1 = (lo[ax] - x[:, ax]) / u[ax]
            t2 = (hi[ax] - x[:, ax]) / u[ax]
            a = np.maximum(a, np.minimum(t1, t2))
            b = np.minimum(b, np.maximum(t1, t2))
    elif k == "ball":
        q = x - p["center"]
        pu = q @ u
        disc = pu * pu - np.sum(q * q, axis=1) + p["radius"] ** 2
        root = np.sqrt(np.maximum(disc, 0.0))
        a = np.where(disc > 0, -pu - root, np.inf)
        b = np.where(disc > 0, -pu + root, -np.inf)
    else:
        raise GeometryError(f"no chord rule for {k!r}")
    tog = np.full((n, 2), np.inf)
    front = (a > 0) & (a < b)
    tog[front, 0], tog[front, 1] = a[front], b[front]
    through = inside & (b > 0)
    tog[through, 0] = b[through]
    return inside, tog


def _ray_hit_counts(L, x, ids, u, ls, n_strata):
    """Per-stratum counts of ``x + l u`` in ``L`` for every ``l`` in sorted ``ls``."""
    n_l = ls.size
    total = np.zeros((n_l + 1) * n_strata)
    for m in (L.members if L.kind == "union" else (L,)):
        inside, tog = _chord_events(m, x, u)
        total += np.bincount(ids, weights=inside.astype(float),
                             minlength=(n_l + 1) * n_strata)
        state = inside.astype(float)
        for j in range(tog.shape[1]):
            s = tog[:, j]
            live = np.isfinite(s)
            if not np.any(live):
                break
            sign = 1.0 - 2.0 * state
            row = np.searchsorted(ls, s[live], side="left")
            total += np.bincount(row * n_strata + ids[live], weights=sign[live],
                                 minlength=(n_l + 1) * n_strata)
            state = np.where(live, 1.0 - state, state)
    return np.cumsum(total.reshape(n_l + 1, n_strata), axis=0)[:n_l]


def radial_profile(D, L, thetas=None, n_l=64, method="auto", n_mc=2 * 10 ** 5,
                   seed=0):
    """Sample the covariogram profile on a graded ``l``-grid.

    Parameters
    ----------
    thetas : None, int or array
        ``None`` selects :func:`direction_rule` for the pair (a uniform rule
        with ``MC_PROFILE_DIRECTIONS`` angles under Monte Carlo), an int a uniform
        rule with that many directions, an array explicit unit vectors
        (equal weights).
    method : {"auto", "exact", "monte_carlo"}
    """
    if n_l < 16:
        raise ValueError("radial_profile needs n_l >= 16")
    h = diameter_bound(D, L)
    if method == "auto":
        method = "exact" if exact_pair_supported(D, L) else "monte_carlo"
    if isinstance(thetas, (int, np.integer)):
        rule = uniform_directions(D.dim, int(thetas))
    elif thetas is None and method == "monte_carlo":
        # kink-aligned directions buy nothing under sampling noise
        rule = uniform_directions(D.dim, MC_PROFILE_DIRECTIONS)
    elif thetas is None:
        rule = direction_rule([(D, L)])
    else:
        th = np.asarray(thetas, dtype=float).reshape(-1, D.dim)
        norms = np.linalg.norm(th, axis=1)
        if np.any(np.abs(norms - 1) > 1e-12):
            raise GeometryError("directions must be unit vectors")
        rule = DirectionRule(th, np.full(len(th), sphere_area(D.dim) / len(th)),
                             kind="explicit")
    ls = profile_grid(h, n_l)
    nt = len(rule.thetas)
    values = np.zeros((nt, ls.size))
    derivs = np.zeros((nt, ls.size))
    stderr = np.zeros((nt, ls.size))
    if method == "exact":
        for i, th in enumerate(rule.thetas):
            ray = _make_ray(D, L, th, h)
            values[i] = ray.g(ls)
            derivs[i] = ray.neg_dg(ls)
        values[:, -1] = 0.0
    elif method == "monte_carlo":
        lo, hi = D.bounds()
        vol = float(np.prod(hi - lo))
        x, ids, ns = _stratified_points(lo, hi, n_mc, seed)
        inside = D.contains(x)
        xin, idin = x[inside], ids[inside]
        step = min(float(np.min(np.diff(ls))), h * 1e-3)
        counts = np.bincount(ids, minlength=ns).astype(float)
        grid = np.concatenate([ls, ls + step, np.maximum(ls - step, 0.0)])
        order = np.unique(grid)
        pos = np.searchsorted(order, grid)
        n = ls.size
        for i, th in enumerate(rule.thetas):
            hits = _ray_hit_counts(L, xin, idin, -th, order, ns)
            p = hits / counts
            est = vol * np.mean(p, axis=1)
            var = np.sum(p * (1 - p) / counts, axis=1) / ns ** 2
            values[i] = est[pos[:n]]
            stderr[i] = vol * np.sqrt(var[pos[:n]])
            lp, lm = grid[n:2 * n], grid[2 * n:]
            derivs[i] = -(est[pos[n:2 * n]] - est[pos[2 * n:]]) / (lp - lm)
        values[:, -1] = 0.0
        stderr[:, -1] = 0.0
    else:
        raise ValueError(f"unknown method {method!r}")
    return CovariogramProfile(D, L, rule.thetas, rule.weights, ls, values, derivs,
                              method, stderr, h, rule)


# ----------------------------------------------------------------------------
# Fourier decay of indicators
# ----------------------------------------------------------------------------
def indicator_fourier_abs(D, lam):
    """``|F[1_D](lam)|`` in closed form for balls and boxes (d in {1, 2})."""
    lam = np.asarray(lam, dtype=float).reshape(-1, D.dim)
    if D.dim not in (1, 2):
        raise GeometryError("indicator Fourier transform needs d in {1, 2}")
    if D.kind == "ball":
        from .special import bessel_j1
        r = D.params["radius"]
        rho = np.linalg.norm(lam, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            if D.dim == 1:
                val = np.where(rho > 0, 2 * np.sin(r * rho) / rho, 2 * r)
            else:
                val = np.where(rho > 0, 2 * np.pi * r * bessel_j1(r * rho) / rho,
                               np.pi * r * r)
        return np.abs(val)
    if D.kind in ("box", "interval"):
        lo, hi = D.bounds()
        w = hi - lo
        with np.errstate(invalid="ignore", divide="ignore"):
            f = np.where(lam != 0, 2 * np.sin(0.5 * lam * w) / lam, w)
        return np.abs(np.prod(f, axis=1))
    raise GeometryError("indicator_fourier_decay supports balls and boxes only")


@dataclass
class FourierDecay:
    exponents: np.ndarray
    directions: np.ndarray
    threshold: float
    satisfied: np.ndarray

    @property
    def worst(self):
        return float(np.max(self.exponents))

    @property
    def all_satisfied(self):
        return bool(np.all(self.satisfied))


def indicator_fourier_decay(D, radii=None, directions=None, n_blocks=24, margin=0.1):
    """Fit the decay exponent of the sup-envelope of ``|F[1_D]|`` per direction.

    The radii are split into log-spaced blocks; the block maxima are regressed
    on the block centres in log-log scale.  A direction satisfies the decay
    condition when its exponent is ``<= -d/2 - margin``.
    """
    if D.kind not in ("ball", "box", "interval") or D.dim not in (1, 2):
        raise GeometryError("indicator_fourier_decay supports balls and boxes in d <= 2")
    if radii is None:
        radii = np.geomspace(10.0, 1e4, 200_000)
    radii = np.asarray(radii, dtype=float)
    if directions is None:
        directions = (np.array([[1.0]]) if D.dim == 1 else
                      _angles_to_thetas(np.array([0.0, np.pi / 8, np.pi / 4])))
    directions = np.asarray(directions, dtype=float).reshape(-1, D.dim)
    edges = np.geomspace(radii.min(), radii.max(), n_blocks + 1)
    block = np.clip(np.searchsorted(edges, radii, side="right") - 1, 0, n_blocks - 1)
    exps = []
    for th in directions:
        vals = indicator_fourier_abs(D, radii[:, None] * th[None, :])
        env = np.array([vals[block == b].max() for b in range(n_blocks)])
        centres = np.sqrt(edges[:-1] * edges[1:])
        slope = np.polyfit(np.log(centres), np.log(env), 1)[0]
        exps.append(slope)
    exps = np.array(exps)
    thr = -0.5 * D.dim - margin
    return FourierDecay(exps, directions, thr, exps <= thr)
