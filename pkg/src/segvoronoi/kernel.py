"""Planar geometry kernel: sites, metrics, distances and validity checks.

Coordinates are 64-bit floats.  All comparisons go through a ``Tolerance``
built from the instance diameter (default ``1e-9 * diameter``), so predicates
snap to zero instead of flapping on rounding noise.  Everything here is a
pure function of immutable values and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

import numpy as np

__all__ = [
    "Point2",
    "Metric",
    "EUCLIDEAN",
    "L1",
    "LINF",
    "SegmentSite",
    "ElementarySite",
    "SiteSet",
    "Tolerance",
    "PairClass",
    "distance",
    "nearest_point",
    "distance_matrix",
    "classify_pair",
    "count_intersections",
    "check_general_position",
    "GeneralPositionReport",
]


class Point2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Point2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Point2(self.x - other[0], self.y - other[1])

    def scaled(self, f: float) -> "Point2":
        return Point2(self.x * f, self.y * f)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


@dataclass(frozen=True)
class Metric:
    """Distance metric tag.  ``lp`` carries its exponent (finite, > 1)."""

    kind: str  # "euclidean" | "l1" | "linf" | "lp"
    p: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("euclidean", "l1", "linf", "lp"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind == "lp":
            if self.p is None or not (self.p > 1.0) or not math.isfinite(self.p):
                raise ValueError("lp metric needs a finite exponent > 1")

    @property
    def is_polygonal(self) -> bool:
        return self.kind in ("l1", "linf")

    def point_dist(self, ax, ay, bx, by):
        dx, dy = abs(ax - bx), abs(ay - by)
        if self.kind == "euclidean":
            return math.hypot(dx, dy)
        if self.kind == "linf":
            return max(dx, dy)
        if self.kind == "l1":
            return dx + dy
        return (dx ** self.p + dy ** self.p) ** (1.0 / self.p)

    @staticmethod
    def from_name(name: str) -> "Metric":
        name = name.lower()
        if name in ("euclidean", "l2", "euclid"):
            return EUCLIDEAN
        if name == "l1":
            return L1
        if name in ("linf", "l_inf", "chebyshev"):
            return LINF
        if name.startswith("lp:"):
            return Metric("lp", float(name[3:]))
        raise ValueError(f"unknown metric {name!r}")

    def name(self) -> str:
        return self.kind if self.kind != "lp" else f"lp:{self.p}"


EUCLIDEAN = Metric("euclidean")
L1 = Metric("l1")
LINF = Metric("linf")


@dataclass(frozen=True)
class SegmentSite:
    """A closed line segment with a dense integer identity.

    ``a == b`` marks a degenerate point-site; those appear only in generated
    instance families and carry a single elementary site.
    """

    id: int
    a: Point2
    b: Point2

    def __post_init__(self):
        if not (self.a.is_finite() and self.b.is_finite()):
            raise ValueError("segment endpoints must be finite")

    @property
    def is_degenerate(self) -> bool:
        return self.a == self.b

    @property
    def length(self) -> float:
        return (self.b - self.a).norm()

    def direction(self) -> Point2:
        d = self.b - self.a
        n = d.norm()
        return Point2(d.x / n, d.y / n)

    def point_at(self, t: float) -> Point2:
        return Point2(self.a.x + t * (self.b.x - self.a.x),
                      self.a.y + t * (self.b.y - self.a.y))

    def elementary_sites(self) -> list["ElementarySite"]:
        if self.is_degenerate:
            return [ElementarySite(self.id, "endpoint-A")]
        return [ElementarySite(self.id, "endpoint-A"),
                ElementarySite(self.id, "endpoint-B"),
                ElementarySite(self.id, "open-interior")]


@dataclass(frozen=True)
class ElementarySite:
    """One of the three parts of a segment: its endpoints or open interior."""

    owner: int
    kind: str  # "endpoint-A" | "endpoint-B" | "open-interior"

    def __post_init__(self):
        if self.kind not in ("endpoint-A", "endpoint-B", "open-interior"):
            raise ValueError(f"bad elementary kind {self.kind!r}")


class Tolerance:
    """Snapping context: an absolute epsilon derived from the instance scale."""

    def __init__(self, diameter: float, rel: float = 1e-9):
        self.diameter = max(diameter, 1e-300)
        self.rel = rel
        self.eps = rel * self.diameter
        # looser tolerance used when excluding sample points near edges
        self.tube = 1e-6 * self.diameter

    def snap0(self, v: float) -> float:
        return 0.0 if abs(v) <= self.eps else v

    def sign(self, v: float) -> int:
        if abs(v) <= self.eps:
            return 0
        return 1 if v > 0 else -1

    def eq(self, a: float, b: float) -> bool:
        return abs(a - b) <= self.eps

    def same_point(self, p: Point2, q: Point2) -> bool:
        return abs(p.x - q.x) <= self.eps and abs(p.y - q.y) <= self.eps

    def key(self, p) -> tuple:
        """Grid key for deduplication; callers must probe neighbour cells."""
        g = self.eps * 8.0
        return (round(p[0] / g), round(p[1] / g))

    @staticmethod
    def for_sites(sites: Iterable[SegmentSite], rel: float = 1e-9) -> "Tolerance":
        xs, ys = [], []
        for s in sites:
            xs += [s.a.x, s.b.x]
            ys += [s.a.y, s.b.y]
        if not xs:
            return Tolerance(1.0, rel)
        diam = math.hypot(max(xs) - min(xs), max(ys) - min(ys))
        return Tolerance(diam if diam > 0 else 1.0, rel)


@dataclass
class SiteSet:
    """An ordered collection of segment sites plus its sharing mode.

    Modes: ``disjoint`` (no two segments share any point), ``pslg``
    (shared endpoints allowed, no proper crossings), ``crossing`` (proper
    crossings allowed, at most two segments per crossing point, no shared
    endpoints).
    """

    sites: list[SegmentSite]
    mode: str = "disjoint"
    tol: Tolerance = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.mode not in ("disjoint", "pslg", "crossing"):
            raise ValueError(f"bad sharing mode {self.mode!r}")
        ids = [s.id for s in self.sites]
        if len(set(ids)) != len(ids):
            raise ValueError("site ids must be unique")
        if self.tol is None:
            self.tol = Tolerance.for_sites(self.sites)

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def by_id(self, sid: int) -> SegmentSite:
        for s in self.sites:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def points_array(self) -> np.ndarray:
        """(n, 4) array of endpoint coordinates, row order = site order."""
        return np.array([[s.a.x, s.a.y, s.b.x, s.b.y] for s in self.sites])

    @staticmethod
    def from_coords(coords, mode="disjoint") -> "SiteSet":
        sites = [SegmentSite(i, Point2(float(x1), float(y1)), Point2(float(x2), float(y2)))
                 for i, (x1, y1, x2, y2) in enumerate(coords)]
        return SiteSet(sites, mode)


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------

def _euclid_nearest_t(px, py, s: SegmentSite) -> float:
    vx, vy = s.b.x - s.a.x, s.b.y - s.a.y
    L2 = vx * vx + vy * vy
    if L2 == 0.0:
        return 0.0
    t = ((px - s.a.x) * vx + (py - s.a.y) * vy) / L2
    return min(1.0, max(0.0, t))


def _poly_candidate_ts(px, py, s: SegmentSite, metric: Metric) -> list[float]:
    # candidate parameters where the piecewise-linear profile d(t) can kink
    dx, dy = px - s.a.x, py - s.a.y
    vx, vy = s.b.x - s.a.x, s.b.y - s.a.y
    cands = [0.0, 1.0]
    if metric.kind == "linf":
        for den in (vx - vy, vx + vy):
            if abs(den) > 1e-300:
                cands.append((dx - dy) / den if den == vx - vy else (dx + dy) / den)
    else:  # l1: kinks where one coordinate difference vanishes
        if abs(vx) > 1e-300:
            cands.append(dx / vx)
        if abs(vy) > 1e-300:
            cands.append(dy / vy)
    return [min(1.0, max(0.0, t)) for t in cands]


def _dist_at(px, py, s: SegmentSite, t: float, metric: Metric) -> float:
    qx = s.a.x + t * (s.b.x - s.a.x)
    qy = s.a.y + t * (s.b.y - s.a.y)
    return metric.point_dist(px, py, qx, qy)


def distance(x: Point2, s: SegmentSite, metric: Metric = EUCLIDEAN) -> float:
    """Minimum metric distance from ``x`` to any point of segment ``s``."""
    px, py = x
    if s.is_degenerate:
        return metric.point_dist(px, py, s.a.x, s.a.y)
    if metric.kind == "euclidean":
        return _dist_at(px, py, s, _euclid_nearest_t(px, py, s), metric)
    if metric.is_polygonal:
        return min(_dist_at(px, py, s, t, metric) for t in _poly_candidate_ts(px, py, s, metric))
    # general Lp: the profile is strictly convex in t; golden-section search
    from scipy.optimize import minimize_scalar
    r = minimize_scalar(lambda t: _dist_at(px, py, s, t, metric),
                        bounds=(0.0, 1.0), method="bounded",
                        options={"xatol": 1e-13})
    return min(r.fun, _dist_at(px, py, s, 0.0, metric), _dist_at(px, py, s, 1.0, metric))


def nearest_point(x: Point2, s: SegmentSite, metric: Metric = EUCLIDEAN) -> Point2:
    """A point of ``s`` realizing ``distance(x, s, metric)``.

    Unique under the Euclidean metric.  Under L1/Linf the minimizing set can
    be a sub-segment; the midpoint of that sub-segment is returned so the
    result stays deterministic and symmetric.
    """
    px, py = x
    if s.is_degenerate:
        return s.a
    if metric.kind == "euclidean":
        return s.point_at(_euclid_nearest_t(px, py, s))
    if metric.is_polygonal:
        cands = sorted(set(_poly_candidate_ts(px, py, s, metric)))
        vals = [_dist_at(px, py, s, t, metric) for t in cands]
        best = min(vals)
        span = max(abs(v) for v in vals) + 1.0
        flat = [t for t, v in zip(cands, vals) if v <= best + 1e-12 * span]
        return s.point_at(0.5 * (min(flat) + max(flat)))
    from scipy.optimize import minimize_scalar
    r = minimize_scalar(lambda t: _dist_at(px, py, s, t, metric),
                        bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-13})
    t = float(r.x)
    for te in (0.0, 1.0):
        if _dist_at(px, py, s, te, metric) < r.fun:
            t = te
    return s.point_at(t)


def distance_matrix(points: np.ndarray, sites: Iterable[SegmentSite],
                    metric: Metric = EUCLIDEAN) -> np.ndarray:
    """Distances from an (M, 2) array of points to every site, as (M, n).

    Vectorized over points; this is the hot path behind all oracles.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    cols = []
    for s in sites:
        ax, ay, bx, by = s.a.x, s.a.y, s.b.x, s.b.y
        dx = pts[:, 0] - ax
        dy = pts[:, 1] - ay
        vx, vy = bx - ax, by - ay
        if s.is_degenerate:
            cols.append(_point_metric_np(dx, dy, metric))
            continue
        if metric.kind == "euclidean":
            L2 = vx * vx + vy * vy
            t = np.clip((dx * vx + dy * vy) / L2, 0.0, 1.0)
            cols.append(np.hypot(dx - t * vx, dy - t * vy))
        elif metric.is_polygonal:
            ts = [np.zeros(len(pts)), np.ones(len(pts))]
            if metric.kind == "linf":
                for den, num in ((vx - vy, dx - dy), (vx + vy, dx + dy)):
                    if abs(den) > 1e-300:
                        ts.append(np.clip(num / den, 0.0, 1.0))
            else:
                if abs(vx) > 1e-300:
                    ts.append(np.clip(dx / vx, 0.0, 1.0))
                if abs(vy) > 1e-300:
                    ts.append(np.clip(dy / vy, 0.0, 1.0))
            vals = [_point_metric_np(dx - t * vx, dy - t * vy, metric) for t in ts]
            cols.append(np.minimum.reduce(vals))
        else:
            cols.append(np.array([distance(Point2(px, py), s, metric) for px, py in pts]))
    return np.stack(cols, axis=1)


def _point_metric_np(dx, dy, metric: Metric):
    if metric.kind == "euclidean":
        return np.hypot(dx, dy)
    if metric.kind == "linf":
        return np.maximum(np.abs(dx), np.abs(dy))
    if metric.kind == "l1":
        return np.abs(dx) + np.abs(dy)
    return (np.abs(dx) ** metric.p + np.abs(dy) ** metric.p) ** (1.0 / metric.p)


# ---------------------------------------------------------------------------
# Pair classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairClass:
    kind: str  # "disjoint" | "shared-endpoint" | "proper-crossing" | "overlap"
    point: Optional[Point2] = None


def _orient(a: Point2, b: Point2, c: Point2) -> float:
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def classify_pair(s1: SegmentSite, s2: SegmentSite,
                  tol: Optional[Tolerance] = None) -> PairClass:
    """Exact relation of two segments: disjoint, shared endpoint, proper
    crossing (with its point), or collinear overlap.

    Overlap is outside every supported input model and is rejected upstream.
    """
    if s1.id == s2.id:
        raise ValueError("classify_pair needs two distinct sites")
    if tol is None:
        tol = Tolerance.for_sites([s1, s2])

    shared = None
    for p in (s1.a, s1.b):
        for q in (s2.a, s2.b):
            if tol.same_point(p, q):
                if shared is not None and not tol.same_point(shared, p):
                    return PairClass("overlap")
                shared = p
    if shared is not None:
        # a shared endpoint plus any further contact would be an overlap
        d1 = _orient(s2.a, s2.b, s1.a), _orient(s2.a, s2.b, s1.b)
        d2 = _orient(s1.a, s1.b, s2.a), _orient(s1.a, s1.b, s2.b)
        scale = tol.eps * max(s1.length, s2.length, tol.eps)
        if all(abs(v) <= scale * 4 for v in d1 + d2):
            return PairClass("overlap")
        return PairClass("shared-endpoint", shared)

    o1 = _orient(s1.a, s1.b, s2.a)
    o2 = _orient(s1.a, s1.b, s2.b)
    o3 = _orient(s2.a, s2.b, s1.a)
    o4 = _orient(s2.a, s2.b, s1.b)
    area_eps = tol.eps * max(s1.length, s2.length, tol.eps)
    z1, z2, z3, z4 = (abs(v) <= area_eps for v in (o1, o2, o3, o4))
    if (z1 and z2) or (z3 and z4):
        # collinear supporting lines: overlap iff the extents intersect
        if distance(s2.a, s1) <= tol.eps or distance(s2.b, s1) <= tol.eps \
           or distance(s1.a, s2) <= tol.eps or distance(s1.b, s2) <= tol.eps:
            return PairClass("overlap")
        return PairClass("disjoint")
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and not (z1 or z2 or z3 or z4):
        denom = o1 - o2
        t = o1 / denom
        q = Point2(s2.a.x + t * (s2.b.x - s2.a.x), s2.a.y + t * (s2.b.y - s2.a.y))
        return PairClass("proper-crossing", q)
    # endpoint lying in the interior of the other segment (T contact)
    for p, other in ((s1.a, s2), (s1.b, s2), (s2.a, s1), (s2.b, s1)):
        if distance(p, other) <= tol.eps:
            return PairClass("overlap")
    return PairClass("disjoint")


def count_intersections(S: SiteSet) -> int:
    """Number of properly crossing pairs.  Rejects overlaps, and rejects
    shared endpoints when the set claims crossing mode."""
    if S.mode == "pslg":
        raise ValueError("count_intersections applies to disjoint/crossing sets")
    count = 0
    for i, s1 in enumerate(S.sites):
        for s2 in S.sites[i + 1:]:
            c = classify_pair(s1, s2, S.tol)
            if c.kind == "overlap":
                raise ValueError(f"sites {s1.id},{s2.id} overlap")
            if c.kind == "shared-endpoint" and S.mode == "crossing":
                raise ValueError(f"sites {s1.id},{s2.id} share an endpoint in crossing mode")
            if c.kind == "proper-crossing":
                count += 1
    return count


# ---------------------------------------------------------------------------
# General position
# ---------------------------------------------------------------------------

@dataclass
class GeneralPositionReport:
    mode: str
    violations: list[dict]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_general_position(S: SiteSet, mode: str = "strict",
                           margin: Optional[float] = None) -> GeneralPositionReport:
    """Report degeneracy witnesses.

    ``strict`` checks whole sites: no four sites cotangent to a circle and no
    three endpoints collinear (coincident endpoints count as collinear).
    ``weak`` checks the same over elementary sites with shared endpoints
    deduplicated, which is the right notion for planar straight-line graphs.
    """
    from . import geom  # deferred: geom imports kernel

    if mode not in ("strict", "weak"):
        raise ValueError("mode must be 'strict' or 'weak'")
    tol = S.tol
    eps = tol.eps if margin is None else margin * tol.diameter
    out: list[dict] = []

    endpoints: list[tuple[Point2, int]] = []
    for s in S.sites:
        endpoints.append((s.a, s.id))
        if not s.is_degenerate:
            endpoints.append((s.b, s.id))

    if mode == "strict":
        pts = endpoints
    else:
        seen: dict[tuple, tuple[Point2, int]] = {}
        for p, sid in endpoints:
            k = tol.key(p)
            if k not in seen:
                seen[k] = (p, sid)
        pts = list(seen.values())

    n_pts = len(pts)
    for i in range(n_pts):
        for j in range(i + 1, n_pts):
            if mode == "strict" and tol.same_point(pts[i][0], pts[j][0]):
                out.append({"kind": "coincident-endpoints",
                            "sites": sorted({pts[i][1], pts[j][1]}),
                            "point": tuple(pts[i][0])})
                continue
            for l in range(j + 1, n_pts):
                a, b, c = pts[i][0], pts[j][0], pts[l][0]
                ab = (b - a).norm()
                if ab <= eps:
                    continue
                h = abs(_orient(a, b, c)) / ab
                if h <= eps:
                    out.append({"kind": "collinear-endpoints",
                                "sites": sorted({pts[i][1], pts[j][1], pts[l][1]}),
                                "points": [tuple(a), tuple(b), tuple(c)]})

    # cotangency: tritangent circles of triples, then a fourth at equal reach
    feats = geom.site_features(S) if mode == "weak" else None
    units = feats if mode == "weak" else S.sites
    n = len(units)
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(j + 1, n):
                trio = (units[i], units[j], units[l])
                if mode == "weak":
                    centers = geom.tangent_circles_features(*trio)
                else:
                    centers = geom.tangent_circles_sites(*trio)
                for (cx, cy, r) in centers:
                    for m in range(n):
                        if m in (i, j, l):
                            continue
                        if mode == "weak":
                            d = geom.feature_distance(cx, cy, units[m])
                        else:
                            d = distance(Point2(cx, cy), units[m])
                        if abs(d - r) <= eps:
                            out.append({"kind": "cotangent",
                                        "units": [i, j, l, m],
                                        "center": (cx, cy), "radius": r})
    return GeneralPositionReport(mode, out)
