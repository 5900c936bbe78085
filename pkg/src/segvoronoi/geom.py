"""Curve primitives and tangent-circle solvers.

Bisector curves of segment sites are made of straight pieces and parabolic
arcs.  Both are parametrized so that the squared distance from a moving
curve point to any point or line is a polynomial of degree at most four in
the parameter; equidistance points then come out of polynomial root finding
followed by a short Newton polish against the exact distance functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .kernel import Point2, SegmentSite, SiteSet, Tolerance, distance

INF = float("inf")


@dataclass(frozen=True)
class Line:
    """Oriented line in normal form: n . x = c with |n| = 1."""

    nx: float
    ny: float
    c: float

    def signed(self, x: float, y: float) -> float:
        return self.nx * x + self.ny * y - self.c

    def signed_np(self, pts: np.ndarray) -> np.ndarray:
        return pts[:, 0] * self.nx + pts[:, 1] * self.ny - self.c

    def direction(self) -> Point2:
        return Point2(-self.ny, self.nx)

    @staticmethod
    def through(a: Point2, b: Point2) -> "Line":
        dx, dy = b.x - a.x, b.y - a.y
        L = math.hypot(dx, dy)
        nx, ny = -dy / L, dx / L
        return Line(nx, ny, nx * a.x + ny * a.y)

    @staticmethod
    def point_normal(p: Point2, n: Point2) -> "Line":
        L = n.norm()
        nx, ny = n.x / L, n.y / L
        return Line(nx, ny, nx * p.x + ny * p.y)


def line_intersection(l1: Line, l2: Line) -> Optional[Point2]:
    det = l1.nx * l2.ny - l1.ny * l2.nx
    if abs(det) < 1e-14:
        return None
    x = (l1.c * l2.ny - l2.c * l1.ny) / det
    y = (l1.nx * l2.c - l2.nx * l1.c) / det
    return Point2(x, y)


# ---------------------------------------------------------------------------
# Elementary features
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointFeature:
    """An endpoint feature; shared endpoints are deduplicated, so a single
    point feature may belong to several sites (a PSLG vertex)."""

    point: Point2
    owners: tuple[tuple[int, str], ...]  # (site id, "A"|"B")
    fid: int = -1

    @property
    def is_shared(self) -> bool:
        return len({sid for sid, _ in self.owners}) > 1

    def owner_ids(self) -> frozenset[int]:
        return frozenset(sid for sid, _ in self.owners)


@dataclass(frozen=True)
class InteriorFeature:
    """The open interior of a segment."""

    site_id: int
    a: Point2
    b: Point2
    line: Line
    fid: int = -1

    def owner_ids(self) -> frozenset[int]:
        return frozenset((self.site_id,))

    @property
    def length(self) -> float:
        return (self.b - self.a).norm()


Feature = Union[PointFeature, InteriorFeature]


def site_features(S: SiteSet) -> list[Feature]:
    """Elementary sites of the set, endpoints deduplicated by location."""
    tol = S.tol
    feats: list[Feature] = []
    point_index: dict[tuple, int] = {}
    fid = 0
    for s in S.sites:
        ends = [(s.a, "A")] if s.is_degenerate else [(s.a, "A"), (s.b, "B")]
        for p, which in ends:
            k = tol.key(p)
            hit = None
            for dk in _neighbor_keys(k):
                if dk in point_index:
                    cand = feats[point_index[dk]]
                    if tol.same_point(cand.point, p):
                        hit = point_index[dk]
                        break
            if hit is None:
                pf = PointFeature(p, ((s.id, which),), fid)
                point_index[k] = fid
                feats.append(pf)
                fid += 1
            else:
                old = feats[hit]
                feats[hit] = PointFeature(old.point, old.owners + ((s.id, which),), old.fid)
        if not s.is_degenerate:
            feats.append(InteriorFeature(s.id, s.a, s.b, Line.through(s.a, s.b), fid))
            fid += 1
    return feats


def _neighbor_keys(k):
    kx, ky = k
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            yield (kx + dx, ky + dy)


def feature_distance(x: float, y: float, f: Feature) -> float:
    """Euclidean distance to a feature, interiors taken as closed segments
    so handover points at their endpoints validate as tangencies too."""
    if isinstance(f, PointFeature):
        return math.hypot(x - f.point.x, y - f.point.y)
    ax, ay, bx, by = f.a.x, f.a.y, f.b.x, f.b.y
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    t = ((x - ax) * vx + (y - ay) * vy) / L2
    t = min(1.0, max(0.0, t))
    return math.hypot(x - (ax + t * vx), y - (ay + t * vy))


def feature_distance_np(pts: np.ndarray, f: Feature) -> np.ndarray:
    if isinstance(f, PointFeature):
        return np.hypot(pts[:, 0] - f.point.x, pts[:, 1] - f.point.y)
    ax, ay = f.a.x, f.a.y
    vx, vy = f.b.x - ax, f.b.y - ay
    L2 = vx * vx + vy * vy
    t = np.clip(((pts[:, 0] - ax) * vx + (pts[:, 1] - ay) * vy) / L2, 0.0, 1.0)
    return np.hypot(pts[:, 0] - (ax + t * vx), pts[:, 1] - (ay + t * vy))


def feature_gradient(x: float, y: float, f: Feature) -> tuple[float, float]:
    if isinstance(f, PointFeature):
        dx, dy = x - f.point.x, y - f.point.y
        n = math.hypot(dx, dy)
        if n == 0.0:
            return 0.0, 0.0
        return dx / n, dy / n
    s = f.line.signed(x, y)
    sg = 1.0 if s >= 0 else -1.0
    return f.line.nx * sg, f.line.ny * sg


# ---------------------------------------------------------------------------
# Curve pieces
# ---------------------------------------------------------------------------

@dataclass
class LinePiece:
    p0: Point2
    u: Point2  # unit direction
    t0: float = -INF
    t1: float = INF

    def eval(self, t: float) -> Point2:
        return Point2(self.p0.x + t * self.u.x, self.p0.y + t * self.u.y)

    def eval_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        return np.stack([self.p0.x + ts * self.u.x, self.p0.y + ts * self.u.y], axis=-1)

    def tangent(self, t: float) -> Point2:
        return self.u

    def param_of(self, p: Point2) -> float:
        return (p.x - self.p0.x) * self.u.x + (p.y - self.p0.y) * self.u.y

    def subpiece(self, a: float, b: float) -> "LinePiece":
        return LinePiece(self.p0, self.u, a, b)

    def reversed(self) -> "LinePiece":
        lo = -self.t1 if self.t1 != INF else -INF
        hi = -self.t0 if self.t0 != -INF else INF
        return LinePiece(self.p0, Point2(-self.u.x, -self.u.y), lo, hi)

    def kind(self) -> str:
        return "line"


@dataclass
class ArcPiece:
    """Parabolic arc: focus + directrix, param along the directrix direction.

    point(t) = V + t*d + (t^2 / 4f)*axis, where V is the vertex, f the focal
    length, axis the unit vector from directrix toward focus, d = rot90(axis).
    """

    focus: Point2
    directrix: Line
    vertex: Point2 = field(init=False)
    axis: Point2 = field(init=False)
    d: Point2 = field(init=False)
    f: float = field(init=False)
    t0: float = -INF
    t1: float = INF

    def __post_init__(self):
        s = self.directrix.signed(self.focus.x, self.focus.y)
        if s == 0.0:
            raise ValueError("focus on directrix: degenerate parabola")
        sg = 1.0 if s > 0 else -1.0
        self.axis = Point2(self.directrix.nx * sg, self.directrix.ny * sg)
        self.f = abs(s) / 2.0
        foot = Point2(self.focus.x - s * self.directrix.nx,
                      self.focus.y - s * self.directrix.ny)
        self.vertex = Point2((self.focus.x + foot.x) / 2.0, (self.focus.y + foot.y) / 2.0)
        self.d = Point2(-self.axis.y, self.axis.x)

    def eval(self, t: float) -> Point2:
        q = t * t / (4.0 * self.f)
        return Point2(self.vertex.x + t * self.d.x + q * self.axis.x,
                      self.vertex.y + t * self.d.y + q * self.axis.y)

    def eval_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        q = ts * ts / (4.0 * self.f)
        return np.stack([self.vertex.x + ts * self.d.x + q * self.axis.x,
                         self.vertex.y + ts * self.d.y + q * self.axis.y], axis=-1)

    def tangent(self, t: float) -> Point2:
        tx = self.d.x + (t / (2.0 * self.f)) * self.axis.x
        ty = self.d.y + (t / (2.0 * self.f)) * self.axis.y
        n = math.hypot(tx, ty)
        return Point2(tx / n, ty / n)

    def param_of(self, p: Point2) -> float:
        return (p.x - self.vertex.x) * self.d.x + (p.y - self.vertex.y) * self.d.y

    def radius(self, t: float) -> float:
        return self.f + t * t / (4.0 * self.f)

    def subpiece(self, a: float, b: float) -> "ArcPiece":
        c = ArcPiece(self.focus, self.directrix)
        c.t0, c.t1 = a, b
        return c

    def reversed(self) -> "ArcPiece":
        # parabola param flips by mirroring d; realized by a fresh piece
        c = ArcPiece(self.focus, self.directrix)
        c.d = Point2(-self.d.x, -self.d.y)
        c.t0 = -self.t1 if self.t1 != INF else -INF
        c.t1 = -self.t0 if self.t0 != -INF else INF
        return c

    def kind(self) -> str:
        return "arc"


Piece = Union[LinePiece, ArcPiece]


def piece_coeffs(piece: Piece) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic coordinate polynomials (x(t), y(t)), highest degree first."""
    if isinstance(piece, LinePiece):
        return (np.array([0.0, piece.u.x, piece.p0.x]),
                np.array([0.0, piece.u.y, piece.p0.y]))
    e = 1.0 / (4.0 * piece.f)
    return (np.array([e * piece.axis.x, piece.d.x, piece.vertex.x]),
            np.array([e * piece.axis.y, piece.d.y, piece.vertex.y]))


def dist2_poly_to_point(piece: Piece, px: float, py: float) -> np.ndarray:
    cx, cy = piece_coeffs(piece)
    cx = cx.copy()
    cy = cy.copy()
    cx[-1] -= px
    cy[-1] -= py
    return np.polyadd(np.polymul(cx, cx), np.polymul(cy, cy))


def signed2_poly_to_line(piece: Piece, line: Line) -> np.ndarray:
    cx, cy = piece_coeffs(piece)
    s = np.polyadd(cx * line.nx, cy * line.ny)
    s[-1] -= line.c
    return np.polymul(s, s)


def radius2_poly(piece: Piece, anchor: Feature) -> np.ndarray:
    """Squared circle radius along the curve, measured to its anchor feature."""
    if isinstance(anchor, PointFeature):
        return dist2_poly_to_point(piece, anchor.point.x, anchor.point.y)
    return signed2_poly_to_line(piece, anchor.line)


def real_roots(coeffs: np.ndarray, scale: float) -> np.ndarray:
    """Real roots of a low-degree polynomial, tolerant of tiny leading terms."""
    c = np.asarray(coeffs, dtype=float)
    lead = np.max(np.abs(c)) if c.size else 0.0
    if lead == 0.0:
        return np.empty(0)
    c = c / lead
    nz = np.nonzero(np.abs(c) > 1e-13)[0]
    if nz.size == 0:
        return np.empty(0)
    c = c[nz[0]:]
    if c.size <= 1:
        return np.empty(0)
    if c.size == 2:
        return np.array([-c[1] / c[0]])
    r = np.roots(c)
    keep = np.abs(r.imag) <= 1e-7 * (1.0 + np.abs(r.real))
    out = r[keep].real
    return out[np.abs(out) <= 1e18 * scale]


# ---------------------------------------------------------------------------
# Tangent circles (equidistance points of three features)
# ---------------------------------------------------------------------------

def equidistance_params(piece: Piece, anchor: Feature, third: Feature,
                        scale: float) -> np.ndarray:
    """Curve parameters where the third feature reaches the circle radius.

    Solves d(x(t), third)^2 = r(t)^2 on the supporting line/parabola; the
    caller validates candidates against the true clamped feature distances.
    """
    r2 = radius2_poly(piece, anchor)
    if isinstance(third, PointFeature):
        d2 = dist2_poly_to_point(piece, third.point.x, third.point.y)
    else:
        d2 = signed2_poly_to_line(piece, third.line)
    n = max(len(r2), len(d2))
    diff = np.polysub(np.pad(d2, (n - len(d2), 0)), np.pad(r2, (n - len(r2), 0)))
    return real_roots(diff, scale)


def polish_equidistance(x: float, y: float, f1: Feature, f2: Feature,
                        f3: Feature, iters: int = 25) -> tuple[float, float]:
    """Newton-polish a point toward d(f1)=d(f2)=d(f3) using exact distances.

    Runs to convergence so a vertex reached from different curve pairs lands
    on bit-identical coordinates (up to the last ulp), which vertex
    deduplication relies on.
    """
    scale = abs(x) + abs(y) + 1.0
    for _ in range(iters):
        d1 = feature_distance(x, y, f1)
        d2 = feature_distance(x, y, f2)
        d3 = feature_distance(x, y, f3)
        g1 = feature_gradient(x, y, f1)
        g2 = feature_gradient(x, y, f2)
        g3 = feature_gradient(x, y, f3)
        a11, a12 = g1[0] - g3[0], g1[1] - g3[1]
        a21, a22 = g2[0] - g3[0], g2[1] - g3[1]
        det = a11 * a22 - a12 * a21
        if abs(det) < 1e-12:
            break
        b1, b2 = d1 - d3, d2 - d3
        dx = (b1 * a22 - b2 * a12) / det
        dy = (a11 * b2 - a21 * b1) / det
        x, y = x - dx, y - dy
        if abs(dx) + abs(dy) <= 1e-16 * scale:
            break
    return x, y


def _feature_combos(site: SegmentSite) -> list[Feature]:
    out: list[Feature] = [PointFeature(site.a, ((site.id, "A"),))]
    if not site.is_degenerate:
        out.append(PointFeature(site.b, ((site.id, "B"),)))
        out.append(InteriorFeature(site.id, site.a, site.b, Line.through(site.a, site.b)))
    return out


def tangent_circles_features(f1: Feature, f2: Feature, f3: Feature,
                             vtol: float = 1e-9) -> list[tuple[float, float, float]]:
    """Circle centers equidistant from three features (validated, deduped)."""
    pts = [f for f in (f1, f2, f3) if isinstance(f, PointFeature)]
    lns = [f for f in (f1, f2, f3) if isinstance(f, InteriorFeature)]
    cands: list[tuple[float, float]] = []
    if len(lns) == 0:
        c = _circumcenter(pts[0].point, pts[1].point, pts[2].point)
        if c is not None:
            cands.append(c)
    elif len(lns) == 1:
        cands += _solve_ppl(pts[0].point, pts[1].point, lns[0].line)
    elif len(lns) == 2:
        cands += _solve_pll(pts[0].point, lns[0].line, lns[1].line)
    else:
        cands += _solve_lll(lns[0].line, lns[1].line, lns[2].line)

    scale = max(feature_span(f1), feature_span(f2), feature_span(f3), 1e-12)
    out: list[tuple[float, float, float]] = []
    for (x, y) in cands:
        x, y = polish_equidistance(x, y, f1, f2, f3)
        ds = [feature_distance(x, y, f) for f in (f1, f2, f3)]
        r = sum(ds) / 3.0
        if all(abs(d - r) <= vtol * (scale + r) + 1e-12 for d in ds):
            if not any(abs(x - ox) <= 1e-9 * (scale + r) and abs(y - oy) <= 1e-9 * (scale + r)
                       for ox, oy, _ in out):
                out.append((x, y, r))
    return out


def tangent_circles_sites(s1: SegmentSite, s2: SegmentSite, s3: SegmentSite,
                          vtol: float = 1e-9) -> list[tuple[float, float, float]]:
    """Circle centers equidistant from three whole segments."""
    out: list[tuple[float, float, float]] = []
    scale = max(s.length for s in (s1, s2, s3)) + max(
        (s1.a - s2.a).norm(), (s1.a - s3.a).norm(), 1e-12)
    for f1 in _feature_combos(s1):
        for f2 in _feature_combos(s2):
            for f3 in _feature_combos(s3):
                for (x, y, r) in tangent_circles_features(f1, f2, f3, vtol):
                    p = Point2(x, y)
                    ds = [distance(p, s) for s in (s1, s2, s3)]
                    if all(abs(d - r) <= vtol * (scale + r) + 1e-12 for d in ds):
                        if not any(abs(x - ox) <= 1e-8 * (scale + r)
                                   and abs(y - oy) <= 1e-8 * (scale + r)
                                   for ox, oy, _ in out):
                            out.append((x, y, r))
    return out


def feature_span(f: Feature) -> float:
    if isinstance(f, PointFeature):
        return abs(f.point.x) + abs(f.point.y)
    return f.length + abs(f.a.x) + abs(f.a.y)


def _circumcenter(a: Point2, b: Point2, c: Point2) -> Optional[tuple[float, float]]:
    d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y))
    if abs(d) < 1e-300:
        return None
    a2, b2, c2 = a.x * a.x + a.y * a.y, b.x * b.x + b.y * b.y, c.x * c.x + c.y * c.y
    ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d
    uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d
    return (ux, uy)


def _solve_ppl(p: Point2, q: Point2, line: Line) -> list[tuple[float, float]]:
    # centers on the perpendicular bisector of p,q with |x-p| = |signed(x)|
    m = Point2((p.x + q.x) / 2.0, (p.y + q.y) / 2.0)
    dpq = q - p
    L = dpq.norm()
    if L < 1e-300:
        return []
    u = Point2(-dpq.y / L, dpq.x / L)
    s0 = line.signed(m.x, m.y)
    s1 = line.nx * u.x + line.ny * u.y
    h2 = (L / 2.0) ** 2
    # t^2 (1 - s1^2) - 2 s0 s1 t + (h2 - s0^2) = 0
    roots = real_roots(np.array([1.0 - s1 * s1, -2.0 * s0 * s1, h2 - s0 * s0]), L + abs(s0))
    return [(m.x + t * u.x, m.y + t * u.y) for t in roots]


def _angle_bisectors(l1: Line, l2: Line) -> list[Line]:
    out = []
    for sg in (1.0, -1.0):
        nx, ny = l1.nx - sg * l2.nx, l1.ny - sg * l2.ny
        c = l1.c - sg * l2.c
        L = math.hypot(nx, ny)
        if L > 1e-12:
            out.append(Line(nx / L, ny / L, c / L))
    return out


def _solve_pll(p: Point2, l1: Line, l2: Line) -> list[tuple[float, float]]:
    out = []
    for bis in _angle_bisectors(l1, l2):
        a = _line_any_point(bis)
        u = bis.direction()
        s0 = l1.signed(a.x, a.y)
        s1 = l1.nx * u.x + l1.ny * u.y
        wx, wy = a.x - p.x, a.y - p.y
        # |a + t u - p|^2 = (s0 + t s1)^2
        A = 1.0 - s1 * s1
        B = 2.0 * (wx * u.x + wy * u.y) - 2.0 * s0 * s1
        C = wx * wx + wy * wy - s0 * s0
        for t in real_roots(np.array([A, B, C]), abs(s0) + math.hypot(wx, wy) + 1.0):
            out.append((a.x + t * u.x, a.y + t * u.y))
    return out


def _solve_lll(l1: Line, l2: Line, l3: Line) -> list[tuple[float, float]]:
    out = []
    for b1 in _angle_bisectors(l1, l2):
        for b2 in _angle_bisectors(l1, l3):
            p = line_intersection(b1, b2)
            if p is not None:
                out.append((p.x, p.y))
    return out


def _line_any_point(line: Line) -> Point2:
    return Point2(line.nx * line.c, line.ny * line.c)


# ---------------------------------------------------------------------------
# Point-to-piece distance (used by point location)
# ---------------------------------------------------------------------------

def nearest_on_piece(piece: Piece, pts: np.ndarray,
                     clip: float = 1e18) -> tuple[np.ndarray, np.ndarray]:
    """For each query point: (distance, parameter of nearest curve point).

    Arcs are minimized by sampling plus a ternary refinement; accuracy is
    ample for side-of-nearest-edge point location.
    """
    pts = np.asarray(pts, dtype=float)
    t0 = max(piece.t0, -clip)
    t1 = min(piece.t1, clip)
    if isinstance(piece, LinePiece):
        t = (pts[:, 0] - piece.p0.x) * piece.u.x + (pts[:, 1] - piece.p0.y) * piece.u.y
        t = np.clip(t, t0, t1)
        q = piece.eval_many(t)
        return np.hypot(pts[:, 0] - q[:, 0], pts[:, 1] - q[:, 1]), t
    grid = np.linspace(t0, t1, 33)
    d2 = np.empty((len(pts), len(grid)))
    for i, t in enumerate(grid):
        q = piece.eval(t)
        d2[:, i] = (pts[:, 0] - q.x) ** 2 + (pts[:, 1] - q.y) ** 2
    idx = np.argmin(d2, axis=1)
    lo = grid[np.maximum(idx - 1, 0)]
    hi = grid[np.minimum(idx + 1, len(grid) - 1)]
    for _ in range(40):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        q1 = piece.eval_many(m1)
        q2 = piece.eval_many(m2)
        f1 = (pts[:, 0] - q1[:, 0]) ** 2 + (pts[:, 1] - q1[:, 1]) ** 2
        f2 = (pts[:, 0] - q2[:, 0]) ** 2 + (pts[:, 1] - q2[:, 1]) ** 2
        takes = f1 < f2
        hi = np.where(takes, m2, hi)
        lo = np.where(takes, lo, m1)
    t = 0.5 * (lo + hi)
    q = piece.eval_many(t)
    return np.hypot(pts[:, 0] - q[:, 0], pts[:, 1] - q[:, 1]), t
