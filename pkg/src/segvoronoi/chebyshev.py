"""Piecewise-linear bisector machinery for the Linf metric (and L1 by a
45-degree change of coordinates: |x|+|y| = max(|x+y|, |x-y|), so an L1
instance is an Linf instance of the conjugated sites).

The Linf distance field of a segment is piecewise linear; its gradient
breaks only across five lines (the two diagonals through each endpoint and
the supporting line).  Overlaying the breaklines of a pair of sites cuts
the plane into convex cells on which the distance difference is affine, so
the bisector is assembled exactly from per-cell zero lines.  Along any such
piece the distance to a third site is again piecewise linear with breaks
at known line crossings, which makes equidistance points exact 1-D solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geom import Line, LinePiece, line_intersection
from .kernel import LINF, Point2, SegmentSite, SiteSet, Tolerance, distance

INF = float("inf")


class DegenerateBisector(Exception):
    """A two-dimensional piece of an Linf/L1 bisector was encountered."""


def conj_point(p: Point2) -> Point2:
    return Point2(p.x + p.y, p.x - p.y)


def unconj_point(p: Point2) -> Point2:
    return Point2((p.x + p.y) / 2.0, (p.x - p.y) / 2.0)


def conj_sites(S: SiteSet) -> SiteSet:
    sites = [SegmentSite(s.id, conj_point(s.a), conj_point(s.b)) for s in S.sites]
    return SiteSet(sites, S.mode)


def segment_breaklines(s: SegmentSite) -> list[Line]:
    out = []
    for p in ((s.a,) if s.is_degenerate else (s.a, s.b)):
        for d in (Point2(1.0, 1.0), Point2(1.0, -1.0)):
            out.append(Line.point_normal(p, Point2(-d.y, d.x)))
    if not s.is_degenerate:
        out.append(Line.through(s.a, s.b))
        v = s.b - s.a
        if abs(abs(v.x) - abs(v.y)) < 1e-12 * (abs(v.x) + abs(v.y)):
            raise DegenerateBisector(f"site {s.id} runs at 45 degrees")
    return out


def _linf_site_np(pts: np.ndarray, s: SegmentSite) -> np.ndarray:
    from .kernel import distance_matrix
    return distance_matrix(pts, [s], LINF)[:, 0]


# ---------------------------------------------------------------------------
# Convex cell decomposition
# ---------------------------------------------------------------------------

def _split_cell(cell: list[Point2], line: Line, eps: float):
    vals = [line.signed(p.x, p.y) for p in cell]
    if all(v >= -eps for v in vals) or all(v <= eps for v in vals):
        return [cell]
    pos, neg = [], []
    m = len(cell)
    for i in range(m):
        a, va = cell[i], vals[i]
        b, vb = cell[(i + 1) % m], vals[(i + 1) % m]
        if va >= -eps:
            pos.append(a)
        if va <= eps:
            neg.append(a)
        if (va > eps and vb < -eps) or (va < -eps and vb > eps):
            t = va / (va - vb)
            q = Point2(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
            pos.append(q)
            neg.append(q)
    out = []
    for poly in (pos, neg):
        if len(poly) >= 3 and abs(_poly_area(poly)) > eps * eps:
            out.append(poly)
    return out or [cell]


def _poly_area(poly: list[Point2]) -> float:
    a = 0.0
    for i in range(len(poly)):
        p, q = poly[i], poly[(i + 1) % len(poly)]
        a += p.x * q.y - q.x * p.y
    return a / 2.0


def _box_polygon(cx: float, cy: float, r: float) -> list[Point2]:
    return [Point2(cx - r, cy - r), Point2(cx + r, cy - r),
            Point2(cx + r, cy + r), Point2(cx - r, cy + r)]


def instance_box_radius(S: SiteSet) -> float:
    """Radius beyond which every pair bisector runs straight: all pairwise
    breakline crossings (the cell vertices) lie inside."""
    lines: list[Line] = []
    for s in S.sites:
        lines += segment_breaklines(s)
    cx, cy = _center(S)
    r = 10.0 * S.tol.diameter
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            q = line_intersection(lines[i], lines[j])
            if q is not None:
                r = max(r, 2.0 * math.hypot(q.x - cx, q.y - cy) + 10.0 * S.tol.diameter)
    return r


def _center(S: SiteSet):
    xs, ys = [], []
    for s in S.sites:
        xs += [s.a.x, s.b.x]
        ys += [s.a.y, s.b.y]
    return (min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0


# ---------------------------------------------------------------------------
# Pair bisector chains
# ---------------------------------------------------------------------------

@dataclass
class LinfChain:
    """One connected piecewise-linear branch of a pair bisector.  Pieces are
    contiguous; terminal pieces whose far end leaves the cell-vertex box are
    extended to infinity (no further bends can occur out there)."""

    sa: int
    sb: int
    pieces: list[LinePiece]


def linf_pair_chains(sa: SegmentSite, sb: SegmentSite, S: SiteSet,
                     box_r: float) -> list[LinfChain]:
    tol = S.tol
    eps = tol.eps
    cx, cy = _center(S)
    cells = [_box_polygon(cx, cy, box_r)]
    for line in segment_breaklines(sa) + segment_breaklines(sb):
        cells = [c2 for c in cells for c2 in _split_cell(c, line, eps)]

    segs: list[tuple[Point2, Point2]] = []
    fscale = tol.diameter + box_r
    for cell in cells:
        pts = np.array([[p.x, p.y] for p in cell])
        f = _linf_site_np(pts, sa) - _linf_site_np(pts, sb)
        if np.all(np.abs(f) <= 1e-11 * fscale):
            raise DegenerateBisector(
                f"two-dimensional bisector piece between sites {sa.id} and {sb.id}")
        # affine coefficients from three corners, checked on the rest
        coef = _affine_fit(pts, f, fscale)
        if coef is None:
            raise DegenerateBisector(
                f"non-affine Linf distance cell for sites {sa.id},{sb.id}")
        al, be, ga = coef
        if math.hypot(al, be) * fscale < 1e-13 * fscale:
            continue
        cut = _cut_cell(cell, f, eps)
        if cut is not None:
            segs.append(cut)
    segs = [sg for sg in segs if (sg[1] - sg[0]).norm() > eps * 10]
    return _assemble_chains(segs, sa.id, sb.id, tol, cx, cy, box_r)


def _affine_fit(pts: np.ndarray, f: np.ndarray, fscale: float):
    m = len(pts)
    for i in range(m - 2):
        A = np.array([[pts[i, 0], pts[i, 1], 1.0],
                      [pts[i + 1, 0], pts[i + 1, 1], 1.0],
                      [pts[i + 2, 0], pts[i + 2, 1], 1.0]])
        if abs(np.linalg.det(A)) < 1e-9:
            continue
        coef = np.linalg.solve(A, f[i:i + 3])
        pred = pts @ coef[:2] + coef[2]
        if np.max(np.abs(pred - f)) <= 1e-9 * fscale:
            return float(coef[0]), float(coef[1]), float(coef[2])
        return None
    return None


def _cut_cell(cell: list[Point2], f: np.ndarray, eps: float):
    """Zero-crossing segment of an affine function on a convex cell."""
    m = len(cell)
    hits: list[Point2] = []
    for i in range(m):
        va, vb = f[i], f[(i + 1) % m]
        a, b = cell[i], cell[(i + 1) % m]
        if abs(va) < 1e-300 and abs(vb) < 1e-300:
            continue
        if (va <= 0 <= vb) or (vb <= 0 <= va):
            t = va / (va - vb) if va != vb else 0.0
            hits.append(Point2(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)))
    uniq: list[Point2] = []
    for h in hits:
        if not any((h - u).norm() <= eps * 4 for u in uniq):
            uniq.append(h)
    if len(uniq) == 2:
        return (uniq[0], uniq[1])
    return None


def _assemble_chains(segs, sa_id, sb_id, tol: Tolerance, cx, cy, box_r):
    if not segs:
        return []
    adj: dict[tuple, list[int]] = {}
    for i, (p, q) in enumerate(segs):
        adj.setdefault(tol.key(p), []).append(i)
        adj.setdefault(tol.key(q), []).append(i)

    def near(p: Point2):
        kx, ky = tol.key(p)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                yield from adj.get((kx + dx, ky + dy), [])

    def on_box(p: Point2) -> bool:
        return max(abs(p.x - cx), abs(p.y - cy)) >= box_r - tol.eps * 100

    used = [False] * len(segs)
    chains: list[LinfChain] = []
    order = sorted(range(len(segs)),
                   key=lambda i: -(on_box(segs[i][0]) or on_box(segs[i][1])))
    for start in order:
        if used[start]:
            continue
        p, q = segs[start]
        if on_box(q) and not on_box(p):
            p, q = q, p
        pts = [p, q]
        used[start] = True
        while True:
            nxt = None
            for j in near(pts[-1]):
                if used[j]:
                    continue
                a, b = segs[j]
                if tol.same_point(a, pts[-1]):
                    nxt = (j, b)
                    break
                if tol.same_point(b, pts[-1]):
                    nxt = (j, a)
                    break
            if nxt is None:
                break
            used[nxt[0]] = True
            pts.append(nxt[1])
        chains.append(_chain_from_points(pts, sa_id, sb_id, tol, cx, cy, box_r))
    return chains


def _chain_from_points(pts, sa_id, sb_id, tol, cx, cy, box_r) -> LinfChain:
    # merge collinear runs, then build unit-speed line pieces
    merged = [pts[0]]
    for p in pts[1:]:
        if len(merged) >= 2:
            u = merged[-1] - merged[-2]
            v = p - merged[-1]
            if abs(u.x * v.y - u.y * v.x) <= tol.eps * (u.norm() + v.norm() + tol.eps):
                merged[-1] = p
                continue
        merged.append(p)
    pieces: list[LinePiece] = []
    n = len(merged)
    for i in range(n - 1):
        a, b = merged[i], merged[i + 1]
        L = (b - a).norm()
        u = Point2((b.x - a.x) / L, (b.y - a.y) / L)
        pieces.append(LinePiece(a, u, 0.0, L))
    box = lambda p: max(abs(p.x - cx), abs(p.y - cy)) >= box_r - tol.eps * 100
    if pieces and box(merged[0]):
        pieces[0] = LinePiece(pieces[0].p0, pieces[0].u, -INF, pieces[0].t1)
    if pieces and box(merged[-1]):
        last = pieces[-1]
        pieces[-1] = LinePiece(last.p0, last.u, last.t0, INF)
    return LinfChain(sa_id, sb_id, pieces)


# ---------------------------------------------------------------------------
# Third-site equidistance on a chain piece
# ---------------------------------------------------------------------------

def breakline_params(piece: LinePiece, s: SegmentSite) -> list[float]:
    """Parameters where the piece crosses a breakline of ``s``; between two
    consecutive ones the Linf distance to ``s`` is affine in the parameter."""
    out = []
    for line in segment_breaklines(s):
        den = line.nx * piece.u.x + line.ny * piece.u.y
        if abs(den) < 1e-14:
            continue
        t = -(line.signed(piece.p0.x, piece.p0.y)) / den
        if piece.t0 < t < piece.t1:
            out.append(t)
    return sorted(out)


def linear_equidistance(piece: LinePiece, sa: SegmentSite, sb: SegmentSite,
                        third: SegmentSite, tol: Tolerance) -> list[float]:
    """Exact parameters on the piece where the third site ties the pair."""
    cuts = ([piece.t0] if math.isfinite(piece.t0) else []) \
        + breakline_params(piece, third) + breakline_params(piece, sa)
    if math.isfinite(piece.t1):
        cuts.append(piece.t1)
    cuts = sorted(set(cuts))
    if not math.isfinite(piece.t0):
        cuts = [min(cuts, default=0.0) - 4.0 * tol.diameter] + cuts
    if not math.isfinite(piece.t1):
        cuts = cuts + [max(cuts, default=0.0) + 4.0 * tol.diameter]
    roots: list[float] = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= tol.eps:
            continue
        t_a = lo + (hi - lo) * 0.25
        t_b = lo + (hi - lo) * 0.75
        pa, pb = piece.eval(t_a), piece.eval(t_b)
        ga = distance(pa, third, LINF) - distance(pa, sa, LINF)
        gb = distance(pb, third, LINF) - distance(pb, sa, LINF)
        slope = (gb - ga) / (t_b - t_a)
        if abs(slope) < 1e-14:
            continue
        t = t_a - ga / slope
        open_lo = lo if math.isfinite(piece.t0) or lo > cuts[0] else -INF
        open_hi = hi if math.isfinite(piece.t1) or hi < cuts[-1] else INF
        if open_lo - tol.eps <= t <= open_hi + tol.eps:
            q = piece.eval(t)
            da = distance(q, sa, LINF)
            if abs(distance(q, third, LINF) - da) <= 1e-7 * (tol.diameter + da) \
               and abs(distance(q, sb, LINF) - da) <= 1e-7 * (tol.diameter + da):
                roots.append(t)
    return roots
