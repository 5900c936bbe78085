"""Level extraction engine.

Every Voronoi vertex of any order is an equidistance point of three
elementary sites, and every edge of the order-k diagram is a maximal piece
of an elementary-pair bisector along which exactly the same k nearest sites
sit strictly inside the touching disk.  The engine therefore walks each
candidate pair curve, cuts it at all validated three-feature equidistance
points, classifies each interval by probing the k-nearest oracle a little
to either side, and keeps the intervals whose sides disagree.  Levels come
out independently of each other, so an error cannot propagate upward.

Candidate curves are closed-form: perpendicular bisector lines, parabolic
arcs, angle bisector lines, and (for shared endpoints) the normals at such
a point; under Linf/L1 the piecewise-linear chains from ``chebyshev``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import chebyshev, geom
from .geom import ArcPiece, Feature, INF, InteriorFeature, Line, LinePiece, Piece, PointFeature
from .kernel import (EUCLIDEAN, L1, LINF, Metric, Point2, SegmentSite, SiteSet,
                     Tolerance, classify_pair, distance)
from .labeling import Label, Oracle
from .subdivision import (PlanarSubdivision, RawEdge, VertexData,
                          build_subdivision, merge_adjacent)

__all__ = ["Engine", "VertexRegistry", "extract_levels", "clip_v1_to_face"]


class DegeneracyError(Exception):
    pass


class VertexRegistry:
    """Global vertex identity across all levels of one instance: points are
    snapped and deduplicated, so a vertex shared by consecutive orders keeps
    one id everywhere."""

    def __init__(self, tol: Tolerance):
        self.tol = tol
        self.data: dict[int, VertexData] = {}
        self._index: dict[tuple, list[int]] = {}
        self._next = 0

    def find(self, p: Point2) -> Optional[int]:
        kx, ky = self.tol.key(p)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for vid in self._index.get((kx + dx, ky + dy), ()):
                    if self.tol.same_point(self.data[vid].point, p):
                        return vid
        return None

    def add(self, p: Point2, kind: str = "regular", features: frozenset = frozenset(),
            radius: float = 0.0, inside_count: Optional[int] = None) -> int:
        vid = self.find(p)
        if vid is not None:
            vd = self.data[vid]
            kind_rank = {"anchor": 0, "regular": 1, "pslg": 2, "crossing": 3}
            best = max((vd.kind, kind), key=lambda k: kind_rank[k])
            self.data[vid] = VertexData(vd.point, best, vd.features | features,
                                        max(vd.radius, radius),
                                        vd.inside_count if vd.inside_count is not None
                                        else inside_count)
            return vid
        vid = self._next
        self._next += 1
        self.data[vid] = VertexData(p, kind, features, radius, inside_count)
        self._index.setdefault(self.tol.key(p), []).append(vid)
        return vid

    def alloc_unindexed(self, p: Point2) -> int:
        """Fresh id for a synthetic vertex that must never merge with real
        ones (the anchors splitting doubly-unbounded edges)."""
        vid = self._next
        self._next += 1
        self.data[vid] = VertexData(p, "anchor", frozenset(), 0.0, None)
        return vid


# ---------------------------------------------------------------------------
# Candidate curves
# ---------------------------------------------------------------------------

@dataclass
class Track:
    """A candidate curve: contiguous pieces of one elementary-pair bisector
    (Euclidean) or one branch of an Linf pair bisector.

    Euclidean tracks are supersets of the true bisector: an interval is a
    real edge only where both features are *active*, i.e. actually realize
    their owners' site distances (the touching disk meets exactly these two
    elementary sites there).  ``normal`` tracks (shared endpoint against an
    incident interior) skip the interior's foot test: along them the foot
    sits exactly at the shared point by construction."""

    pieces: list[Piece]
    fa: Feature
    fb: Feature
    sa_ids: frozenset[int]
    sb_ids: frozenset[int]
    kind: str = "pp"  # pp | parabola | ii | normal | linf
    anchor_site: Optional[SegmentSite] = None  # Linf: radius via site distance


Pos = tuple[int, float]  # (piece index, parameter)


@dataclass
class Break:
    pos: Pos
    point: Point2
    kind: str  # "tritangent" | "crossing" | "shared"
    features: frozenset
    radius: float


class Engine:
    def __init__(self, S: SiteSet, metric: Metric = EUCLIDEAN,
                 registry: Optional[VertexRegistry] = None,
                 pair_filter: Optional[Callable] = None,
                 third_filter: Optional[Callable] = None):
        if metric.kind == "lp":
            raise ValueError("diagram construction supports euclidean, l1, linf")
        if S.mode == "pslg" and metric.kind != "euclidean":
            raise NotImplementedError("PSLG diagrams are built in the Euclidean metric")
        self.S = S
        self.metric = metric
        self.tol = S.tol
        self.oracle = Oracle(S, metric)
        self.features = self.oracle.features
        self.registry = registry if registry is not None else VertexRegistry(self.tol)
        self.pair_filter = pair_filter
        self.third_filter = third_filter
        self.notes: list[str] = []
        self.crossings: list[tuple[Point2, int, int]] = []
        if S.mode == "crossing":
            for i, s1 in enumerate(S.sites):
                for s2 in S.sites[i + 1:]:
                    c = classify_pair(s1, s2, self.tol)
                    if c.kind == "proper-crossing":
                        self.crossings.append((c.point, s1.id, s2.id))
                    elif c.kind == "overlap":
                        raise DegeneracyError(f"overlap between {s1.id},{s2.id}")
        self._conj = (metric.kind == "l1")

    # -- track construction ---------------------------------------------------

    def tracks(self) -> list[Track]:
        if self.metric.kind == "euclidean":
            return self._euclid_tracks()
        return self._linf_tracks()

    def _pair_allowed(self, fa: Feature, fb: Feature) -> bool:
        oa, ob = fa.owner_ids(), fb.owner_ids()
        if oa == ob and len(oa) == 1:
            # same single owner: only meaningful when a shared endpoint meets
            # an incident interior, which the shared-point branch handles
            return False
        if self.pair_filter is not None and not self.pair_filter(oa, ob):
            return False
        return True

    def _euclid_tracks(self) -> list[Track]:
        out: list[Track] = []
        feats = self.features
        eps = self.tol.eps
        for i in range(len(feats)):
            for j in range(i + 1, len(feats)):
                fa, fb = feats[i], feats[j]
                oa, ob = fa.owner_ids(), fb.owner_ids()
                same_single = (oa == ob and len(oa) == 1)
                shared_incident = False
                if isinstance(fa, PointFeature) and isinstance(fb, InteriorFeature):
                    shared_incident = fa.is_shared and fb.site_id in oa
                if isinstance(fb, PointFeature) and isinstance(fa, InteriorFeature):
                    shared_incident = fb.is_shared and fa.site_id in ob
                if same_single:
                    continue
                if not shared_incident and oa == ob and len(oa | ob) == 1:
                    continue
                if self.pair_filter is not None and not self.pair_filter(oa, ob):
                    continue
                out += self._euclid_pair_tracks(fa, fb, eps)
        return out

    def _euclid_pair_tracks(self, fa: Feature, fb: Feature, eps: float) -> list[Track]:
        oa, ob = fa.owner_ids(), fb.owner_ids()
        if isinstance(fa, PointFeature) and isinstance(fb, PointFeature):
            if self.tol.same_point(fa.point, fb.point):
                return []
            mid = Point2((fa.point.x + fb.point.x) / 2, (fa.point.y + fb.point.y) / 2)
            d = fb.point - fa.point
            L = d.norm()
            u = Point2(-d.y / L, d.x / L)
            return [Track([LinePiece(mid, u)], fa, fb, oa, ob, "pp")]
        if isinstance(fa, PointFeature) or isinstance(fb, PointFeature):
            pf, itf = (fa, fb) if isinstance(fa, PointFeature) else (fb, fa)
            s = itf.line.signed(pf.point.x, pf.point.y)
            if abs(s) <= eps:
                # focus on the directrix: the parabola degenerates to the normal
                u = Point2(itf.line.nx, itf.line.ny)
                return [Track([LinePiece(pf.point, u)], fa, fb, oa, ob, "normal")]
            return [Track([ArcPiece(pf.point, itf.line)], fa, fb, oa, ob, "parabola")]
        l1, l2 = fa.line, fb.line
        tracks = []
        for bis in geom._angle_bisectors(l1, l2):
            anchor = self._project_center(bis)
            tracks.append(Track([LinePiece(anchor, bis.direction())], fa, fb, oa, ob, "ii"))
        return tracks

    def _project_center(self, line: Line) -> Point2:
        cx, cy = _center_of(self.S)
        s = line.signed(cx, cy)
        return Point2(cx - s * line.nx, cy - s * line.ny)

    def _linf_tracks(self) -> list[Track]:
        S = chebyshev.conj_sites(self.S) if self._conj else self.S
        self._linf_S = S
        box_r = chebyshev.instance_box_radius(S)
        feats_by_site: dict[int, list[Feature]] = {}
        for f in self.features:
            for sid in f.owner_ids():
                feats_by_site.setdefault(sid, []).append(f)
        out = []
        for i, sa in enumerate(S.sites):
            for sb in S.sites[i + 1:]:
                if self.pair_filter is not None and not self.pair_filter(
                        frozenset((sa.id,)), frozenset((sb.id,))):
                    continue
                chains = chebyshev.linf_pair_chains(sa, sb, S, box_r)
                fa = feats_by_site[sa.id][-1]
                fb = feats_by_site[sb.id][-1]
                for ch in chains:
                    pieces = ch.pieces
                    if self._conj:
                        pieces = [_unconj_piece(p) for p in pieces]
                    out.append(Track(pieces, fa, fb, frozenset((sa.id,)),
                                     frozenset((sb.id,)), "linf",
                                     anchor_site=self.S.by_id(sa.id)))
        return out

    # -- breakpoints ----------------------------------------------------------

    def track_breaks(self, tr: Track) -> list[Break]:
        if self.metric.kind == "euclidean":
            breaks = self._euclid_breaks(tr)
        else:
            breaks = self._linf_breaks(tr)
        breaks += self._special_point_breaks(tr)
        return _dedupe_breaks(breaks, self.tol)

    def _euclid_breaks(self, tr: Track) -> list[Break]:
        piece = tr.pieces[0]
        out: list[Break] = []
        diam = self.tol.diameter
        vtol = max(self.tol.eps * 50.0, 1e-11 * diam)
        own = tr.sa_ids | tr.sb_ids
        for third in self.features:
            if third.fid in (tr.fa.fid, tr.fb.fid):
                continue
            if third.owner_ids() <= own:
                # a disk touching two features of one segment would cut it;
                # realization handovers are caught by the normal crossings
                continue
            if self.third_filter is not None and not self.third_filter(tr, third):
                continue
            ts = geom.equidistance_params(piece, tr.fa, third, diam)
            for t in ts:
                q = piece.eval(float(t))
                x, y = geom.polish_equidistance(q.x, q.y, tr.fa, tr.fb, third)
                ds = [geom.feature_distance(x, y, f) for f in (tr.fa, tr.fb, third)]
                r = sum(ds) / 3.0
                if any(abs(d - r) > vtol * (1.0 + r / diam) for d in ds):
                    continue
                p = Point2(x, y)
                t2 = piece.param_of(p)
                qq = piece.eval(t2)
                if math.hypot(qq.x - x, qq.y - y) > vtol * (1.0 + r / diam) * 4:
                    continue
                out.append(Break((0, t2), p, "tritangent",
                                 frozenset((tr.fa.fid, tr.fb.fid, third.fid)), r))
        out += self._handover_breaks(tr)
        return out

    def _handover_breaks(self, tr: Track) -> list[Break]:
        """Crossings with the owner segments' endpoint normals: there the
        nearest point of that owner slides off an endpoint, so the active
        claimant switches from this candidate curve to a neighbouring one."""
        piece = tr.pieces[0]
        out: list[Break] = []
        for sid in tr.sa_ids | tr.sb_ids:
            s = self.S.by_id(sid)
            if s.is_degenerate:
                continue
            v = s.direction()
            for endp in (s.a, s.b):
                nline = Line.point_normal(endp, v)
                cx, cy = geom.piece_coeffs(piece)
                sp = np.polyadd(cx * nline.nx, cy * nline.ny)
                sp[-1] -= nline.c
                for t in geom.real_roots(sp, self.tol.diameter):
                    p = piece.eval(float(t))
                    r = geom.feature_distance(p.x, p.y, tr.fa)
                    out.append(Break((0, float(t)), p, "junction",
                                     frozenset((tr.fa.fid, tr.fb.fid)), r))
        return out

    def _linf_breaks(self, tr: Track) -> list[Break]:
        S = self._linf_S
        sa = S.by_id(next(iter(tr.sa_ids)))
        sb = S.by_id(next(iter(tr.sb_ids)))
        out: list[Break] = []
        for third in S.sites:
            if third.id in tr.sa_ids or third.id in tr.sb_ids:
                continue
            for pi, piece in enumerate(tr.pieces):
                conj_piece = _conj_piece(piece) if self._conj else piece
                for t in chebyshev.linear_equidistance(conj_piece, sa, sb, third, self.tol):
                    q = piece.eval(t)
                    r = distance(q, self.S.by_id(sa.id), self.metric)
                    out.append(Break((pi, t), q, "tritangent",
                                     frozenset((tr.fa.fid, tr.fb.fid)), r))
        return out

    def _special_point_breaks(self, tr: Track) -> list[Break]:
        """Crossing points and shared endpoints lying on the track."""
        out = []
        specials: list[tuple[Point2, str]] = []
        for q, _, _ in self.crossings:
            specials.append((q, "crossing"))
        for f in self.oracle.shared_points():
            specials.append((f.point, "shared"))
        eps = self.tol.eps * 8
        for q, kind in specials:
            if self.metric.kind == "euclidean":
                da = geom.feature_distance(q.x, q.y, tr.fa)
                db = geom.feature_distance(q.x, q.y, tr.fb)
                if da > eps or db > eps:
                    continue
            for pi, piece in enumerate(tr.pieces):
                t = piece.param_of(q)
                if not (piece.t0 - eps <= t <= piece.t1 + eps):
                    continue
                p = piece.eval(t)
                if math.hypot(p.x - q.x, p.y - q.y) <= eps:
                    out.append(Break((pi, t), q, kind, frozenset(), 0.0))
                    break
        return out

    # -- interval classification ------------------------------------------------

    def extract(self, ks: list[int]) -> dict[int, PlanarSubdivision]:
        ks = sorted(set(ks))
        n = len(self.S)
        for k in ks:
            if not (1 <= k <= n - 1):
                raise ValueError(f"order {k} outside 1..{n - 1}")
        if n == 1:
            raise ValueError("need at least two sites")

        tracks = self.tracks()
        probes, intervals = self._collect_intervals(tracks)
        sides = self._probe_labels(probes, ks)
        active = self._probe_activity(probes, intervals)
        raw_by_k: dict[int, list] = {k: [] for k in ks}
        for rec, lab, act in zip(intervals, sides, active):
            if not act:
                continue
            tr, pos_a, pos_b, brk_a, brk_b = rec
            for k in ks:
                left, right = lab[k]
                if left is None or right is None or left == right:
                    continue
                raw_by_k[k].append((tr, pos_a, pos_b, brk_a, brk_b, left, right))

        out = {}
        for k in ks:
            raws = self._finalize_level(raw_by_k[k])
            d = build_subdivision(self.S, self.metric, k, raws, self.registry.data,
                                  registry=self.registry)
            d.features = {f.fid: f for f in self.features}
            d.registry = self.registry
            d.notes = list(self.notes)
            out[k] = d
        return out

    def _collect_intervals(self, tracks):
        probes = []
        intervals = []
        diam = self.tol.diameter
        for tr in tracks:
            breaks = self.track_breaks(tr)
            posns: list[tuple[Pos, Optional[Break]]] = []
            first = tr.pieces[0]
            last = tr.pieces[-1]
            posns.append(((0, first.t0), None))
            for b in breaks:
                posns.append((b.pos, b))
            posns.append(((len(tr.pieces) - 1, last.t1), None))
            posns.sort(key=lambda pb: pb[0])
            for (pa, ba), (pb_, bb) in zip(posns[:-1], posns[1:]):
                probe = self._interval_probe(tr, pa, pb_)
                if probe is None:
                    continue
                m, nrm, dlt = probe
                probes.append((m, nrm, dlt))
                intervals.append((tr, pa, pb_, ba, bb))
        return probes, intervals

    def _interval_probe(self, tr: Track, pa: Pos, pb: Pos):
        diam = self.tol.diameter
        (ia, ta), (ib, tb) = pa, pb
        if ia == ib:
            piece = tr.pieces[ia]
            lo, hi = ta, tb
        else:
            spans = []
            for i in range(ia, ib + 1):
                p = tr.pieces[i]
                lo_i = ta if i == ia else p.t0
                hi_i = tb if i == ib else p.t1
                w = (hi_i - lo_i) if math.isfinite(hi_i - lo_i) else INF
                spans.append((w, i, lo_i, hi_i))
            spans.sort(key=lambda s: -(s[0] if math.isfinite(s[0]) else 1e30))
            _, i, lo, hi = spans[0]
            piece = tr.pieces[i]
        if hi - lo <= self.tol.eps:
            return None
        if not math.isfinite(lo) and not math.isfinite(hi):
            tm = 0.0
        elif not math.isfinite(lo):
            tm = hi - 2.0 * diam
        elif not math.isfinite(hi):
            tm = lo + 2.0 * diam
        else:
            tm = 0.5 * (lo + hi)
        m = piece.eval(tm)
        tau = piece.tangent(tm)
        nrm = Point2(-tau.y, tau.x)
        space = 0.25 * diam
        for tref in (lo, hi):
            if math.isfinite(tref):
                q = piece.eval(tref)
                space = min(space, 0.2 * math.hypot(m.x - q.x, m.y - q.y))
        dlt = min(5e-7 * diam, space)
        if dlt <= self.tol.eps * 4:
            dlt = self.tol.eps * 8
        return m, nrm, dlt

    def _probe_activity(self, probes, intervals) -> list[bool]:
        if not probes:
            return []
        mids = np.array([[m.x, m.y] for (m, _, _) in probes])
        rows = self.oracle.dist_rows(mids)
        col = {int(sid): i for i, sid in enumerate(self.oracle.site_ids)}
        out = []
        tol_act = 1e-7 * self.tol.diameter
        for (m, _, _), rec, row in zip(probes, intervals, rows):
            tr = rec[0]
            out.append(self._features_active(tr, m, row, col, tol_act))
        return out

    def _features_active(self, tr: Track, m: Point2, row, col, tol_act) -> bool:
        if tr.kind == "linf":
            return True
        for f in (tr.fa, tr.fb):
            if tr.kind == "normal" and isinstance(f, InteriorFeature):
                continue  # the foot sits at the shared endpoint by construction
            if isinstance(f, PointFeature):
                fd = math.hypot(m.x - f.point.x, m.y - f.point.y)
            else:
                # perpendicular reach: equals the site distance only where the
                # foot lies inside the segment, which is exactly "touching"
                fd = abs(f.line.signed(m.x, m.y))
            best = min(row[col[sid]] for sid in f.owner_ids())
            if abs(fd - best) > tol_act:
                return False
        return True

    def _probe_labels(self, probes, ks):
        if not probes:
            return []
        pts = []
        for m, nrm, dlt in probes:
            pts.append([m.x + dlt * nrm.x, m.y + dlt * nrm.y])
            pts.append([m.x - dlt * nrm.x, m.y - dlt * nrm.y])
            pts.append([m.x + 0.125 * dlt * nrm.x, m.y + 0.125 * dlt * nrm.y])
            pts.append([m.x - 0.125 * dlt * nrm.x, m.y - 0.125 * dlt * nrm.y])
        lb = self.oracle.label_batch(np.array(pts), ks)
        out = []
        for i in range(len(probes)):
            rec = {}
            for k in ks:
                Lp, Lm = lb[k][4 * i], lb[k][4 * i + 1]
                Lp8, Lm8 = lb[k][4 * i + 2], lb[k][4 * i + 3]
                if Lp != Lp8 or Lm != Lm8:
                    self.notes.append(f"probe instability at k={k} near "
                                      f"({pts[4 * i][0]:.6g},{pts[4 * i][1]:.6g})")
                    Lp, Lm = Lp8, Lm8
                rec[k] = (Lp, Lm)
            out.append(rec)
        return out

    # -- level assembly -----------------------------------------------------

    def _finalize_level(self, items) -> list[RawEdge]:
        tol = self.tol
        edges = []
        for tr, pa, pb, ba, bb, left, right in items:
            v0 = self._vertex_for(ba)
            v1 = self._vertex_for(bb)
            pieces = _clip_track(tr, pa, pb)
            edges.append(RawEdge(v0, v1, pieces, left, right))
        edges = _dissolve_degree2(edges, self.registry, tol, self.notes)
        return edges

    def _vertex_for(self, brk: Optional[Break]) -> Optional[int]:
        if brk is None:
            return None
        kind = {"tritangent": "regular", "junction": "regular",
                "crossing": "crossing", "shared": "pslg"}[brk.kind]
        vid = self.registry.add(brk.point, kind, brk.features, brk.radius, None)
        vd = self.registry.data[vid]
        if vd.inside_count is None and kind == "regular":
            row = self.oracle.dist_rows(np.array([[brk.point.x, brk.point.y]]))[0]
            cushion = max(tolerant(self.tol, brk.radius), 1e-12 * self.tol.diameter)
            j = int(np.sum(row < brk.radius - cushion))
            self.registry.data[vid] = VertexData(vd.point, vd.kind, vd.features,
                                                 vd.radius, j)
        elif vd.inside_count is None:
            self.registry.data[vid] = VertexData(vd.point, vd.kind, vd.features,
                                                 vd.radius, 0 if kind != "regular" else None)
        return vid


def tolerant(tol: Tolerance, r: float) -> float:
    return tol.eps * 8.0 + 1e-12 * r


def _center_of(S: SiteSet):
    xs, ys = [], []
    for s in S.sites:
        xs += [s.a.x, s.b.x]
        ys += [s.a.y, s.b.y]
    return (min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0


def _conj_piece(piece: LinePiece) -> LinePiece:
    p0 = chebyshev.conj_point(piece.p0)
    u_raw = chebyshev.conj_point(Point2(piece.u.x, piece.u.y))
    L = u_raw.norm()
    u = Point2(u_raw.x / L, u_raw.y / L)
    sc = L
    lo = piece.t0 * sc if math.isfinite(piece.t0) else piece.t0
    hi = piece.t1 * sc if math.isfinite(piece.t1) else piece.t1
    return LinePiece(p0, u, lo, hi)


def _unconj_piece(piece: LinePiece) -> LinePiece:
    p0 = chebyshev.unconj_point(piece.p0)
    u_raw = chebyshev.unconj_point(Point2(piece.u.x, piece.u.y))
    L = u_raw.norm()
    u = Point2(u_raw.x / L, u_raw.y / L)
    lo = piece.t0 * L if math.isfinite(piece.t0) else piece.t0
    hi = piece.t1 * L if math.isfinite(piece.t1) else piece.t1
    return LinePiece(p0, u, lo, hi)


def _clip_track(tr: Track, pa: Pos, pb: Pos) -> list[tuple[Piece, int, int]]:
    (ia, ta), (ib, tb) = pa, pb
    fa, fb = tr.fa.fid, tr.fb.fid
    out = []
    for i in range(ia, ib + 1):
        p = tr.pieces[i]
        lo = ta if i == ia else p.t0
        hi = tb if i == ib else p.t1
        if hi - lo > 0:
            out.append((p.subpiece(lo, hi), fa, fb))
    return out


def _dedupe_breaks(breaks: list[Break], tol: Tolerance) -> list[Break]:
    breaks.sort(key=lambda b: b.pos)
    out: list[Break] = []
    rank = {"junction": 0, "tritangent": 1, "shared": 2, "crossing": 3}
    for b in breaks:
        if out and out[-1].pos[0] == b.pos[0] and \
           abs(out[-1].pos[1] - b.pos[1]) <= tol.eps * 8:
            prev = out[-1]
            keep = b if rank[b.kind] > rank[prev.kind] else prev
            out[-1] = Break(keep.pos, keep.point, keep.kind,
                            prev.features | b.features, max(prev.radius, b.radius))
        else:
            out.append(b)
    return out


def _dissolve_degree2(edges: list[RawEdge], registry: VertexRegistry,
                      tol: Tolerance, notes: list[str]) -> list[RawEdge]:
    """Merge edge chains across degree-2 breakpoints with matching side
    labels; such points are smooth interior points of one diagram edge."""
    alive = {i: e for i, e in enumerate(edges)}
    next_id = len(edges)
    incid: dict[int, list[int]] = {}
    for i, e in alive.items():
        for v in (e.v0, e.v1):
            if v is not None:
                incid.setdefault(v, []).append(i)
    queue = [v for v, lst in incid.items() if len(lst) == 2]
    protected = {v for v in incid
                 if registry.data[v].kind in ("crossing",)}
    while queue:
        v = queue.pop()
        lst = [i for i in incid.get(v, []) if i in alive]
        incid[v] = lst
        if len(lst) != 2 or v in protected:
            continue
        i1, i2 = lst
        if i1 == i2:
            continue  # closed loop through v; keep as a vertex
        e1, e2 = alive[i1], alive[i2]
        if e1.v1 != v:
            e1 = e1.reversed()
        if e2.v0 != v:
            e2 = e2.reversed()
        if e1.v1 != v or e2.v0 != v:
            continue
        if e1.left != e2.left or e1.right != e2.right:
            continue  # genuine label change: leave the vertex alone
        merged = RawEdge(e1.v0, e2.v1, e1.pieces + e2.pieces, e1.left, e1.right)
        del alive[i1]
        del alive[i2]
        nid = next_id
        next_id += 1
        alive[nid] = merged
        for w in (merged.v0, merged.v1):
            if w is not None:
                incid.setdefault(w, [])
                incid[w] = [i for i in incid[w] if i in alive] + [nid]
                if len(incid[w]) == 2:
                    queue.append(w)
        incid[v] = []
    return list(alive.values())


# ---------------------------------------------------------------------------
# Public helpers
# ---------------------------------------------------------------------------

def extract_levels(S: SiteSet, metric: Metric, ks: list[int],
                   registry: Optional[VertexRegistry] = None,
                   pair_filter=None, third_filter=None) -> dict[int, PlanarSubdivision]:
    eng = Engine(S, metric, registry, pair_filter, third_filter)
    return eng.extract(ks)


def clip_v1_to_face(v1: PlanarSubdivision, parent: PlanarSubdivision,
                    face_id: int, registry: Optional[VertexRegistry] = None):
    """The portion of a nearest diagram strictly inside a parent face.

    Edges are cut where a face-label site ties the edge's pair (those cuts
    are the parent's new vertices, reused by id via the shared registry) and
    kept where their midpoint locates inside the face.
    """
    from .subdivision import Fragment
    from .labeling import ids_of

    face = parent.faces[face_id]
    if face.label is None or face.label[0] != "T1":
        raise ValueError("clip target must be a Type-1 face")
    H_ids = ids_of(face.label[1])
    H_mask = face.label[1]
    if registry is None:
        registry = getattr(parent, "registry", None) or VertexRegistry(parent.tol)
    tol = parent.tol
    diam = tol.diameter
    vtol = max(tol.eps * 50.0, 1e-11 * diam)

    sub_H = SiteSet([parent.S.by_id(i) for i in H_ids], "disjoint",
                    tol=tol) if H_ids else None
    H_feats: list[Feature] = geom.site_features(sub_H) if sub_H else []
    v1_feats = getattr(v1, "features", {})

    frag_edges: list[RawEdge] = []
    vdata: dict[int, VertexData] = {}
    leaf_vids: set[int] = set()
    interior_vids: set[int] = set()

    for e in v1.alive_edges():
        for (piece, fid1, fid2) in e.pieces:
            fa = v1_feats[fid1]
            fb = v1_feats[fid2]
            cuts: list[tuple[float, Point2, float]] = []
            for third in H_feats:
                for t in geom.equidistance_params(piece, fa, third, diam):
                    q = piece.eval(float(t))
                    x, y = geom.polish_equidistance(q.x, q.y, fa, fb, third)
                    ds = [geom.feature_distance(x, y, f) for f in (fa, fb, third)]
                    r = sum(ds) / 3.0
                    if any(abs(dd - r) > vtol * (1.0 + r / diam) for dd in ds):
                        continue
                    p = Point2(x, y)
                    t2 = piece.param_of(p)
                    if piece.t0 - tol.eps <= t2 <= piece.t1 + tol.eps:
                        cuts.append((t2, p, r))
            cuts.sort(key=lambda c: c[0])
            params = [piece.t0] + [c[0] for c in cuts] + [piece.t1]
            cut_pts = [None] + [c for c in cuts] + [None]
            for idx in range(len(params) - 1):
                lo, hi = params[idx], params[idx + 1]
                if hi - lo <= tol.eps:
                    continue
                tm = _mid_param(lo, hi, diam)
                m = piece.eval(tm)
                if parent.locate(m) != face_id:
                    continue
                keep_lo = cut_pts[idx]
                keep_hi = cut_pts[idx + 1]
                v0 = _frag_vertex(keep_lo, e, 0, v1, registry, vdata,
                                  leaf_vids, interior_vids, lo, piece, parent)
                v1_id = _frag_vertex(keep_hi, e, 1, v1, registry, vdata,
                                     leaf_vids, interior_vids, hi, piece, parent)
                sub = piece.subpiece(lo, hi)
                left = _lift_label(e.left, H_mask)
                right = _lift_label(e.right, H_mask)
                frag_edges.append(RawEdge(v0, v1_id, [(sub, fid1, fid2)], left, right))
    return Fragment(frag_edges, vdata, leaf_vids, interior_vids)


def _mid_param(lo: float, hi: float, diam: float) -> float:
    if not math.isfinite(lo) and not math.isfinite(hi):
        return 0.0
    if not math.isfinite(lo):
        return hi - 2 * diam
    if not math.isfinite(hi):
        return lo + 2 * diam
    return 0.5 * (lo + hi)


def _lift_label(sub_label: Label, H_mask: int) -> Label:
    return ("T1", sub_label[1] | H_mask, None)


def _frag_vertex(cut, e, which_end, v1: PlanarSubdivision, registry: VertexRegistry,
                 vdata: dict, leaf_vids: set, interior_vids: set,
                 param: float, piece, parent) -> Optional[int]:
    if cut is not None:
        _, p, r = cut
        vid = registry.add(p, "regular", frozenset(), r, None)
        vdata[vid] = registry.data[vid]
        leaf_vids.add(vid)
        return vid
    # piece boundary: either an interior vertex of the sub-diagram, or open end
    end_vid = e.v0 if which_end == 0 else e.v1
    if not math.isfinite(param):
        return None
    if end_vid is None:
        return None
    vtx = v1.vertices[end_vid]
    q = piece.eval(param)
    if not v1.tol.same_point(vtx.point, q):
        # interior chunk junction of a multi-piece edge: not a real vertex;
        # the caller's degree-2 dissolution will re-join these
        vid = registry.add(q, "regular", frozenset(), 0.0, None)
        vdata[vid] = registry.data[vid]
        interior_vids.add(vid)
        return vid
    vid = registry.add(vtx.point, vtx.kind if vtx.kind != "anchor" else "regular",
                       frozenset(), vtx.radius, None)
    vdata[vid] = registry.data[vid]
    interior_vids.add(vid)
    return vid
