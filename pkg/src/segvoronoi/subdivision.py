"""Planar subdivision as a doubly-connected edge list.

Edges are chains of straight/parabolic pieces and may be unbounded at one
end.  A curve unbounded in both directions is split at a synthetic anchor
vertex so each stored edge has at most one unbounded end; the two halves
share a census id and the anchor never counts as a diagram vertex.  All
unbounded ends are stitched through a single artificial vertex at infinity,
ordered by the angle at which they leave a huge circle around the instance.

Face labels are hashable order-k labels (see ``labeling``); every half-edge
carries the label of the face on its left, and face extraction checks that
orbits agree on it, which doubles as a consistency check of the whole
construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import geom
from .geom import ArcPiece, INF, Line, LinePiece, Piece
from .kernel import EUCLIDEAN, Metric, Point2, SiteSet, Tolerance, distance
from .labeling import Label, Oracle, ids_of, label_is_type2, mask_of

__all__ = [
    "Vertex", "HalfEdge", "Edge", "Face", "PlanarSubdivision", "Census",
    "RawEdge", "VertexData", "build_subdivision", "merge_adjacent",
    "clip_to_face", "Fragment", "save_json", "load_json",
]


@dataclass
class VertexData:
    point: Point2
    kind: str = "regular"  # regular | crossing | pslg | anchor
    features: frozenset = frozenset()
    radius: float = 0.0
    inside_count: Optional[int] = None


@dataclass
class RawEdge:
    """Input to the DCEL builder: an oriented curve chain between two vertex
    ids (``None`` marks an unbounded end) with the face labels on each side."""

    v0: Optional[int]
    v1: Optional[int]
    pieces: list[tuple[Piece, int, int]]  # (chunk, fid of one touch, fid of other)
    left: Label
    right: Label

    def reversed(self) -> "RawEdge":
        return RawEdge(self.v1, self.v0,
                       [(p.reversed(), f1, f2) for (p, f1, f2) in reversed(self.pieces)],
                       self.right, self.left)


@dataclass
class Vertex:
    vid: int
    point: Point2
    kind: str
    features: frozenset
    radius: float
    inside_count: Optional[int]
    out: list[int] = field(default_factory=list)  # outgoing half-edges, CCW


@dataclass
class Edge:
    eid: int
    v0: int
    v1: Optional[int]
    pieces: list[tuple[Piece, int, int]]
    left: Label
    right: Label
    census_id: int
    esc: Optional[float] = None  # escape angle of the unbounded end
    alive: bool = True

    @property
    def unbounded(self) -> bool:
        return self.v1 is None

    def endpoint(self, which: int) -> Optional[int]:
        return self.v0 if which == 0 else self.v1


@dataclass
class HalfEdge:
    hid: int
    edge: int
    forward: bool  # True: travels v0 -> v1
    twin: int = -1
    nxt: int = -1
    prv: int = -1
    face: int = -1
    alive: bool = True


@dataclass
class Face:
    fid: int
    label: Label
    half_edges: list[int]
    unbounded: bool
    alive: bool = True


@dataclass
class Census:
    F: int
    E: int
    V: int
    U: int
    V_new: int
    V_old: int
    I: int = 0  # crossing vertices

    def as_dict(self) -> dict:
        return {"F": self.F, "E": self.E, "V": self.V, "U": self.U,
                "V_new": self.V_new, "V_old": self.V_old, "I": self.I}


class PlanarSubdivision:
    def __init__(self, S: SiteSet, metric: Metric, k: int):
        self.S = S
        self.metric = metric
        self.k = k
        self.vertices: dict[int, Vertex] = {}
        self.edges: dict[int, Edge] = {}
        self.half: dict[int, HalfEdge] = {}
        self.faces: dict[int, Face] = {}
        self.tol: Tolerance = S.tol
        self._next_ids = [0, 0, 0, 0]  # vertex, edge, half, face

    # -- id helpers ---------------------------------------------------------

    def _new_id(self, slot: int) -> int:
        self._next_ids[slot] += 1
        return self._next_ids[slot] - 1

    # -- traversal helpers ----------------------------------------------------

    def half_origin(self, h: HalfEdge) -> Optional[int]:
        e = self.edges[h.edge]
        return e.v0 if h.forward else e.v1

    def half_head(self, h: HalfEdge) -> Optional[int]:
        e = self.edges[h.edge]
        return e.v1 if h.forward else e.v0

    def half_label(self, h: HalfEdge) -> Label:
        e = self.edges[h.edge]
        return e.left if h.forward else e.right

    def half_out_dir(self, h: HalfEdge) -> Point2:
        """Robust departure direction: angle of a nearby sample point."""
        e = self.edges[h.edge]
        chunk = e.pieces[0] if h.forward else e.pieces[-1]
        piece = chunk[0]
        if h.forward:
            t0 = piece.t0
            v = self.vertices[e.v0].point
            step = self._dir_step(piece)
            q = piece.eval(t0 + step)
        else:
            t1 = piece.t1
            assert e.v1 is not None
            v = self.vertices[e.v1].point
            step = self._dir_step(piece)
            q = piece.eval(t1 - step)
        return Point2(q.x - v.x, q.y - v.y)

    def _dir_step(self, piece: Piece) -> float:
        span = piece.t1 - piece.t0
        lim = span / 4.0 if math.isfinite(span) else self.tol.diameter
        return min(max(self.tol.eps * 100.0, 1e-12), lim) if lim > 0 else 1e-12

    def alive_edges(self) -> list[Edge]:
        return [e for e in self.edges.values() if e.alive]

    def alive_faces(self) -> list[Face]:
        return [f for f in self.faces.values() if f.alive]

    def real_vertices(self) -> list[Vertex]:
        return [v for v in self.vertices.values() if v.kind != "anchor"]

    # -- census ---------------------------------------------------------------

    def census(self) -> Census:
        F = len(self.alive_faces())
        E = len({e.census_id for e in self.alive_edges()})
        real = self.real_vertices()
        V = len(real)
        U = sum(1 for e in self.alive_edges() if e.unbounded)
        newc = sum(1 for v in real if v.inside_count == self.k - 1 and v.kind == "regular")
        oldc = sum(1 for v in real if v.inside_count == self.k - 2 and v.kind == "regular")
        I = sum(1 for v in real if v.kind == "crossing")
        return Census(F, E, V, U, newc, oldc, I)

    # -- validation -------------------------------------------------------------

    def validate(self, sample_edges: int = 10) -> dict:
        """Structural report: twin involution, cycle closure, label agreement,
        vertex degrees, adjacent-label rule, and edge equidistance sampling."""
        problems = []
        for h in self.half.values():
            if not h.alive:
                continue
            t = self.half[h.twin]
            if not t.alive or t.twin != h.hid:
                problems.append({"check": "twin-involution", "half": h.hid})
            if self.half[h.nxt].prv != h.hid:
                problems.append({"check": "next-prev", "half": h.hid})
        for f in self.alive_faces():
            labels = {self.half_label(self.half[hid]) for hid in f.half_edges}
            if len(labels) != 1:
                problems.append({"check": "face-label-consistency", "face": f.fid,
                                 "labels": [str(l) for l in labels]})
        for v in self.vertices.values():
            deg = len(v.out)
            if v.kind == "anchor":
                if deg != 2:
                    problems.append({"check": "anchor-degree", "vertex": v.vid, "deg": deg})
            elif v.kind == "crossing":
                if deg != 4:
                    problems.append({"check": "crossing-degree", "vertex": v.vid, "deg": deg})
            elif deg < 3:
                problems.append({"check": "vertex-degree", "vertex": v.vid, "deg": deg})
        # adjacent Type-1 faces differ in exactly two sites
        for e in self.alive_edges():
            if e.left is None or e.right is None:
                problems.append({"check": "edge-missing-label", "edge": e.eid})
                continue
            if not label_is_type2(e.left) and not label_is_type2(e.right):
                diff = e.left[1] ^ e.right[1]
                if bin(diff).count("1") != 2:
                    problems.append({"check": "adjacent-label-rule", "edge": e.eid,
                                     "left": ids_of(e.left[1]), "right": ids_of(e.right[1])})
        problems += self._sample_equidistance(sample_edges)
        return {"ok": not problems, "problems": problems}

    def _sample_equidistance(self, samples: int) -> list[dict]:
        out = []
        eps = self.tol.eps * 1e3 + self.tol.tube
        for e in self.alive_edges():
            pair = self._edge_site_pair(e)
            if pair is None:
                continue
            a, b = (self.S.by_id(i) for i in pair)
            for (piece, _, _) in e.pieces:
                t0, t1 = self._finite_span(piece)
                ts = np.linspace(t0, t1, samples)
                pts = piece.eval_many(ts)
                da = np.abs(
                    np.array([distance(Point2(*p), a, self.metric) for p in pts])
                    - np.array([distance(Point2(*p), b, self.metric) for p in pts]))
                if np.max(da) > eps:
                    out.append({"check": "edge-equidistance", "edge": e.eid,
                                "max_residual": float(np.max(da))})
                    break
        return out

    def _edge_site_pair(self, e: Edge) -> Optional[tuple[int, int]]:
        if e.left is None or e.right is None:
            return None
        if label_is_type2(e.left) or label_is_type2(e.right):
            return None
        diff = ids_of(e.left[1] ^ e.right[1])
        return (diff[0], diff[1]) if len(diff) == 2 else None

    def _finite_span(self, piece: Piece) -> tuple[float, float]:
        R = self.tol.diameter * 4.0
        t0 = piece.t0 if math.isfinite(piece.t0) else -R
        t1 = piece.t1 if math.isfinite(piece.t1) else R
        return t0, t1

    # -- queries ----------------------------------------------------------------

    def faces_with_label(self, label: Label) -> list[Face]:
        return [f for f in self.alive_faces() if f.label == label]

    def region_labels(self) -> set[Label]:
        return {f.label for f in self.alive_faces()}

    def face_unbounded(self, f: Face) -> bool:
        return f.unbounded

    def locate_batch(self, pts: np.ndarray) -> list[int]:
        """Face id containing each query point (undefined on edges/vertices).

        Walks to the nearest skeleton point; the straight path from a point
        to its nearest edge crosses no other edge, so the side of that edge
        resolves the face.
        """
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if not self.edges:
            only = next(iter(self.alive_faces()))
            return [only.fid] * len(pts)
        best_d = np.full(len(pts), np.inf)
        best_edge = np.full(len(pts), -1, dtype=int)
        best_t = np.zeros(len(pts))
        best_chunk = np.zeros(len(pts), dtype=int)
        clip = self.tol.diameter * 50.0
        for e in self.alive_edges():
            for ci, (piece, _, _) in enumerate(e.pieces):
                d, t = geom.nearest_on_piece(piece, pts, clip)
                upd = d < best_d
                best_d[upd] = d[upd]
                best_edge[upd] = e.eid
                best_t[upd] = t[upd]
                best_chunk[upd] = ci
        out = []
        for i in range(len(pts)):
            out.append(self._face_from_nearest(Point2(*pts[i]),
                                               int(best_edge[i]), int(best_chunk[i]),
                                               float(best_t[i])))
        return out

    def locate(self, p) -> int:
        return self.locate_batch(np.array([p], dtype=float))[0]

    def _face_from_nearest(self, p: Point2, eid: int, chunk: int, t: float) -> int:
        e = self.edges[eid]
        piece = e.pieces[chunk][0]
        q = piece.eval(t)
        vert = None
        for vid in (e.v0, e.v1):
            if vid is not None and self.tol.same_point(self.vertices[vid].point, q):
                vert = self.vertices[vid]
        if vert is not None and vert.kind != "anchor":
            return self._face_in_wedge(vert, p)
        tg = piece.tangent(t)
        cross = tg.x * (p.y - q.y) - tg.y * (p.x - q.x)
        hf, hr = self._halves_of(eid)
        return self.half[hf].face if cross > 0 else self.half[hr].face

    def _face_in_wedge(self, v: Vertex, p: Point2) -> int:
        ang = math.atan2(p.y - v.point.y, p.x - v.point.x)
        best, best_delta = None, None
        for hid in v.out:
            d = self.half_out_dir(self.half[hid])
            a = math.atan2(d.y, d.x)
            delta = (ang - a) % (2 * math.pi)
            if best_delta is None or delta < best_delta:
                best, best_delta = hid, delta
        assert best is not None
        return self.half[best].face

    def _halves_of(self, eid: int) -> tuple[int, int]:
        fw = rv = -1
        for h in self.half.values():
            if h.alive and h.edge == eid:
                if h.forward:
                    fw = h.hid
                else:
                    rv = h.hid
        return fw, rv

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return _subdivision_to_dict(self)


# ---------------------------------------------------------------------------
# Builder
# ---------------------------------------------------------------------------

def build_subdivision(S: SiteSet, metric: Metric, k: int,
                      raw_edges: list[RawEdge],
                      vertex_data: dict[int, VertexData],
                      registry=None) -> PlanarSubdivision:
    d = PlanarSubdivision(S, metric, k)
    tol = d.tol
    cx, cy = _instance_center(S)
    r_esc = tol.diameter * 1e5

    if not raw_edges:
        # single face covering the plane
        ora = Oracle(S, metric)
        far = np.array([[cx + 2 * tol.diameter + 1.0, cy]])
        lab = ora.label_batch(far, [k])[k][0]
        fid = d._new_id(3)
        d.faces[fid] = Face(fid, lab, [], True)
        return d

    used = set()
    for re_ in raw_edges:
        for vv in (re_.v0, re_.v1):
            if vv is not None:
                used.add(vv)
    for vid in used:
        vd = vertex_data[vid]
        d.vertices[vid] = Vertex(vid, vd.point, vd.kind, vd.features,
                                 vd.radius, vd.inside_count)
        d._next_ids[0] = max(d._next_ids[0], vid + 1)
    if vertex_data:
        d._next_ids[0] = max(d._next_ids[0], max(vertex_data) + 1)

    # normalize and register edges
    for re_ in raw_edges:
        if re_.v0 is None and re_.v1 is not None:
            re_ = re_.reversed()
        if re_.v0 is None and re_.v1 is None:
            e1, e2 = _split_double_unbounded(d, re_, registry)
            cid = _next_census(d)
            _register_edge(d, e1, census_id=cid, center=(cx, cy), r_esc=r_esc)
            _register_edge(d, e2, census_id=cid, center=(cx, cy), r_esc=r_esc)
        else:
            cid = _next_census(d)
            _register_edge(d, re_, census_id=cid, center=(cx, cy), r_esc=r_esc)

    _build_topology(d)
    _extract_faces(d)
    return d


def _next_census(d: PlanarSubdivision) -> int:
    return 1 + max((e.census_id for e in d.edges.values()), default=-1)


def _instance_center(S: SiteSet) -> tuple[float, float]:
    xs, ys = [], []
    for s in S.sites:
        xs += [s.a.x, s.b.x]
        ys += [s.a.y, s.b.y]
    return (min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0


def _split_double_unbounded(d: PlanarSubdivision, re_: RawEdge, registry=None):
    idx = len(re_.pieces) // 2
    piece, f1, f2 = re_.pieces[idx]
    t_anchor = _anchor_param(piece)
    p = piece.eval(t_anchor)
    if registry is not None:
        vid = registry.alloc_unindexed(p)
    else:
        vid = d._new_id(0)
        while vid in d.vertices:
            vid = d._new_id(0)
    d.vertices[vid] = Vertex(vid, p, "anchor", frozenset((f1, f2)), 0.0, None)
    left_chunks = re_.pieces[:idx] + [(piece.subpiece(piece.t0, t_anchor), f1, f2)]
    right_chunks = [(piece.subpiece(t_anchor, piece.t1), f1, f2)] + re_.pieces[idx + 1:]
    e_left = RawEdge(None, vid, left_chunks, re_.left, re_.right).reversed()
    e_right = RawEdge(vid, None, right_chunks, re_.left, re_.right)
    return e_left, e_right


def _anchor_param(piece: Piece) -> float:
    if math.isfinite(piece.t0) and math.isfinite(piece.t1):
        return 0.5 * (piece.t0 + piece.t1)
    if isinstance(piece, LinePiece):
        return 0.0
    return 0.0


def _register_edge(d: PlanarSubdivision, re_: RawEdge, census_id: int,
                   center, r_esc: float):
    eid = d._new_id(1)
    esc = None
    if re_.v1 is None:
        esc = _escape_angle(re_.pieces[-1][0], center, r_esc)
    e = Edge(eid, re_.v0, re_.v1, re_.pieces, re_.left, re_.right, census_id, esc)
    d.edges[eid] = e
    hf = d._new_id(2)
    hr = d._new_id(2)
    d.half[hf] = HalfEdge(hf, eid, True, twin=hr)
    d.half[hr] = HalfEdge(hr, eid, False, twin=hf)


def _escape_angle(piece: Piece, center, r_esc: float) -> float:
    cx, cy = center
    t = piece.t1
    if not math.isfinite(t):
        t = _param_at_radius(piece, center, r_esc)
    q = piece.eval(t)
    return math.atan2(q.y - cy, q.x - cx)


def _param_at_radius(piece: Piece, center, r_esc: float) -> float:
    cx, cy = center
    if isinstance(piece, LinePiece):
        # |p0 + t u - c| = r: solve quadratic, take the largest root
        wx, wy = piece.p0.x - cx, piece.p0.y - cy
        b = wx * piece.u.x + wy * piece.u.y
        c = wx * wx + wy * wy - r_esc * r_esc
        disc = max(b * b - c, 0.0)
        return -b + math.sqrt(disc)
    # parabola: |x(t)| grows like t^2/(4f)
    t = math.sqrt(max(4.0 * piece.f * r_esc, 1e-300))
    for _ in range(20):
        q = piece.eval(t)
        rr = math.hypot(q.x - cx, q.y - cy)
        if rr > r_esc:
            break
        t *= 1.5
    return t


def _build_topology(d: PlanarSubdivision):
    # group outgoing half-edges per vertex, CCW by departure direction
    for v in d.vertices.values():
        v.out = []
    to_inf: list[tuple[float, int]] = []
    for h in d.half.values():
        org = d.half_origin(h)
        if org is not None:
            d.vertices[org].out.append(h.hid)
        # halves with no origin come down from infinity; they take their
        # next pointer from the finite vertex at their head
    for v in d.vertices.values():
        v.out.sort(key=lambda hid: _angle_key(d, d.half[hid]))
    for h in d.half.values():
        head = d.half_head(h)
        if head is None:
            to_inf.append((d.edges[h.edge].esc, h.hid))
    to_inf.sort()

    for h in d.half.values():
        head = d.half_head(h)
        if head is not None:
            out = d.vertices[head].out
            twin_pos = out.index(h.twin)
            nxt = out[(twin_pos - 1) % len(out)]
            h.nxt = nxt
            d.half[nxt].prv = h.hid
        else:
            pos = next(i for i, (_, hid) in enumerate(to_inf) if hid == h.hid)
            nxt_up = to_inf[(pos + 1) % len(to_inf)][1]
            nxt = d.half[nxt_up].twin
            h.nxt = nxt
            d.half[nxt].prv = h.hid


def _angle_key(d: PlanarSubdivision, h: HalfEdge) -> float:
    v = d.half_out_dir(h)
    return math.atan2(v.y, v.x)


def _extract_faces(d: PlanarSubdivision):
    for f in d.faces.values():
        f.alive = False
    seen = set()
    for h in d.half.values():
        if not h.alive or h.hid in seen:
            continue
        orbit = []
        cur = h.hid
        steps = 0
        while cur not in seen:
            seen.add(cur)
            orbit.append(cur)
            cur = d.half[cur].nxt
            steps += 1
            if steps > len(d.half) + 2:
                raise RuntimeError("inconsistent topology: next-walk does not close")
        fid = d._new_id(3)
        labels = {d.half_label(d.half[hid]) for hid in orbit}
        label = next(iter(labels)) if len(labels) == 1 else None
        unb = any(d.half_head(d.half[hid]) is None for hid in orbit)
        d.faces[fid] = Face(fid, label, orbit, unb)
        for hid in orbit:
            d.half[hid].face = fid


# ---------------------------------------------------------------------------
# Merging
# ---------------------------------------------------------------------------

def merge_adjacent(d: PlanarSubdivision, eid: int,
                   refresh_faces: bool = True) -> None:
    """Remove edge ``eid``, unifying the faces on its two sides.

    The two sides must carry equal labels.  Isolated vertices left behind
    are dropped.  Face records are re-extracted afterwards unless the caller
    batches several removals.
    """
    e = d.edges[eid]
    if not e.alive:
        raise ValueError("edge already removed")
    hf_id, hr_id = d._halves_of(eid)
    hf, hr = d.half[hf_id], d.half[hr_id]
    if e.left != e.right and d.half[hf_id].face != d.half[hr_id].face:
        lf = d.faces.get(hf.face)
        rf = d.faces.get(hr.face)
        if lf is not None and rf is not None and lf.label != rf.label:
            raise ValueError(f"label-mismatch across edge {eid}")

    for h, g in ((hf, hr), (hr, hf)):
        # unlink h from its head vertex cycle
        pass
    p_f, n_f = d.half[hf.prv], d.half[hf.nxt]
    p_r, n_r = d.half[hr.prv], d.half[hr.nxt]
    if n_f.hid != hr.hid:
        p_r.nxt = n_f.hid
        n_f.prv = p_r.hid
    if n_r.hid != hf.hid:
        p_f.nxt = n_r.hid
        n_r.prv = p_f.hid
    for vid in (e.v0, e.v1):
        if vid is None:
            continue
        v = d.vertices[vid]
        v.out = [h for h in v.out if h not in (hf_id, hr_id)]
        if not v.out:
            del d.vertices[vid]
    e.alive = False
    hf.alive = False
    hr.alive = False
    del d.half[hf_id]
    del d.half[hr_id]
    del d.edges[eid]
    if refresh_faces:
        _extract_faces(d)


# ---------------------------------------------------------------------------
# Clipping a nearest diagram to a face
# ---------------------------------------------------------------------------

@dataclass
class Fragment:
    """The part of a nearest diagram strictly inside one face: edges with
    order-(k+1) labels, interior vertex data, and the boundary attachment
    points (shared with the parent as its next-order old vertices)."""

    edges: list[RawEdge]
    vertex_data: dict[int, VertexData]
    leaf_vids: set[int]
    interior_vids: set[int]

    def edge_count(self) -> int:
        return len(self.edges)


def clip_to_face(v1_diagram: PlanarSubdivision, parent: PlanarSubdivision,
                 face_id: int, registry=None) -> Fragment:
    """Clip ``v1_diagram`` (a nearest diagram of the face's boundary sites)
    to the interior of face ``face_id`` of ``parent``.

    Edges are cut at equidistance points with the face label's sites; kept
    portions are those whose midpoints locate inside the face.  Implemented
    in the construction engine to share its breakpoint machinery.
    """
    from .construct import clip_v1_to_face
    return clip_v1_to_face(v1_diagram, parent, face_id, registry)


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------

def _num(v):
    if v is None:
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _denum(v):
    if v == "inf":
        return INF
    if v == "-inf":
        return -INF
    return v


def _piece_to_dict(piece: Piece) -> dict:
    if isinstance(piece, LinePiece):
        return {"kind": "line", "p0": [piece.p0.x, piece.p0.y],
                "u": [piece.u.x, piece.u.y],
                "t0": _num(piece.t0), "t1": _num(piece.t1)}
    return {"kind": "arc", "focus": [piece.focus.x, piece.focus.y],
            "directrix": [piece.directrix.nx, piece.directrix.ny, piece.directrix.c],
            "d": [piece.d.x, piece.d.y],
            "t0": _num(piece.t0), "t1": _num(piece.t1)}


def _piece_from_dict(dd: dict) -> Piece:
    if dd["kind"] == "line":
        return LinePiece(Point2(*dd["p0"]), Point2(*dd["u"]),
                         _denum(dd["t0"]), _denum(dd["t1"]))
    arc = ArcPiece(Point2(*dd["focus"]), Line(*dd["directrix"]))
    arc.d = Point2(*dd["d"])
    arc.t0, arc.t1 = _denum(dd["t0"]), _denum(dd["t1"])
    return arc


def _label_to_list(label: Optional[Label]):
    if label is None:
        return None
    return [label[0], sorted(ids_of(label[1])), label[2]]


def _label_from_list(ll) -> Optional[Label]:
    if ll is None:
        return None
    return (ll[0], mask_of(ll[1]), ll[2])


def _subdivision_to_dict(d: PlanarSubdivision) -> dict:
    return {
        "k": d.k,
        "metric": d.metric.name(),
        "mode": d.S.mode,
        "segments": [[s.a.x, s.a.y, s.b.x, s.b.y] for s in d.S.sites],
        "site_ids": [s.id for s in d.S.sites],
        "vertices": [{"vid": v.vid, "point": [v.point.x, v.point.y],
                      "kind": v.kind, "features": sorted(v.features),
                      "radius": v.radius, "inside_count": v.inside_count,
                      "out": v.out}
                     for v in sorted(d.vertices.values(), key=lambda v: v.vid)],
        "edges": [{"eid": e.eid, "v0": e.v0, "v1": e.v1,
                   "pieces": [[_piece_to_dict(p), f1, f2] for (p, f1, f2) in e.pieces],
                   "left": _label_to_list(e.left), "right": _label_to_list(e.right),
                   "census_id": e.census_id, "esc": e.esc}
                  for e in sorted(d.alive_edges(), key=lambda e: e.eid)],
        "half_edges": [{"hid": h.hid, "edge": h.edge, "forward": h.forward,
                        "twin": h.twin, "next": h.nxt, "prev": h.prv,
                        "face": h.face}
                       for h in sorted(d.half.values(), key=lambda h: h.hid)
                       if h.alive],
        "faces": [{"fid": f.fid, "label": _label_to_list(f.label),
                   "half_edges": f.half_edges, "unbounded": f.unbounded}
                  for f in sorted(d.alive_faces(), key=lambda f: f.fid)],
    }


def save_json(d: PlanarSubdivision, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(d.to_json_dict(), fh, indent=1)


def load_json(path_or_dict) -> PlanarSubdivision:
    if isinstance(path_or_dict, dict):
        dd = path_or_dict
    else:
        with open(path_or_dict) as fh:
            dd = json.load(fh)
    from .kernel import SegmentSite
    sites = [SegmentSite(sid, Point2(x1, y1), Point2(x2, y2))
             for sid, (x1, y1, x2, y2) in zip(dd["site_ids"], dd["segments"])]
    S = SiteSet(sites, dd["mode"])
    d = PlanarSubdivision(S, Metric.from_name(dd["metric"]), dd["k"])
    for vv in dd["vertices"]:
        d.vertices[vv["vid"]] = Vertex(vv["vid"], Point2(*vv["point"]), vv["kind"],
                                       frozenset(vv["features"]), vv["radius"],
                                       vv["inside_count"], list(vv["out"]))
    for ee in dd["edges"]:
        d.edges[ee["eid"]] = Edge(ee["eid"], ee["v0"], ee["v1"],
                                  [(_piece_from_dict(p), f1, f2) for p, f1, f2 in ee["pieces"]],
                                  _label_from_list(ee["left"]),
                                  _label_from_list(ee["right"]),
                                  ee["census_id"], ee["esc"])
    for hh in dd["half_edges"]:
        d.half[hh["hid"]] = HalfEdge(hh["hid"], hh["edge"], hh["forward"],
                                     hh["twin"], hh["next"], hh["prev"], hh["face"])
    for ff in dd["faces"]:
        d.faces[ff["fid"]] = Face(ff["fid"], _label_from_list(ff["label"]),
                                  list(ff["half_edges"]), ff["unbounded"])
    d._next_ids = [max((v for v in d.vertices), default=-1) + 1,
                   max((e for e in d.edges), default=-1) + 1,
                   max((h for h in d.half), default=-1) + 1,
                   max((f for f in d.faces), default=-1) + 1]
    return d
