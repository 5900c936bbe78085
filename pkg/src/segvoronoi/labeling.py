"""Order-k classification of points: the k-nearest-site oracle.

Labels are hashable triples ``(type, mask, rep)`` where ``mask`` is a bitmask
of site ids.  A Type-1 label has exactly k bits and no representative; a
Type-2 label (planar-straight-line-graph inputs only) carries more than k
sites plus the identifier of the shared endpoint whose touching disk defines
the region.  Points sitting on a diagram edge or vertex classify as ``None``
rather than being forced into either side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import geom
from .kernel import EUCLIDEAN, Metric, Point2, SegmentSite, SiteSet, distance_matrix

Label = tuple  # ("T1", mask, None) | ("T2", mask, rep_fid)


def mask_of(ids) -> int:
    m = 0
    for i in ids:
        m |= 1 << int(i)
    return m


def ids_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def label_sites(label: Label) -> tuple[int, ...]:
    return ids_of(label[1])


def label_is_type2(label: Label) -> bool:
    return label[0] == "T2"


@dataclass
class OracleResult:
    """Detailed k-nearest answer at one point."""

    point: Point2
    radius: float
    S_k: frozenset[int]
    proper: bool
    touching: Optional[geom.Feature]

    @property
    def tied(self) -> bool:
        return len(self.S_k) > 0 and self.touching is None


class Oracle:
    """Brute-force k-nearest classifier over a fixed site set and metric."""

    def __init__(self, S: SiteSet, metric: Metric = EUCLIDEAN):
        self.S = S
        self.metric = metric
        self.tol = S.tol
        self.n = len(S.sites)
        self.site_ids = np.array([s.id for s in S.sites])
        self.features = geom.site_features(S)
        self._big = self.n > 62

    # -- raw distances ------------------------------------------------------

    def dist_rows(self, pts: np.ndarray) -> np.ndarray:
        return distance_matrix(pts, self.S.sites, self.metric)

    def order_info(self, pts: np.ndarray):
        D = self.dist_rows(pts)
        order = np.argsort(D, axis=1, kind="stable")
        Ds = np.take_along_axis(D, order, axis=1)
        return D, order, Ds

    def kth_gap(self, pts: np.ndarray, k: int) -> np.ndarray:
        """Gap between the k-th and (k+1)-th site distances (inf at k = n)."""
        _, _, Ds = self.order_info(pts)
        if k >= self.n:
            return np.full(len(Ds), np.inf)
        return Ds[:, k] - Ds[:, k - 1]

    def off_tube(self, pts: np.ndarray, k: int) -> np.ndarray:
        return self.kth_gap(pts, k) > self.tol.tube

    # -- labels -------------------------------------------------------------

    def label_batch(self, pts: np.ndarray, ks: Sequence[int]) -> dict[int, list[Optional[Label]]]:
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        D, order, Ds = self.order_info(pts)
        tie = self.tol.eps * 4.0
        out: dict[int, list[Optional[Label]]] = {}
        ids_sorted = self.site_ids[order]
        for k in ks:
            if not (1 <= k <= self.n):
                raise ValueError(f"k={k} out of range 1..{self.n}")
            radius = Ds[:, k - 1]
            within = D <= (radius + tie)[:, None]
            counts = within.sum(axis=1)
            labels: list[Optional[Label]] = []
            for i in range(len(pts)):
                c = int(counts[i])
                if c == k:
                    labels.append(("T1", mask_of(ids_sorted[i, :k]), None))
                elif self.S.mode == "pslg" and c > k:
                    labels.append(self._type2_label(pts[i], float(radius[i]),
                                                    D[i], within[i]))
                else:
                    labels.append(None)
            out[k] = labels
        return out

    def label_at(self, x, k: int) -> Optional[Label]:
        return self.label_batch(np.array([x], dtype=float), [k])[k][0]

    def _type2_label(self, p, radius: float, drow, within) -> Optional[Label]:
        touch = self._touching_features(p, radius)
        if len(touch) != 1:
            return None
        f = touch[0]
        if not (isinstance(f, geom.PointFeature) and f.is_shared):
            return None
        mask = mask_of(self.site_ids[within])
        return ("T2", mask, f.fid)

    def _touching_features(self, p, radius: float) -> list[geom.Feature]:
        """Deduplicated elementary sites touching the disk boundary at p.

        Open interiors touch only where the perpendicular foot falls strictly
        inside the segment; a foot clamped to an endpoint is the endpoint's
        touch, not the interior's.
        """
        tie = self.tol.eps * 4.0
        px, py = float(p[0]), float(p[1])
        out = []
        for f in self.features:
            if isinstance(f, geom.PointFeature):
                d = math.hypot(px - f.point.x, py - f.point.y)
                if abs(d - radius) <= tie:
                    out.append(f)
            else:
                s = f.line.signed(px, py)
                if abs(abs(s) - radius) > tie:
                    continue
                vx, vy = f.b.x - f.a.x, f.b.y - f.a.y
                L2 = vx * vx + vy * vy
                t = ((px - f.a.x) * vx + (py - f.a.y) * vy) / L2
                margin = self.tol.eps / math.sqrt(L2)
                if margin < t < 1.0 - margin:
                    out.append(f)
        return out

    def knearest(self, x, k: int) -> OracleResult:
        """The order-k disk at ``x``: radius, site set, properness."""
        pts = np.array([x], dtype=float)
        D, order, Ds = self.order_info(pts)
        radius = float(Ds[0, k - 1])
        tie = self.tol.eps * 4.0
        sk = frozenset(int(self.site_ids[j]) for j in range(self.n)
                       if D[0, j] <= radius + tie)
        if self.metric.kind == "euclidean":
            touch = self._touching_features(pts[0], radius)
        else:
            touch = []
        proper = len(touch) == 1
        return OracleResult(Point2(float(x[0]), float(x[1])), radius, sk,
                            proper, touch[0] if proper else None)

    # -- misc ---------------------------------------------------------------

    def feature_by_fid(self, fid: int) -> geom.Feature:
        for f in self.features:
            if f.fid == fid:
                return f
        raise KeyError(fid)

    def shared_points(self) -> list[geom.PointFeature]:
        return [f for f in self.features
                if isinstance(f, geom.PointFeature) and f.is_shared]


def label_repr(label: Optional[Label], oracle: Optional[Oracle] = None) -> str:
    if label is None:
        return "(boundary)"
    kind, mask, rep = label
    sites = ",".join(str(i) for i in ids_of(mask))
    if kind == "T1":
        return "{" + sites + "}"
    return "{" + sites + f"|p{rep}" + "}"
