"""Exact 2-d polygonal sets of finite perimeter.

A PolySet is a list of simple polygonal loops with the material on the left
(outer loops counter-clockwise, holes clockwise). The reduced boundary is the
union of open edges with the inner normal obtained by rotating the edge
direction by +90 degrees. All lengths and areas are computed by exact
clipping: segments against balls/half-spaces/annuli, areas against disks by
the per-edge triangle/arc decomposition of Green's theorem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .regions import Region, WholeSpace, Ball, Annulus, HalfSpace, Box

SNAP_REL = 1e-14
EDGE_MIN_REL = 1e-12
WALL_TOL_REL = 1e-9


@dataclass
class PolySet:
    loops: list   # list of (k, 2) float arrays

    def __post_init__(self):
        clean = []
        diam = self._raw_diameter()
        snap = SNAP_REL * max(diam, 1.0)
        for loop in self.loops:
            arr = np.asarray(loop, dtype=float)
            if len(arr) == 0:
                continue
            if np.allclose(arr[0], arr[-1], atol=snap, rtol=0):
                arr = arr[:-1]
            if len(arr) == 0:
                continue
            keep = [arr[0]]
            for v in arr[1:]:
                if np.linalg.norm(v - keep[-1]) > snap:
                    keep.append(v)
            if len(keep) >= 3 and np.linalg.norm(keep[0] - keep[-1]) <= snap:
                keep = keep[:-1]
            if len(keep) >= 3:
                clean.append(np.asarray(keep))
        self.loops = clean
        d = self.diameter()
        for loop in self.loops:
            edges = np.linalg.norm(np.roll(loop, -1, axis=0) - loop, axis=1)
            if np.any(edges <= EDGE_MIN_REL * d):
                raise ValueError("degenerate edge below 1e-12 * diameter")

    def _raw_diameter(self) -> float:
        pts = [np.asarray(l, dtype=float) for l in self.loops if len(l)]
        if not pts:
            return 1.0
        allp = np.vstack(pts)
        span = allp.max(axis=0) - allp.min(axis=0)
        return float(np.linalg.norm(span)) or 1.0

    def diameter(self) -> float:
        return self._raw_diameter()

    def is_empty(self) -> bool:
        return len(self.loops) == 0

    # -- geometry -----------------------------------------------------------

    def edges(self):
        for loop in self.loops:
            for i in range(len(loop)):
                yield loop[i], loop[(i + 1) % len(loop)]

    @staticmethod
    def inner_normal(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d = b - a
        n = np.array([-d[1], d[0]])
        return n / np.linalg.norm(n)

    def area(self) -> float:
        total = 0.0
        for loop in self.loops:
            x, y = loop[:, 0], loop[:, 1]
            total += 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
        return total

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        """Winding-number membership: material where the total winding is positive."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        wind = np.zeros(len(pts), dtype=int)
        for loop in self.loops:
            a = loop
            b = np.roll(loop, -1, axis=0)
            for k in range(len(loop)):
                ax, ay = a[k]
                bx, by = b[k]
                up = (ay <= pts[:, 1]) & (by > pts[:, 1])
                dn = (ay > pts[:, 1]) & (by <= pts[:, 1])
                if not (up.any() or dn.any()):
                    continue
                cross = (bx - ax) * (pts[:, 1] - ay) - (pts[:, 0] - ax) * (by - ay)
                wind += np.where(up & (cross > 0), 1, 0)
                wind -= np.where(dn & (cross < 0), 1, 0)
        return wind > 0

    def scale(self, t: float) -> "PolySet":
        return PolySet([loop * t for loop in self.loops])

    def translate(self, v) -> "PolySet":
        v = np.asarray(v, dtype=float)
        return PolySet([loop + v[None, :] for loop in self.loops])

    # -- wall handling ------------------------------------------------------

    def _wall_tol(self) -> float:
        return WALL_TOL_REL * self.diameter()

    def edge_on_wall(self, a: np.ndarray, b: np.ndarray, dom) -> bool:
        """An edge sits on the boundary graph when its endpoints and midpoint do."""
        if dom is None:
            return False
        tol = self._wall_tol()
        for p in (a, b, 0.5 * (a + b)):
            s = abs(p[0])
            nu = np.array([1.0]) if p[0] >= 0 else np.array([-1.0])
            if abs(p[1] - float(dom.omega(s, nu))) > tol:
                return False
        return True

    # -- measurements -------------------------------------------------------

    def perimeter_in(self, dom, region: Region) -> float:
        """Length of the reduced boundary inside Omega cap region (wall excluded)."""
        total = 0.0
        for a, b in self.edges():
            if self.edge_on_wall(a, b, dom):
                continue
            L = float(np.linalg.norm(b - a))
            for t0, t1 in region.segment_intervals(a, b):
                total += L * (t1 - t0)
        return total

    def boundary_elements(self, dom, region: Region, max_len: float | None = None):
        """(midpoints, inner normals, lengths) of clipped sub-edges, optionally subdivided."""
        mids, norms, lens = [], [], []
        for a, b in self.edges():
            if self.edge_on_wall(a, b, dom):
                continue
            L = float(np.linalg.norm(b - a))
            nrm = self.inner_normal(a, b)
            for t0, t1 in region.segment_intervals(a, b):
                seg = L * (t1 - t0)
                if seg <= 0:
                    continue
                k = 1 if max_len is None else max(1, int(math.ceil(seg / max_len)))
                ts = np.linspace(t0, t1, k + 1)
                for j in range(k):
                    tm = 0.5 * (ts[j] + ts[j + 1])
                    mids.append(a + tm * (b - a))
                    norms.append(nrm)
                    lens.append(L * (ts[j + 1] - ts[j]))
        if not mids:
            return np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0)
        return np.asarray(mids), np.asarray(norms), np.asarray(lens)

    def area_in(self, region: Region) -> float:
        """Exact area of the material inside the region."""
        if isinstance(region, WholeSpace):
            return self.area()
        if isinstance(region, Ball):
            return self._area_in_disk(region)
        if isinstance(region, Annulus):
            return self._area_in_disk(region.outer) - self._area_in_disk(region.inner)
        if isinstance(region, HalfSpace):
            return self._clip_halfspace(region).area()
        if isinstance(region, Box):
            clipped = self
            lo, hi = region.lo, region.hi
            for k in range(2):
                e = np.zeros(2)
                e[k] = 1.0
                clipped = clipped._clip_halfspace(HalfSpace(tuple(e), hi[k]))
                clipped = clipped._clip_halfspace(HalfSpace(tuple(-e), -lo[k]))
            return clipped.area()
        raise NotImplementedError(f"area in {type(region).__name__}")

    def _area_in_disk(self, ball: Ball) -> float:
        c = np.zeros(2) if ball.center is None else np.asarray(ball.center, dtype=float)
        r = ball.r
        total = 0.0
        for a, b in self.edges():
            iv = ball.segment_intervals(a, b)
            pieces = []
            if iv:
                t0, t1 = iv[0]
                if t0 > 0:
                    pieces.append((0.0, t0, False))
                pieces.append((t0, t1, True))
                if t1 < 1:
                    pieces.append((t1, 1.0, False))
            else:
                pieces.append((0.0, 1.0, False))
            for t0, t1, inside in pieces:
                p0 = a + t0 * (b - a) - c
                p1 = a + t1 * (b - a) - c
                if inside:
                    total += 0.5 * (p0[0] * p1[1] - p0[1] * p1[0])
                else:
                    ang = math.atan2(p0[0] * p1[1] - p0[1] * p1[0], float(p0 @ p1))
                    total += 0.5 * r * r * ang
        return total

    def _clip_halfspace(self, hs: HalfSpace) -> "PolySet":
        """Sutherland-Hodgman clip of every loop against {<n,x> < c}."""
        nrm = np.asarray(hs.normal, dtype=float)
        c = hs.offset
        out_loops = []
        for loop in self.loops:
            out = []
            k = len(loop)
            for i in range(k):
                cur, nxt = loop[i], loop[(i + 1) % k]
                fc, fn = float(nrm @ cur) - c, float(nrm @ nxt) - c
                if fc < 0:
                    out.append(cur)
                    if fn >= 0:
                        t = fc / (fc - fn)
                        out.append(cur + t * (nxt - cur))
                elif fn < 0:
                    t = fc / (fc - fn)
                    out.append(cur + t * (nxt - cur))
            if len(out) >= 3:
                out_loops.append(np.asarray(out))
        if not out_loops:
            return PolySet([])
        return PolySet(out_loops)

    # -- i/o ------------------------------------------------------------------

    def to_json(self) -> dict:
        return {"loops": [[[float(x), float(y)] for x, y in loop] for loop in self.loops]}

    @staticmethod
    def from_json(desc: dict) -> "PolySet":
        return PolySet([np.asarray(loop, dtype=float) for loop in desc["loops"]])


def domain_polyset(dom, lo, hi, curved_samples: int = 4096) -> PolySet:
    """Omega cap box as a PolySet (exact for piecewise-linear profiles).

    The lower boundary follows the graph of omega between lo[0] and hi[0]
    (split at profile breakpoints; sampled for curved profiles), the rest of
    the loop runs along the box.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    nu_p, nu_m = np.array([1.0]), np.array([-1.0])
    breaks = set()
    bp = np.asarray(dom.profile.breakpoints(nu_p), dtype=float)
    if len(bp):
        for s in bp:
            if 0 < s < hi[0]:
                breaks.add(float(s))
            if 0 < s < -lo[0]:
                breaks.add(float(-s))
    else:
        name = getattr(dom.profile, "name", "")
        if name not in ("zero", "linear", "cone", "directional-cone"):
            for s in np.linspace(lo[0], hi[0], curved_samples):
                breaks.add(float(s))
    xs = sorted({float(lo[0]), float(hi[0]), 0.0} | breaks)
    xs = [x for x in xs if lo[0] <= x <= hi[0]]
    graph = []
    for x in xs:
        s = abs(x)
        nu = nu_p if x >= 0 else nu_m
        graph.append([x, float(dom.omega(s, nu))])
    loop = graph + [[hi[0], hi[1]], [lo[0], hi[1]]]
    return PolySet([np.asarray(loop)])
