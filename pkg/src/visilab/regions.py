"""Measurement regions: balls (centered or off-centric), annuli, half-spaces.

Each region can test point membership (vectorized) and clip a segment to the
parameter intervals lying inside it, which is what the exact polygonal
measurements consume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _interval_intersect(a: list, b: list) -> list:
    out = []
    for a0, a1 in a:
        for b0, b1 in b:
            lo, hi = max(a0, b0), min(a1, b1)
            if hi > lo:
                out.append((lo, hi))
    return out


def _interval_subtract(a: list, b: list) -> list:
    """Intervals of a not covered by b (both sorted lists of (lo, hi))."""
    out = list(a)
    for b0, b1 in b:
        nxt = []
        for a0, a1 in out:
            if b1 <= a0 or b0 >= a1:
                nxt.append((a0, a1))
                continue
            if a0 < b0:
                nxt.append((a0, b0))
            if b1 < a1:
                nxt.append((b1, a1))
        out = nxt
    return out


class Region:
    def contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def segment_intervals(self, p: np.ndarray, q: np.ndarray) -> list:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class WholeSpace(Region):
    def contains(self, pts):
        return np.ones(len(np.atleast_2d(pts)), dtype=bool)

    def segment_intervals(self, p, q):
        return [(0.0, 1.0)]

    def to_json(self):
        return {"kind": "all"}


@dataclass(frozen=True)
class Ball(Region):
    r: float
    center: tuple = None  # None means the origin

    def _c(self, n: int) -> np.ndarray:
        return np.zeros(n) if self.center is None else np.asarray(self.center, dtype=float)

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = pts - self._c(pts.shape[1])[None, :]
        return (d * d).sum(axis=1) < self.r * self.r

    def segment_intervals(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        c = self._c(len(p))
        d = q - p
        f = p - c
        A = float(d @ d)
        B = 2.0 * float(f @ d)
        C = float(f @ f) - self.r * self.r
        if A == 0.0:
            return [(0.0, 1.0)] if C < 0 else []
        disc = B * B - 4 * A * C
        if disc <= 0:
            return []
        sq = np.sqrt(disc)
        t0, t1 = (-B - sq) / (2 * A), (-B + sq) / (2 * A)
        lo, hi = max(t0, 0.0), min(t1, 1.0)
        return [(lo, hi)] if hi > lo else []

    def to_json(self):
        out = {"kind": "ball", "r": self.r}
        if self.center is not None:
            out["center"] = [float(v) for v in self.center]
        return out


@dataclass(frozen=True)
class Annulus(Region):
    """outer \\ closure(inner); the off-centric balls are nested, so this is
    the foliation annulus when both balls come from the same chart."""

    inner: Ball
    outer: Ball

    def contains(self, pts):
        return self.outer.contains(pts) & ~self.inner.contains(pts)

    def segment_intervals(self, p, q):
        return _interval_subtract(self.outer.segment_intervals(p, q),
                                  self.inner.segment_intervals(p, q))

    def to_json(self):
        return {"kind": "annulus", "inner": self.inner.to_json(), "outer": self.outer.to_json()}


@dataclass(frozen=True)
class HalfSpace(Region):
    """{x : <normal, x> < offset}."""

    normal: tuple
    offset: float

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        nrm = np.asarray(self.normal, dtype=float)
        return pts @ nrm < self.offset

    def segment_intervals(self, p, q):
        nrm = np.asarray(self.normal, dtype=float)
        fp = float(np.dot(nrm, p)) - self.offset
        fq = float(np.dot(nrm, q)) - self.offset
        if fp < 0 and fq < 0:
            return [(0.0, 1.0)]
        if fp >= 0 and fq >= 0:
            return []
        t = fp / (fp - fq)
        return [(0.0, t)] if fp < 0 else [(t, 1.0)]

    def to_json(self):
        return {"kind": "halfspace", "normal": [float(v) for v in self.normal],
                "offset": self.offset}


@dataclass(frozen=True)
class Box(Region):
    """Axis-aligned open box, used for reflection bound checks."""

    lo: tuple
    hi: tuple

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        return np.all((pts > lo[None, :]) & (pts < hi[None, :]), axis=1)

    def segment_intervals(self, p, q):
        # clip against the 2n half-space constraints
        iv = [(0.0, 1.0)]
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        for k in range(len(self.lo)):
            for sign, off in ((1.0, self.hi[k]), (-1.0, -self.lo[k])):
                fp = sign * p[k] - off
                fq = sign * q[k] - off
                if fp < 0 and fq < 0:
                    cur = [(0.0, 1.0)]
                elif fp >= 0 and fq >= 0:
                    cur = []
                else:
                    t = fp / (fp - fq)
                    cur = [(0.0, t)] if fp < 0 else [(t, 1.0)]
                iv = _interval_intersect(iv, cur)
        return iv

    def to_json(self):
        return {"kind": "box", "lo": [float(v) for v in self.lo],
                "hi": [float(v) for v in self.hi]}


def offcentric_ball(chart, r: float, n: int = 2) -> Ball:
    return Ball(r, tuple(chart.center(r, n)))


def offcentric_annulus(chart, r1: float, r2: float, n: int = 2) -> Annulus:
    return Annulus(offcentric_ball(chart, r1, n), offcentric_ball(chart, r2, n))


def region_from_json(desc: dict) -> Region:
    kind = desc["kind"]
    if kind == "all":
        return WholeSpace()
    if kind == "ball":
        c = desc.get("center")
        return Ball(float(desc["r"]), tuple(c) if c is not None else None)
    if kind == "annulus":
        return Annulus(region_from_json(desc["inner"]), region_from_json(desc["outer"]))
    if kind == "halfspace":
        return HalfSpace(tuple(desc["normal"]), float(desc["offset"]))
    if kind == "box":
        return Box(tuple(desc["lo"]), tuple(desc["hi"]))
    raise ValueError(f"unknown region kind {kind!r}")
