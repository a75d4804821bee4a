"""Named corpus: worked visibility examples and canonical (almost-)minimizers.

Every entry declares its expected certificate verdict and, when it carries a
set, a minimality status; the test suite verifies each declaration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import GraphDomain, VisibilityFunction
from .gridset import GridSet
from .polyset import PolySet
from .profiles import (BounceProfile, ConeProfile, PowerProfile, SinGraphProfile,
                       ZeroProfile)
from .util import PASS, FAIL

BUMP_LO, BUMP_MID, BUMP_HI = 0.3, 0.375, 0.45


@dataclass
class CorpusEntry:
    name: str
    dom: GraphDomain
    u: VisibilityFunction
    u_candidates: list = field(default_factory=list)
    expected_overall: str = PASS
    status: dict | None = None       # {"kind": "minimizer"|"lambda"|..., ...}
    loops: list | None = None

    def polyset(self) -> PolySet:
        if self.loops is None:
            raise ValueError(f"corpus entry {self.name!r} carries no set")
        return PolySet([np.asarray(l, dtype=float) for l in self.loops])

    def gridset(self, h: float = 1 / 256, half_width: float = 1.0) -> GridSet:
        poly = self.polyset()
        k = int(round(2 * half_width / h))
        origin = np.array([-half_width, -half_width])
        gs = GridSet(2, h, origin, np.zeros((k, k), dtype=bool))
        xs = gs.axis_centers(0)
        ys = gs.axis_centers(1)
        mg = np.meshgrid(xs, ys, indexing="ij")
        pts = np.stack([g.ravel() for g in mg], axis=1)
        gs.mask = poly.contains_points(pts).reshape(k, k)
        return gs

    def to_json(self) -> dict:
        out = {"name": self.name, "domain": self.dom.to_json(), "u": self.u.to_json(),
               "u_candidates": [c.to_json() for c in self.u_candidates],
               "expected_overall": self.expected_overall}
        if self.status is not None:
            out["status"] = self.status
        if self.loops is not None:
            out["loops"] = [[[float(x), float(y)] for x, y in loop] for loop in self.loops]
        return out


def _halfplane() -> GraphDomain:
    return GraphDomain(2, rho=1.0, m=1.0, profile=ZeroProfile())


def _quadrant_loops():
    return [[(0.0, 0.0), (0.0, 1.0), (-1.0, 1.0), (-1.0, 0.0)]]


def bump_amplitude(a: float) -> float:
    return a * BUMP_MID ** 2


def bump_excess_length(a: float) -> float:
    """Exact extra interface length added by the polygonal bump."""
    amp = bump_amplitude(a)
    half = (BUMP_HI - BUMP_LO) / 2
    return 2.0 * math.hypot(amp, half) - (BUMP_HI - BUMP_LO)


def _bumped_quadrant_loops(a: float):
    amp = bump_amplitude(a)
    return [[(0.0, 0.0), (0.0, BUMP_LO), (amp, BUMP_MID), (0.0, BUMP_HI),
             (0.0, 1.0), (-1.0, 1.0), (-1.0, 0.0)]]


def _disk_loops(r: float, cx: float, cy: float, k: int = 4096):
    th = 2 * math.pi * np.arange(k) / k
    return [np.stack([cx + r * np.cos(th), cy + r * np.sin(th)], axis=1)]


def make_example(name: str, **params) -> CorpusEntry:
    """Build a corpus entry by name; unknown names raise ValueError."""
    if name == "wedge":
        c = float(params.get("c", 1.0))
        dom = GraphDomain(2, rho=1.0, m=c + 1.0, profile=ConeProfile(c))
        E = None
        if params.get("with_set", True):
            E = [[(0.0, 0.0), (0.0, 1.0), (-1.0, 1.0), (-1.0, c)]]
        return CorpusEntry(name, dom, VisibilityFunction.zero(T=1.0),
                           expected_overall=PASS,
                           status={"kind": "minimizer"} if E else None, loops=E)
    if name == "halfplane":
        return CorpusEntry(name, _halfplane(), VisibilityFunction.zero(T=1.0),
                           expected_overall=PASS)
    if name == "c1beta":
        C = float(params.get("C", 1.0))
        beta = float(params.get("beta", 0.5))
        dom = GraphDomain(2, rho=1.0, m=2.0, profile=PowerProfile(c=1.0, p=1.0 + beta))
        return CorpusEntry(name, dom, VisibilityFunction.power(C, beta, T=1.0),
                           expected_overall=PASS)
    if name == "convex-paraboloid":
        dom = GraphDomain(2, rho=1.0, m=2.0, profile=PowerProfile(c=1.0, p=2.0))
        return CorpusEntry(name, dom, VisibilityFunction.quadratic(1.0, T=1.0),
                           expected_overall=PASS)
    if name == "bounce":
        dom = GraphDomain(2, rho=1.0, m=2.5, profile=BounceProfile())
        u = VisibilityFunction.quadratic(16.0, T=0.5)
        return CorpusEntry(name, dom, u,
                           u_candidates=[VisibilityFunction.quadratic(1.0, T=0.5)],
                           expected_overall=PASS)
    if name == "sin-graph":
        dom = GraphDomain(2, rho=0.45, m=0.5, profile=SinGraphProfile())
        cands = [VisibilityFunction.quadratic(C, T=0.45) for C in (1.0, 4.0, 16.0)]
        return CorpusEntry(name, dom, cands[-1], u_candidates=cands,
                           expected_overall=FAIL)
    if name == "quadrant":
        return CorpusEntry(name, _halfplane(), VisibilityFunction.zero(T=1.0),
                           expected_overall=PASS, status={"kind": "minimizer"},
                           loops=_quadrant_loops())
    if name == "shifted-halfplane":
        c = float(params.get("c", 0.5))
        loops = [[(-1.0, 0.0), (1.0, 0.0), (1.0, c), (-1.0, c)]]
        return CorpusEntry(name, _halfplane(), VisibilityFunction.zero(T=1.0),
                           expected_overall=PASS, status={"kind": "minimizer", "c": c},
                           loops=loops)
    if name == "bumped-quadrant":
        a = float(params.get("a", 0.5))
        return CorpusEntry(name, _halfplane(), VisibilityFunction.zero(T=1.0),
                           expected_overall=PASS,
                           status={"kind": "lambda", "a": a,
                                   "bump_excess": bump_excess_length(a),
                                   "bump_radii": [BUMP_LO, BUMP_HI]},
                           loops=_bumped_quadrant_loops(a))
    if name == "disk":
        r = float(params.get("r", 0.3))
        cx, cy = params.get("center", (0.0, 0.55))
        return CorpusEntry(name, _halfplane(), VisibilityFunction.zero(T=1.0),
                           expected_overall=PASS,
                           status={"kind": "lambda", "lambda": 1.0 / r, "r": r,
                                   "center": [cx, cy]},
                           loops=_disk_loops(r, cx, cy))
    raise ValueError(f"unknown corpus example {name!r}")


def corpus_names() -> list[str]:
    return ["wedge", "halfplane", "c1beta", "convex-paraboloid", "bounce",
            "sin-graph", "quadrant", "shifted-halfplane", "bumped-quadrant", "disk"]
