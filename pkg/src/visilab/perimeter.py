"""Relative perimeter and volume measurements, the reflection extension, the
off-centric conical competitor, and the BV coarea cross-check.

The relative perimeter P_Omega(E;A) never charges the wall: polygonal edges
lying on the graph of omega and grid faces whose midpoints sit within h/2 of
it are excluded by construction in the backends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gridset import GridSet, CutMetric, WEIGHT_SCALE, default_metric, domain_mask, \
    face_fields, grid_perimeter, grid_volume, omega_on_x
from .polyset import PolySet
from .regions import Region, WholeSpace, Ball, Box, _interval_subtract

CONTAIN_TOL_REL = 1e-12


class DegenerateRadiusError(ValueError):
    """The sphere trace is degenerate at this radius; retry with a jittered r."""


def _check_contained(E: PolySet, dom) -> None:
    tol = CONTAIN_TOL_REL * E.diameter()
    for loop in E.loops:
        om = omega_on_x(dom, loop[:, 0])
        if np.any(loop[:, 1] < om - tol):
            raise ValueError("set is not contained in its domain")


def perimeter_rel(E, dom, region: Region, metric: CutMetric | None = None) -> float:
    """P_Omega(E; A): reduced-boundary measure inside Omega cap A."""
    if isinstance(E, PolySet):
        if E.is_empty():
            return 0.0
        _check_contained(E, dom)
        return E.perimeter_in(dom, region)
    if isinstance(E, GridSet):
        om = domain_mask(E, dom)
        if np.any(E.mask & ~om):
            raise ValueError("set is not contained in its domain")
        return grid_perimeter(E, om, region, dom, metric or default_metric(E.n))
    if isinstance(E, SectorCompetitor):
        return E.perimeter_rel(dom, region)
    raise TypeError(f"unsupported set type {type(E).__name__}")


def volume(E, dom, region: Region) -> float:
    """|E cap Omega cap A| (E is contained in Omega by invariant)."""
    if isinstance(E, PolySet):
        if E.is_empty():
            return 0.0
        _check_contained(E, dom)
        return E.area_in(region)
    if isinstance(E, GridSet):
        om = domain_mask(E, dom)
        return grid_volume(E, om, region)[0]
    if isinstance(E, SectorCompetitor):
        return E.volume(region)
    raise TypeError(f"unsupported set type {type(E).__name__}")


# ---------------------------------------------------------------------------
# reflection extension through the boundary graph
# ---------------------------------------------------------------------------

def _reflect_point(dom, p: np.ndarray) -> np.ndarray:
    return np.array([p[0], 2.0 * float(omega_on_x(dom, np.array([p[0]]))[0]) - p[1]])


def _subdivide_at_breaks(dom, a: np.ndarray, b: np.ndarray):
    """Split [a, b] where |x| crosses a profile breakpoint, so omega is affine
    on each returned piece (exact for the piecewise-linear profiles)."""
    breaks = np.asarray(dom.profile.breakpoints(np.array([1.0])), dtype=float)
    ts = {0.0, 1.0}
    dx = b[0] - a[0]
    if abs(dx) > 0:
        for s in breaks:
            for target in (s, -s):
                t = (target - a[0]) / dx
                if 0.0 < t < 1.0:
                    ts.add(float(t))
        t0 = (0.0 - a[0]) / dx
        if 0.0 < t0 < 1.0:
            ts.add(float(t0))
    ts = sorted(ts)
    return [(a + t0 * (b - a), a + t1 * (b - a)) for t0, t1 in zip(ts[:-1], ts[1:])]


def _wall_intervals(E: PolySet, dom) -> list:
    """x-intervals of the edges of E lying on the boundary graph."""
    out = []
    for a, b in E.edges():
        if E.edge_on_wall(a, b, dom):
            out.append((min(a[0], b[0]), max(a[0], b[0])))
    return sorted(out)


def _interval_measure_symdiff(A: list, B: list, tol: float) -> float:
    """Length of the symmetric difference of two unions of intervals."""
    pts = sorted({v for iv in A + B for v in iv})
    if not pts:
        return 0.0
    grid = np.linspace(pts[0], pts[-1], 4096)
    mid = 0.5 * (grid[:-1] + grid[1:])
    da = np.zeros(len(mid), dtype=bool)
    db = np.zeros(len(mid), dtype=bool)
    for lo, hi in A:
        da |= (mid > lo) & (mid < hi)
    for lo, hi in B:
        db |= (mid > lo) & (mid < hi)
    return float(np.sum(da ^ db) * (grid[1] - grid[0]))


@dataclass
class ReflectedExtension:
    """E tilde = E cup (S(E) \\ Omega), with S(x) = (x', 2 omega(x') - x_n)."""

    E: object
    dom: object
    wall_mass: float
    reflected_pieces: list = field(default_factory=list)   # PolySet backend
    grid: GridSet | None = None                            # GridSet backend
    grid_mask_reflected: np.ndarray | None = None

    def lip_bound(self) -> float:
        L = self.dom.lipschitz
        return math.sqrt(3.0 + 6.0 * L * L)

    def perimeter_below(self, B: Region) -> float:
        """P(E tilde; B) for B below the wall (= the reflected perimeter there)."""
        if self.grid is not None:
            om = domain_mask(self.grid, self.dom)
            tilde = self.grid.copy_with(self.grid.mask | self.grid_mask_reflected)
            total = 0
            metric = default_metric(self.grid.n)
            for d, _, w_int, valid, sa, sb, mids in face_fields(
                    self.grid, ~om, B, None, metric):
                if mids is None:
                    continue
                cut = (tilde.mask[sa] ^ tilde.mask[sb]) & valid
                total += w_int * int(cut.sum())
            return total * self.grid.h ** (self.grid.n - 1) / WEIGHT_SCALE
        total = 0.0
        for p, q in self.reflected_pieces:
            L = float(np.linalg.norm(q - p))
            for t0, t1 in B.segment_intervals(p, q):
                total += L * (t1 - t0)
        return total

    def perimeter_of_E_in_SB(self, B: Box) -> float:
        """P(E; S(B)), measured as the length of {t : S(edge(t)) in B}."""
        if self.grid is not None:
            # reflect the box through the graph cellwise: measure E faces whose
            # reflected midpoints land in B
            gs = self.grid
            om = domain_mask(gs, self.dom)
            metric = default_metric(gs.n)
            total = 0
            for d, _, w_int, valid, sa, sb, mids in face_fields(gs, om, None, self.dom,
                                                                metric):
                if mids is None:
                    continue
                cut = (gs.mask[sa] ^ gs.mask[sb]) & valid
                if not cut.any():
                    continue
                sel = mids[cut]
                refl = sel.copy()
                refl[:, -1] = 2.0 * omega_on_x(self.dom, sel[:, 0]) - sel[:, -1]
                total += w_int * int(B.contains(refl).sum())
            return total * gs.h ** (gs.n - 1) / WEIGHT_SCALE
        total = 0.0
        for a, b in self.E.edges():
            if self.E.edge_on_wall(a, b, self.dom):
                continue
            for p, q in _subdivide_at_breaks(self.dom, a, b):
                sp, sq = _reflect_point(self.dom, p), _reflect_point(self.dom, q)
                L = float(np.linalg.norm(q - p))
                if np.linalg.norm(sq - sp) == 0:
                    continue
                for t0, t1 in B.segment_intervals(sp, sq):
                    total += L * (t1 - t0)
        return total

    def bound_rows(self, boxes: list) -> list:
        """Per-box check P(E tilde; B) <= Lip(S)^(n-1) P(E; S(B))."""
        C = self.lip_bound() ** ((self.grid.n if self.grid is not None else 2) - 1)
        rows = []
        for B in boxes:
            lhs = self.perimeter_below(B)
            rhs = C * self.perimeter_of_E_in_SB(B)
            rows.append({"box": B.to_json(), "lhs": lhs, "rhs": rhs,
                         "ok": bool(lhs <= rhs + 1e-9 * (1 + rhs))})
        return rows


def reflect_extend(E, dom) -> ReflectedExtension:
    """Extend E through the wall by the reflection S; report the wall mass."""
    if isinstance(E, PolySet):
        if not E.is_empty():
            _check_contained(E, dom)
            lateral = np.max([np.max(np.abs(l[:, 0])) for l in E.loops])
            if lateral > dom.rho * (1 - 1e-12):
                raise ValueError("material touches the lateral boundary of the cylinder")
        pieces = []
        for a, b in E.edges():
            if E.edge_on_wall(a, b, dom):
                continue
            for p, q in _subdivide_at_breaks(dom, a, b):
                pieces.append((_reflect_point(dom, p), _reflect_point(dom, q)))
        wall_E = _wall_intervals(E, dom)
        # S fixes graph points, so the reflected wall trace is the same list;
        # the interface mass is the measured symmetric difference
        mass = _interval_measure_symdiff(wall_E, list(wall_E), 1e-12)
        return ReflectedExtension(E, dom, mass, reflected_pieces=pieces)
    if isinstance(E, GridSet):
        om = domain_mask(E, dom)
        if np.any(E.mask & ~om):
            raise ValueError("set is not contained in its domain")
        gs = E
        cax = [gs.axis_centers(k) for k in range(gs.n)]
        mg = np.meshgrid(*cax, indexing="ij")
        centers = np.stack([g.ravel() for g in mg], axis=1)
        below = ~om.ravel()
        refl = centers[below].copy()
        refl[:, -1] = 2.0 * omega_on_x(dom, refl[:, 0]) - refl[:, -1]
        idx = gs.cell_index(refl)
        ok = np.all((idx >= 0) & (idx < np.asarray(gs.dims)[None, :]), axis=1)
        vals = np.zeros(len(refl), dtype=bool)
        flat = np.ravel_multi_index(tuple(idx[ok].T), gs.dims)
        vals[ok] = gs.mask.ravel()[flat]
        refl_mask = np.zeros(gs.dims, dtype=bool).ravel()
        refl_mask[below] = vals
        refl_mask = refl_mask.reshape(gs.dims)
        tilde = gs.mask | refl_mask
        # wall interface mass: cut faces straddling the graph
        metric = default_metric(gs.n)
        total = 0
        from .gridset import _slices
        for i, d in enumerate(metric.offsets):
            sa, sb = _slices(gs.dims, d)
            straddle = om[sa] ^ om[sb]
            cut = (tilde[sa] ^ tilde[sb]) & straddle
            total += metric.weights_int[i] * int(cut.sum())
        mass = total * gs.h ** (gs.n - 1) / WEIGHT_SCALE
        return ReflectedExtension(E, dom, mass, grid=gs, grid_mask_reflected=refl_mask)
    raise TypeError(f"unsupported set type {type(E).__name__}")


# ---------------------------------------------------------------------------
# off-centric conical competitor
# ---------------------------------------------------------------------------

@dataclass
class SectorCompetitor:
    """Cone over the trace E cap dB_r(V_r) from V_r inside the ball, E outside.

    Inside B_r(V_r) the reduced boundary is the set of radial segments at the
    trace-arc endpoints; the arcs themselves lie on the sphere and carry no
    relative perimeter in the open ball.
    """

    E: PolySet
    center: np.ndarray
    r: float
    arcs: list                     # (theta0, theta1) material arcs, theta in (-pi, pi]

    def _arc_endpoints(self):
        for t0, t1 in self.arcs:
            if t1 - t0 >= 2 * math.pi - 1e-12:
                continue   # full circle: the cone has no radial boundary
            yield t0
            yield t1

    def coincides_outside(self) -> bool:
        return True   # by construction the set equals E outside the ball

    def perimeter_rel(self, dom, region: Region) -> float:
        ball = Ball(self.r, tuple(self.center))
        total = 0.0
        # E's edges restricted outside the closed ball
        for a, b in self.E.edges():
            if self.E.edge_on_wall(a, b, dom):
                continue
            L = float(np.linalg.norm(b - a))
            inside = ball.segment_intervals(a, b)
            outside = _interval_subtract([(0.0, 1.0)], inside)
            for o0, o1 in outside:
                p = a + o0 * (b - a)
                q = a + o1 * (b - a)
                for t0, t1 in region.segment_intervals(p, q):
                    total += L * (o1 - o0) * (t1 - t0)
        # radial boundary segments inside the ball
        for th in self._arc_endpoints():
            z = self.center + self.r * np.array([math.cos(th), math.sin(th)])
            if self.E.edge_on_wall(self.center, z, dom):
                continue
            L = self.r
            for t0, t1 in region.segment_intervals(self.center, z):
                total += L * (t1 - t0)
        return total

    def volume(self, region: Region) -> float:
        if not isinstance(region, WholeSpace):
            raise NotImplementedError("competitor volume is reported on the whole window")
        ball = Ball(self.r, tuple(self.center))
        outside = self.E.area() - self.E._area_in_disk(ball)
        sectors = sum(0.5 * self.r ** 2 * ((t1 - t0) % (2 * math.pi))
                      for t0, t1 in self.arcs)
        return outside + sectors


def _circle_crossings(E: PolySet, c: np.ndarray, r: float):
    angles = []
    ball = Ball(r, tuple(c))
    for a, b in E.edges():
        iv = ball.segment_intervals(a, b)
        for t in {t for pair in iv for t in pair}:
            if 1e-12 < t < 1 - 1e-12:
                p = a + t * (b - a) - c
                angles.append(math.atan2(p[1], p[0]))
    return sorted(angles)


def conical_competitor(E, chart, dom, r: float):
    """Replace E inside B_r(V_r) by the cone from V_r over its sphere trace."""
    n = 2 if isinstance(E, PolySet) else E.n
    V = np.asarray(chart.center(r, n), dtype=float)
    if isinstance(E, PolySet):
        _check_contained(E, dom)
        tol = 1e-9 * r
        for loop in E.loops:
            d = np.abs(np.linalg.norm(loop - V[None, :], axis=1) - r)
            if np.any(d < tol):
                raise DegenerateRadiusError("a vertex lies on the trace sphere")
        for a, b in E.edges():
            dvec = b - a
            L2 = float(dvec @ dvec)
            t = float((V - a) @ dvec) / L2
            if 0 < t < 1:
                foot = a + t * dvec
                if abs(float(np.linalg.norm(foot - V)) - r) < tol:
                    raise DegenerateRadiusError("an edge is tangent to the trace sphere")
        angles = _circle_crossings(E, V, r)
        if not angles:
            # either the whole circle is material or void
            probe = V + np.array([r, 0.0])
            arcs = [(-math.pi, math.pi)] if bool(E.contains_points([probe])[0]) else []
            return SectorCompetitor(E, V, r, arcs)
        arcs = []
        k = len(angles)
        for i in range(k):
            t0 = angles[i]
            t1 = angles[(i + 1) % k] if i + 1 < k else angles[0] + 2 * math.pi
            mid = 0.5 * (t0 + t1)
            probe = V + r * np.array([math.cos(mid), math.sin(mid)])
            if bool(E.contains_points([probe])[0]):
                arcs.append((t0, t1))
        return SectorCompetitor(E, V, r, arcs)
    if isinstance(E, GridSet):
        gs = E
        om = domain_mask(gs, dom)
        cax = [gs.axis_centers(k) for k in range(gs.n)]
        mg = np.meshgrid(*cax, indexing="ij")
        centers = np.stack([g.ravel() for g in mg], axis=1)
        dist = np.linalg.norm(centers - V[None, :], axis=1)
        inside = (dist < r) & (dist > 0)
        ring = np.abs(dist - r) <= gs.h
        if int((ring & om.ravel()).sum()) < 4:
            raise DegenerateRadiusError("sphere trace resolves to fewer than 4 cells")
        Y = V[None, :] + (centers[inside] - V[None, :]) * (r / dist[inside])[:, None]
        idx = gs.cell_index(Y)
        ok = np.all((idx >= 0) & (idx < np.asarray(gs.dims)[None, :]), axis=1)
        vals = np.zeros(int(inside.sum()), dtype=bool)
        flat = np.ravel_multi_index(tuple(idx[ok].T), gs.dims)
        vals[ok] = (gs.mask & om).ravel()[flat]
        newmask = gs.mask.copy().ravel()
        newmask[inside] = vals
        newmask = newmask.reshape(gs.dims) & om
        return gs.copy_with(newmask)
    raise TypeError(f"unsupported set type {type(E).__name__}")


# ---------------------------------------------------------------------------
# BV coarea cross-check
# ---------------------------------------------------------------------------

def coarea_check(carrier: GridSet, f: np.ndarray, dom, region: Region,
                 metric: CutMetric | None = None):
    """(|Df|(Om cap A), int_R P(E_t; Om cap A) dt) for integer-valued grid maps.

    Both sides are integer combinations of the same face weights, so the
    comparison is exact whenever f takes integer values.
    """
    metric = metric or default_metric(carrier.n)
    om = domain_mask(carrier, dom)
    f = np.asarray(f)
    if not np.issubdtype(f.dtype, np.integer):
        raise ValueError("coarea_check expects an integer-valued map")
    tv_int = 0
    for d, _, w_int, valid, sa, sb, _ in face_fields(carrier, om, region, dom, metric):
        if valid.any():
            tv_int += w_int * int(np.abs(f[sa].astype(np.int64)
                                         - f[sb].astype(np.int64))[valid].sum())
    values = np.unique(f[om]) if om.any() else np.unique(f)
    co_int = 0
    for k in range(len(values) - 1):
        thr = values[k]
        level = f > thr
        p_int = 0
        for d, _, w_int, valid, sa, sb, _ in face_fields(carrier, om, region, dom, metric):
            if valid.any():
                p_int += w_int * int((level[sa] ^ level[sb])[valid].sum())
        co_int += int(values[k + 1] - values[k]) * p_int
    scale = carrier.h ** (carrier.n - 1) / WEIGHT_SCALE
    return tv_int * scale, co_int * scale, tv_int, co_int
