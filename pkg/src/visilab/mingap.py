"""Exact discrete minimality gaps, almost-minimality profiles, density reports.

The relative perimeter of a grid set is a cut function over the calibrated
face weights, so the best competitor pinned outside the window is an exact
binary minimum: a min cut in the adjacency graph with integer capacities
(weights scaled by 2^40). Psi = P(E;A) - min_F P(F;A) is computed entirely
in the integer domain; the only float appears when scaling back by
h^(n-1) / 2^40.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .gridset import GridSet, CutMetric, WEIGHT_SCALE, face_fields, domain_mask, \
    grid_perimeter, grid_volume, default_metric
from .maxflow import solve_min_cut
from .regions import Ball, Region
from .util import trapezoid

BRUTE_FORCE_LIMIT = 22


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass
class MinGapProblem:
    """Gap problem: E on its grid, window A, cells of Omega outside A pinned.

    A cell is free only when every face it can emit lands its midpoint inside
    A; this keeps the min-cut objective identical to P_Omega(.;A) restricted
    to competitor-dependent faces and makes window monotonicity exact.
    """

    E: GridSet
    dom: object
    region: Region
    metric: CutMetric | None = None
    om: np.ndarray | None = None

    def __post_init__(self):
        if self.metric is None:
            self.metric = default_metric(self.E.n)
        if self.om is None:
            self.om = domain_mask(self.E, self.dom)

    def free_mask(self) -> np.ndarray:
        gs = self.E
        cax = [gs.axis_centers(k) for k in range(gs.n)]
        mg = np.meshgrid(*cax, indexing="ij")
        centers = np.stack([g.ravel() for g in mg], axis=1)
        free = self.om.copy().ravel()
        for d in self.metric.offsets:
            for sgn in (1.0, -1.0):
                mid = centers + (0.5 * sgn * gs.h) * np.asarray(d, dtype=float)[None, :]
                free &= self.region.contains(mid)
        free = free.reshape(gs.dims)
        # pinned layer must live inside the grid box
        reach = self.metric.max_reach
        rim = np.zeros(gs.dims, dtype=bool)
        for k in range(gs.n):
            sl = [slice(None)] * gs.n
            sl[k] = slice(0, reach)
            rim[tuple(sl)] = True
            sl[k] = slice(gs.dims[k] - reach, gs.dims[k])
            rim[tuple(sl)] = True
        if np.any(free & rim):
            raise ValueError("window is not compactly inside the grid box")
        return free

    def assemble(self):
        """Faces split by incidence: internal arcs, terminal sums, constants."""
        gs = self.E
        free = self.free_mask()
        nfree = int(free.sum())
        idx = np.full(gs.dims, -1, dtype=np.int64)
        idx[free] = np.arange(nfree)
        S, T = nfree, nfree + 1
        E = gs.mask
        us, vs, cs = [], [], []
        src = np.zeros(nfree, dtype=np.int64)
        snk = np.zeros(nfree, dtype=np.int64)
        cut_e = 0
        const = 0
        nfaces = 0
        for d, _, w_int, valid, sa, sb, _ in face_fields(gs, self.om, self.region,
                                                         self.dom, self.metric):
            if not valid.any():
                continue
            cut = E[sa] ^ E[sb]
            cut_e += w_int * int(cut[valid].sum())
            nfaces += int(valid.sum())
            fa = free[sa][valid]
            fb = free[sb][valid]
            ia = idx[sa][valid]
            ib = idx[sb][valid]
            Ea = E[sa][valid]
            Eb = E[sb][valid]
            both = fa & fb
            us.append(ia[both])
            vs.append(ib[both])
            cs.append(np.full(int(both.sum()), w_int, dtype=np.int64))
            onlya = fa & ~fb
            np.add.at(src, ia[onlya & Eb], w_int)
            np.add.at(snk, ia[onlya & ~Eb], w_int)
            onlyb = ~fa & fb
            np.add.at(src, ib[onlyb & Ea], w_int)
            np.add.at(snk, ib[onlyb & ~Ea], w_int)
            neither = ~fa & ~fb
            const += w_int * int((cut[valid] & neither).sum())
        if us:
            us = np.concatenate(us)
            vs = np.concatenate(vs)
            cs = np.concatenate(cs)
        else:
            us = np.zeros(0, np.int64)
            vs = np.zeros(0, np.int64)
            cs = np.zeros(0, np.int64)
        return free, idx, nfree, (us, vs, cs, src, snk), cut_e, const, nfaces


@dataclass
class MinGapResult:
    psi_int: int
    psi: float
    competitor: GridSet
    nodes: int
    arcs: int
    flow: int
    cut_e_int: int
    rounding_budget: float

    def to_json(self) -> dict:
        return {"psi": self.psi, "psi_int": self.psi_int, "nodes": self.nodes,
                "arcs": self.arcs, "flow": self.flow,
                "rounding_budget": self.rounding_budget}


def minimality_gap(p: MinGapProblem) -> MinGapResult:
    """Psi = P(E;A) - min_F P(F;A), exact min cut over integer weights."""
    gs = p.E
    free, idx, nfree, (us, vs, cs, src, snk), cut_e, const, nfaces = p.assemble()
    if nfree == 0:
        raise ValueError("window contains no free cell")
    S, T = nfree, nfree + 1
    sidx = np.nonzero(src)[0]
    tidx = np.nonzero(snk)[0]
    U = np.concatenate([us, np.full(len(sidx), S, np.int64), tidx])
    V = np.concatenate([vs, sidx, np.full(len(tidx), T, np.int64)])
    C = np.concatenate([cs, src[sidx], snk[tidx]])
    CR = np.concatenate([cs, np.zeros(len(sidx), np.int64), np.zeros(len(tidx), np.int64)])
    flow, source_side = solve_min_cut(U, V, C, CR, nfree + 2, S, T)
    psi_int = cut_e - (flow + const)
    scale = gs.h ** (gs.n - 1) / WEIGHT_SCALE
    fm = gs.mask.copy()
    fm[free] = source_side[idx[free]]
    # weight rounding error: half an integer ulp per face
    budget = nfaces * 0.5 * scale
    return MinGapResult(int(psi_int), float(psi_int) * scale, gs.copy_with(fm),
                        nfree, int(len(U)), int(flow), int(cut_e), budget)


@njit(cache=True)
def _brute_min(nfree, fa, fb, fw, init_state):
    """Exhaustive minimum over 2^nfree assignments by Gray-code flips.

    fa, fb index cells; fb >= nfree encodes a pinned value (nfree -> 0,
    nfree+1 -> 1). Returns (min cost, best assignment bits).
    """
    m = len(fa)
    vals = np.zeros(nfree + 2, np.int64)
    vals[nfree] = 0
    vals[nfree + 1] = 1
    for i in range(nfree):
        vals[i] = init_state[i]
    cost = np.int64(0)
    for k in range(m):
        if vals[fa[k]] != vals[fb[k]]:
            cost += fw[k]
    # adjacency in CSR form
    deg = np.zeros(nfree, np.int64)
    for k in range(m):
        if fa[k] < nfree:
            deg[fa[k]] += 1
        if fb[k] < nfree:
            deg[fb[k]] += 1
    ptr = np.zeros(nfree + 1, np.int64)
    for i in range(nfree):
        ptr[i + 1] = ptr[i] + deg[i]
    other = np.empty(ptr[nfree], np.int64)
    ww = np.empty(ptr[nfree], np.int64)
    fill = ptr[:-1].copy()
    for k in range(m):
        if fa[k] < nfree:
            other[fill[fa[k]]] = fb[k]
            ww[fill[fa[k]]] = fw[k]
            fill[fa[k]] += 1
        if fb[k] < nfree:
            other[fill[fb[k]]] = fa[k]
            ww[fill[fb[k]]] = fw[k]
            fill[fb[k]] += 1
    best = cost
    bestbits = np.uint64(0)
    bits = np.uint64(0)
    for i in range(nfree):
        if vals[i] == 1:
            bits |= np.uint64(1) << np.uint64(i)
    bestbits = bits
    total = np.uint64(1) << np.uint64(nfree)
    g = np.uint64(0)
    prev = np.uint64(0)
    for step in range(1, int(total)):
        g = np.uint64(step) ^ (np.uint64(step) >> np.uint64(1))
        diff = g ^ prev
        prev = g
        i = 0
        dd = diff
        while dd > 1:
            dd >>= np.uint64(1)
            i += 1
        # flip cell i
        old = vals[i]
        new = 1 - old
        delta = np.int64(0)
        for a in range(ptr[i], ptr[i + 1]):
            o = vals[other[a]]
            if o != old:
                delta -= ww[a]
            if o != new:
                delta += ww[a]
        vals[i] = new
        cost += delta
        if new == 1:
            bits |= np.uint64(1) << np.uint64(i)
        else:
            bits &= ~(np.uint64(1) << np.uint64(i))
        if cost < best:
            best = cost
            bestbits = bits
    return best, bestbits


def brute_force_gap(p: MinGapProblem) -> MinGapResult:
    """Independent oracle: exhaustive enumeration of all binary competitors."""
    gs = p.E
    free, idx, nfree, (us, vs, cs, src, snk), cut_e, const, nfaces = p.assemble()
    if nfree > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force refuses more than {BRUTE_FORCE_LIMIT} free cells")
    if nfree == 0:
        raise ValueError("window contains no free cell")
    # faces: free-free from (us, vs, cs); terminals from src/snk as pinned pairs
    fa = [us]
    fb = [vs]
    fw = [cs]
    si = np.nonzero(src)[0]
    fa.append(si)
    fb.append(np.full(len(si), nfree + 1, np.int64))  # pinned material
    fw.append(src[si])
    ti = np.nonzero(snk)[0]
    fa.append(ti)
    fb.append(np.full(len(ti), nfree, np.int64))      # pinned void
    fw.append(snk[ti])
    fa = np.concatenate(fa).astype(np.int64)
    fb = np.concatenate(fb).astype(np.int64)
    fw = np.concatenate(fw).astype(np.int64)
    init = gs.mask[free].astype(np.int64)
    best, bits = _brute_min(nfree, fa, fb, fw, init)
    e_cost = cut_e - const
    psi_int = int(e_cost - best)
    scale = gs.h ** (gs.n - 1) / WEIGHT_SCALE
    fm = gs.mask.copy()
    vals = np.array([(int(bits) >> i) & 1 for i in range(nfree)], dtype=bool)
    fm[free] = vals
    return MinGapResult(psi_int, float(psi_int) * scale, gs.copy_with(fm),
                        nfree, int(len(fa)), int(best), int(cut_e),
                        nfaces * 0.5 * scale)


# ---------------------------------------------------------------------------
# profiles over radii
# ---------------------------------------------------------------------------

@dataclass
class AlmostMinProfile:
    radii: np.ndarray
    psi: np.ndarray
    psi_hat: np.ndarray
    logsum_proxy: float       # sum psi_hat * dlog r
    gap_integral_proxy: float  # sum (n-1) rho^-n Psi drho

    def rows(self):
        return [(float(r), float(p), float(ph))
                for r, p, ph in zip(self.radii, self.psi, self.psi_hat)]

    def to_json(self) -> dict:
        return {"rows": [{"r": r, "psi": p, "psi_hat": ph} for r, p, ph in self.rows()],
                "logsum_proxy": self.logsum_proxy,
                "gap_integral_proxy": self.gap_integral_proxy}


def almost_min_profile(E: GridSet, dom, x, radii, metric: CutMetric | None = None,
                       chart=None) -> AlmostMinProfile:
    """psi_hat(r) = Psi / (omega_n^(1-1/n) r^(n-1)): the tightest admissible psi."""
    metric = metric or default_metric(E.n)
    om = domain_mask(E, dom)
    x = np.asarray(x, dtype=float)
    n = E.n
    wn = unit_ball_volume(n) ** (1.0 - 1.0 / n)
    radii = np.asarray(sorted(radii), dtype=float)
    psis = np.empty(len(radii))
    for i, r in enumerate(radii):
        if chart is not None and np.allclose(x, 0.0):
            center = chart.center(r, n)
            window = Ball(r, tuple(center))
        else:
            window = Ball(r, tuple(x))
        res = minimality_gap(MinGapProblem(E, dom, window, metric, om))
        psis[i] = res.psi
    hat = psis / (wn * radii ** (n - 1))
    dlog = np.diff(np.log(radii))
    logsum = float(np.sum(0.5 * (hat[1:] + hat[:-1]) * dlog))
    integrand = (n - 1) * psis / radii ** n
    gap_proxy = trapezoid(integrand, radii)
    return AlmostMinProfile(radii, psis, hat, logsum, gap_proxy)


@dataclass
class DensityReport:
    radii: np.ndarray
    perimeter: np.ndarray
    vol_in: np.ndarray
    vol_out: np.ndarray
    perimeter_slope: float
    perimeter_const: float
    minvol_slope: float
    flagged: bool
    skipped: list = field(default_factory=list)

    def rows(self):
        return [(float(r), float(p), float(vi), float(vo)) for r, p, vi, vo in
                zip(self.radii, self.perimeter, self.vol_in, self.vol_out)]

    def to_json(self) -> dict:
        return {"rows": [{"r": r, "perimeter": p, "vol_in": vi, "vol_out": vo}
                         for r, p, vi, vo in self.rows()],
                "perimeter_slope": self.perimeter_slope,
                "perimeter_const": self.perimeter_const,
                "minvol_slope": self.minvol_slope,
                "flagged": self.flagged,
                "skipped": [float(v) for v in self.skipped]}


def density_report(E: GridSet, dom, x, radii, metric: CutMetric | None = None,
                   slope_tol: float = 0.15, vol_tol: float = 0.2) -> DensityReport:
    """Tabulate P(E;B_r(x)) and the two volumes; fit log-log slopes; flag violations."""
    metric = metric or default_metric(E.n)
    om = domain_mask(E, dom)
    x = np.asarray(x, dtype=float)
    n = E.n
    keep, peri, vin, vout, skipped = [], [], [], [], []
    wmin_float = 4.0 * max(metric.weights) * E.h ** (n - 1)
    for r in sorted(radii):
        window = Ball(float(r), tuple(x))
        P = grid_perimeter(E, om, window, dom, metric)
        if P < wmin_float:
            skipped.append(float(r))
            continue
        ve, vc = grid_volume(E, om, window)
        keep.append(float(r))
        peri.append(P)
        vin.append(ve)
        vout.append(vc)
    keep = np.asarray(keep)
    peri = np.asarray(peri)
    vin = np.asarray(vin)
    vout = np.asarray(vout)
    if len(keep) < 2:
        raise ValueError("not enough usable radii for a density fit")
    ps, pc = np.polyfit(np.log(keep), np.log(peri), 1)
    minvol = np.minimum(vin, vout)
    if np.any(minvol <= 0):
        vs = float("nan")
        flagged = True
    else:
        vs = float(np.polyfit(np.log(keep), np.log(minvol), 1)[0])
        flagged = abs(ps - (n - 1)) > slope_tol or abs(vs - n) > vol_tol
    return DensityReport(keep, peri, vin, vout, float(ps), float(math.exp(pc)),
                         vs, bool(flagged), skipped)


@dataclass
class GapStabilityReport:
    lhs: float
    perimeter_diff: float
    trace_term: float
    slack: float

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "perimeter_diff": self.perimeter_diff,
                "trace_term": self.trace_term, "rhs": self.perimeter_diff + self.trace_term,
                "slack": self.slack}


def gap_stability_check(f: GridSet, g: GridSet, dom, region: Region,
                        metric: CutMetric | None = None) -> GapStabilityReport:
    """|Psi(f;A) - Psi(g;A)| <= | |Df|(Om cap A) - |Dg|(Om cap A) | + ||Tr(f0-g0)||_L1(dA)."""
    metric = metric or default_metric(f.n)
    om = domain_mask(f, dom)
    psi_f = minimality_gap(MinGapProblem(f, dom, region, metric, om)).psi
    psi_g = minimality_gap(MinGapProblem(g, dom, region, metric, om)).psi
    pf = grid_perimeter(f, om, region, dom, metric)
    pg = grid_perimeter(g, om, region, dom, metric)
    # trace mismatch on the one-cell shell across dA, zero-extensions outside Omega
    tr = 0
    F = f.mask & om
    G = g.mask & om
    cax = [f.axis_centers(k) for k in range(f.n)]
    from .gridset import _slices
    for i, d in enumerate(metric.offsets):
        sa, sb = _slices(f.dims, d)
        # crossing faces: exactly one endpoint center inside A
        ca = np.stack(np.meshgrid(*[cax[k][sa[k]] for k in range(f.n)], indexing="ij"),
                      axis=-1).reshape(-1, f.n)
        cb = np.stack(np.meshgrid(*[cax[k][sb[k]] for k in range(f.n)], indexing="ij"),
                      axis=-1).reshape(-1, f.n)
        ina = region.contains(ca)
        inb = region.contains(cb)
        cross = ina ^ inb
        if not cross.any():
            continue
        inner_is_a = ina[cross]
        Fa = F[sa].ravel()[cross]
        Fb = F[sb].ravel()[cross]
        Ga = G[sa].ravel()[cross]
        Gb = G[sb].ravel()[cross]
        f_in = np.where(inner_is_a, Fa, Fb)
        g_in = np.where(inner_is_a, Ga, Gb)
        tr += metric.weights_int[i] * int((f_in ^ g_in).sum())
    trace = tr * f.h ** (f.n - 1) / WEIGHT_SCALE
    lhs = abs(psi_f - psi_g)
    rhs = abs(pf - pg) + trace
    return GapStabilityReport(lhs, abs(pf - pg), trace, rhs - lhs)
