"""Free-boundary monotonicity audit.

Every audited pair r_k < r_l checks

  (int_{Om cap A} phi^(1-n) |<nu, grad phi>| d|Df|)^2
    <= 2 (int_{Om cap A} |grad phi| phi^(1-n) d|Df|)
       * [mu(r_l) - mu(r_k) + (I(r_l) - I(r_k)) + G(r_k, r_l)] + tau_audit,

with mu(r) = P_Omega(E; B_r(V_r)) / r^(n-1), I the cumulative gap integral
(n-1) int rho^-n Psi(B_rho(V_rho)) drho over the jittered grid, and G the
foliation error term, which vanishes identically for v = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .foliation import OffcentricChart, phi as phi_eval
from .gridset import CutMetric, default_metric, domain_mask, boundary_faces
from .mingap import MinGapProblem, minimality_gap
from .perimeter import perimeter_rel
from .polyset import PolySet
from .regions import Ball, offcentric_ball, offcentric_annulus

POLY_TAU_FACTOR = 1e-9
GRID_TAU_FACTOR = 10.0


def mu(E, dom, chart: OffcentricChart, r: float, metric: CutMetric | None = None) -> float:
    """P_Omega(E; B_r(V_r)) / r^(n-1)."""
    if not (0 < r < chart.R):
        raise ValueError("need 0 < r < R")
    n = 2 if isinstance(E, PolySet) else E.n
    return perimeter_rel(E, dom, offcentric_ball(chart, r, n), metric) / r ** (n - 1)


def _elements(E, dom, region, metric, max_len):
    if isinstance(E, PolySet):
        return E.boundary_elements(dom, region, max_len)
    om = domain_mask(E, dom)
    return boundary_faces(E, om, region, dom, metric or default_metric(E.n))


def _phi_data(chart: OffcentricChart, mids: np.ndarray):
    """(phi, |grad phi|, grad) per element midpoint; exact closed form for v = 0."""
    if len(mids) == 0:
        return np.zeros(0), np.zeros(0), np.zeros((0, mids.shape[1] if mids.ndim > 1 else 2))
    if chart.kind == "zero":
        phis = np.linalg.norm(mids, axis=1)
        grads = mids / phis[:, None]
        return phis, np.ones(len(mids)), grads
    phis = np.empty(len(mids))
    grads = np.empty_like(mids)
    for i, x in enumerate(mids):
        ev = phi_eval(chart, x)
        phis[i] = ev.r
        grads[i] = ev.grad
    return phis, np.linalg.norm(grads, axis=1), grads


def lhs_conical_deviation(E, dom, chart: OffcentricChart, r1: float, r2: float,
                          metric: CutMetric | None = None,
                          max_len: float | None = None) -> float:
    """(int_{Om cap A_{r1,r2}} phi^(1-n) |<nu_E, grad phi>| d|Df|)^2."""
    if r2 <= r1:
        return 0.0
    n = 2 if isinstance(E, PolySet) else E.n
    if max_len is None and isinstance(E, PolySet):
        max_len = r1 / 64.0
    region = offcentric_annulus(chart, r1, r2, n)
    mids, normals, meas = _elements(E, dom, region, metric, max_len)
    if len(mids) == 0:
        return 0.0
    phis, _, grads = _phi_data(chart, mids)
    integrand = phis ** (1 - n) * np.abs(np.sum(normals * grads, axis=1))
    return float(np.sum(integrand * meas)) ** 2


def _inner_g(chart, mids, meas, phis, grad_norms, rho, centers_cache) -> float:
    """int_{Om cap B_rho(V_rho)} (|grad phi| - 1) d|Df| via midpoint membership."""
    c = centers_cache.setdefault(rho, chart.center(rho, mids.shape[1]))
    sel = np.linalg.norm(mids - c[None, :], axis=1) < rho
    if not sel.any():
        return 0.0
    return float(np.sum((grad_norms[sel] - 1.0) * meas[sel]))


class _GQuadrature:
    """Antiderivative of the piecewise-linear interpolant of
    rho -> (n-1) rho^-n int_{B_rho(V_rho)} (|grad phi| - 1) d|Df|
    on one global log grid: interval integrals are exact differences of a
    single function, so G telescopes to machine precision."""

    def __init__(self, chart, E, dom, rmax, n, metric, max_len, per_level=24):
        region = offcentric_ball(chart, rmax, n)
        self.chart = chart
        self.n = n
        self.mids, _, self.meas = _elements(E, dom, region, metric, max_len)
        self.phis, self.grad_norms, _ = _phi_data(chart, self.mids)
        self.cache: dict = {}
        lo = rmax * 2.0 ** -20
        self.xs = np.exp(np.linspace(math.log(lo), math.log(rmax), 20 * per_level + 1))
        self.ys = np.array([(n - 1) / x ** n * self.inner(x) for x in self.xs])
        self.cum = np.zeros(len(self.xs))
        self.cum[1:] = np.cumsum(0.5 * (self.ys[1:] + self.ys[:-1]) * np.diff(self.xs))

    def inner(self, rho: float) -> float:
        return _inner_g(self.chart, self.mids, self.meas, self.phis,
                        self.grad_norms, rho, self.cache)

    def antiderivative(self, t: float) -> float:
        xs, ys = self.xs, self.ys
        t = min(max(t, xs[0]), xs[-1])
        i = int(np.searchsorted(xs, t)) - 1
        i = min(max(i, 0), len(xs) - 2)
        x0, x1 = xs[i], xs[i + 1]
        y0, y1 = ys[i], ys[i + 1]
        yt = y0 + (y1 - y0) * (t - x0) / (x1 - x0)
        return float(self.cum[i] + 0.5 * (y0 + yt) * (t - x0))

    def boundary(self, r: float) -> float:
        return self.inner(r) / r ** (self.n - 1)

    def g(self, r1: float, r2: float) -> float:
        return (self.antiderivative(r2) - self.antiderivative(r1)
                + self.boundary(r2) - self.boundary(r1))


def g_term(E, dom, chart: OffcentricChart, r1: float, r2: float,
           metric: CutMetric | None = None, max_len: float | None = None,
           rmax: float | None = None) -> float:
    """G(f; r1, r2): rho-quadrature of the (|grad phi| - 1) integrals plus the
    two boundary terms. Exactly 0 for the centered foliation (v = 0)."""
    if chart.kind == "zero" or r2 <= r1:
        return 0.0
    n = 2 if isinstance(E, PolySet) else E.n
    if rmax is None:
        rmax = r2
    if max_len is None and isinstance(E, PolySet):
        max_len = rmax / 4096.0
    quad = _GQuadrature(chart, E, dom, rmax, n, metric, max_len)
    return quad.g(r1, r2)


def g_limit(E, dom, chart: OffcentricChart, r: float, mu_max: float,
            metric: CutMetric | None = None, r_small: float | None = None):
    """G(f; r) = lim_{rho->0} G(f; rho, r) with a rigorous tail bound
    4 C ((n-1) int_0^rho gamma_v + rho gamma_v(rho)), C = sup mu."""
    if chart.kind == "zero":
        return 0.0, 0.0
    n = 2 if isinstance(E, PolySet) else E.n
    if r_small is None:
        r_small = r / 512.0
    value = g_term(E, dom, chart, r_small, r, metric)
    # the G(r) limit keeps only the upper boundary term; the lower one tends to 0
    # and is absorbed into the tail bound together with the missing integral
    gv = float(chart.gamma_v(r_small))
    tail = 4.0 * mu_max * ((n - 1) * chart.gamma_v_integral(0.0, r_small)
                           + r_small * gv)
    return value, tail


@dataclass
class MonotonicityAudit:
    radii: np.ndarray
    mu_vals: np.ndarray
    psi_vals: np.ndarray
    gap_integral: np.ndarray        # cumulative I(r) from the smallest grid radius
    g_quad: np.ndarray              # cumulative A(r): rho-quadrature part of G
    g_boundary: np.ndarray          # B(r): boundary term of G at r
    M: np.ndarray                   # mu + I + (A + B)
    pairs: list                     # dicts: k, l, lhs, factor, bracket, rhs, slack
    tau_audit: float
    theta_hat: float
    theta_spread: float
    theta_centric: float
    mono_prefix_r: float            # largest radius with M non-decreasing so far
    gap_source: str
    chart_kind: str
    backend: str

    def rows(self):
        G = self.g_quad + self.g_boundary
        return [(float(r), float(m), float(p), float(i), float(g), float(mm))
                for r, m, p, i, g, mm in zip(self.radii, self.mu_vals, self.psi_vals,
                                             self.gap_integral, G, self.M)]

    def worst_slack(self) -> float:
        return min((p["slack"] for p in self.pairs), default=0.0)

    def to_json(self) -> dict:
        return {
            "schema": "visilab/1",
            "backend": self.backend,
            "chart": self.chart_kind,
            "gap_source": self.gap_source,
            "tau_audit": self.tau_audit,
            "theta_hat": self.theta_hat,
            "theta_spread": self.theta_spread,
            "theta_centric": self.theta_centric,
            "mono_prefix_r": self.mono_prefix_r,
            "worst_slack": self.worst_slack(),
            "rows": [{"r": r, "mu": m, "psi": p, "I": i, "G": g, "M": mm}
                     for r, m, p, i, g, mm in self.rows()],
            "pairs": self.pairs,
        }


def _richardson(v0: float, v1: float, v2: float):
    """Extrapolate lim v from values at the dyadic levels r0, 2 r0, 4 r0.

    Fits v(r) = theta + c r^alpha; alpha may be negative, which removes the
    h/r face-count bias of grid measurements. Falls back to the smallest-r
    value (with the observed spread) when the model does not fit.
    """
    d1, d2 = v1 - v0, v2 - v1
    spread = max(v0, v1, v2) - min(v0, v1, v2)
    if d1 == 0.0:
        return v0, spread
    q = d2 / d1
    if q <= 0 or abs(q - 1) < 1e-12:
        return v0, spread
    alpha = math.log2(q)
    if not np.isfinite(alpha) or not (-1.5 <= alpha <= 4.0) or abs(alpha) < 1e-9:
        return v0, spread
    theta = v0 - d1 / (2.0 ** alpha - 1.0)
    return theta, spread


def _theta_limit(measure, r0: float, navg: int = 8, rel: float = 0.08):
    """Richardson limit of a radius measurement over the levels r0, 2r0, 4r0,
    each level averaged over a small deterministic radius window to suppress
    the face-count oscillation of grid measurements."""
    levels = []
    for mult in (1.0, 2.0, 4.0):
        rs = mult * r0 * (1.0 + rel * np.linspace(-1.0, 1.0, navg))
        levels.append(float(np.mean([measure(float(r)) for r in rs])))
    return _richardson(*levels)


def audit(E, dom, chart: OffcentricChart, radii, gap_source="auto",
          metric: CutMetric | None = None, max_len: float | None = None) -> MonotonicityAudit:
    """Fill the audit record and check every pair r_k < r_l of the grid.

    gap_source: "auto" solves min-cut gaps for GridSet and uses declared zeros
    for PolySet exact minimizers; "zero" forces zeros; a callable r -> Psi is
    used as given.
    """
    is_poly = isinstance(E, PolySet)
    n = 2 if is_poly else E.n
    metric = metric if metric is not None or is_poly else default_metric(n)
    radii = np.asarray(sorted(float(r) for r in radii))
    if radii[-1] >= chart.R:
        raise ValueError("radius grid exceeds the chart horizon")
    K = len(radii)

    if callable(gap_source):
        psi = np.array([float(gap_source(r)) for r in radii])
        gap_name = "callable"
    elif gap_source == "zero" or (gap_source == "auto" and is_poly):
        psi = np.zeros(K)
        gap_name = "declared-zero"
    else:
        om = domain_mask(E, dom)
        psi = np.empty(K)
        for i, r in enumerate(radii):
            window = offcentric_ball(chart, r, n)
            psi[i] = minimality_gap(MinGapProblem(E, dom, window, metric, om)).psi
        gap_name = "min-cut"

    mu_vals = np.array([mu(E, dom, chart, r, metric) for r in radii])
    mu_max = float(mu_vals.max())

    # cumulative I(r) = (n-1) int rho^-n Psi drho from the smallest grid radius
    integrand = (n - 1) * psi / radii ** n
    I = np.zeros(K)
    for k in range(1, K):
        I[k] = I[k - 1] + 0.5 * (integrand[k] + integrand[k - 1]) * (radii[k] - radii[k - 1])

    # G decomposed as A(r) (antiderivative of the rho-quadrature) + B(r)
    A = np.zeros(K)
    B = np.zeros(K)
    if chart.kind != "zero":
        if max_len is None and is_poly:
            max_len = float(radii[0]) / 64.0
        quad = _GQuadrature(chart, E, dom, float(radii[-1]), n, metric, max_len)
        A = np.array([quad.antiderivative(float(r)) for r in radii])
        B = np.array([quad.boundary(float(r)) for r in radii])

    eps = 0.0 if is_poly else metric.eps_metric
    tau = (POLY_TAU_FACTOR if is_poly else eps * GRID_TAU_FACTOR) * (1.0 + mu_max) ** 2
    if chart.kind != "zero":
        # the G interpolant carries its own quadrature granularity
        tau += 1e-3 * float(np.max(np.abs(A) + np.abs(B))) if np.any(B) else 0.0

    # per-pair terms from one element sweep over the largest ball
    region = offcentric_ball(chart, float(radii[-1]), n)
    sweep_len = max_len if max_len is not None else (radii[0] / 64.0 if is_poly else None)
    mids, normals, meas = _elements(E, dom, region, metric, sweep_len)
    phis, grad_norms, grads = _phi_data(chart, mids)
    radial = np.abs(np.sum(normals * grads, axis=1)) if len(mids) else np.zeros(0)

    pairs = []
    for k in range(K):
        for l in range(k + 1, K):
            sel = (phis > radii[k]) & (phis < radii[l])
            lhs = float(np.sum(phis[sel] ** (1 - n) * radial[sel] * meas[sel])) ** 2 \
                if sel.any() else 0.0
            factor = float(np.sum(grad_norms[sel] * phis[sel] ** (1 - n) * meas[sel])) \
                if sel.any() else 0.0
            bracket = (mu_vals[l] - mu_vals[k]) + (I[l] - I[k]) \
                + (A[l] - A[k]) + (B[l] - B[k])
            rhs = 2.0 * factor * bracket
            pairs.append({"k": int(k), "l": int(l), "r_k": float(radii[k]),
                          "r_l": float(radii[l]), "lhs": lhs, "factor": factor,
                          "bracket": float(bracket), "rhs": rhs,
                          "slack": float(rhs - lhs)})

    M = mu_vals + I + A + B
    mono_r = float(radii[0])
    for k in range(1, K):
        if M[k] < M[k - 1] - tau:
            break
        mono_r = float(radii[k])

    r0 = float(radii[0])
    theta, spread = _theta_limit(lambda r: mu(E, dom, chart, r, metric), r0)
    theta_c, _ = _theta_limit(
        lambda r: perimeter_rel(E, dom, Ball(r), metric) / r ** (n - 1), r0)

    return MonotonicityAudit(radii, mu_vals, psi, I, A, B, M, pairs, float(tau),
                             float(theta), float(spread), float(theta_c), mono_r,
                             gap_name, chart.kind,
                             "polyset" if is_poly else "gridset")
