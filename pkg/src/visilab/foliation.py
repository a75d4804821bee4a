"""Off-centric sphere foliation: the chart v, centers V_r, and the evaluator phi.

The punctured ball B_R(V_R) \\ {0} is foliated by the spheres dB_r(V_r) with
V_r = -v(r) e_n. phi(x) is the unique r with F(x, r) = |x - V_r|^2 - r^2 = 0;
on the zero set dF/dr <= -r, so bisection is unconditionally safe and one
Newton step polishes the root. The gradient is
grad phi = (x + v(r) e_n) / (r - v'(r) (x_n + v(r))), which deviates from
x/|x| by at most 4 sqrt(v(r)/r + v'(r)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import GraphDomain, VisibilityFunction
from .util import PASS, FAIL, log_grid

TAU_ROOT = 1e-12            # relative root tolerance
CORE_EXCLUSION = 1e-14      # phi undefined on a ball of radius 1e-14 * R around 0


@dataclass
class OffcentricChart:
    """v on (0, R) with derivative; kinds: zero, quadratic (c r^2), from_u, direct."""

    kind: str
    R: float
    c: float = 0.0
    u: VisibilityFunction | None = None
    Tprime: float = 0.0
    r_samples: np.ndarray | None = None
    v_samples: np.ndarray | None = None
    vp_samples: np.ndarray | None = None
    tau_root: float = TAU_ROOT

    # -- chart data ---------------------------------------------------------

    def v(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        if self.kind == "quadratic":
            return self.c * r * r
        if self.kind == "direct":
            return np.interp(r, self.r_samples, self.v_samples)
        return self._v_from_u(r)

    def vp(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        if self.kind == "quadratic":
            return 2.0 * self.c * r
        if self.kind == "direct":
            return np.interp(r, self.r_samples, self.vp_samples)
        t = self._zinv(r)
        up = np.asarray(self.u.slope(t))
        return up / (1.0 - up)

    def _zinv(self, r):
        """Inverse of z(t) = t - u(t) by monotone bisection; r <= z^-1(r) <= 2r."""
        r = np.asarray(r, dtype=float)
        scalar = (r.ndim == 0)
        r = np.atleast_1d(r)
        out = np.empty_like(r)
        for i, ri in enumerate(r):
            lo, hi = ri, min(2.0 * ri * (1.0 + 1e-9), self.Tprime)
            if hi <= lo:
                hi = self.Tprime
            flo = lo - float(self.u.value(lo)) - ri
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = mid - float(self.u.value(mid)) - ri
                if (fm > 0) == (flo > 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
                # two digits tighter than tau_root so the inner root noise stays
                # well below the phi residual budget tau_root * r^2
                if hi - lo <= 1e-2 * self.tau_root * ri:
                    break
            out[i] = 0.5 * (lo + hi)
        return out[0] if scalar else out

    def _v_from_u(self, r):
        t = self._zinv(r)
        return np.asarray(self.u.value(t))

    def center(self, r: float, n: int = 2) -> np.ndarray:
        c = np.zeros(n)
        c[-1] = -float(self.v(r))
        return c

    def gamma_v(self, t):
        """t^-1 sup_{0<s<=t} sqrt(v(s)/s + v'(s)) (sup on a log grid for from_u)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "quadratic":
            return np.sqrt(3.0 * self.c * t) / t
        tmax = float(np.max(t))
        grid = log_grid(min(tmax, self.R) * 2.0 ** -30, min(tmax, self.R * (1 - 1e-12)), 16)
        g = np.asarray(self.v(grid)) / grid + np.asarray(self.vp(grid))
        run = np.sqrt(np.maximum.accumulate(np.maximum(g, 0.0)))
        return np.interp(t, grid, run) / t

    def gamma_v_integral(self, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        if self.kind == "zero":
            return 0.0
        if self.kind == "quadratic":
            return math.sqrt(3.0 * self.c) * 2.0 * (math.sqrt(b) - math.sqrt(a))
        grid = log_grid(max(a, b * 2.0 ** -40), b, per_level=16)
        return float(np.trapezoid(self.gamma_v(grid), grid))

    # -- serialization ------------------------------------------------------

    def to_json(self, nsamples: int = 64) -> dict:
        rs = np.linspace(self.R / nsamples, self.R * (1 - 1e-9), nsamples)
        samples = [[float(r), float(self.v(r)), float(self.vp(r))] for r in rs]
        out = {"kind": "from_u" if self.kind == "from_u" else "direct",
               "samples": samples, "R": self.R}
        if self.kind == "from_u":
            out["u"] = self.u.to_json()
            out["Tprime"] = self.Tprime
        if self.kind in ("zero", "quadratic"):
            out["kind"] = "direct"
            out["closed_form"] = {"kind": self.kind, "c": self.c}
        return out

    @staticmethod
    def from_json(desc: dict) -> "OffcentricChart":
        if desc.get("kind") == "from_u" and "u" in desc:
            u = VisibilityFunction.from_json(desc["u"])
            return OffcentricChart("from_u", float(desc["R"]), u=u,
                                   Tprime=float(desc["Tprime"]))
        cf = desc.get("closed_form")
        if cf is not None:
            if cf["kind"] == "zero":
                return OffcentricChart.zero(float(desc["R"]))
            return OffcentricChart.quadratic(float(cf["c"]), float(desc["R"]))
        samples = np.asarray(desc["samples"], dtype=float)
        return OffcentricChart("direct", float(desc["R"]), r_samples=samples[:, 0],
                               v_samples=samples[:, 1], vp_samples=samples[:, 2])

    @staticmethod
    def zero(R: float = 1.0) -> "OffcentricChart":
        return OffcentricChart("zero", R)

    @staticmethod
    def quadratic(c: float, R: float | None = None) -> "OffcentricChart":
        Rmax = 1.0 / (4.0 * c) if c > 0 else math.inf
        return OffcentricChart("quadratic", min(R, Rmax) if R else Rmax, c=c)


def to_offcentric(u: VisibilityFunction) -> OffcentricChart:
    """Chart with v(r) = u(z^-1(r)), z(t) = t - u(t), R = z(T').

    T' is the largest sub-horizon on which z is strictly increasing on
    samples and u' <= 1/3; the slope cap makes v'(r) = u'/(1 - u') obey the
    1/2 bound that the foliation estimates require.
    """
    if u.kind == "zero" or u.C == 0.0 and u.kind != "sampled":
        return OffcentricChart.zero(u.T)
    Tp = u.horizon_with_slope(1.0 / 3.0)
    if Tp <= 0:
        raise ValueError("u violates the 1/3 slope bound on every sub-horizon")
    ts = log_grid(Tp * 2.0 ** -30, Tp * (1 - 1e-12), per_level=16)
    z = ts - np.asarray(u.value(ts))
    if np.any(np.diff(z) <= 0):
        k = int(np.nonzero(np.diff(z) <= 0)[0][0])
        Tp = float(ts[k])
        if Tp <= 0:
            raise ValueError("z(t) = t - u(t) is not strictly increasing near 0")
    R = Tp - float(u.value(Tp))
    return OffcentricChart("from_u", R, u=u, Tprime=Tp)


@dataclass
class PhiEvaluation:
    r: float
    residual: float
    grad: np.ndarray
    deviation: float
    bound: float

    def to_row(self) -> list[float]:
        return [self.r, self.residual, *map(float, self.grad), self.deviation, self.bound]


def _phi_root_from_u(chart: OffcentricChart, xx: float, xn: float) -> tuple[float, float, float]:
    """Root of F via the substitution r = z(t): one bisection in t with
    closed-form u instead of a nested z-inverse per F evaluation."""
    u = chart.u
    Tp = chart.Tprime

    def G(t: float) -> float:
        ut = float(u.value(t))
        z = t - ut
        return xx + (xn + ut) ** 2 - z * z

    lo, hi = CORE_EXCLUSION * Tp, Tp * (1 - 1e-15)
    if G(lo) <= 0:
        raise ValueError("no sign change: x too close to the vertex")
    if G(hi) >= 0:
        raise ValueError("x outside B_R(V_R)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if G(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-2 * chart.tau_root * hi:
            break
    t = 0.5 * (lo + hi)
    ut, upt = float(u.value(t)), float(u.slope(t))
    # one Newton polish: G'(t) = 2 (x_n + u) u' - 2 z (1 - u')
    dG = 2.0 * (xn + ut) * upt - 2.0 * (t - ut) * (1.0 - upt)
    if dG < 0:
        t = t - G(t) / dG
        ut, upt = float(u.value(t)), float(u.slope(t))
    return t - ut, ut, upt / (1.0 - upt)


def phi(chart: OffcentricChart, x: np.ndarray) -> PhiEvaluation:
    """Solve F(x, r) = |x - V_r|^2 - r^2 = 0 and evaluate grad phi at x."""
    x = np.asarray(x, dtype=float).ravel()
    R = chart.R
    nx = float(np.linalg.norm(x))
    if nx <= CORE_EXCLUSION * R:
        raise ValueError("phi is undefined at the vertex 0")
    xn = float(x[-1])
    xx = float(np.dot(x[:-1], x[:-1]))
    vR = float(chart.v(R * (1 - 1e-15)))
    if xx + (xn + vR) ** 2 >= (R * (1 - 1e-15)) ** 2:
        raise ValueError("x outside B_R(V_R)")

    if chart.kind == "zero":
        # phi(x) = |x| exactly; the cone case carries zero slack everywhere
        return PhiEvaluation(nx, 0.0, x / nx, 0.0, 0.0)
    if chart.kind == "from_u":
        r, v, vp = _phi_root_from_u(chart, xx, xn)
    else:
        def F(r: float) -> float:
            return xx + (xn + float(chart.v(r))) ** 2 - r * r

        lo, hi = CORE_EXCLUSION * R, R
        if F(lo) <= 0:
            raise ValueError("no sign change: x too close to the vertex")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if F(mid) > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= chart.tau_root * hi:
                break
        r = 0.5 * (lo + hi)
        # one Newton polish; dF/dr = -2r + 2 v'(r)(x_n + v(r)) <= -r on the zero set
        v, vp = float(chart.v(r)), float(chart.vp(r))
        dF = -2.0 * r + 2.0 * vp * (xn + v)
        if dF < 0:
            r = r - F(r) / dF
        v, vp = float(chart.v(r)), float(chart.vp(r))
    res = abs(xx + (xn + v) ** 2 - r * r)
    grad = (x + v * _en(len(x))) / (r - vp * (xn + v))
    dev = float(np.linalg.norm(grad - x / nx))
    bound = 4.0 * math.sqrt(max(v / r + vp, 0.0))
    return PhiEvaluation(float(r), float(res), grad, dev, float(bound))


def _en(n: int) -> np.ndarray:
    e = np.zeros(n)
    e[-1] = 1.0
    return e


@dataclass
class ConeContainsReport:
    verdict: str
    witness: list | None = None
    tested: int = 0

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "tested": self.tested}
        if self.witness is not None:
            out["witness"] = [float(w) for w in self.witness]
        return out


def cone_contains(chart: OffcentricChart, dom: GraphDomain, r: float,
                  nangles: int = 256, nradii: int = 64) -> ConeContainsReport:
    """Check that the cone over dB_r(V_r) cap Omega from V_r contains Omega cap B_r(V_r).

    A sample x is in the cone exactly when its radial exit point
    Y = V_r + r (x - V_r)/|x - V_r| lies in Omega.
    """
    if not (0 < r < chart.R):
        raise ValueError("need 0 < r < R")
    if dom.n != 2:
        raise NotImplementedError("cone containment sampling is 2-d")
    V = chart.center(r, dom.n)
    tol = 1e-9 * (1.0 + dom.lipschitz) * r
    ang = np.linspace(0, 2 * math.pi, nangles, endpoint=False)
    rad = np.linspace(r / nradii, r * (1 - 1e-9), nradii)
    cosa, sina = np.cos(ang), np.sin(ang)
    tested = 0
    for rho in rad:
        pts = np.stack([V[0] + rho * cosa, V[1] + rho * sina], axis=1)
        inside = dom.contains(pts)
        if not np.any(inside):
            continue
        pts = pts[inside]
        tested += len(pts)
        Y = V[None, :] + (pts - V[None, :]) * (r / rho)
        y_ok = dom.contains(Y, margin=-tol)
        if not np.all(y_ok):
            k = int(np.nonzero(~y_ok)[0][0])
            return ConeContainsReport(FAIL, witness=[*pts[k], *Y[k], r], tested=tested)
    return ConeContainsReport(PASS, tested=tested)


def phi_batch(chart: OffcentricChart, in_csv: str | Path, out_csv: str | Path) -> Path:
    """Evaluate phi on CSV points (x1,...,xn per row); write r, residual, grad, deviation, bound."""
    pts = np.atleast_2d(np.loadtxt(in_csv, delimiter=",", dtype=float))
    out = Path(out_csv)
    out.parent.mkdir(parents=True, exist_ok=True)
    n = pts.shape[1]
    header = ["r", "residual"] + [f"grad{i+1}" for i in range(n)] + ["deviation", "bound"]
    lines = [",".join(header)]
    for p in pts:
        ev = phi(chart, p)
        lines.append(",".join(repr(float(v)) for v in ev.to_row()))
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out
