"""Lipschitz graph domains, visibility certification, and tangent cones.

A GraphDomain is the epigraph piece Omega = {omega(x') < x_n} over the disk
B'_rho. Visibility of Omega at 0 is certified against a candidate function u:
(V1) u(0) = u'(0) = 0 and 0 <= u' <= 1/2,
(V2) gamma_u(t) = t^-1 sup_{0<s<=t} sqrt(u(s)/s + u'(s)) is summable on (0,T),
(V3) segments from U_t = -u(t) e_n to boundary points inside B_t avoid Omega.

(V3) is tested three ways that must agree at shared resolution: directly by
segment sampling, through the slope profile m_t(s) = (omega(s nu) + u(t))/s
being non-increasing, and through the gradient criterion
<x', grad omega(x')> <= omega(x') + u(|x'|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .profiles import Profile, profile_from_json
from .util import PASS, FAIL, INCONCLUSIVE, log_grid

TAU_SUM = 1e-6          # V2 dyadic tail tolerance, relative to the accumulated integral
TAU_SLOPE = 1e-9        # relative slope-increase tolerance
TAU_GRAD_ANALYTIC = 1e-9
TAU_GRAD_SAMPLED = 1e-3
V2_LEVELS = 60          # dyadic levels examined for summability
V2_TAIL_LEVELS = 10


# ---------------------------------------------------------------------------
# visibility functions u
# ---------------------------------------------------------------------------

@dataclass
class VisibilityFunction:
    """Candidate visibility function on [0, T).

    kind is one of "zero", "quadratic" (C t^2), "power" (C t^(1+beta)),
    "linear" (c t), "sampled" (t/u tables with finite-difference slopes).
    """

    kind: str
    T: float
    C: float = 0.0
    beta: float = 1.0
    t_samples: np.ndarray | None = None
    u_samples: np.ndarray | None = None

    # -- evaluation -------------------------------------------------------

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "quadratic":
            return self.C * t * t
        if self.kind == "power":
            return self.C * t ** (1.0 + self.beta)
        if self.kind == "linear":
            return self.C * t
        return np.interp(t, self.t_samples, self.u_samples)

    def slope(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "quadratic":
            return 2.0 * self.C * t
        if self.kind == "power":
            return (1.0 + self.beta) * self.C * np.maximum(t, 0.0) ** self.beta
        if self.kind == "linear":
            return np.full_like(t, self.C)
        du = np.gradient(self.u_samples, self.t_samples)
        return np.interp(t, self.t_samples, du)

    def sup_g(self, t):
        """sup_{0<s<=t} (u(s)/s + u'(s)); the named kinds are all monotone in s."""
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "quadratic":
            return 3.0 * self.C * t
        if self.kind == "power":
            return (2.0 + self.beta) * self.C * t ** self.beta
        if self.kind == "linear":
            return np.full_like(t, 2.0 * self.C)
        ts = self.t_samples
        g = np.where(ts > 0, self.u_samples / np.where(ts > 0, ts, 1.0), 0.0) \
            + np.gradient(self.u_samples, ts)
        run = np.maximum.accumulate(g)
        return np.interp(t, ts, run)

    def gamma(self, t):
        g = self.sup_g(t)
        if np.any(np.asarray(g) < 0):
            raise ValueError("u(s)/s + u'(s) < 0 at a sample: V1 data violated")
        return np.sqrt(g) / np.asarray(t, dtype=float)

    def gamma_integral(self, a: float, b: float) -> float:
        """int_a^b gamma_u(t) dt, in closed form for the analytic kinds."""
        if b <= a:
            return 0.0
        if self.kind == "zero" or self.C == 0.0:
            return 0.0
        if self.kind == "quadratic":
            return math.sqrt(3.0 * self.C) * 2.0 * (math.sqrt(b) - math.sqrt(a))
        if self.kind == "power":
            be = self.beta
            return math.sqrt((2.0 + be) * self.C) * (2.0 / be) * (b ** (be / 2) - a ** (be / 2))
        if self.kind == "linear":
            return math.sqrt(2.0 * self.C) * math.log(b / a)
        grid = log_grid(max(a, b * 2.0 ** -40), b, per_level=16)
        return float(np.trapezoid(self.gamma(grid), grid))

    def u_over_t2_integral(self, x: float) -> float | None:
        """int_0^x u(t)/t^2 dt; None when the integral diverges."""
        if self.kind == "zero" or self.C == 0.0:
            return 0.0
        if self.kind == "quadratic":
            return self.C * x
        if self.kind == "power":
            return self.C * x ** self.beta / self.beta
        if self.kind == "linear":
            return None
        ts = self.t_samples
        lo = max(ts[ts > 0].min() if np.any(ts > 0) else x * 1e-12, x * 2.0 ** -40)
        grid = log_grid(lo, x, per_level=16)
        integrand = self.value(grid) / grid ** 2
        return float(np.trapezoid(integrand, grid))

    def gamma_lower_c(self) -> float | None:
        """c > 0 with gamma_u(t) >= c/t, when divergence is provable in closed form."""
        if self.kind == "linear" and self.C > 0:
            return math.sqrt(2.0 * self.C)
        return None

    def horizon_with_slope(self, bound: float) -> float:
        """Largest T' <= T on which 0 <= u' <= bound holds."""
        if self.kind == "zero" or self.C == 0.0:
            return self.T
        if self.kind == "quadratic":
            return min(self.T, bound / (2.0 * self.C)) if self.C > 0 else self.T
        if self.kind == "power":
            if self.C <= 0:
                return self.T
            return min(self.T, (bound / (self.C * (1.0 + self.beta))) ** (1.0 / self.beta))
        if self.kind == "linear":
            return self.T if self.C <= bound else 0.0
        ts, du = self.t_samples, np.gradient(self.u_samples, self.t_samples)
        bad = np.nonzero((du > bound) | (du < 0))[0]
        return self.T if len(bad) == 0 else float(ts[bad[0]])

    def clipped_horizon(self) -> float:
        """Largest T' <= T on which 0 <= u' <= 1/2 holds."""
        return self.horizon_with_slope(0.5)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "T": self.T}
        if self.kind in ("quadratic", "power", "linear"):
            out["C"] = self.C
        if self.kind == "power":
            out["beta"] = self.beta
        if self.kind == "sampled":
            out["t"] = list(map(float, self.t_samples))
            out["u"] = list(map(float, self.u_samples))
        return out

    @staticmethod
    def from_json(desc: dict) -> "VisibilityFunction":
        kind = desc["kind"]
        if kind == "sampled":
            return VisibilityFunction(kind, float(desc["T"]),
                                      t_samples=np.asarray(desc["t"], dtype=float),
                                      u_samples=np.asarray(desc["u"], dtype=float))
        return VisibilityFunction(kind, float(desc["T"]), C=float(desc.get("C", 0.0)),
                                  beta=float(desc.get("beta", 1.0)))

    # convenience constructors
    @staticmethod
    def zero(T: float = 1.0) -> "VisibilityFunction":
        return VisibilityFunction("zero", T)

    @staticmethod
    def quadratic(C: float, T: float = 1.0) -> "VisibilityFunction":
        return VisibilityFunction("quadratic", T, C=C)

    @staticmethod
    def power(C: float, beta: float, T: float = 1.0) -> "VisibilityFunction":
        return VisibilityFunction("power", T, C=C, beta=beta)

    @staticmethod
    def linear(c: float, T: float = 1.0) -> "VisibilityFunction":
        return VisibilityFunction("linear", T, C=c)


def gamma_u(u: VisibilityFunction, t: float) -> float:
    """t^-1 sup_{0<s<=t} sqrt(u(s)/s + u'(s)) for 0 < t < T."""
    if not (0.0 < t < u.T):
        raise ValueError("need 0 < t < T")
    return float(u.gamma(t))


# ---------------------------------------------------------------------------
# graph domains
# ---------------------------------------------------------------------------

@dataclass
class DirectionalConeProfile(Profile):
    """1-homogeneous profile |x'| * slope(x'/|x'|) from a direction table."""

    directions: np.ndarray
    slopes: np.ndarray
    name = "directional-cone"

    def _slope_of(self, nu) -> float:
        nu = np.asarray(nu, dtype=float).ravel()
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float).reshape(len(self.slopes), -1))
        d2 = ((dirs - nu[None, :dirs.shape[1]]) ** 2).sum(axis=1)
        return float(self.slopes[int(np.argmin(d2))])

    def radial(self, s, nu):
        return np.asarray(s, dtype=float) * self._slope_of(nu)

    def radial_slope(self, s, nu):
        return np.full_like(np.asarray(s, dtype=float), self._slope_of(nu))

    def lipschitz(self) -> float:
        return float(np.max(np.abs(self.slopes)))

    def to_json(self) -> dict:
        return {"kind": "analytic", "name": "directional-cone",
                "params": {"directions": np.asarray(self.directions).tolist(),
                           "slopes": list(map(float, self.slopes))}}


@dataclass
class RescaledProfile(Profile):
    """omega_s(x') = omega(s x') / s; Lipschitz bound preserved."""

    base: Profile
    s: float
    name = "rescaled"

    @property
    def analytic(self):
        return self.base.analytic

    def radial(self, r, nu):
        return np.asarray(self.base.radial(np.asarray(r, dtype=float) * self.s, nu)) / self.s

    def radial_slope(self, r, nu):
        return self.base.radial_slope(np.asarray(r, dtype=float) * self.s, nu)

    def lipschitz(self) -> float:
        return self.base.lipschitz()

    def breakpoints(self, nu) -> np.ndarray:
        return np.asarray(self.base.breakpoints(nu)) / self.s

    def to_json(self) -> dict:
        return {"kind": "rescaled", "s": self.s, "base": self.base.to_json()}


def _sphere_directions_3d() -> np.ndarray:
    dirs = []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if (dx, dy) == (0, 0):
                continue
            dirs.append((dx, dy))
    out = np.asarray(dirs, dtype=float)
    return out / np.linalg.norm(out, axis=1)[:, None]


@dataclass
class GraphDomain:
    """Epigraph domain: Omega cap cylinder = {x' in B'_rho, omega(x') < x_n < 3m}."""

    n: int
    rho: float
    m: float
    profile: Profile
    lipschitz: float | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be >= 2")
        if self.lipschitz is None:
            self.lipschitz = float(self.profile.lipschitz())

    # -- sampling ----------------------------------------------------------

    def directions(self, count: int | None = None) -> list:
        """Unit directions of S^(n-2); clamped to the available set in n=2."""
        if self.n == 2:
            return [np.array([1.0]), np.array([-1.0])]
        base = _sphere_directions_3d()
        if count is not None and count < len(base):
            base = base[:count]
        return list(base)

    def s_grid(self, per_level: int = 32, levels: int = 40) -> np.ndarray:
        return log_grid(self.rho * 2.0 ** (-levels), self.rho, per_level)

    def omega(self, s, nu):
        return self.profile.radial(s, nu)

    def omega_slope(self, s, nu):
        return self.profile.radial_slope(s, nu)

    def boundary_points(self, nu, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        nu = np.asarray(nu, dtype=float).ravel()
        pts = np.empty((len(s), self.n))
        pts[:, :-1] = s[:, None] * nu[None, :]
        pts[:, -1] = self.profile.radial(s, nu)
        return pts

    def contains(self, pts: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Strict membership x_n > omega(x') (+ margin)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        xp = pts[:, :-1]
        s = np.linalg.norm(xp, axis=1)
        vals = np.empty(len(pts))
        pos = s > 0
        if np.any(pos):
            # radial profiles are direction-independent except linear/directional,
            # so evaluate per point through the profile's radial form
            for i in np.nonzero(pos)[0]:
                vals[i] = float(self.profile.radial(s[i], xp[i] / s[i]))
        vals[~pos] = 0.0
        return pts[:, -1] > vals + margin

    def validate(self, nsamples: int = 256, seed: int = 0) -> None:
        """Check omega(0) = 0 and the declared Lipschitz bound on sampled pairs."""
        rng = np.random.default_rng(seed)
        for nu in self.directions():
            if abs(float(self.profile.radial(0.0, nu))) > 1e-12 * max(1.0, self.rho):
                raise ValueError("omega(0) != 0")
            s = rng.uniform(0, self.rho, size=(nsamples, 2))
            v = self.profile.radial(s[:, 0], nu), self.profile.radial(s[:, 1], nu)
            gap = np.abs(v[0] - v[1]) - self.lipschitz * np.abs(s[:, 0] - s[:, 1])
            if np.any(gap > 1e-9 * max(1.0, self.rho)):
                raise ValueError("declared Lipschitz bound violated on samples")
        if self.m <= float(np.max(np.abs(self.profile.radial(
                np.linspace(0, self.rho, 257), self.directions()[0])))):
            raise ValueError("m must exceed sup |omega|")

    def to_json(self) -> dict:
        return {"profile": self.profile.to_json(), "rho": self.rho, "m": self.m,
                "lipschitz": self.lipschitz, "n": self.n}

    @staticmethod
    def from_json(desc: dict) -> "GraphDomain":
        prof = desc["profile"]
        if prof.get("kind") == "rescaled":
            base = profile_from_json(prof["base"])
            profile = RescaledProfile(base, float(prof["s"]))
        elif prof.get("name") == "directional-cone":
            p = prof["params"]
            profile = DirectionalConeProfile(np.asarray(p["directions"]), np.asarray(p["slopes"]))
        else:
            profile = profile_from_json(prof)
        return GraphDomain(int(desc.get("n", 2)), float(desc["rho"]), float(desc["m"]),
                           profile, float(desc["lipschitz"]))


def rescale_domain(dom: GraphDomain, s: float) -> GraphDomain:
    """Domain with profile omega_s(x') = omega(s x')/s on B'_(rho/s)."""
    if s <= 0:
        raise ValueError("scale must be positive")
    if s == 1.0:
        return dom
    return GraphDomain(dom.n, dom.rho / s, dom.m / s,
                       RescaledProfile(dom.profile, s), dom.lipschitz)


def hausdorff_distance(A: np.ndarray, B: np.ndarray) -> float:
    """max(sup_A dist(., B), sup_B dist(., A)) over point samples."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if len(A) == 0 or len(B) == 0:
        raise ValueError("hausdorff_distance needs non-empty samples")
    da = cKDTree(B).query(A)[0]
    db = cKDTree(A).query(B)[0]
    return float(max(da.max(), db.max()))


# ---------------------------------------------------------------------------
# verdicts and reports
# ---------------------------------------------------------------------------

@dataclass
class SubVerdict:
    verdict: str
    witness: list | None = None     # [x..., t, value]
    note: str = ""

    def to_json(self) -> dict:
        out = {"verdict": self.verdict}
        if self.witness is not None:
            out["witness"] = [float(w) for w in self.witness]
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class V1V2Report:
    v1: SubVerdict
    v2: SubVerdict
    clipped_T: float
    dyadic_partials: list = field(default_factory=list)   # (level k, integral over level)
    cauchy_defect: float = float("nan")

    def to_json(self) -> dict:
        return {"V1": self.v1.to_json(), "V2": self.v2.to_json(),
                "clipped_T": self.clipped_T,
                "dyadic_partials": [[int(k), float(v)] for k, v in self.dyadic_partials],
                "cauchy_defect": float(self.cauchy_defect)}


def _sampled_endpoint_defect(u: VisibilityFunction) -> float | None:
    """Worst of u(t0)/t0 and u'(t0) at the smallest positive sample, if clearly off 0."""
    ts = u.t_samples
    pos = ts > 0
    if not np.any(pos):
        return None
    t0 = float(ts[pos].min())
    ratio = abs(float(u.value(t0)) / t0)
    sl = abs(float(u.slope(t0)))
    worst = max(ratio, sl)
    return worst if worst > 0.5 + 1e-12 else None


def check_v1_v2(u: VisibilityFunction) -> V1V2Report:
    """V1 from endpoint limits and slope sampling; V2 from dyadic tail sums of gamma_u."""
    Tclip = u.clipped_horizon()
    # V1 endpoint conditions u(0+) = u'(0+) = 0, kind-aware for the closed forms
    bad0 = _sampled_endpoint_defect(u) if u.kind == "sampled" else None
    if u.kind == "linear" and u.C != 0.0:
        v1 = SubVerdict(FAIL, witness=[0.0, 0.0, u.C], note="u'(0+) != 0")
    elif u.kind == "power" and u.C != 0.0 and u.beta <= 0:
        v1 = SubVerdict(FAIL, witness=[0.0, 0.0, float(u.slope(1e-9))], note="u'(0+) != 0")
    elif bad0 is not None:
        v1 = SubVerdict(FAIL, witness=[0.0, 0.0, bad0],
                        note="u(0+) or u'(0+) away from 0 at the smallest samples")
    elif Tclip <= 0:
        v1 = SubVerdict(FAIL, witness=[0.0, u.T, float(u.slope(u.T / 2))],
                        note="0 <= u' <= 1/2 fails on every sub-horizon")
    else:
        ts = log_grid(Tclip * 2.0 ** -30, Tclip * (1 - 1e-12), per_level=8)
        sl = np.asarray(u.slope(ts))
        bad = np.nonzero((sl < -1e-12) | (sl > 0.5 + 1e-12))[0]
        if len(bad):
            k = bad[0]
            v1 = SubVerdict(FAIL, witness=[0.0, float(ts[k]), float(sl[k])],
                            note="slope bound violated inside clipped horizon")
        else:
            note = "" if Tclip >= u.T else f"horizon clipped to T'={Tclip!r}"
            v1 = SubVerdict(PASS, note=note)

    # V2 over (0, Tclip]
    if v1.verdict == FAIL and Tclip <= 0:
        return V1V2Report(v1, SubVerdict(INCONCLUSIVE, note="no usable horizon"), Tclip)
    Teff = Tclip if Tclip > 0 else u.T
    c_div = u.gamma_lower_c()
    partials = []
    try:
        total = 0.0
        for k in range(V2_LEVELS):
            a, b = Teff * 2.0 ** (-(k + 1)), Teff * 2.0 ** (-k)
            Ik = u.gamma_integral(a, b)
            partials.append((k, Ik))
            total += Ik
        tail = sum(v for _, v in partials[-V2_TAIL_LEVELS:])
        defect = tail / total if total > 0 else 0.0
    except ValueError as exc:
        return V1V2Report(v1, SubVerdict(FAIL, note=str(exc)), Tclip, partials)
    if c_div is not None:
        v2 = SubVerdict(FAIL, witness=[0.0, Teff, c_div],
                        note="gamma_u >= c/t in closed form: divergent")
    elif total == 0.0 or defect <= TAU_SUM:
        v2 = SubVerdict(PASS)
    elif u.kind != "sampled" and defect <= math.sqrt(TAU_SUM):
        v2 = SubVerdict(PASS, note="closed-form kind, tail geometric but slow")
    else:
        v2 = SubVerdict(INCONCLUSIVE, note="dyadic tails not Cauchy within budget")
    return V1V2Report(v1, v2, Tclip, partials, defect)


@dataclass
class SlopeProfile:
    nu: np.ndarray
    t: float
    s: np.ndarray
    m: np.ndarray
    max_consecutive_increase: float
    max_pair_increase: float
    violation: tuple | None = None     # (s_low, s_high, depth) beyond the local tolerance

    def to_json(self) -> dict:
        return {"t": self.t, "nu": [float(v) for v in np.ravel(self.nu)],
                "max_consecutive_increase": self.max_consecutive_increase,
                "max_pair_increase": self.max_pair_increase}


def _scan_increases(s_adm: np.ndarray, m: np.ndarray):
    """Worst pair s_i < s_j with m(s_j) > m(s_i) beyond tau_slope * (1 + |m_j|).

    The reported depth s_i (m_j - m_i) equals the height of the segment point
    above the boundary graph, so a positive depth is a geometric violation.
    """
    run_i = 0
    worst = None
    max_pair = float("-inf")
    for j in range(1, len(s_adm)):
        inc = m[j] - m[run_i]
        if inc > max_pair:
            max_pair = inc
        if inc > TAU_SLOPE * (1.0 + abs(m[j])):
            depth = float(s_adm[run_i] * inc)
            if worst is None or depth > worst[2]:
                worst = (float(s_adm[run_i]), float(s_adm[j]), depth)
        if m[j] < m[run_i]:
            run_i = j
    return max_pair, worst


def slope_profile(dom: GraphDomain, u: VisibilityFunction, nu, t: float,
                  s: np.ndarray | None = None) -> SlopeProfile:
    """m_t(s) = (omega(s nu) + u(t))/s on {s > 0 : s^2 + omega(s nu)^2 < t^2}."""
    if not (0 < t):
        raise ValueError("need t > 0")
    if s is None:
        s = dom.s_grid()
    om = np.asarray(dom.omega(s, nu))
    adm = (s > 0) & (s * s + om * om < t * t)
    s_adm, om_adm = s[adm], om[adm]
    if len(s_adm) == 0:
        return SlopeProfile(np.asarray(nu), t, s_adm, s_adm, float("-inf"), float("-inf"))
    ut = float(u.value(t))
    mvals = (om_adm + ut) / s_adm
    dm = np.diff(mvals)
    max_cons = float(dm.max()) if len(dm) else float("-inf")
    max_pair, worst = _scan_increases(s_adm, mvals)
    return SlopeProfile(np.asarray(nu), t, s_adm, mvals, max_cons, max_pair, worst)


def check_segment_visibility(dom: GraphDomain, u: VisibilityFunction, t: float,
                             directions=None, s: np.ndarray | None = None) -> SubVerdict:
    """Direct (V3) test: sample the segment [U_t, x] for boundary x in B_t.

    A point p on the segment at radial position s_i is inside Omega exactly
    when p_n > omega(p'), which is checked geometrically point by point.
    """
    if directions is None:
        directions = dom.directions()
    if s is None:
        s = dom.s_grid()
    ut = float(u.value(t))
    worst = None
    for nu in directions:
        om = np.asarray(dom.omega(s, nu))
        adm = (s > 0) & (s * s + om * om < t * t)
        s_adm, om_adm = s[adm], om[adm]
        if len(s_adm) < 2:
            continue
        nu_vec = np.asarray(nu, dtype=float).ravel()
        # walk the sampled segment points geometrically: p at radial s_i on the
        # segment [U_t, x_j] is inside Omega exactly when m(s_j) > m(s_i)
        m = (om_adm + ut) / s_adm
        _, viol = _scan_increases(s_adm, m)
        if viol is not None:
            s_i, s_j, _ = viol
            j = int(np.searchsorted(s_adm, s_j))
            i = int(np.searchsorted(s_adm, s_i))
            lam = s_adm[i] / s_adm[j]
            p_n = float(lam * (om_adm[j] + ut) - ut)
            depth = p_n - float(om_adm[i])          # height of p above the graph
            if depth > 0 and (worst is None or depth > worst[0]):
                x_b = list(s_adm[j] * nu_vec) + [float(om_adm[j])]
                worst = (depth, x_b, t)
    if worst is None:
        return SubVerdict(PASS)
    depth, x_b, tt = worst
    return SubVerdict(FAIL, witness=[*x_b, tt, depth],
                      note="a sampled point of the segment to this boundary point "
                           "lies strictly inside Omega")


def check_gradient_criterion(dom: GraphDomain, u: VisibilityFunction,
                             s: np.ndarray | None = None) -> SubVerdict:
    """<x', grad omega(x')> <= omega(x') + u(|x'|) on the sample set."""
    if s is None:
        s = dom.s_grid()
    Teff = u.clipped_horizon()
    s = s[(s > 0) & (s < Teff)] if Teff > 0 else s[s > 0]
    if len(s) == 0:
        return SubVerdict(INCONCLUSIVE, note="no samples below the u-horizon")
    if np.any(np.asarray(u.slope(s)) < -1e-12):
        return SubVerdict(FAIL, note="u is not non-decreasing")
    tau = TAU_GRAD_ANALYTIC if dom.profile.analytic else TAU_GRAD_SAMPLED
    worst = None
    for nu in dom.directions():
        om = np.asarray(dom.omega(s, nu))
        slope = np.asarray(dom.omega_slope(s, nu))
        excess = s * slope - om - np.asarray(u.value(s))
        k = int(np.argmax(excess))
        if excess[k] > tau and (worst is None or excess[k] > worst[0]):
            nu_vec = np.asarray(nu, dtype=float).ravel()
            worst = (float(excess[k]), list(s[k] * nu_vec), float(s[k]))
    if worst is None:
        return SubVerdict(PASS)
    if not dom.profile.analytic:
        return SubVerdict(INCONCLUSIVE,
                          note="sampled profile: finite-difference gradient unreliable")
    excess, point, sk = worst
    return SubVerdict(FAIL, witness=[*point, sk, excess])


@dataclass
class VisibilityCertificate:
    v1: SubVerdict
    v2: SubVerdict
    v3_direct: SubVerdict
    v3_slope: SubVerdict
    v3_gradient: SubVerdict
    overall: str
    clipped_T: float
    scales: list
    dyadic_partials: list
    cauchy_defect: float
    resolution_inconsistency: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "schema": "visilab/1",
            "V1": self.v1.to_json(), "V2": self.v2.to_json(),
            "V3_direct": self.v3_direct.to_json(),
            "V3_slope": self.v3_slope.to_json(),
            "V3_gradient": self.v3_gradient.to_json(),
            "overall": self.overall,
            "clipped_T": self.clipped_T,
            "scales": [float(t) for t in self.scales],
            "summability": {
                "dyadic_partials": [[int(k), float(v)] for k, v in self.dyadic_partials],
                "cauchy_defect": float(self.cauchy_defect)},
            "resolution_inconsistency": self.resolution_inconsistency,
        }


def certify_visibility(dom: GraphDomain, u: VisibilityFunction, scales=None,
                       directions=None, s: np.ndarray | None = None,
                       nscales: int = 20) -> VisibilityCertificate:
    """Aggregate V1/V2, direct segment tests, slope profiles, and the gradient test.

    Overall PASS requires V1 and V2 PASS and at least one V3 test PASS with
    none FAIL. Disagreement between V3 tests is reported as a diagnostic,
    never reconciled silently. When scales is None, nscales log-spaced scales
    inside the (possibly clipped) horizon are used.
    """
    rep = check_v1_v2(u)
    Teff = rep.clipped_T if rep.clipped_T > 0 else u.T
    Teff = min(Teff, dom.rho)
    if scales is None:
        scales = log_grid(Teff * 2.0 ** -8, Teff * (1 - 1e-9),
                          per_level=max(1, nscales // 8))[-nscales:]
    usable = [float(t) for t in scales if 0 < t < Teff]
    if directions is None:
        directions = dom.directions()
    if s is None:
        s = dom.s_grid()

    inconsistency = []
    slope_v = SubVerdict(PASS)
    direct_v = SubVerdict(PASS)
    if not usable:
        slope_v = direct_v = SubVerdict(INCONCLUSIVE, note="no scales below the horizon")
    slope_worst = None
    direct_worst = None
    for t in usable:
        d = check_segment_visibility(dom, u, t, directions, s)
        worst = None
        for nu in directions:
            prof = slope_profile(dom, u, nu, t, s)
            if prof.violation is not None:
                s_i, s_j, depth = prof.violation
                if worst is None or depth > worst[2]:
                    nu_vec = np.asarray(nu, dtype=float).ravel()
                    worst = (list(s_j * nu_vec), t, depth)
        if worst is not None and (slope_worst is None or worst[2] > slope_worst[2]):
            slope_worst = worst
        if d.verdict == FAIL and (direct_worst is None
                                  or d.witness[-1] > direct_worst.witness[-1]):
            direct_worst = d
        if (d.verdict == FAIL) != (worst is not None):
            inconsistency.append({"t": t, "direct": d.verdict,
                                  "slope": FAIL if worst is not None else PASS})
    if slope_worst is not None:
        pt, tt, depth = slope_worst
        slope_v = SubVerdict(FAIL, witness=[*pt, tt, depth], note="slope profile increases")
    if direct_worst is not None:
        direct_v = direct_worst

    grad_v = check_gradient_criterion(dom, u, s)
    verdicts = [rep.v1.verdict, rep.v2.verdict,
                direct_v.verdict, slope_v.verdict, grad_v.verdict]
    v3 = [direct_v.verdict, slope_v.verdict, grad_v.verdict]
    if FAIL in verdicts:
        overall = FAIL
    elif rep.v1.verdict == PASS and rep.v2.verdict == PASS and PASS in v3:
        overall = PASS
    else:
        overall = INCONCLUSIVE
    return VisibilityCertificate(rep.v1, rep.v2, direct_v, slope_v, grad_v, overall,
                                 rep.clipped_T, usable, rep.dyadic_partials,
                                 rep.cauchy_defect, inconsistency)


# ---------------------------------------------------------------------------
# tangent cones
# ---------------------------------------------------------------------------

@dataclass
class TangentCone:
    directions: list
    slopes: np.ndarray                  # D^+_nu omega(0) per direction
    s_trace: np.ndarray
    ratio_trace: np.ndarray             # corrected ratios c_nu(s), one row per direction
    monotone_defect: float

    def omega0(self, s, nu):
        prof = DirectionalConeProfile(np.asarray([np.ravel(d) for d in self.directions]),
                                      self.slopes)
        return prof.radial(s, nu)

    def as_profile(self) -> DirectionalConeProfile:
        return DirectionalConeProfile(np.asarray([np.ravel(d) for d in self.directions]),
                                      self.slopes)

    def to_json(self) -> dict:
        return {"directions": [list(map(float, np.ravel(d))) for d in self.directions],
                "slopes": list(map(float, self.slopes)),
                "monotone_defect": float(self.monotone_defect)}


def tangent_cone(dom: GraphDomain, u: VisibilityFunction,
                 s: np.ndarray | None = None) -> TangentCone:
    """Directional slopes at 0 from the corrected ratio
    c_nu(s) = omega_nu(s)/s - L * int_0^(L s) u(t)/t^2 dt, L = sqrt(1 + Lip^2).

    c_nu is non-increasing when the domain is visible; it is extrapolated by
    its value at the smallest grid radius, with the positive part of its
    increments reported as the monotone defect.
    """
    if s is None:
        s = dom.s_grid()
    s = np.sort(s[s > 0])
    L = math.sqrt(1.0 + dom.lipschitz ** 2)
    corr = np.empty(len(s))
    for i, si in enumerate(s):
        Iu = u.u_over_t2_integral(L * si)
        if Iu is None:
            raise ValueError("u-integral diverges: summability (V2) fails for this u")
        corr[i] = L * Iu
    dirs = dom.directions()
    slopes = np.empty(len(dirs))
    traces = np.empty((len(dirs), len(s)))
    defect = 0.0
    for k, nu in enumerate(dirs):
        ratio = np.asarray(dom.omega(s, nu)) / s - corr
        traces[k] = ratio
        slopes[k] = ratio[0]
        inc = np.diff(ratio)            # along increasing s: should be <= 0
        if len(inc):
            defect = max(defect, float(np.maximum(inc, 0.0).max()))
    return TangentCone(dirs, slopes, s, traces, defect)
