"""Boundary profiles omega for graph domains.

Analytic profiles form a fixed named family (zero, linear, cone, power,
convex paraboloid, the dyadic bounce curve, and the oscillating sin-graph
counterexample); anything else enters as sampled radial data. Every profile
is evaluated radially: omega_nu(s) = omega(s * nu) for a unit direction nu
in R^(n-1), so that s * omega_nu'(s) = <x', grad omega(x')> along rays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _as_dir_scalar(nu) -> float:
    """Collapse a direction to its scalar sign in n=2 (nu in {+1,-1})."""
    arr = np.asarray(nu, dtype=float).ravel()
    if arr.size != 1:
        raise ValueError("scalar direction expected for a 1-d profile argument")
    return float(arr[0])


class Profile:
    """Base interface: radial values/slopes along directions of the unit sphere."""

    name = "abstract"
    analytic = True

    def radial(self, s, nu):
        raise NotImplementedError

    def radial_slope(self, s, nu):
        raise NotImplementedError

    def lipschitz(self) -> float:
        raise NotImplementedError

    def breakpoints(self, nu) -> np.ndarray:
        """Radial breakpoints where the profile is not smooth (for exact clipping)."""
        return np.empty(0)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroProfile(Profile):
    name = "zero"

    def radial(self, s, nu):
        return np.zeros_like(np.asarray(s, dtype=float))

    def radial_slope(self, s, nu):
        return np.zeros_like(np.asarray(s, dtype=float))

    def lipschitz(self) -> float:
        return 0.0

    def to_json(self) -> dict:
        return {"kind": "analytic", "name": "zero", "params": {}}


@dataclass(frozen=True)
class LinearProfile(Profile):
    """omega(x') = <a, x'>; in n=2, a is the scalar slope."""

    a: float
    name = "linear"

    def radial(self, s, nu):
        return np.asarray(s, dtype=float) * (self.a * _as_dir_scalar(nu))

    def radial_slope(self, s, nu):
        return np.full_like(np.asarray(s, dtype=float), self.a * _as_dir_scalar(nu))

    def lipschitz(self) -> float:
        return abs(self.a)

    def to_json(self) -> dict:
        return {"kind": "analytic", "name": "linear", "params": {"a": self.a}}


@dataclass(frozen=True)
class ConeProfile(Profile):
    """omega(x') = c |x'|, the 1-homogeneous wedge profile."""

    c: float = 1.0
    name = "cone"

    def radial(self, s, nu):
        return self.c * np.asarray(s, dtype=float)

    def radial_slope(self, s, nu):
        return np.full_like(np.asarray(s, dtype=float), self.c)

    def lipschitz(self) -> float:
        return abs(self.c)

    def to_json(self) -> dict:
        return {"kind": "analytic", "name": "cone", "params": {"c": self.c}}


@dataclass(frozen=True)
class PowerProfile(Profile):
    """omega(x') = c |x'|^p with p >= 1 (p=2 is the convex paraboloid)."""

    c: float = 1.0
    p: float = 2.0
    rho: float = 1.0
    name = "power"

    def radial(self, s, nu):
        return self.c * np.asarray(s, dtype=float) ** self.p

    def radial_slope(self, s, nu):
        s = np.asarray(s, dtype=float)
        return self.c * self.p * np.where(s > 0, s, 0.0) ** (self.p - 1.0)

    def lipschitz(self) -> float:
        return abs(self.c) * self.p * self.rho ** (self.p - 1.0)

    def to_json(self) -> dict:
        return {"kind": "analytic", "name": "power",
                "params": {"c": self.c, "p": self.p, "rho": self.rho}}


class BounceProfile(Profile):
    """Piecewise-linear profile bouncing between the graphs of y and y + y^2.

    On each dyadic block (y_{i+1}, y_i], y_i = 2^-i, the graph is flat at
    height ytil_{i+1} = 2^-(i+1) + 4^-(i+1) up to ytil_{i+1}, then climbs with
    slope a_i = (1 + 3*2^-(i+1)) / (1 - 2^-(i+1)) and intercept
    b_i = (4^-i + 2^-(3i+1)) / (1 - 2^-(i+1)) until it meets (y_i, y_i + y_i^2).
    Evaluated from the exact closed form, never from samples.
    """

    name = "bounce"
    analytic = True
    IMAX = 40  # below 2^-40 the profile is numerically indistinguishable from y

    @staticmethod
    def _block(y: float) -> int:
        i = int(math.floor(-math.log2(y)))
        if 2.0 ** (-i) < y:
            i -= 1
        while y <= 2.0 ** (-(i + 1)):
            i += 1
        return min(i, BounceProfile.IMAX)

    @staticmethod
    def coeffs(i: int) -> tuple[float, float]:
        q = 2.0 ** (-(i + 1))
        a = (1.0 + 3.0 * q) / (1.0 - q)
        b = (4.0 ** (-i) + 2.0 ** (-(3 * i + 1))) / (1.0 - q)
        return a, b

    def _value_scalar(self, y: float) -> float:
        if y <= 0.0:
            return 0.0
        if y > 1.0:
            a, b = self.coeffs(0)
            return a * y - b
        i = self._block(y)
        ytil = 2.0 ** (-(i + 1)) + 4.0 ** (-(i + 1))
        if y <= ytil:
            return ytil
        a, b = self.coeffs(i)
        return a * y - b

    def _slope_scalar(self, y: float) -> float:
        if y <= 0.0:
            return 0.0
        if y > 1.0:
            return self.coeffs(0)[0]
        i = self._block(y)
        ytil = 2.0 ** (-(i + 1)) + 4.0 ** (-(i + 1))
        if y <= ytil:
            return 0.0
        return self.coeffs(i)[0]

    def radial(self, s, nu):
        s = np.asarray(s, dtype=float)
        out = np.vectorize(self._value_scalar, otypes=[float])(np.abs(s))
        return out if s.ndim else float(out)

    def radial_slope(self, s, nu):
        s = np.asarray(s, dtype=float)
        out = np.vectorize(self._slope_scalar, otypes=[float])(np.abs(s))
        return out if s.ndim else float(out)

    def lipschitz(self) -> float:
        return self.coeffs(0)[0]  # slopes a_i decrease to 1 as i grows

    def breakpoints(self, nu) -> np.ndarray:
        pts = []
        for i in range(self.IMAX):
            pts.append(2.0 ** (-i))
            pts.append(2.0 ** (-(i + 1)) + 4.0 ** (-(i + 1)))
        return np.array(sorted(pts))

    def to_json(self) -> dict:
        return {"kind": "analytic", "name": "bounce", "params": {}}


class SinGraphProfile(Profile):
    """omega(x) = x^2 sin(1/|x|): Lipschitz near 0, no visibility function works.

    At x_k = 1/((2k+1) pi) the profile has omega(x_k) = 0, omega'(x_k) = 1.
    """

    name = "sin-graph"
    analytic = True

    def radial(self, s, nu):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(a > 0, a * a * np.sin(np.where(a > 0, 1.0 / np.where(a > 0, a, 1.0), 0.0)), 0.0)
        return out if s.ndim else float(out)

    def radial_slope(self, s, nu):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        safe = np.where(a > 0, a, 1.0)
        out = np.where(a > 0, 2.0 * a * np.sin(1.0 / safe) - np.cos(1.0 / safe), 0.0)
        return out if s.ndim else float(out)

    def lipschitz(self) -> float:
        return 3.0  # |2x sin + cos| <= 2 rho + 1 on rho <= 1

    def to_json(self) -> dict:
        return {"kind": "analytic", "name": "sin-graph", "params": {}}


@dataclass
class SampledProfile(Profile):
    """Radial samples omega_nu(s) on a direction set and an s-grid.

    Slopes come from central differences on the grid; gradient-based
    certification of sampled profiles is therefore capped at INCONCLUSIVE
    on failure.
    """

    s: np.ndarray
    values: np.ndarray           # shape (ndirections, len(s))
    directions: np.ndarray       # shape (ndirections,) in n=2, else (ndirections, n-1)
    lip: float
    name = "sampled"
    analytic = False

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.directions = np.asarray(self.directions, dtype=float)

    def _dir_index(self, nu) -> int:
        nu = np.asarray(nu, dtype=float).ravel()
        dirs = np.atleast_2d(self.directions.reshape(len(self.values), -1))
        d2 = ((dirs - nu[None, :dirs.shape[1]]) ** 2).sum(axis=1)
        return int(np.argmin(d2))

    def radial(self, s, nu):
        k = self._dir_index(nu)
        return np.interp(np.asarray(s, dtype=float), self.s, self.values[k])

    def radial_slope(self, s, nu):
        k = self._dir_index(nu)
        dv = np.gradient(self.values[k], self.s)
        return np.interp(np.asarray(s, dtype=float), self.s, dv)

    def lipschitz(self) -> float:
        return self.lip

    def to_json(self) -> dict:
        return {"kind": "sampled", "s": list(map(float, self.s)),
                "values": [list(map(float, row)) for row in self.values],
                "directions": np.asarray(self.directions).tolist(),
                "lipschitz": self.lip}


_ANALYTIC = {
    "zero": lambda p: ZeroProfile(),
    "linear": lambda p: LinearProfile(a=float(p["a"])),
    "cone": lambda p: ConeProfile(c=float(p.get("c", 1.0))),
    "power": lambda p: PowerProfile(c=float(p.get("c", 1.0)), p=float(p.get("p", 2.0)),
                                    rho=float(p.get("rho", 1.0))),
    "convex-paraboloid": lambda p: PowerProfile(c=float(p.get("c", 1.0)), p=2.0,
                                                rho=float(p.get("rho", 1.0))),
    "bounce": lambda p: BounceProfile(),
    "sin-graph": lambda p: SinGraphProfile(),
}


def profile_from_json(desc: dict) -> Profile:
    kind = desc.get("kind", "analytic")
    if kind == "analytic":
        name = desc["name"]
        if name not in _ANALYTIC:
            raise ValueError(f"unknown analytic profile {name!r}")
        return _ANALYTIC[name](desc.get("params", {}))
    if kind == "sampled":
        return SampledProfile(s=np.asarray(desc["s"], dtype=float),
                              values=np.asarray(desc["values"], dtype=float),
                              directions=np.asarray(desc["directions"], dtype=float),
                              lip=float(desc["lipschitz"]))
    raise ValueError(f"unknown profile kind {kind!r}")
