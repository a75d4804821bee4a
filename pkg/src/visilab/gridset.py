"""Binary grid sets with a direction-calibrated cut metric.

The relative perimeter of a grid set is the weighted count of cut pairs
(p, q) over a fixed neighborhood offset family, with weights chosen once per
metric so that the cut length of a digital straight edge matches its
Euclidean length uniformly over directions (Chebyshev fit at 360 sampled
directions; the residual max error is stored as eps_metric). Weights are
also carried as integers scaled by 2^40 so that min-cut objectives are exact.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

WEIGHT_SCALE_BITS = 40
WEIGHT_SCALE = 1 << WEIGHT_SCALE_BITS

OFFSETS_2D = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2),
              (3, 1), (1, 3), (3, -1), (1, -3))


def _offsets_3d():
    out = []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in (-1, 0, 1):
                v = (dx, dy, dz)
                if v == (0, 0, 0) or tuple(-c for c in v) in out:
                    continue
                out.append(v)
    return tuple(out)


OFFSETS_3D = _offsets_3d()


@dataclass(frozen=True)
class CutMetric:
    n: int
    offsets: tuple
    weights: tuple          # float weights w_d (dimensionless)
    weights_int: tuple      # round(w_d * 2^40)
    eps_metric: float       # max |direction error| on a dense direction grid

    @property
    def max_reach(self) -> int:
        return max(max(abs(c) for c in d) for d in self.offsets)

    def unit_normals(self) -> np.ndarray:
        d = np.asarray(self.offsets, dtype=float)
        return d / np.linalg.norm(d, axis=1)[:, None]


def _calibrate(offsets: np.ndarray, dirs: np.ndarray, check_dirs: np.ndarray):
    A = np.abs(dirs @ offsets.T)
    m, k = A.shape
    c = np.zeros(k + 1)
    c[-1] = 1.0
    Aub = np.vstack([np.hstack([A, -np.ones((m, 1))]),
                     np.hstack([-A, -np.ones((m, 1))])])
    bub = np.hstack([np.ones(m), -np.ones(m)])
    res = linprog(c, A_ub=Aub, b_ub=bub, bounds=[(0, None)] * k + [(0, None)],
                  method="highs")
    if not res.success:
        raise RuntimeError("cut metric calibration failed")
    w = res.x[:k]
    err = np.abs(np.abs(check_dirs @ offsets.T) @ w - 1.0)
    return w, float(err.max())


@functools.lru_cache(maxsize=4)
def default_metric(n: int = 2) -> CutMetric:
    """Calibrated metric: up-to-(3,1) offsets in 2-d, 26-neighborhood in 3-d."""
    if n == 2:
        offs = np.asarray(OFFSETS_2D, dtype=float)
        th = (np.arange(360) + 0.5) / 360 * math.pi
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
        thd = np.linspace(0, math.pi, 72001)
        check = np.stack([np.cos(thd), np.sin(thd)], axis=1)
        raw = OFFSETS_2D
    elif n == 3:
        offs = np.asarray(OFFSETS_3D, dtype=float)
        i = np.arange(360) + 0.5
        golden = math.pi * (1 + math.sqrt(5))
        phi_a = np.arccos(1 - 2 * i / 360)
        dirs = np.stack([np.sin(phi_a) * np.cos(golden * i),
                         np.sin(phi_a) * np.sin(golden * i), np.cos(phi_a)], axis=1)
        i = np.arange(20000) + 0.5
        phi_a = np.arccos(1 - 2 * i / 20000)
        check = np.stack([np.sin(phi_a) * np.cos(golden * i),
                          np.sin(phi_a) * np.sin(golden * i), np.cos(phi_a)], axis=1)
        raw = OFFSETS_3D
    else:
        raise ValueError("grids support n in {2, 3}")
    w, eps = _calibrate(offs, dirs, check)
    w_int = tuple(int(round(v * WEIGHT_SCALE)) for v in w)
    if any(v <= 0 for v in w_int):
        # drop zero-weight offsets so every stored weight is positive
        keep = [i for i, v in enumerate(w_int) if v > 0]
        raw = tuple(raw[i] for i in keep)
        w = w[keep]
        w_int = tuple(int(round(v * WEIGHT_SCALE)) for v in w)
    return CutMetric(n, tuple(raw), tuple(float(v) for v in w), w_int, eps)


@dataclass
class GridSet:
    """Occupancy bitmask over a box: cell i has center origin + (i + 1/2) h."""

    n: int
    h: float
    origin: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.ndim != self.n or len(self.origin) != self.n:
            raise ValueError("mask rank and origin length must equal n")

    @property
    def dims(self):
        return self.mask.shape

    def axis_centers(self, k: int) -> np.ndarray:
        return self.origin[k] + (np.arange(self.dims[k]) + 0.5) * self.h

    def cell_index(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.floor((pts - self.origin[None, :]) / self.h).astype(np.int64)

    def volume(self) -> float:
        return float(self.mask.sum()) * self.h ** self.n

    def copy_with(self, mask: np.ndarray) -> "GridSet":
        return GridSet(self.n, self.h, self.origin.copy(), mask)

    def rescaled(self, t: float) -> "GridSet":
        """t^-1 E: pure metadata (cells scale with the set), exact for any t > 0."""
        if t <= 0:
            raise ValueError("scale must be positive")
        return GridSet(self.n, self.h / t, self.origin / t, self.mask)

    # -- i/o ------------------------------------------------------------------

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        head = (f"visilab-grid 1\nn={self.n} dims={','.join(map(str, self.dims))} "
                f"h={self.h!r} origin={','.join(repr(float(v)) for v in self.origin)}\n")
        bits = np.packbits(self.mask.ravel().astype(np.uint8))
        with open(path, "wb") as fh:
            fh.write(head.encode("ascii"))
            fh.write(bits.tobytes())
        return path

    @staticmethod
    def load(path: str | Path) -> "GridSet":
        raw = Path(path).read_bytes()
        nl1 = raw.index(b"\n")
        nl2 = raw.index(b"\n", nl1 + 1)
        if raw[:nl1] != b"visilab-grid 1":
            raise ValueError("not a visilab grid file")
        fields = dict(kv.split("=") for kv in raw[nl1 + 1:nl2].decode("ascii").split())
        n = int(fields["n"])
        dims = tuple(int(v) for v in fields["dims"].split(","))
        h = float(fields["h"])
        origin = np.asarray([float(v) for v in fields["origin"].split(",")])
        total = int(np.prod(dims))
        bits = np.unpackbits(np.frombuffer(raw[nl2 + 1:], dtype=np.uint8), count=total)
        return GridSet(n, h, origin, bits.astype(bool).reshape(dims))


def domain_mask(gs: GridSet, dom) -> np.ndarray:
    """Digitized Omega: cell centers strictly above the profile graph."""
    if gs.n == 2:
        xs = gs.axis_centers(0)
        ys = gs.axis_centers(1)
        om = omega_on_x(dom, xs)
        return ys[None, :] > om[:, None]
    xs = gs.axis_centers(0)
    ys = gs.axis_centers(1)
    zs = gs.axis_centers(2)
    xp = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    om = omega_on_points(dom, xp).reshape(len(xs), len(ys))
    return zs[None, None, :] > om[:, :, None]


def omega_on_x(dom, x: np.ndarray) -> np.ndarray:
    """omega along the x-axis (n=2), honoring the sign-direction convention."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    if pos.any():
        out[pos] = np.asarray(dom.omega(x[pos], np.array([1.0])), dtype=float)
    if (~pos).any():
        out[~pos] = np.asarray(dom.omega(-x[~pos], np.array([-1.0])), dtype=float)
    return out


def omega_on_points(dom, xp: np.ndarray) -> np.ndarray:
    xp = np.atleast_2d(np.asarray(xp, dtype=float))
    if xp.shape[1] == 1:
        return omega_on_x(dom, xp[:, 0])
    s = np.linalg.norm(xp, axis=1)
    out = np.zeros(len(xp))
    pos = s > 0
    name = getattr(dom.profile, "name", "")
    if name in ("zero", "cone", "power", "bounce", "sin-graph", "rescaled"):
        out[pos] = np.asarray(dom.omega(s[pos], np.array([1.0, 0.0])), dtype=float)
    else:
        for i in np.nonzero(pos)[0]:
            out[i] = float(dom.omega(s[i], xp[i] / s[i]))
    return out


def _slices(dims, d):
    sa = tuple(slice(max(0, dk), dims[k] + min(0, dk)) for k, dk in enumerate(d))
    sb = tuple(slice(max(0, -dk), dims[k] - max(0, dk)) for k, dk in enumerate(d))
    return sa, sb


def face_fields(gs: GridSet, om: np.ndarray, region, dom, metric: CutMetric,
                offsets=None):
    """Yield per-offset face data: (offset, w_float, w_int, valid, sa, sb, mids).

    valid marks pairs with both cells inside Omega, the face midpoint inside
    the region, and the midpoint at least h/2 away (vertically) from the wall.
    mids is the (m, n) array of midpoints of the valid faces.
    """
    dims = gs.dims
    cax = [gs.axis_centers(k) for k in range(gs.n)]
    offs = metric.offsets if offsets is None else offsets
    for i, d in enumerate(offs):
        sa, sb = _slices(dims, d)
        valid = om[sa] & om[sb]
        if not valid.any():
            yield d, metric.weights[i], metric.weights_int[i], valid, sa, sb, None
            continue
        mid_ax = []
        for k in range(gs.n):
            ca = cax[k][sa[k]]
            cb = cax[k][sb[k]]
            mid_ax.append(0.5 * (ca + cb))
        mg = np.meshgrid(*mid_ax, indexing="ij")
        mids = np.stack([g.ravel() for g in mg], axis=1)
        keep = valid.ravel()
        if region is not None:
            inreg = np.zeros(len(mids), dtype=bool)
            inreg[keep] = region.contains(mids[keep])
            keep = keep & inreg
        if dom is not None:
            wallv = np.zeros(len(mids), dtype=bool)
            omv = omega_on_points(dom, mids[keep][:, :-1])
            wallv_keep = np.abs(mids[keep][:, -1] - omv) < 0.5 * gs.h * (1 - 1e-9)
            tmp = np.zeros(len(mids), dtype=bool)
            tmp[np.nonzero(keep)[0][wallv_keep]] = True
            keep = keep & ~tmp
        valid = keep.reshape(valid.shape)
        yield d, metric.weights[i], metric.weights_int[i], valid, sa, sb, mids.reshape(
            valid.shape + (gs.n,))


def perimeter_int(gs: GridSet, om: np.ndarray, region, dom,
                  metric: CutMetric) -> int:
    """Integer-scaled relative perimeter (units of h^(n-1) / 2^40)."""
    total = 0
    E = gs.mask
    for d, _, w_int, valid, sa, sb, _ in face_fields(gs, om, region, dom, metric):
        if valid.any():
            total += w_int * int((E[sa] ^ E[sb])[valid].sum())
    return total


def grid_perimeter(gs: GridSet, om: np.ndarray, region, dom, metric: CutMetric) -> float:
    return perimeter_int(gs, om, region, dom, metric) * gs.h ** (gs.n - 1) / WEIGHT_SCALE


def grid_volume(gs: GridSet, om: np.ndarray, region) -> tuple[float, float]:
    """(|E cap Omega cap A|, |(Omega cap A) \\ E|)."""
    cax = [gs.axis_centers(k) for k in range(gs.n)]
    mg = np.meshgrid(*cax, indexing="ij")
    pts = np.stack([g.ravel() for g in mg], axis=1)
    ina = region.contains(pts).reshape(gs.dims) if region is not None else np.ones(gs.dims, bool)
    inside = om & ina
    vol_e = float((gs.mask & inside).sum()) * gs.h ** gs.n
    vol_c = float((~gs.mask & inside).sum()) * gs.h ** gs.n
    return vol_e, vol_c


def crofton_normal_field(gs: GridSet, om: np.ndarray, metric: CutMetric) -> np.ndarray:
    """Per-cell inner-normal estimate: the Crofton-weighted discrete gradient
    of the occupancy, restricted to pairs inside Omega."""
    E = gs.mask
    field = np.zeros(gs.dims + (gs.n,))
    for i, d in enumerate(metric.offsets):
        sa, sb = _slices(gs.dims, d)
        ok = om[sa] & om[sb]
        diff = np.where(ok, E[sb].astype(np.int8) - E[sa].astype(np.int8), 0)
        dvec = np.asarray(d, dtype=float)
        for k in range(gs.n):
            field[sa + (k,)] += metric.weights[i] * dvec[k] * diff
            field[sb + (k,)] += metric.weights[i] * dvec[k] * diff
    return field


def boundary_faces(gs: GridSet, om: np.ndarray, region, dom, metric: CutMetric,
                   unit_only: bool = False):
    """Cut faces of E as measure elements: (midpoints, normals, measures).

    unit_only restricts to the axis-aligned faces with their exact face
    normals (the digital reduced boundary, used for conicality defects).
    Otherwise all metric offsets contribute with their Crofton weights, and
    the normal attached to a face is the Crofton-weighted occupancy gradient
    averaged over the face's two cells, which tracks the continuum normal
    instead of the offset direction.
    """
    offs = None
    if unit_only:
        eye = []
        for k in range(gs.n):
            d = [0] * gs.n
            d[k] = 1
            eye.append(tuple(d))
        offs = tuple(eye)
    field = None if unit_only else crofton_normal_field(gs, om, metric)
    mids_all, normals_all, meas_all = [], [], []
    E = gs.mask
    hfac = gs.h ** (gs.n - 1)
    for i, (d, w_f, _, valid, sa, sb, mids) in enumerate(
            face_fields(gs, om, region, dom, metric, offs)):
        if mids is None:
            continue
        cut = (E[sa] ^ E[sb]) & valid
        if not cut.any():
            continue
        sel = mids[cut]
        dvec = np.asarray(d, dtype=float)
        dvec /= np.linalg.norm(dvec)
        if unit_only:
            normals = np.tile(dvec, (len(sel), 1))
            w = 1.0
        else:
            avg = 0.5 * (field[sa][cut] + field[sb][cut])
            nrm = np.linalg.norm(avg, axis=1)
            good = nrm > 0
            normals = np.tile(dvec, (len(sel), 1))
            normals[good] = avg[good] / nrm[good][:, None]
            w = w_f
        mids_all.append(sel)
        normals_all.append(normals)
        meas_all.append(np.full(len(sel), w * hfac))
    if not mids_all:
        z = np.zeros((0, gs.n))
        return z, z, np.zeros(0)
    return np.vstack(mids_all), np.vstack(normals_all), np.concatenate(meas_all)
