import math

import numpy as np
import pytest

from visilab.blowup import blowup_trace, conicality_defect, rescale_set
from visilab.corpus import make_example
from visilab.gridset import default_metric
from visilab.polyset import PolySet
from visilab.regions import Ball

METRIC = default_metric(2)


def test_rescale_cone_invariance():
    q = make_example("quadrant")
    E = q.polyset()
    E2 = rescale_set(E, 0.5)
    # quadrant is a cone: rescaling maps the set onto itself near 0
    assert bool(E2.contains_points([(-0.1, 0.1)])[0])
    assert not bool(E2.contains_points([(0.1, 0.1)])[0])


def test_rescale_disk_similarity():
    th = np.linspace(0, 2 * math.pi, 257)[:-1]
    E = PolySet([np.stack([0.1 * np.cos(th), 0.5 + 0.1 * np.sin(th)], axis=1)])
    E2 = rescale_set(E, 0.5)
    assert E2.area() == pytest.approx(4 * E.area(), rel=1e-12)
    c = E2.loops[0].mean(axis=0)
    assert np.allclose(c, [0.0, 1.0], atol=1e-12)


def test_rescale_grid_metadata_only():
    bq = make_example("bumped-quadrant")
    g = bq.gridset(h=1 / 64)
    g2 = rescale_set(g, 0.25)
    assert g2.h == g.h / 0.25
    assert np.array_equal(g2.mask, g.mask)
    assert np.allclose(g2.origin, g.origin / 0.25)


def test_rescale_rejects_nonpositive():
    q = make_example("quadrant")
    with pytest.raises(ValueError):
        rescale_set(q.polyset(), 0.0)


def test_conicality_quadrant_zero():
    q = make_example("quadrant")
    assert conicality_defect(q.polyset(), (0.0, 0.0), Ball(0.9), q.dom) == 0.0


def test_conicality_rotated_halfplane_zero():
    # half-plane with boundary line through 0 at angle 0.7; the window sees
    # only the through-origin edge, which is exactly radial
    c, s = math.cos(0.7), math.sin(0.7)
    d = np.array([c, s])
    n = np.array([-s, c])
    loop = [-2 * d, 2 * d, 2 * d + 4 * n, -2 * d + 4 * n]
    E = PolySet([loop])
    assert conicality_defect(E, (0.0, 0.0), Ball(1.5)) <= 1e-15


def test_conicality_offcenter_disk():
    d = make_example("disk", center=(0.0, 3.0), r=1.0)
    # remeasure with vertex at the origin: max |<nu, x>|/|x| is ~1 where nu || x
    E = d.polyset()
    val = conicality_defect(E, (0.0, 0.0))
    assert val == pytest.approx(1.0, abs=1e-4)


def test_conicality_grid_quadrant_zero():
    q = make_example("quadrant")
    g = q.gridset(h=1 / 64)
    assert conicality_defect(g, np.zeros(2), Ball(0.9), q.dom, METRIC) == 0.0


def test_blowup_trace_bumped_quadrant():
    bq = make_example("bumped-quadrant")
    g = bq.gridset(h=1 / 128, half_width=1.25)
    scales = [2.0 ** (-j) for j in range(5)]
    trace = blowup_trace(g, bq.dom, bq.u, scales, R=1.0, metric=METRIC)
    h = g.h
    # window-localized L1 distance is non-increasing
    lw = trace.l1_window
    assert all(lw[i] >= lw[i + 1] - 1e-12 for i in range(len(lw) - 1))
    # blown-frame distance and conicality defect die out
    assert trace.l1_to_final[-2] <= 2 * h
    assert trace.kappas[-1] <= 2 * h
    # bump leaves the window for j >= 2
    assert trace.l1_to_final[2] <= 2 * h
    assert trace.kappas[0] > 0.5  # the bump is visibly non-radial at j = 0
    # limit minimality and density constancy
    assert trace.limit_psi <= METRIC.eps_metric * trace.limit_perimeter
    assert trace.limit_mu_dev <= 2 * METRIC.eps_metric * 10 * (1 + 1.1) ** 2
    # nontrivial limit
    ve, vc = trace.nontrivial_volumes
    assert min(ve, vc) >= 0.1
    # exact gap rescaling identity
    assert all(gidentity["exact"] for gidentity in trace.gap_rescaling)


def test_blowup_gap_rescaling_values():
    bq = make_example("bumped-quadrant")
    g = bq.gridset(h=1 / 128, half_width=1.25)
    trace = blowup_trace(g, bq.dom, bq.u, [1.0, 0.5], R=1.0, metric=METRIC)
    for row in trace.gap_rescaling:
        t = row["t"]
        assert row["lhs_int"] == row["rhs_int"]
        # float side: Psi_{t^-1 Omega}(t^-1 E; B_R) = t^(1-n) Psi_Omega(E; B_tR)
        assert row["lhs"] == pytest.approx(row["rhs_scaled"], rel=1e-12)


def test_blowup_trace_json(tmp_path):
    bq = make_example("bumped-quadrant")
    g = bq.gridset(h=1 / 64, half_width=1.25)
    trace = blowup_trace(g, bq.dom, bq.u, [1.0, 0.5, 0.25], R=1.0, metric=METRIC)
    payload = trace.to_json()
    assert payload["schema"] == "visilab/1"
    assert len(payload["rows"]) == 3
    assert len(payload["l1_pairwise"]) == 3


def test_blowup_recentered_boundary_point_of_halfdisk():
    # half-disk {|x| < 1, y > 0} blown up at its boundary point (1, 0):
    # after recentering, the limit is the quarter-plane {x < 0, y > 0}
    hp = make_example("halfplane")
    th = np.linspace(0, math.pi, 2049)
    E = PolySet([np.stack([np.cos(th) - 1.0, np.sin(th)], axis=1)])  # recentered
    h = 1 / 128
    k = int(round(2.5 / h))
    from visilab.gridset import GridSet, domain_mask
    g = GridSet(2, h, np.array([-1.25, -1.25]), np.zeros((k, k), dtype=bool))
    xs = g.axis_centers(0)
    ys = g.axis_centers(1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    g.mask = E.contains_points(np.stack([X.ravel(), Y.ravel()], axis=1)).reshape(k, k)
    trace = blowup_trace(g, hp.dom, hp.u, [2.0 ** (-j) for j in range(5)],
                         R=1.0, metric=METRIC)
    assert trace.kappas[-1] <= 2 * h
    # the limit mask agrees with the quarter-plane on its own raster
    from visilab.blowup import rescale_set
    E4 = rescale_set(g, 2.0 ** -4)
    cx = E4.axis_centers(0)
    cy = E4.axis_centers(1)
    CX, CY = np.meshgrid(cx, cy, indexing="ij")
    window = (CX ** 2 + CY ** 2 < 1.0) & (CY > 0)
    assert np.array_equal(E4.mask[window], (CX < 0)[window])
