import math

import numpy as np
import pytest

from visilab.corpus import make_example
from visilab.gridset import default_metric, domain_mask, grid_perimeter
from visilab.mingap import (BRUTE_FORCE_LIMIT, MinGapProblem, almost_min_profile,
                            brute_force_gap, density_report, gap_stability_check,
                            minimality_gap, unit_ball_volume)
from visilab.regions import Ball
from visilab.util import jittered_radii

METRIC = default_metric(2)


def _quadrant_grid(h=1 / 32):
    q = make_example("quadrant")
    return q, q.gridset(h=h)


def _random_problem(rng, q, base):
    h = base.h
    gq = base.copy_with(base.mask.copy())
    c = (float(rng.uniform(-0.4, 0.2)), float(rng.uniform(0.12, 0.6)))
    r = float(h * rng.uniform(2.6, 4.2))
    prob = MinGapProblem(gq, q.dom, Ball(r, c), METRIC)
    free = prob.free_mask()
    if not (1 <= int(free.sum()) <= BRUTE_FORCE_LIMIT):
        return None
    sel = rng.random(gq.dims) < 0.5
    box = np.zeros(gq.dims, dtype=bool)
    for i, j in zip(*np.nonzero(free)):
        box[max(0, i - 4):i + 5, max(0, j - 4):j + 5] = True
    gq.mask[box] = sel[box]
    gq.mask &= np.asarray(prob.om)
    return MinGapProblem(gq, q.dom, Ball(r, c), METRIC, prob.om)


def test_oracle_equivalence_randomized():
    q, base = _quadrant_grid()
    rng = np.random.default_rng(11)
    done = 0
    while done < 60:
        prob = _random_problem(rng, q, base)
        if prob is None:
            continue
        a = minimality_gap(prob)
        b = brute_force_gap(prob)
        assert a.psi_int == b.psi_int
        assert a.psi_int >= 0
        done += 1


def test_competitor_consistency():
    # P(F*;A) + Psi = P(E;A) exactly in the integer domain
    q, base = _quadrant_grid()
    rng = np.random.default_rng(5)
    done = 0
    while done < 10:
        prob = _random_problem(rng, q, base)
        if prob is None:
            continue
        res = minimality_gap(prob)
        prob_f = MinGapProblem(res.competitor, q.dom, prob.region, METRIC, prob.om)
        res_f = minimality_gap(prob_f)
        assert res_f.cut_e_int + res.psi_int == res.cut_e_int
        assert res_f.psi_int == 0
        done += 1


def test_brute_force_refuses_large_windows():
    q, base = _quadrant_grid(h=1 / 64)
    prob = MinGapProblem(base, q.dom, Ball(0.3), METRIC)
    with pytest.raises(ValueError):
        brute_force_gap(prob)


def test_window_not_inside_box():
    q, base = _quadrant_grid(h=1 / 64)
    with pytest.raises(ValueError):
        minimality_gap(MinGapProblem(base, q.dom, Ball(1.2), METRIC))


def test_dent_gap_equals_excess():
    q, base = _quadrant_grid()
    i0 = int(np.searchsorted(base.axis_centers(0), -0.02))
    j0 = int(np.searchsorted(base.axis_centers(1), 0.3))
    base.mask[i0, j0] = False
    prob = MinGapProblem(base, q.dom, Ball(0.125, (0.0, 0.3)), METRIC)
    a = minimality_gap(prob)
    b = brute_force_gap(prob)
    assert a.psi_int == b.psi_int > 0
    assert bool(a.competitor.mask[i0, j0])


def test_flat_interface_nearly_minimal():
    sh = make_example("shifted-halfplane")
    g = sh.gridset(h=1 / 128)
    res = minimality_gap(MinGapProblem(g, sh.dom, Ball(0.3, (0.0, 0.5)), METRIC))
    assert 0 <= res.psi <= METRIC.eps_metric * 0.6


def test_quadrant_gap_vanishes_with_resolution():
    q = make_example("quadrant")
    vals = []
    for h in (1 / 64, 1 / 128, 1 / 256):
        g = q.gridset(h=h)
        res = minimality_gap(MinGapProblem(g, q.dom, Ball(0.4), METRIC))
        vals.append(res.psi / 0.4)
    assert all(v <= METRIC.eps_metric for v in vals)
    assert vals[-1] <= vals[0] + 1e-12


def test_window_monotonicity():
    q, base = _quadrant_grid(h=1 / 64)
    rng = np.random.default_rng(7)
    for _ in range(12):
        c = (float(rng.uniform(-0.3, 0.1)), float(rng.uniform(0.15, 0.5)))
        r_in = float(rng.uniform(0.08, 0.15))
        r_out = r_in + float(rng.uniform(0.05, 0.15))
        p_in = minimality_gap(MinGapProblem(base, q.dom, Ball(r_in, c), METRIC)).psi_int
        p_out = minimality_gap(MinGapProblem(base, q.dom, Ball(r_out, c), METRIC)).psi_int
        assert p_in <= p_out


def test_gap_stability_identical():
    q, base = _quadrant_grid(h=1 / 64)
    rep = gap_stability_check(base, base, q.dom, Ball(0.25, (0.0, 0.3)), METRIC)
    assert rep.lhs == 0.0 and rep.trace_term == 0.0 and rep.slack >= 0


def test_gap_stability_interior_flip():
    q, base = _quadrant_grid(h=1 / 64)
    g2 = base.copy_with(base.mask.copy())
    i0 = int(np.searchsorted(g2.axis_centers(0), -0.05))
    j0 = int(np.searchsorted(g2.axis_centers(1), 0.3))
    g2.mask[i0, j0] = not g2.mask[i0, j0]
    rep = gap_stability_check(base, g2, q.dom, Ball(0.2, (0.0, 0.3)), METRIC)
    assert rep.trace_term == 0.0  # flip far from the window boundary
    assert rep.slack >= -1e-12


def test_gap_stability_shifted():
    q, base = _quadrant_grid(h=1 / 64)
    rng = np.random.default_rng(13)
    for _ in range(8):
        g2 = base.copy_with(np.roll(base.mask, int(rng.integers(1, 3)), axis=0))
        c = (float(rng.uniform(-0.2, 0.1)), float(rng.uniform(0.2, 0.5)))
        rep = gap_stability_check(base, g2, q.dom, Ball(0.2, c), METRIC)
        assert rep.slack >= -1e-12


def test_almost_min_profile_quadrant():
    q, base = _quadrant_grid(h=1 / 128)
    radii = jittered_radii(0.05, 0.4, per_decade=6)
    prof = almost_min_profile(base, q.dom, (0.0, 0.0), radii, METRIC)
    assert np.all(prof.psi_hat <= METRIC.eps_metric)
    assert prof.gap_integral_proxy >= 0.0


def test_almost_min_profile_lambda_slope():
    bq = make_example("bumped-quadrant")
    g = bq.gridset(h=1 / 256)
    radii = jittered_radii(0.33, 0.62, per_decade=24)
    prof = almost_min_profile(g, bq.dom, (0.0, 0.0), radii, METRIC)
    pos = prof.psi_hat > 0
    assert pos.sum() >= 4
    # Lambda-consistency: psi_hat(r)/r stays bounded over the fitted range
    lam = prof.psi_hat[pos] / prof.radii[pos]
    assert np.max(lam) <= 4.0 * bq.status["a"] * unit_ball_volume(2) ** 0.5 * (1 + METRIC.eps_metric)


def test_almost_min_profile_empty_set():
    q = make_example("quadrant")
    g = q.gridset(h=1 / 64)
    g.mask[:] = False
    radii = [0.1, 0.2]
    prof = almost_min_profile(g, q.dom, (0.0, 0.5), radii, METRIC)
    assert np.all(prof.psi == 0.0)
    assert np.all(prof.psi_hat == 0.0)


def test_density_quadrant():
    q = make_example("quadrant")
    g = q.gridset(h=1 / 256)
    radii = jittered_radii(1 / 64, 0.4, per_decade=10)
    rep = density_report(g, q.dom, (0.0, 0.0), radii, METRIC)
    assert abs(rep.perimeter_slope - 1.0) <= 0.05
    assert abs(rep.minvol_slope - 2.0) <= 0.1
    assert abs(rep.perimeter_const - 1.0) <= 0.1
    assert not rep.flagged


def test_density_smooth_boundary_point():
    d = make_example("disk")
    g = d.gridset(h=1 / 256)
    # x on the circle, far from the wall
    x = (0.3, 0.55)
    radii = jittered_radii(0.02, 0.2, per_decade=10)
    rep = density_report(g, d.dom, x, radii, METRIC)
    assert abs(rep.perimeter_slope - 1.0) <= 0.1


def test_density_flags_point_mass():
    q = make_example("quadrant")
    g = q.gridset(h=1 / 128)
    g.mask[:] = False
    i0 = int(np.searchsorted(g.axis_centers(0), 0.1))
    j0 = int(np.searchsorted(g.axis_centers(1), 0.3))
    g.mask[i0, j0] = True  # isolated pixel: perimeter does not scale
    radii = jittered_radii(0.05, 0.3, per_decade=8)
    rep = density_report(g, q.dom, (0.1, 0.3), radii, METRIC)
    assert rep.flagged


def test_rounding_budget_reported():
    q, base = _quadrant_grid(h=1 / 64)
    res = minimality_gap(MinGapProblem(base, q.dom, Ball(0.2), METRIC))
    assert res.rounding_budget > 0
    # budget is 2^-40-scale relative to the perimeter
    P = res.cut_e_int * base.h / (1 << 40)
    assert res.rounding_budget <= 2.0 ** -30 * max(P, 1.0)
