import math

import numpy as np
import pytest

from visilab.corpus import make_example
from visilab.foliation import OffcentricChart, to_offcentric
from visilab.gridset import default_metric
from visilab.monotonicity import audit, g_limit, g_term, lhs_conical_deviation, mu
from visilab.regions import Ball
from visilab.perimeter import perimeter_rel
from visilab.util import jittered_radii

CH0 = OffcentricChart.zero(1.0)
METRIC = default_metric(2)


def test_mu_quadrant_constant():
    q = make_example("quadrant")
    E = q.polyset()
    for r in (0.1, 0.33, 0.7):
        assert mu(E, q.dom, CH0, r) == pytest.approx(1.0, abs=1e-13)


def test_mu_empty_near_zero():
    d = make_example("disk")
    E = d.polyset()
    assert mu(E, d.dom, CH0, 0.2) == 0.0  # disk sits at distance 0.25 from 0


def test_mu_shifted_halfplane():
    sh = make_example("shifted-halfplane")
    E = sh.polyset()
    # interface {y = 0.5} enters B_r only for r > 0.5
    assert mu(E, sh.dom, CH0, 0.4) == 0.0
    r = 0.8
    chord = 2 * math.sqrt(r * r - 0.25)
    assert mu(E, sh.dom, CH0, r) == pytest.approx(chord / r, abs=1e-13)


def test_lhs_cone_annihilation():
    q = make_example("quadrant")
    E = q.polyset()
    assert lhs_conical_deviation(E, q.dom, CH0, 0.2, 0.6) == 0.0
    w = make_example("wedge", c=0.5)
    assert lhs_conical_deviation(w.polyset(), w.dom, CH0, 0.2, 0.6) == 0.0


def test_lhs_closed_form_oracle():
    sh = make_example("shifted-halfplane")
    E = sh.polyset()
    c = 0.5
    r1, r2 = 0.6, 0.9

    def anti(r):
        return math.atan(math.sqrt(r * r - c * c) / c)

    oracle = (2 * (anti(r2) - anti(r1))) ** 2
    val = lhs_conical_deviation(E, sh.dom, CH0, r1, r2, max_len=5e-4)
    assert val == pytest.approx(oracle, rel=1e-6)


def test_lhs_empty_interval():
    q = make_example("quadrant")
    assert lhs_conical_deviation(q.polyset(), q.dom, CH0, 0.3, 0.3) == 0.0


def test_g_zero_chart():
    q = make_example("quadrant")
    assert g_term(q.polyset(), q.dom, CH0, 0.1, 0.3) == 0.0


def test_g_empty_interval():
    q = make_example("quadrant")
    chq = OffcentricChart.quadratic(0.25)
    assert g_term(q.polyset(), q.dom, chq, 0.2, 0.2) == 0.0


def test_g_bound_quadratic_chart():
    q = make_example("quadrant")
    E = q.polyset()
    chq = OffcentricChart.quadratic(0.25)
    for r in (0.05, 0.1, 0.2):
        G = g_term(E, q.dom, chq, r, 2 * r)
        mu_max = max(mu(E, q.dom, chq, rr) for rr in (r, 1.5 * r, 2 * r))
        bound = 2 * mu_max * 4 * math.sqrt(float(chq.v(2 * r)) / (2 * r)
                                           + float(chq.vp(2 * r))) * (1 + math.log(2))
        assert abs(G) <= bound


def test_g_telescoping():
    q = make_example("quadrant")
    E = q.polyset()
    chq = OffcentricChart.quadratic(0.25)
    G12 = g_term(E, q.dom, chq, 0.08, 0.12, rmax=0.2)
    G23 = g_term(E, q.dom, chq, 0.12, 0.2, rmax=0.2)
    G13 = g_term(E, q.dom, chq, 0.08, 0.2, rmax=0.2)
    assert abs((G12 + G23) - G13) <= 1e-12 * max(abs(G13), 1e-12)


def test_g_limit_bound_and_zero_chart():
    q = make_example("quadrant")
    E = q.polyset()
    assert g_limit(E, q.dom, CH0, 0.3, mu_max=1.0) == (0.0, 0.0)
    chq = OffcentricChart.quadratic(0.25)
    r = 0.3
    val, tail = g_limit(E, q.dom, chq, r, mu_max=1.1)
    # closed-form budget: 4 C (sqrt(3) sqrt(r) + r sqrt(3/(4r))) at C = mu_max
    budget = 4 * 1.1 * (math.sqrt(3) * math.sqrt(r) + r * math.sqrt(3 / (4 * r)))
    assert abs(val) + tail <= budget
    # the tail bound shrinks with the inner radius
    _, tail2 = g_limit(E, q.dom, chq, r, mu_max=1.1, r_small=r / 4096)
    assert tail2 < tail


def test_audit_quadrant_polyset_exact():
    q = make_example("quadrant")
    radii = jittered_radii(0.02, 0.45, per_decade=8)
    aud = audit(q.polyset(), q.dom, CH0, radii)
    assert aud.worst_slack() >= -1e-9
    assert np.max(np.abs(aud.mu_vals - 1.0)) <= 1e-9
    assert abs(aud.theta_hat - 1.0) <= 1e-9
    assert abs(aud.theta_centric - 1.0) <= 1e-9
    assert max(p["lhs"] for p in aud.pairs) == 0.0
    assert aud.mono_prefix_r == pytest.approx(float(radii[-1]))
    assert aud.gap_source == "declared-zero"


def test_audit_wedge_polyset_exact():
    w = make_example("wedge", c=0.5)
    radii = jittered_radii(0.02, 0.45, per_decade=8)
    aud = audit(w.polyset(), w.dom, CH0, radii)
    assert aud.worst_slack() >= -1e-9
    assert np.max(np.abs(aud.mu_vals - 1.0)) <= 1e-9
    assert abs(aud.theta_hat - 1.0) <= 1e-9
    assert max(p["lhs"] for p in aud.pairs) == 0.0


def test_audit_grid_bumped_quadrant():
    bq = make_example("bumped-quadrant")
    gb = bq.gridset(h=1 / 256)
    radii = jittered_radii(0.05, 0.6, per_decade=6)
    aud = audit(gb, bq.dom, CH0, radii, metric=METRIC)
    assert aud.worst_slack() >= -aud.tau_audit
    assert abs(aud.theta_hat - 1.0) <= 3 * METRIC.eps_metric
    assert abs(aud.theta_hat - aud.theta_centric) <= 2 * aud.tau_audit
    assert aud.mono_prefix_r >= float(radii[len(radii) // 2])
    assert aud.gap_source == "min-cut"


def test_audit_pair_g_telescoping_invariant():
    # audited pair G values recombine exactly along chained pairs
    q = make_example("quadrant")
    chq = OffcentricChart.quadratic(0.25)
    radii = jittered_radii(0.02, 0.2, per_decade=6)
    aud = audit(q.polyset(), q.dom, chq, radii)
    G = {(p["k"], p["l"]): (p["bracket"] - (aud.mu_vals[p["l"]] - aud.mu_vals[p["k"]])
                            - (aud.gap_integral[p["l"]] - aud.gap_integral[p["k"]]))
         for p in aud.pairs}
    ks = sorted({k for k, _ in G})
    for a in ks[:-2]:
        b, c = a + 1, a + 2
        assert abs(G[(a, b)] + G[(b, c)] - G[(a, c)]) <= 1e-12 * (1 + abs(G[(a, c)]))


def test_audit_centric_offcentric_sandwich():
    # |P(B_r)/r - mu(r)| <= (n-1) (v/r) mu (1 + o(1)) on samples
    q = make_example("quadrant")
    E = q.polyset()
    chq = OffcentricChart.quadratic(0.25)
    for r in (0.05, 0.1, 0.2):
        m_off = mu(E, q.dom, chq, r)
        m_c = perimeter_rel(E, q.dom, Ball(r)) / r
        v = float(chq.v(r))
        assert abs(m_c - m_off) <= (v / r) * m_off * 1.5 + 1e-12


def test_audit_rejects_grid_beyond_horizon():
    q = make_example("quadrant")
    with pytest.raises(ValueError):
        audit(q.polyset(), q.dom, OffcentricChart.quadratic(0.25), [0.5, 1.5])


def test_audit_json_and_rows():
    q = make_example("quadrant")
    radii = jittered_radii(0.05, 0.3, per_decade=6)
    aud = audit(q.polyset(), q.dom, CH0, radii)
    payload = aud.to_json()
    assert payload["schema"] == "visilab/1"
    rows = aud.rows()
    assert len(rows) == len(radii)
    assert all(len(r) == 6 for r in rows)


def test_constancy_implies_conicality_discrete_converse():
    # mu constant within tau and Psi = 0 force the audited radial deviation
    # of every boundary element to vanish within sqrt(tau)
    from visilab.monotonicity import _elements, _phi_data
    from visilab.regions import offcentric_ball
    for name, c in (("quadrant", None), ("wedge", 0.5)):
        e = make_example(name) if c is None else make_example(name, c=c)
        E = e.polyset()
        radii = jittered_radii(0.05, 0.4, per_decade=6)
        aud = audit(E, e.dom, CH0, radii)
        assert np.max(np.abs(np.diff(aud.mu_vals))) <= aud.tau_audit
        assert np.all(aud.psi_vals == 0.0)
        mids, norms, meas = _elements(E, e.dom, offcentric_ball(CH0, 0.4, 2), None, 1e-3)
        _, _, grads = _phi_data(CH0, mids)
        radial = np.abs(np.sum(norms * grads, axis=1))
        assert np.max(radial) <= math.sqrt(aud.tau_audit)
