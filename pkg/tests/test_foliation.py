import json
import math

import numpy as np
import pytest

from visilab.corpus import make_example
from visilab.domain import VisibilityFunction
from visilab.foliation import OffcentricChart, cone_contains, phi, phi_batch, to_offcentric
from visilab.util import PASS, FAIL


def test_to_offcentric_zero():
    ch = to_offcentric(VisibilityFunction.zero(0.7))
    assert ch.kind == "zero" and ch.R == 0.7
    assert float(ch.v(0.3)) == 0.0


def test_to_offcentric_quarter_quadratic_spot():
    # u = t^2/4: z(0.2) = 0.19 exactly, so v(0.19) = u(0.2) = 0.01
    ch = to_offcentric(VisibilityFunction.quadratic(0.25, T=1.0))
    assert float(ch.v(0.19)) == pytest.approx(0.01, abs=1e-13)


def test_to_offcentric_linear():
    ch = to_offcentric(VisibilityFunction.linear(0.25, T=1.0))
    assert float(ch.v(0.3)) == pytest.approx(0.1, abs=1e-12)
    assert float(ch.vp(0.3)) == pytest.approx(1 / 3, abs=1e-12)


def test_z_inverse_bracket():
    ch = to_offcentric(VisibilityFunction.quadratic(0.25, T=1.0))
    for r in (0.01, 0.1, 0.3, 0.6):
        t = float(ch._zinv(r))
        assert r <= t <= 2 * r + 1e-12


def test_z_compatibility_invariant():
    u = VisibilityFunction.quadratic(16.0, T=0.5)
    ch = to_offcentric(u)
    for t in np.linspace(ch.Tprime / 10, ch.Tprime * 0.99, 9):
        z = t - float(u.value(t))
        assert float(ch.v(z)) == pytest.approx(float(u.value(t)), abs=1e-14)


def test_phi_spot_values():
    ch = OffcentricChart.quadratic(0.25)
    ev = phi(ch, np.array([0.0, 0.19]))
    assert ev.r == pytest.approx(0.2, abs=1e-12)
    assert ev.grad[0] == pytest.approx(0.0, abs=1e-12)
    assert ev.grad[1] == pytest.approx(10 / 9, abs=1e-9)
    assert ev.deviation == pytest.approx(1 / 9, abs=1e-9)
    assert ev.bound == pytest.approx(4 * math.sqrt(0.15), abs=1e-12)


def test_phi_zero_chart_is_norm():
    ev = phi(OffcentricChart.zero(1.0), np.array([0.3, 0.4]))
    assert ev.r == pytest.approx(0.5, abs=1e-13)
    assert np.allclose(ev.grad, [0.6, 0.8], atol=1e-12)
    assert ev.deviation == 0.0


def test_phi_errors():
    ch = OffcentricChart.zero(1.0)
    with pytest.raises(ValueError):
        phi(ch, np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        phi(ch, np.array([2.0, 0.0]))


@pytest.mark.parametrize("chartname", ["zero", "quarter", "bounce"])
def test_phi_invariants_random(chartname):
    if chartname == "zero":
        ch = OffcentricChart.zero(1.0)
    elif chartname == "quarter":
        ch = OffcentricChart.quadratic(0.25)
    else:
        ch = to_offcentric(make_example("bounce").u)
    rng = np.random.default_rng(5)
    for _ in range(300):
        r = float(rng.uniform(0.02, 0.98) * ch.R)
        th = float(rng.uniform(0, 2 * math.pi))
        x = ch.center(r, 2) + r * np.array([math.cos(th), math.sin(th)])
        if np.linalg.norm(x) < 1e-10 * ch.R:
            continue
        ev = phi(ch, x)
        # level-set consistency and uniqueness
        assert abs(ev.r - r) <= 10 * ch.tau_root * r + 1e-15
        # residual budget
        assert ev.residual <= 1e-12 * ev.r ** 2
        # deviation bound with zero violations (zero slack in the cone case)
        assert ev.deviation <= ev.bound
        if chartname == "zero":
            assert ev.deviation == 0.0
        # sandwich r - v <= |x| <= r + v
        v = float(ch.v(ev.r))
        nx = float(np.linalg.norm(x))
        assert ev.r - v - 1e-12 <= nx <= ev.r + v + 1e-12


def test_phi_uniqueness_under_perturbed_bracketing():
    # 10^4 random points: re-solving with a tighter bracket tolerance must
    # return the same root within 10 tau_root
    ch = OffcentricChart.quadratic(0.25)
    ch_tight = OffcentricChart.quadratic(0.25)
    ch_tight.tau_root = ch.tau_root / 7.0
    rng = np.random.default_rng(9)
    for _ in range(10_000):
        x = rng.uniform(-0.4, 0.4, 2)
        if np.linalg.norm(x) < 1e-6 or x[1] < -0.1:
            continue
        try:
            a = phi(ch, x).r
            b = phi(ch_tight, x).r
        except ValueError:
            continue
        assert abs(a - b) <= 10 * ch.tau_root * max(a, b)


def test_phi_gradient_matches_finite_differences():
    for ch in (OffcentricChart.quadratic(0.25), to_offcentric(make_example("bounce").u)):
        rng = np.random.default_rng(11)
        for _ in range(60):
            r = float(rng.uniform(0.25, 0.9) * ch.R)
            th = float(rng.uniform(0, 2 * math.pi))
            x = ch.center(r, 2) + r * np.array([math.cos(th), math.sin(th)])
            ev = phi(ch, x)
            eps = 1e-6 * ch.R
            fd = np.zeros(2)
            for k in range(2):
                d = np.zeros(2)
                d[k] = eps
                fd[k] = (phi(ch, x + d).r - phi(ch, x - d).r) / (2 * eps)
            rel = np.linalg.norm(ev.grad - fd) / np.linalg.norm(ev.grad)
            assert rel <= max(1e-6, 1e3 * ch.tau_root)


def test_cone_contains_cone_domain():
    e = make_example("wedge")
    rep = cone_contains(OffcentricChart.zero(1.0), e.dom, 0.4)
    assert rep.verdict == PASS


def test_cone_contains_bounce_chart():
    e = make_example("bounce")
    ch = to_offcentric(e.u)
    rep = cone_contains(ch, e.dom, 0.6 * ch.R)
    assert rep.verdict == PASS


def test_cone_contains_sin_graph_forced_zero_chart():
    e = make_example("sin-graph")
    x1 = 1 / (3 * math.pi)
    rep = cone_contains(OffcentricChart.zero(0.2), e.dom, 1.05 * x1)
    assert rep.verdict == FAIL
    assert rep.witness is not None


def test_chart_json_roundtrip(tmp_path):
    for ch in (OffcentricChart.zero(0.5), OffcentricChart.quadratic(0.25),
               to_offcentric(make_example("bounce").u)):
        desc = ch.to_json()
        back = OffcentricChart.from_json(json.loads(json.dumps(desc)))
        rs = np.linspace(ch.R / 20, ch.R * 0.95, 9)
        assert np.allclose(np.asarray([float(back.v(r)) for r in rs]),
                           np.asarray([float(ch.v(r)) for r in rs]), atol=1e-9)


def test_phi_batch_csv(tmp_path):
    ch = OffcentricChart.quadratic(0.25)
    src = tmp_path / "pts.csv"
    src.write_text("0.0,0.19\n0.1,0.2\n")
    out = phi_batch(ch, src, tmp_path / "out.csv")
    rows = out.read_text().strip().splitlines()
    assert rows[0].split(",") == ["r", "residual", "grad1", "grad2", "deviation", "bound"]
    assert float(rows[1].split(",")[0]) == pytest.approx(0.2, abs=1e-12)
