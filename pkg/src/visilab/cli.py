"""Command-line front end: certify, tangent, foliate, mingap, density,
monotonicity, blowup, corpus.

Every command writes a JSON report (schema "visilab/1") and CSV tables into
the output directory, renders matplotlib figures next to them unless
--no-figures is given, and exits 0 on all-PASS, 1 on any FAIL, 2 on
INCONCLUSIVE-only, 3 on usage errors. Outputs are byte-reproducible for a
fixed configuration; the jitter seed is recorded in every report.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import figures
from .blowup import blowup_trace
from .corpus import corpus_names, make_example
from .domain import GraphDomain, VisibilityFunction, certify_visibility, tangent_cone
from .foliation import OffcentricChart, to_offcentric, phi, phi_batch
from .gridset import default_metric
from .mingap import MinGapProblem, minimality_gap, almost_min_profile, density_report
from .monotonicity import audit
from .regions import Ball
from .util import DEFAULT_SEED, PASS, FAIL, jittered_radii, write_csv, write_json

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3


def _fraction(text: str) -> float:
    return float(Fraction(text))


def _entry(args):
    if getattr(args, "corpus", None):
        return make_example(args.corpus)
    if getattr(args, "domain", None):
        dom = GraphDomain.from_json(json.loads(Path(args.domain).read_text()))
        u = VisibilityFunction.from_json(json.loads(Path(args.u).read_text()))
        from .corpus import CorpusEntry
        return CorpusEntry("custom", dom, u)
    raise SystemExit("either --corpus or --domain/--u is required")


def _config(args, **extra) -> dict:
    cfg = {"seed": args.seed}
    cfg.update(extra)
    return cfg


def cmd_certify(args) -> int:
    entry = _entry(args)
    u = entry.u_candidates[args.u_index] if args.u_index is not None \
        else entry.u
    cert = certify_visibility(entry.dom, u, nscales=args.scales)
    out = Path(args.out)
    payload = cert.to_json()
    payload["command"] = "certify"
    payload["corpus"] = entry.name
    payload["config"] = _config(args, scales=args.scales)
    write_json(out / f"certify-{entry.name}.json", payload)
    write_csv(out / f"certify-{entry.name}-summability.csv",
              ["level", "gamma_integral"],
              [(int(k), float(v)) for k, v in cert.dyadic_partials])
    if not args.no_figures:
        figures.certificate_figure(cert, out / f"certify-{entry.name}.png")
        from .domain import slope_profile
        profs = [slope_profile(entry.dom, u, nu, t)
                 for t in cert.scales[:: max(1, len(cert.scales) // 4)]
                 for nu in entry.dom.directions()]
        figures.slope_figure(profs, out / f"certify-{entry.name}-slopes.png")
    print(f"certify {entry.name}: {cert.overall}")
    if cert.overall == PASS:
        return EXIT_PASS
    return EXIT_FAIL if cert.overall == FAIL else EXIT_INCONCLUSIVE


def cmd_tangent(args) -> int:
    entry = _entry(args)
    tc = tangent_cone(entry.dom, entry.u)
    out = Path(args.out)
    payload = tc.to_json()
    payload.update({"command": "tangent", "corpus": entry.name,
                    "schema": "visilab/1", "config": _config(args)})
    write_json(out / f"tangent-{entry.name}.json", payload)
    rows = []
    for i, s in enumerate(tc.s_trace):
        rows.append([float(s)] + [float(tc.ratio_trace[k][i])
                                  for k in range(len(tc.directions))])
    write_csv(out / f"tangent-{entry.name}-ratios.csv",
              ["s"] + [f"c_dir{k}" for k in range(len(tc.directions))], rows)
    if not args.no_figures:
        figures.tangent_figure(tc, out / f"tangent-{entry.name}.png")
    print(f"tangent {entry.name}: slopes {[round(float(v), 6) for v in tc.slopes]}")
    return EXIT_PASS


def _chart_from_args(args) -> tuple[OffcentricChart, str]:
    if args.chart_file:
        return OffcentricChart.from_json(json.loads(Path(args.chart_file).read_text())), \
            Path(args.chart_file).stem
    if args.chart == "zero":
        return OffcentricChart.zero(args.R or 1.0), "zero"
    if args.chart == "quarter":
        return OffcentricChart.quadratic(0.25, args.R), "quarter"
    if args.chart == "from-u":
        entry = _entry(args)
        return to_offcentric(entry.u), f"from-u-{entry.name}"
    raise SystemExit(f"unknown chart {args.chart!r}")


def cmd_foliate(args) -> int:
    chart, name = _chart_from_args(args)
    if args.tau_root is not None:
        chart.tau_root = args.tau_root
    out = Path(args.out)
    write_json(out / f"chart-{name}.json", chart.to_json())
    if args.points:
        dest = out / f"foliate-{name}.csv"
        phi_batch(chart, args.points, dest)
        print(f"foliate: wrote {dest}")
        return EXIT_PASS
    rng = np.random.default_rng(args.seed)
    rows = []
    viol_dev = viol_res = viol_sand = 0
    for _ in range(args.selfcheck):
        r = float(rng.uniform(0.02, 0.98) * chart.R)
        th = float(rng.uniform(0, 2 * np.pi))
        x = chart.center(r, 2) + r * np.array([np.cos(th), np.sin(th)])
        if np.linalg.norm(x) < 1e-10 * chart.R:
            continue
        ev = phi(chart, x)
        rows.append(ev.to_row())
        viol_dev += ev.deviation > ev.bound
        viol_res += ev.residual > 1e-12 * ev.r ** 2
        nr = float(np.linalg.norm(x))
        v = float(chart.v(ev.r))
        viol_sand += not (ev.r - v - 1e-12 <= nr <= ev.r + v + 1e-12)
    write_csv(out / f"foliate-{name}.csv",
              ["r", "residual", "grad1", "grad2", "deviation", "bound"], rows)
    payload = {"schema": "visilab/1", "command": "foliate", "chart": name,
               "points": len(rows), "deviation_violations": int(viol_dev),
               "residual_violations": int(viol_res),
               "sandwich_violations": int(viol_sand), "config": _config(args)}
    write_json(out / f"foliate-{name}.json", payload)
    if not args.no_figures:
        figures.foliation_figure(rows, out / f"foliate-{name}.png")
    ok = viol_dev == viol_res == viol_sand == 0
    print(f"foliate {name}: {len(rows)} points, violations "
          f"dev={viol_dev} res={viol_res} sandwich={viol_sand}")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_mingap(args) -> int:
    entry = _entry(args)
    gs = entry.gridset(h=args.h, half_width=args.half_width)
    metric = default_metric(2)
    out = Path(args.out)
    center = tuple(args.center) if args.center else (0.0, 0.0)
    window = Ball(args.r, center)
    res = minimality_gap(MinGapProblem(gs, entry.dom, window, metric))
    payload = res.to_json()
    payload.update({"schema": "visilab/1", "command": "mingap", "corpus": entry.name,
                    "problem": {"set": entry.name, "h": args.h,
                                "region": window.to_json(),
                                "domain": entry.dom.to_json()},
                    "config": _config(args, h=args.h)})
    write_json(out / f"mingap-{entry.name}.json", payload)
    res.competitor.save(out / f"mingap-{entry.name}-competitor.grid")
    if args.profile:
        radii = jittered_radii(args.rmin, args.rmax, args.per_decade, args.seed)
        prof = almost_min_profile(gs, entry.dom, center, radii, metric)
        write_csv(out / f"mingap-{entry.name}-profile.csv",
                  ["r", "psi", "psi_hat"], prof.rows())
        write_json(out / f"mingap-{entry.name}-profile.json", prof.to_json())
        if not args.no_figures:
            figures.mingap_figure(prof, out / f"mingap-{entry.name}.png")
    print(f"mingap {entry.name}: psi = {res.psi!r} (int {res.psi_int})")
    return EXIT_PASS if res.psi_int >= 0 else EXIT_FAIL


def cmd_density(args) -> int:
    entry = _entry(args)
    gs = entry.gridset(h=args.h, half_width=args.half_width)
    metric = default_metric(2)
    radii = jittered_radii(args.rmin, args.rmax, args.per_decade, args.seed)
    rep = density_report(gs, entry.dom, tuple(args.x), radii, metric)
    out = Path(args.out)
    payload = rep.to_json()
    payload.update({"schema": "visilab/1", "command": "density", "corpus": entry.name,
                    "config": _config(args, h=args.h, rmin=args.rmin, rmax=args.rmax,
                                      per_decade=args.per_decade)})
    write_json(out / f"density-{entry.name}.json", payload)
    write_csv(out / f"density-{entry.name}.csv",
              ["r", "perimeter", "vol_in", "vol_out"], rep.rows())
    if not args.no_figures:
        figures.density_figure(rep, out / f"density-{entry.name}.png")
    print(f"density {entry.name}: P-slope {rep.perimeter_slope:.4f}, "
          f"min-vol slope {rep.minvol_slope:.4f}, flagged={rep.flagged}")
    return EXIT_FAIL if rep.flagged else EXIT_PASS


def cmd_monotonicity(args) -> int:
    entry = _entry(args)
    chart = to_offcentric(entry.u)
    radii = jittered_radii(args.rmin, args.rmax, args.per_decade, args.seed)
    if args.backend == "polyset":
        E = entry.polyset()
        metric = None
    else:
        E = entry.gridset(h=args.h, half_width=args.half_width)
        metric = default_metric(2)
    aud = audit(E, entry.dom, chart, radii, metric=metric)
    if args.tau_audit is not None:
        aud.tau_audit = args.tau_audit
    out = Path(args.out)
    payload = aud.to_json()
    payload.update({"command": "monotonicity", "corpus": entry.name,
                    "config": _config(args, backend=args.backend, h=args.h,
                                      rmin=args.rmin, rmax=args.rmax,
                                      per_decade=args.per_decade)})
    write_json(out / f"monotonicity-{entry.name}-{args.backend}.json", payload)
    write_csv(out / f"monotonicity-{entry.name}-{args.backend}.csv",
              ["r", "mu", "psi", "I", "G", "M"], aud.rows())
    if not args.no_figures:
        figures.audit_figure(aud, out / f"monotonicity-{entry.name}-{args.backend}.png")
    worst = aud.worst_slack()
    print(f"monotonicity {entry.name} [{args.backend}]: worst slack {worst:.3g} "
          f"(tau {aud.tau_audit:.3g}), theta {aud.theta_hat:.6f}")
    return EXIT_FAIL if worst < -aud.tau_audit else EXIT_PASS


def cmd_blowup(args) -> int:
    entry = _entry(args)
    gs = entry.gridset(h=args.h, half_width=args.half_width)
    metric = default_metric(2)
    scales = [2.0 ** (-j) for j in range(args.jmax + 1)]
    trace = blowup_trace(gs, entry.dom, entry.u, scales, R=args.R, metric=metric,
                         seed=args.seed)
    out = Path(args.out)
    if args.export_sets:
        from .blowup import rescale_set
        for j, t in enumerate(scales):
            rescale_set(gs, t).save(out / f"blowup-{entry.name}-j{j}.grid")
    payload = trace.to_json()
    payload.update({"command": "blowup", "corpus": entry.name,
                    "config": _config(args, h=args.h, jmax=args.jmax, R=args.R)})
    write_json(out / f"blowup-{entry.name}.json", payload)
    write_csv(out / f"blowup-{entry.name}.csv",
              ["j", "t", "l1_to_final", "l1_window", "perimeter", "kappa", "psi"],
              trace.rows())
    if not args.no_figures:
        figures.blowup_figure(trace, out / f"blowup-{entry.name}.png")
    okay = (trace.l1_to_final[-2] <= 2 * gs.h if len(trace.scales) > 1 else True)
    okay &= trace.kappas[-1] <= 2 * gs.h
    okay &= trace.limit_psi <= metric.eps_metric * max(trace.limit_perimeter, 1e-300)
    okay &= all(g["exact"] for g in trace.gap_rescaling)
    print(f"blowup {entry.name}: final L1 {trace.l1_to_final[-2] if len(trace.scales) > 1 else 0.0:.3g}, "
          f"kappa {trace.kappas[-1]:.3g}, limit psi {trace.limit_psi:.3g}, "
          f"gap identity exact: {all(g['exact'] for g in trace.gap_rescaling)}")
    return EXIT_PASS if okay else EXIT_FAIL


def cmd_corpus(args) -> int:
    if args.action == "list":
        payload = {"schema": "visilab/1", "command": "corpus", "names": corpus_names()}
    else:
        if not args.name:
            raise SystemExit("corpus dump requires a name")
        payload = make_example(args.name).to_json()
        payload["schema"] = "visilab/1"
    text = json.dumps(payload, sort_keys=True, indent=2)
    print(text)
    if args.out_file:
        Path(args.out_file).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out_file).write_text(text + "\n", encoding="utf-8")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="visilab",
                                description="desk-scale free-boundary perimeter laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=False, radii=False):
        sp.add_argument("--corpus", choices=corpus_names())
        sp.add_argument("--domain", help="domain JSON file")
        sp.add_argument("--u", help="visibility function JSON file")
        sp.add_argument("--out", default="visilab-out")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--no-figures", action="store_true")
        if grid:
            sp.add_argument("--h", type=_fraction, default=_fraction("1/256"))
            sp.add_argument("--half-width", type=float, default=1.0)
        if radii:
            sp.add_argument("--rmin", type=float, default=0.05)
            sp.add_argument("--rmax", type=float, default=0.45)
            sp.add_argument("--per-decade", type=int, default=8)

    sp = sub.add_parser("certify", help="visibility certification")
    common(sp)
    sp.add_argument("--scales", type=int, default=20)
    sp.add_argument("--u-index", type=int, default=None,
                    help="use the k-th candidate u of the corpus entry")
    sp.set_defaults(fn=cmd_certify)

    sp = sub.add_parser("tangent", help="tangent cone extraction")
    common(sp)
    sp.set_defaults(fn=cmd_tangent)

    sp = sub.add_parser("foliate", help="off-centric foliation evaluation")
    common(sp)
    sp.add_argument("--chart", default="zero", choices=["zero", "quarter", "from-u"])
    sp.add_argument("--chart-file")
    sp.add_argument("--R", type=float, default=None)
    sp.add_argument("--points", help="CSV of points to evaluate")
    sp.add_argument("--selfcheck", type=int, default=1000)
    sp.add_argument("--tau-root", type=float, default=None,
                    help="override the root-finder relative tolerance")
    sp.set_defaults(fn=cmd_foliate)

    sp = sub.add_parser("mingap", help="exact minimality gap")
    common(sp, grid=True, radii=True)
    sp.add_argument("--r", type=float, default=0.3)
    sp.add_argument("--center", type=float, nargs=2)
    sp.add_argument("--profile", action="store_true")
    sp.set_defaults(fn=cmd_mingap)

    sp = sub.add_parser("density", help="perimeter/volume density estimates")
    common(sp, grid=True, radii=True)
    sp.add_argument("--x", type=float, nargs=2, default=[0.0, 0.0])
    sp.set_defaults(fn=cmd_density)

    sp = sub.add_parser("monotonicity", help="free-boundary monotonicity audit")
    common(sp, grid=True, radii=True)
    sp.add_argument("--backend", choices=["polyset", "gridset"], default="polyset")
    sp.add_argument("--tau-audit", type=float, default=None,
                    help="override the audit slack tolerance")
    sp.set_defaults(fn=cmd_monotonicity)

    sp = sub.add_parser("blowup", help="blow-up trace")
    common(sp, grid=True)
    sp.add_argument("--jmax", type=int, default=6)
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--export-sets", action="store_true",
                    help="write the per-scale grid sets for plotting")
    sp.set_defaults(fn=cmd_blowup)

    sp = sub.add_parser("corpus", help="list or dump corpus entries")
    sp.add_argument("action", choices=["list", "dump"])
    sp.add_argument("name", nargs="?")
    sp.add_argument("--out-file")
    sp.set_defaults(fn=cmd_corpus)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.fn(args)
    except SystemExit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
