"""Figure rendering for the report path (PNG files next to the CSV/JSON)."""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

FIGSIZE = (6.0, 4.0)
DPI = 110


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def certificate_figure(cert, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    if cert.dyadic_partials:
        ks = [k for k, _ in cert.dyadic_partials]
        vals = [v for _, v in cert.dyadic_partials]
        ax1.bar(ks, vals, color="tab:blue")
        ax1.set_yscale("symlog", linthresh=1e-12)
    ax1.set_xlabel("dyadic level k")
    ax1.set_ylabel("integral of gamma_u over (T/2^(k+1), T/2^k)")
    ax1.set_title(f"summability evidence (defect {cert.cauchy_defect:.2e})")
    labels = ["V1", "V2", "V3 direct", "V3 slope", "V3 gradient", "overall"]
    verdicts = [cert.v1.verdict, cert.v2.verdict, cert.v3_direct.verdict,
                cert.v3_slope.verdict, cert.v3_gradient.verdict, cert.overall]
    colors = {"PASS": "tab:green", "FAIL": "tab:red", "INCONCLUSIVE": "tab:orange"}
    ax2.barh(range(len(labels)), [1] * len(labels),
             color=[colors[v] for v in verdicts])
    ax2.set_yticks(range(len(labels)), labels)
    for i, v in enumerate(verdicts):
        ax2.text(0.5, i, v, ha="center", va="center", color="white", fontweight="bold")
    ax2.set_xticks([])
    ax2.set_title("verdicts")
    return _save(fig, path)


def slope_figure(profiles, path) -> Path:
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for prof in profiles:
        if len(prof.s):
            nu0 = float(np.ravel(prof.nu)[0])
            ax.semilogx(prof.s, prof.m, lw=0.9,
                        label=f"t={prof.t:.3g}, nu={nu0:+.0f}")
    ax.set_xlabel("s")
    ax.set_ylabel("slope m_t(s)")
    ax.set_title("slope profiles (must be non-increasing)")
    if len(profiles) <= 8:
        ax.legend(fontsize=7)
    return _save(fig, path)


def tangent_figure(tc, path) -> Path:
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for k, ratios in enumerate(tc.ratio_trace):
        ax.semilogx(tc.s_trace, ratios, lw=0.9, label=f"direction {k}")
    ax.set_xlabel("s")
    ax.set_ylabel("corrected ratio c_nu(s)")
    ax.set_title(f"directional slopes at 0 (monotone defect {tc.monotone_defect:.2e})")
    ax.legend(fontsize=7)
    return _save(fig, path)


def foliation_figure(rows, path) -> Path:
    rows = np.asarray(rows, dtype=float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.loglog(rows[:, 0], np.maximum(rows[:, 1], 1e-300), ".", ms=3)
    ax1.set_xlabel("phi")
    ax1.set_ylabel("|F(x, phi)| residual")
    ax2.plot(rows[:, 0], rows[:, -2], ".", ms=3, label="deviation |grad phi - x/|x||")
    ax2.plot(rows[:, 0], rows[:, -1], ".", ms=3, label="bound 4 sqrt(v/phi + v')")
    ax2.set_xlabel("phi")
    ax2.legend(fontsize=8)
    return _save(fig, path)


def audit_figure(aud, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    rows = aud.rows()
    r = [x[0] for x in rows]
    ax1.semilogx(r, [x[1] for x in rows], "o-", ms=3, label="mu(r)")
    ax1.semilogx(r, [x[5] for x in rows], "s-", ms=3, label="M(r) = mu + I + G")
    ax1.axhline(aud.theta_hat, color="gray", lw=0.8, ls="--",
                label=f"theta = {aud.theta_hat:.4f}")
    ax1.set_xlabel("r")
    ax1.legend(fontsize=8)
    ax1.set_title("density ratio and its monotone correction")
    slacks = sorted(p["slack"] for p in aud.pairs)
    ax2.plot(slacks, ".", ms=3)
    ax2.axhline(-aud.tau_audit, color="tab:red", lw=0.8, label="-tau_audit")
    ax2.set_ylabel("pair slack (RHS - LHS)")
    ax2.set_xlabel("pair rank")
    ax2.legend(fontsize=8)
    ax2.set_title(f"worst slack {aud.worst_slack():.3g}")
    return _save(fig, path)


def density_figure(rep, path) -> Path:
    fig, ax = plt.subplots(figsize=FIGSIZE)
    r = np.asarray(rep.radii)
    ax.loglog(r, rep.perimeter, "o", ms=3, label="P(E; B_r)")
    ax.loglog(r, rep.perimeter_const * r ** rep.perimeter_slope, "-", lw=0.8,
              label=f"fit slope {rep.perimeter_slope:.3f}")
    minvol = np.minimum(rep.vol_in, rep.vol_out)
    ax.loglog(r, minvol, "s", ms=3, label="min volume")
    ax.set_xlabel("r")
    ax.legend(fontsize=8)
    ax.set_title(f"density estimates (min-vol slope {rep.minvol_slope:.3f})")
    return _save(fig, path)


def mingap_figure(prof, path) -> Path:
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.loglog(prof.radii, np.maximum(prof.psi, 1e-300), "o-", ms=3, label="Psi(B_r)")
    ax.loglog(prof.radii, np.maximum(prof.psi_hat, 1e-300), "s-", ms=3,
              label="psi-hat(r)")
    ax.set_xlabel("r")
    ax.legend(fontsize=8)
    ax.set_title("minimality gap profile")
    return _save(fig, path)


def blowup_figure(trace, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    js = [row[0] for row in trace.rows()]
    ax1.semilogy(js, [max(r[2], 1e-300) for r in trace.rows()], "o-", ms=3,
                 label="L1 to final (blown frame)")
    ax1.semilogy(js, [max(r[3], 1e-300) for r in trace.rows()], "s-", ms=3,
                 label="L1 in window B_t")
    ax1.semilogy(js, [max(r[5], 1e-300) for r in trace.rows()], "^-", ms=3,
                 label="kappa")
    ax1.set_xlabel("j")
    ax1.legend(fontsize=8)
    ax2.plot(js, [r[4] for r in trace.rows()], "o-", ms=3, label="perimeter")
    ax2.plot(js, [r[6] for r in trace.rows()], "s-", ms=3, label="Psi")
    ax2.set_xlabel("j")
    ax2.legend(fontsize=8)
    return _save(fig, path)
