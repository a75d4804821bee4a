import json
from pathlib import Path

import pytest

from visilab.cli import main


def _read_all(outdir: Path) -> dict:
    data = {}
    for p in sorted(outdir.iterdir()):
        if p.suffix in (".json", ".csv"):
            data[p.name] = p.read_bytes()
    return data


def test_certify_exit_codes(tmp_path):
    assert main(["certify", "--corpus", "bounce", "--out", str(tmp_path),
                 "--no-figures"]) == 0
    assert main(["certify", "--corpus", "sin-graph", "--out", str(tmp_path),
                 "--no-figures"]) == 1
    cert = json.loads((tmp_path / "certify-bounce.json").read_text())
    assert cert["schema"] == "visilab/1"
    assert cert["overall"] == "PASS"
    assert (tmp_path / "certify-bounce-summability.csv").exists()


def test_certify_sin_graph_witness_present(tmp_path):
    main(["certify", "--corpus", "sin-graph", "--out", str(tmp_path), "--no-figures"])
    cert = json.loads((tmp_path / "certify-sin-graph.json").read_text())
    assert cert["overall"] == "FAIL"
    assert "witness" in cert["V3_direct"]
    w = cert["V3_direct"]["witness"]
    assert len(w) >= 4 and w[-1] > 0


def test_usage_error_exit_3(tmp_path):
    assert main(["nosuchcommand"]) == 3
    assert main(["certify", "--out", str(tmp_path)]) == 3  # no corpus/domain


def test_corpus_list_and_dump(tmp_path, capsys):
    assert main(["corpus", "list"]) == 0
    out = capsys.readouterr().out
    names = json.loads(out)["names"]
    assert "bounce" in names
    assert main(["corpus", "dump", "bounce",
                 "--out-file", str(tmp_path / "bounce.json")]) == 0
    payload = json.loads((tmp_path / "bounce.json").read_text())
    assert payload["name"] == "bounce"


def test_foliate_selfcheck(tmp_path):
    assert main(["foliate", "--chart", "quarter", "--selfcheck", "100",
                 "--out", str(tmp_path), "--no-figures"]) == 0
    rep = json.loads((tmp_path / "foliate-quarter.json").read_text())
    assert rep["deviation_violations"] == 0
    assert rep["residual_violations"] == 0


def test_foliate_points_csv(tmp_path):
    src = tmp_path / "pts.csv"
    src.write_text("0.0,0.19\n")
    assert main(["foliate", "--chart", "quarter", "--points", str(src),
                 "--out", str(tmp_path), "--no-figures"]) == 0
    rows = (tmp_path / "foliate-quarter.csv").read_text().splitlines()
    assert abs(float(rows[1].split(",")[0]) - 0.2) < 1e-12


def test_mingap_and_density(tmp_path):
    assert main(["mingap", "--corpus", "quadrant", "--h", "1/64", "--r", "0.3",
                 "--out", str(tmp_path), "--no-figures"]) == 0
    payload = json.loads((tmp_path / "mingap-quadrant.json").read_text())
    assert payload["psi"] >= 0.0
    assert (tmp_path / "mingap-quadrant-competitor.grid").exists()
    assert main(["density", "--corpus", "quadrant", "--h", "1/128",
                 "--rmin", "0.05", "--rmax", "0.4",
                 "--out", str(tmp_path), "--no-figures"]) == 0


def test_monotonicity_exit_reflects_slack(tmp_path):
    code = main(["monotonicity", "--corpus", "quadrant", "--backend", "polyset",
                 "--rmin", "0.02", "--rmax", "0.45", "--out", str(tmp_path),
                 "--no-figures"])
    assert code == 0
    payload = json.loads((tmp_path / "monotonicity-quadrant-polyset.json").read_text())
    assert payload["worst_slack"] >= -payload["tau_audit"]
    csv_head = (tmp_path / "monotonicity-quadrant-polyset.csv").read_text().splitlines()[0]
    assert csv_head == "r,mu,psi,I,G,M"


def test_blowup_cli(tmp_path):
    assert main(["blowup", "--corpus", "bumped-quadrant", "--h", "1/64",
                 "--half-width", "1.25", "--jmax", "3",
                 "--out", str(tmp_path), "--no-figures"]) == 0
    head = (tmp_path / "blowup-bumped-quadrant.csv").read_text().splitlines()[0]
    assert head == "j,t,l1_to_final,l1_window,perimeter,kappa,psi"


def test_reproducibility_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        main(["certify", "--corpus", "bounce", "--out", str(out), "--no-figures"])
        main(["mingap", "--corpus", "quadrant", "--h", "1/64", "--r", "0.25",
              "--out", str(out), "--no-figures"])
        main(["monotonicity", "--corpus", "quadrant", "--backend", "polyset",
              "--rmin", "0.05", "--rmax", "0.3", "--out", str(out), "--no-figures"])
    da, db = _read_all(a), _read_all(b)
    assert da.keys() == db.keys()
    for k in da:
        assert da[k] == db[k], f"{k} differs between runs"


def test_figures_rendered(tmp_path):
    main(["certify", "--corpus", "bounce", "--out", str(tmp_path)])
    assert (tmp_path / "certify-bounce.png").exists()
    assert (tmp_path / "certify-bounce-slopes.png").exists()
