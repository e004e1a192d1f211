import csv
import json

import pytest

from noonbound import bounds
from noonbound.cli import FIG_HEADERS, main, run_verification


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_bounds_report(capsys):
    code, out, _ = run(capsys, "bounds", "--n", "2", "--d", "2", "--gamma", "0.5,0,0")
    assert code == 0
    data = json.loads(out)
    assert data["qcrb_optimal"] == pytest.approx(1.4571, abs=5e-5)
    assert data["sql"] == pytest.approx(2.0, abs=1e-12)
    assert data["r_qa"] == pytest.approx(0.2714, abs=5e-5)
    assert data["optimal_weights"] == pytest.approx([0.5858, 0.2071, 0.2071], abs=5e-5)
    assert data["qcrb_humphreys"] >= data["qcrb_optimal"]


def test_bounds_single_photon(capsys):
    code, out, _ = run(capsys, "bounds", "--n", "1", "--d", "1", "--gamma", "0,0")
    assert code == 0 and json.loads(out)["qcrb_optimal"] == pytest.approx(1.0, abs=1e-14)


def test_bounds_custom_weights_and_repetitions(capsys):
    code, out, _ = run(capsys, "bounds", "--n", "2", "--gamma", "0,0,0", "--weights", "1,1,1",
                       "--repetitions", "4")
    data = json.loads(out)
    assert code == 0
    assert data["qcrb_custom"] == pytest.approx(0.75, abs=1e-14)
    assert data["over_repetitions"]["qcrb_custom"] == pytest.approx(0.1875, abs=1e-14)


@pytest.mark.parametrize("argv", [
    ["bounds", "--n", "2", "--d", "2", "--gamma", "0.5,x,0"],
    ["bounds", "--n", "2", "--d", "2", "--gamma", "0.5,0"],
    ["bounds", "--n", "2", "--d", "2", "--gamma", "1.5,0,0"],
    ["bounds", "--d", "2", "--gamma", "0.5,0,0"],
    ["bounds", "--n", "2", "--gamma", "0,0,0", "--weights", "1,1"],
    ["nonsense"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.strip()


def test_scenario_file_wins_with_warning(capsys, tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"n_photons": 2, "n_phases": 2, "gamma": [0.5, 0, 0], "phases": [0.1, 0.2],
                             "repetitions": 1}))
    code, out, err = run(capsys, "bounds", "--scenario", str(f), "--n", "3")
    assert code == 0
    assert "warning" in err and "n_photons" in err
    assert json.loads(out)["scenario"]["n_photons"] == 2


def test_crit(capsys):
    code, out, _ = run(capsys, "crit", "--n", "2", "--d", "1", "--gamma-ref", "0.5")
    data = json.loads(out)
    assert code == 0
    assert data["gamma_crit_optimal"] == pytest.approx(0.5, abs=1e-9)
    assert data["gamma_crit_humphreys"] <= data["gamma_crit_optimal"] + 1e-12


@pytest.mark.parametrize("name, extra", [("fig2", ["--points", "5"]), ("fig3", ["--points", "5"]),
                                         ("fig4", ["--max-n", "3", "--max-d", "4"]),
                                         ("fig7", ["--instances", "200", "--bins", "10"])])
def test_figure_outputs(capsys, tmp_path, name, extra):
    code, _, _ = run(capsys, "figure", name, *extra, "--out", str(tmp_path))
    assert code == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["subcommand"] == "figure" and manifest["seed"] == 0 and manifest["version"]
    for fname in manifest["outputs"]:
        assert (tmp_path / fname).exists()
    if name in FIG_HEADERS:
        with open(tmp_path / f"{name}.csv") as fh:
            assert next(csv.reader(fh)) == FIG_HEADERS[name]


def test_fig2_origin(capsys, tmp_path):
    assert main(["figure", "fig2", "--points", "4", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "fig2.csv")
    origin = [r for r in rows if float(r["gamma_ref"]) == 0 and float(r["gamma"]) == 0][0]
    assert float(origin["rqa_optimal"]) == pytest.approx(0.5, abs=1e-12)
    assert float(origin["rqa_humphreys"]) == pytest.approx(0.5, abs=1e-12)
    assert all(float(r["rqa_optimal"]) >= float(r["rqa_humphreys"]) - 1e-12 for r in rows)


def test_fig3_equal_loss_schemes_coincide(capsys, tmp_path):
    assert main(["figure", "fig3", "--gamma-ref", "equal", "--points", "10", "--out", str(tmp_path)]) == 0
    for r in read_csv(tmp_path / "fig3.csv"):
        assert float(r["qcrb_optimal"]) == pytest.approx(float(r["qcrb_humphreys"]), rel=1e-12, abs=1e-12)


def test_fig4_monotone_in_modes(capsys, tmp_path):
    assert main(["figure", "fig4", "--max-n", "4", "--max-d", "6", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "fig4.csv")
    for n in (2, 3, 4):
        vals = [float(r["gamma_crit_optimal"]) for r in rows if int(r["N"]) == n]
        assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))
    for r in rows:
        assert float(r["gamma_crit_optimal"]) >= float(r["gamma_crit_humphreys"]) - 1e-10


def test_fig6_small(capsys, tmp_path):
    code, _, _ = run(capsys, "figure", "fig6", "--gammas", "0.1", "--restarts", "2", "--out", str(tmp_path))
    assert code == 0
    row = read_csv(tmp_path / "fig6.csv")[0]
    assert float(row["crb_joint"]) >= float(row["qcrb"]) - 1e-8
    assert float(row["crb_mesh_for_qcrb_state"]) >= float(row["qcrb"]) - 1e-8


def test_replay_is_bit_identical(capsys, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["montecarlo", "--instances", "300", "--seed", "7", "--out", str(first)]) == 0
    assert main(["replay", str(first / "manifest.json"), "--out", str(second)]) == 0
    for name in json.loads((first / "manifest.json").read_text())["outputs"]:
        assert (first / name).read_bytes() == (second / name).read_bytes()
    capsys.readouterr()


def test_replay_optimize(capsys, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    argv = ["optimize", "--n", "1", "--gamma", "0,0", "--restarts", "2", "--out", str(first)]
    assert main(argv) == 0
    assert main(["replay", str(first / "manifest.json"), "--out", str(second)]) == 0
    assert (first / "optimize.json").read_bytes() == (second / "optimize.json").read_bytes()
    assert (first / "history.csv").read_text().startswith("iteration,objective\n")
    data = json.loads((first / "optimize.json").read_text())
    assert data["best_crb"] == pytest.approx(1.0, abs=1e-6)
    capsys.readouterr()


def test_replay_missing_manifest(capsys, tmp_path):
    code, _, err = run(capsys, "replay", str(tmp_path / "none.json"))
    assert code == 2 and "manifest" in err


def test_montecarlo_summary(capsys):
    code, out, _ = run(capsys, "montecarlo", "--instances", "100")
    data = json.loads(out)
    assert code == 0
    assert data["summary"]["qcrb_optimal"]["mean"] <= data["summary"]["qcrb_humphreys"]["mean"]


def test_verify_small_passes(capsys):
    code, out, _ = run(capsys, "verify", "--max-n", "2", "--max-d", "2", "--grid", "3", "--random", "5")
    assert code == 0
    assert out.strip().splitlines()[-1] == "PASS"


def test_verify_detects_wrong_closed_form(capsys, monkeypatch):
    real = bounds.qcrb_noon

    def flipped(s, p):
        # sign error on the reference-mode term
        return real(s, p) - 2 * s.n_phases / (4 * s.n_photons**2 * p.p[0] * (1 - s.loss.gamma[0]) ** s.n_photons)

    monkeypatch.setattr(bounds, "qcrb_noon", flipped)
    code, out, _ = run(capsys, "verify", "--max-n", "2", "--max-d", "2", "--grid", "2", "--random", "2")
    assert code == 1
    assert "FAIL scenario=" in out


def test_verify_cap(capsys):
    code, _, err = run(capsys, "verify", "--max-n", "4", "--max-d", "6")
    assert code == 2 and "cap" in err


def test_run_verification_log():
    lines = []
    assert run_verification(1, 1, 2, 2, 0, log=lines.append)
    assert lines[-1] == "PASS" and any("F_Q" in l for l in lines)
