from __future__ import annotations

import numpy as np
import pytest

from freqboost.cli import main


def test_stationary_prints_pi_and_closed_form(capsys):
    assert main(["stationary", "--M", "2", "--L", "2", "--nu", "0.7,0.3"]) == 0
    out = capsys.readouterr().out
    lines = {line.split(":")[0]: line for line in out.splitlines() if ":" in line}
    pi = [float(v) for v in lines["pi"].split(":")[1].split()]
    np.testing.assert_allclose(pi, [9 / 79, 21 / 79, 49 / 79], atol=1e-10)
    freqs = [float(v) for v in lines["expected frequency by form"].split(":")[1].split()]
    assert freqs[0] == pytest.approx(59.5 / 79, abs=1e-10)
    closed = float(lines["closed-form expected frequency (form 1)"].split(":")[1])
    assert closed == pytest.approx(59.5 / 79, abs=1e-10)


def test_stationary_accepts_increment_flag(capsys):
    assert main(["stationary", "--M", "2", "--s", "0.5", "--nu", "0.7,0.3"]) == 0
    assert "L=2" in capsys.readouterr().out


def test_capacity_duality_is_exclusive(capsys):
    assert main(["stationary", "--M", "2", "--L", "2", "--s", "0.5", "--nu", "0.7,0.3"]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error: invalid-args:")
    assert main(["stationary", "--M", "2", "--nu", "0.7,0.3"]) == 2


def test_increment_must_invert_to_integer_capacity(capsys):
    assert main(["stationary", "--M", "2", "--s", "0.3", "--nu", "0.7,0.3"]) == 2
    assert "1/L" in capsys.readouterr().err
    assert main(["stationary", "--M", "2", "--s", "0", "--nu", "0.7,0.3"]) == 2
    assert main(["stationary", "--M", "2", "--s", "-0.1", "--nu", "0.7,0.3"]) == 2
    assert main(["stationary", "--M", "2", "--s", "1.0", "--nu", "0.7,0.3"]) == 2  # L=1 too small


def test_bad_nu_is_a_validation_error(capsys):
    assert main(["stationary", "--M", "2", "--L", "4", "--nu", "0.7,0.2"]) == 2
    assert main(["stationary", "--M", "3", "--L", "4", "--nu", "0.7,0.3"]) == 2
    err = capsys.readouterr().err
    assert "error: invalid-args:" in err


def test_stationary_respects_state_cap(capsys):
    code = main(["stationary", "--M", "3", "--L", "400", "--nu", "0.4,0.3,0.3"])
    assert code == 2
    assert "state space" in capsys.readouterr().err


def test_unknown_figure_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["experiment", "--figure", "fig9x", "--out", "x.csv"])
    assert exc.value.code == 2


def test_trajectory_writes_deterministic_csv(tmp_path, capsys):
    out1 = tmp_path / "t1.csv"
    out2 = tmp_path / "t2.csv"
    args = ["trajectory", "--M", "2", "--L", "10", "--nu", "0.7,0.3",
            "--iters", "200", "--seed", "9", "--out"]
    assert main(args + [str(out1)]) == 0
    assert main(args + [str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().splitlines()
    assert lines[0] == "M,L,s,nu1,nu2,seed,trial,step,p1,p2"
    assert len(lines) == 202
    first = lines[1].split(",")
    assert first[7] == "0" and float(first[8]) == 0.5


def test_converge_is_deterministic_across_runs_and_workers(tmp_path):
    outs = []
    for name, workers in (("a.csv", "1"), ("b.csv", "4")):
        out = tmp_path / name
        code = main(
            ["converge", "--M", "2", "--s", "0.05", "--nu", "0.7,0.3",
             "--window", "100", "--eps", "0.005", "--iters", "3000",
             "--trials", "50", "--seed", "21", "--workers", workers, "--out", str(out)]
        )
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert text.splitlines()[0].startswith("M,L,s,nu1,nu2,seed,window,eps,trials,target")
    assert "closed-form" in text


def test_boost_curve_runs_reduced_grid(tmp_path):
    out = tmp_path / "bc.csv"
    code = main(
        ["boost-curve", "--M", "2", "--s", "0.1", "--nu-grid", "0.5:0.9:0.2",
         "--iters", "500", "--trials", "40", "--seed", "3", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("figure,M,L,s,nu1,nu2,")
    assert len(lines) == 1 + 3 * 2  # three grid points, two forms
    assert all(line.split(",")[0] == "boost-curve" for line in lines[1:])


def test_boost_curve_rejects_bad_grid(capsys):
    assert main(
        ["boost-curve", "--M", "2", "--L", "10", "--nu-grid", "0.9:0.5:0.1",
         "--out", "x.csv"]
    ) == 2
    assert "grid" in capsys.readouterr().err


def test_experiment_subcommand_writes_figure_csv(tmp_path):
    out = tmp_path / "fig1a.csv"
    code = main(
        ["experiment", "--figure", "fig1a", "--seed", "5", "--trials", "25", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ("figure,M,L,s,nu1,nu2,iterations,trials,seed,form,"
                        "p_analytic,p_montecarlo,conv_mean,conv_stderr,n_nonconverged")
    assert len(lines) == 1 + 11 * 2


def test_fit_subcommand_reports_case_study(tmp_path, capsys):
    data = tmp_path / "obs.csv"
    data.write_text(
        "label,category,parent1,parent2,simon\n"
        "vehicle_B_edge,central_object,67,47,73\n"
    )
    out = tmp_path / "fit.csv"
    code = main(["fit", "--data", str(data), "--M", "2", "--L-max", "40", "--out", str(out)])
    assert code == 0
    assert "L_fit=9" in capsys.readouterr().out
    text = out.read_text()
    assert "vehicle_B_edge" in text and "0.73" in text
    assert "majority-form boosting" in text


def test_fit_missing_data_file_is_validation_error(tmp_path, capsys):
    code = main(["fit", "--data", str(tmp_path / "nope.csv"), "--M", "2", "--out",
                 str(tmp_path / "o.csv")])
    assert code == 2
    assert "error: invalid-args:" in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "freqboost", "stationary", "--M", "2", "--L", "3",
         "--nu", "0.5,0.5"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "pi: 0.25 0.25 0.25 0.25" in proc.stdout
