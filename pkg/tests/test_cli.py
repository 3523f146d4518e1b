import json

import numpy as np
import pytest

from jumpscan.cli import main


def write_series(path, y, header=True):
    with open(path, "w") as fh:
        if header:
            fh.write("y\n")
        for v in y:
            fh.write(f"{v}\n")


@pytest.fixture()
def step_csv(tmp_path):
    rng = np.random.default_rng(123)
    t = (np.arange(500) + 1) / 500
    y = 3.0 * (t > 0.5) + rng.standard_normal(500)
    p = tmp_path / "series.csv"
    write_series(p, y)
    return p


def test_detect_writes_outputs_and_summary(step_csv, tmp_path, capsys):
    rc = main([
        "detect", "--input", str(step_csv), "--out", str(tmp_path),
        "--alpha", "0.05", "--s-lower", "0.061", "--s-upper", "0.167",
        "--s-star", "0.03",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "jump" in out
    result = json.loads((tmp_path / "series_result.json").read_text())
    assert result["alpha"] == 0.05
    assert len(result["jumps"]) == 1
    assert abs(result["jumps"][0]["raw"] - 0.5) < 0.02
    plot = (tmp_path / "series_plot.csv").read_text().splitlines()
    assert plot[0] == "t,g,threshold,jump"
    assert len(plot) == 501
    assert sum(line.endswith(",1") for line in plot[1:]) == 1


def test_detect_dump_stat(step_csv, tmp_path):
    rc = main([
        "detect", "--input", str(step_csv), "--out", str(tmp_path),
        "--alpha", "0.05", "--s-lower", "0.061", "--s-upper", "0.167",
        "--s-star", "0.03", "--dump-stat",
    ])
    assert rc == 0
    stat = (tmp_path / "series_stat.csv").read_text().splitlines()
    assert stat[0] == "t,g"
    assert len(stat) > 100


def test_detect_fixed_huge_threshold_empty_exit_zero(step_csv, tmp_path):
    rc = main([
        "detect", "--input", str(step_csv), "--out", str(tmp_path),
        "--s-lower", "0.061", "--s-upper", "0.167", "--s-star", "0.03",
        "--threshold", "fixed:99",
    ])
    assert rc == 0
    result = json.loads((tmp_path / "series_result.json").read_text())
    assert result["jumps"] == []


def test_detect_nan_row_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    vals = ["1.0"] * 150
    vals[41] = "nan"
    write_series(p, vals)
    rc = main(["detect", "--input", str(p)])
    assert rc == 2
    assert "line 43" in capsys.readouterr().err  # header + 1-based data rows


def test_detect_ragged_row_exit_2(tmp_path, capsys):
    p = tmp_path / "ragged.csv"
    with open(p, "w") as fh:
        fh.write("y\n")
        for i in range(150):
            fh.write("1.0,2.0\n" if i == 99 else "1.0\n")
    rc = main(["detect", "--input", str(p)])
    assert rc == 2
    assert "line 101" in capsys.readouterr().err


def test_detect_short_series_exit_2(tmp_path):
    p = tmp_path / "short.csv"
    write_series(p, np.zeros(50))
    assert main(["detect", "--input", str(p)]) == 2


def test_detect_bad_config_exit_3(step_csv, tmp_path, capsys):
    rc = main([
        "detect", "--input", str(step_csv), "--out", str(tmp_path),
        "--s-lower", "0.2", "--s-upper", "0.1", "--s-star", "0.05",
    ])
    assert rc == 3
    rc = main(["detect", "--input", str(step_csv), "--alpha", "0.7"])
    assert rc == 3


def test_detect_seed_reproducible(step_csv, tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    args = [
        "detect", "--input", str(step_csv), "--alpha", "0.05",
        "--s-lower", "0.061", "--s-upper", "0.167", "--s-star", "0.03",
        "--threshold", "bootstrap:200", "--seed", "7",
    ]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert (out1 / "series_result.json").read_text() == (out2 / "series_result.json").read_text()


def test_detect_thread_flag_location_invariant(step_csv, tmp_path):
    outs = []
    for tag, threads in (("t1", "1"), ("t4", "4")):
        out = tmp_path / tag
        assert main([
            "detect", "--input", str(step_csv), "--out", str(out),
            "--alpha", "0.05", "--s-lower", "0.061", "--s-upper", "0.167",
            "--s-star", "0.03", "--threads", threads,
        ]) == 0
        outs.append(json.loads((out / "series_result.json").read_text()))
    assert [j["raw"] for j in outs[0]["jumps"]] == [j["raw"] for j in outs[1]["jumps"]]


def test_calibrate_reference_values(capsys):
    assert main(["calibrate"]) == 0
    lines = capsys.readouterr().out.splitlines()
    first = lines[1].split()
    last = lines[-1].split()
    assert first[0] == "500" and last[0] == "5000"
    assert float(first[3]) == pytest.approx(3.530, abs=0.01)
    assert float(first[4]) == pytest.approx(3.735, abs=0.01)
    assert float(last[5]) == pytest.approx(4.518, abs=0.01)


def test_calibrate_custom_rows(capsys):
    assert main(["calibrate", "--rows", "500:0.061:0.167", "--alphas", "0.05"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-1].startswith("500")
    assert "3.735" in out[-1]


def test_simulate_writes_series_and_truth(tmp_path, capsys):
    rc = main(["simulate", "--scenario", "II:PLS", "--n", "400", "--seed", "5",
               "--out", str(tmp_path)])
    assert rc == 0
    csvs = list(tmp_path.glob("*.csv"))
    assert len(csvs) == 1
    lines = csvs[0].read_text().splitlines()
    assert len(lines) == 401
    sidecar = json.loads(csvs[0].with_suffix(".json").read_text())
    assert len(sidecar["jumps"]) == 2
    assert sidecar["jumps"][0]["location"] == pytest.approx(1 / 3)


def test_simulate_bad_scenario_exit_3(tmp_path):
    assert main(["simulate", "--scenario", "bogus:GS", "--out", str(tmp_path)]) == 3


def test_montecarlo_smoke(tmp_path, capsys):
    rc = main([
        "montecarlo", "--scenario", "I:GS", "--n", "500", "--reps", "50",
        "--seed", "2", "--out", str(tmp_path), "--alpha", "0.05",
        "--s-lower", "0.061", "--s-upper", "0.167", "--s-star", "0.03",
        "--threads", "2",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "hit_rate" in out
    table = list(tmp_path.glob("mc_*.csv"))[0].read_text().splitlines()
    header = table[0].split(",")
    row = dict(zip(header, table[1].split(",")))
    assert float(row["hit_rate"]) >= 0.9


def test_bench_smoke(capsys):
    rc = main(["bench", "--sizes", "500,1000,2000"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "per_scale_ms" in out
    assert "slope" in out
