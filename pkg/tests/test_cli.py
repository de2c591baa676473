import csv
import random

import numpy as np
import pytest

from pld.cli import main
from pld.config import ConfigError, load_config, parse_config_text
from pld.distortion import Strategy
from pld.optimizer import feasible_mask


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_config_defaults_and_db_conversion(tmp_path):
    cfg = load_config()
    assert cfg.gamma_bob == 1.0 and cfg.gamma_eve == pytest.approx(0.1)
    assert (cfg.d_m, cfg.d_loss, cfg.d_conf, cfg.n_m_max) == (16, 1.0, 10.0, 128)
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nsnr_bob_db = 5\ncardinality = 2\nbob_strategy = Dropping\n")
    cfg = load_config(str(p), {"alpha": "0.3"})
    assert cfg.gamma_bob == pytest.approx(10 ** 0.5)
    assert cfg.cardinality == 2 and cfg.alpha == 0.3
    assert cfg.bob_strategy is Strategy.DROPPING


@pytest.mark.parametrize("text", ["alpha 0.3", "bogus = 1", "alpha = x", "= 3",
                                  "iterations = 0", "snr_bob_db = nan"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        load_config(overrides=parse_config_text(text))


def test_missing_config_file_exit_code(tmp_path, capsys):
    assert main(["optimize", "--config", str(tmp_path / "nope.cfg")]) == 3
    assert "nope.cfg" in capsys.readouterr().err


def test_unwritable_output(tmp_path, capsys):
    bad = tmp_path / "missing" / "out.csv"
    assert main(["surface", "--out", str(bad)]) == 3
    assert str(bad) in capsys.readouterr().err


def test_surface_grid(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["surface", "--alpha", "0.9", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["n_m", "n_k", "d_eve", "feasible"]
    assert len(rows) == 1 + 128 * 128

    cfg = load_config()
    s = cfg.scenario()
    rng = random.Random(0)
    for row in rng.sample(rows[1:], 100):
        n_m, n_k = int(row[0]), int(row[1])
        checks = feasible_mask(s, n_m, n_k, 0.9, Strategy.PERCEPTION, cfg.d_bob_th)
        assert bool(int(row[3])) == all(bool(v) for v in checks.values())
        assert 0.0 <= float(row[2]) <= 10.0

    # feasible cells: decreasing in n_K, non-decreasing in n_M
    d = np.array([float(r[2]) for r in rows[1:]]).reshape(128, 128)
    ok = np.array([r[3] == "1" for r in rows[1:]]).reshape(128, 128)
    assert np.all(np.diff(d, axis=1)[ok[:, :-1] & ok[:, 1:]] < 0)
    assert np.all(np.diff(d, axis=0)[ok[:-1] & ok[1:]] >= 0)


def test_surface_single_cell(tmp_path):
    out = tmp_path / "one.csv"
    assert main(["surface", "--set", "n_lo=5", "--set", "n_hi=5", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 2


def test_surface_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["surface", "--alpha", "0.5", "--out", str(a)])
    main(["surface", "--alpha", "0.5", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("alpha,n_m", [("0.9", "128"), ("0.1", "117")])
def test_optimize_corners(tmp_path, capsys, alpha, n_m):
    out = tmp_path / "o.csv"
    assert main(["optimize", "--alpha", alpha, "--out", str(out)]) == 0
    row = read_csv(out)[1]
    assert row[3] == row[6] == n_m
    assert row[4] == row[7]
    assert row[-1] == "1"
    assert "match" in capsys.readouterr().out


def test_optimize_infeasible(capsys):
    code = main(["optimize", "--alpha", "0.5", "--bob-strategy", "dropping"])
    assert code == 1
    assert "bob_distortion" in capsys.readouterr().out


def test_iterate_rows(tmp_path):
    out = tmp_path / "it.csv"
    args = ["iterate", "--snr-bob-db", "5", "--snr-eve-db", "0", "--cardinality", "65536",
            "--iterations", "30", "--out", str(out)]
    assert main(args) == 0
    rows = read_csv(out)
    assert rows[0][:8] == ["t", "eve_strategy", "bob_strategy", "alpha_o", "n_m", "n_k",
                           "d_eve", "d_bob"]
    assert len(rows) == 31
    assert {r[1] for r in rows[1:]} <= {"perception", "dropping", "exclusion"}
    assert all(float(r[7]) <= 0.01 + 1e-9 for r in rows[1:] if r[8] == "1")
    again = tmp_path / "it2.csv"
    main(args[:-1] + [str(again)])
    assert out.read_bytes() == again.read_bytes()


def test_iterate_single(tmp_path):
    out = tmp_path / "one.csv"
    assert main(["iterate", "--iterations", "1", "--snr-bob-db", "5", "--snr-eve-db", "0",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 2 and rows[1][1:3] == ["perception", "perception"]


def test_iterate_truncated_exit_code(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = main(["iterate", "--set", "n_m_max=100", "--out", str(out)])
    assert code == 1
    rows = read_csv(out)
    assert len(rows) == 2
    assert rows[1][4] == "" and rows[1][8] == "0" and rows[1][9] == "message_blocklength_max"
    assert "message_blocklength_max" in capsys.readouterr().err


def test_montecarlo_report(capsys):
    args = ["montecarlo", "--samples", "50000", "--seed", "3"]
    assert main(args) == 0
    first = capsys.readouterr().out
    main(args)
    assert capsys.readouterr().out == first
    assert first.count("pass") == 3


def test_montecarlo_total_loss(capsys):
    assert main(["montecarlo", "--samples", "1000", "--set", "eps_m=1"]) == 0
    for line in capsys.readouterr().out.splitlines():
        assert "simulated=1.000000" in line and "stderr=0.00e+00" in line


def test_verify(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 6
