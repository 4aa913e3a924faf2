import numpy as np
import pytest

from gfsig.cli import main

PR_SEED_TEXT = "0,0,2,16,4,1,18,19,6,10,3,9,20,14,21,17,8,7,12,15,5,13,11"


def test_gen_pr_prints_published_seed(capsys):
    assert main(["gen", "--family", "pr", "--L", "23", "--H", "22"]) == 0
    out = capsys.readouterr().out
    assert "B=483" in out and "N_s=11109" in out
    assert "seed: " + PR_SEED_TEXT in out


def test_gen_trace_set_size(capsys):
    assert main(["gen", "--family", "trace", "--p", "5", "--m", "2"]) == 0
    out = capsys.readouterr().out
    assert "B=600" in out and "N_s=14400" in out


def test_gen_rejects_composite_length(capsys):
    assert main(["gen", "--family", "cubic", "--L", "4"]) == 1
    assert "odd prime" in capsys.readouterr().err


def test_gen_capacity_and_outputs(tmp_path, capsys):
    seed_file = tmp_path / "seed.txt"
    mat_file = tmp_path / "mat.csv"
    rc = main(["gen", "--family", "pr", "--L", "11", "--H", "10", "--Q", "4",
               "--Nd", "20", "--out", str(seed_file), "--matrix-csv", str(mat_file)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "capacity(Q=4)=272" in out  # floor(1089 / 4)
    assert seed_file.exists() and mat_file.exists()
    from gfsig.seqgen import signature_from_csv
    assert signature_from_csv(mat_file).shape == (11, 80)


def test_verify_quick_passes(capsys):
    assert main(["verify", "--quick"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert out.count("PASS") == 8  # 4 families x 2 regimes


def test_verify_single_family_with_report(tmp_path, capsys):
    out_file = tmp_path / "report.csv"
    assert main(["verify", "--quick", "--family", "cubic", "--out", str(out_file)]) == 0
    lines = out_file.read_text().splitlines()
    assert lines[0].startswith("family,L,H,N_d,Q,mu,welch,bound,regime")
    assert len(lines) == 3


def test_simulate_round_trip(tmp_path, capsys):
    out_csv = tmp_path / "res.csv"
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "family = cubic\nL = 7\nN_d = 30\nQ = 2\nK = 3\nM = 4\n"
        f"trials = 3\nsweeps = 3\nbase_seed = 2\noutput = {out_csv}\n"
    )
    assert main(["simulate", str(cfg)]) == 0
    text1 = out_csv.read_text()
    assert main(["simulate", str(cfg)]) == 0
    text2 = out_csv.read_text()

    def strip_seconds(text):
        return [line.rsplit(",", 1)[0] for line in text.splitlines()]

    # identical apart from the wall-time column
    assert strip_seconds(text1) == strip_seconds(text2)
    header = text1.splitlines()[0]
    assert header == "family,L,H,N_d,Q,K,M,detector,trials,p_e,p_e_stderr,seconds"


def test_simulate_rejects_zero_trials(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("family = cubic\nL = 7\nN_d = 30\nQ = 2\nK = 3\nM = 4\ntrials = 0\n")
    assert main(["simulate", str(cfg)]) == 1
    assert "trials" in capsys.readouterr().err


def test_simulate_worker_env_invariance(tmp_path, monkeypatch):
    out_csv = tmp_path / "res.csv"
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "family = cubic\nL = 7\nN_d = 30\nQ = 2\nK = 3\nM = 4\n"
        f"trials = 4\nsweeps = 3\nbase_seed = 2\noutput = {out_csv}\n"
    )
    main(["simulate", str(cfg)])
    seq = out_csv.read_text().splitlines()[1].rsplit(",", 1)[0]
    monkeypatch.setenv("GFSIG_WORKERS", "2")
    main(["simulate", str(cfg)])
    par = out_csv.read_text().splitlines()[1].rsplit(",", 1)[0]
    assert seq == par


def test_a1_reports_ratio(capsys):
    rc = main(["a1", "--family", "cubic", "--L", "11", "--Nd", "121", "--Q", "2",
               "--samples", "200"])
    assert rc == 0
    out = capsys.readouterr().out
    ratio = float(out.split("sign ratio ")[1].split()[0])
    assert abs(ratio - 0.5) < 0.05


def test_a1_full_rank_notice(capsys):
    # 16 columns in a 4-dim space: the lifted matrix has full column rank
    rc = main(["a1", "--family", "gaussian", "--L", "4", "--Nd", "8", "--Q", "1"])
    assert rc == 0
    assert "empty null space" in capsys.readouterr().out


def test_bench_reports_all_kinds(capsys):
    assert main(["bench", "--L", "11", "--N", "64", "--trials", "2"]) == 0
    out = capsys.readouterr().out
    for kind in ("gaussian", "musa", "qpsk"):
        assert f"{kind}: coherence" in out
    assert "welch=" in out


def test_bench_rejects_unknown_kind(capsys):
    assert main(["bench", "--L", "11", "--N", "64", "--kinds", "zc"]) == 1
