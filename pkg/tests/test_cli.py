"""Command-line harness: schemas, determinism, exit codes, figures."""

import json

import pytest

from dihplab.cli import main


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_gap_row_count_and_determinism(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    args = ["gap", "--n", "8", "--m", "2", "--K", "3", "--trials", "10", "--seed", "7"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2), "--no-plot"]) == 0
    lines = read(out1 / "gap.csv").splitlines()
    assert lines[0] == b"trial,label,edges,maxcut,ratio"
    assert len(lines) == 1 + 2 * 10
    assert read(out1 / "gap.csv") == read(out2 / "gap.csv")
    assert (out1 / "gap.png").exists()
    assert not (out2 / "gap.png").exists()


def test_gap_jsonl_format(tmp_path):
    args = [
        "gap", "--n", "8", "--m", "2", "--K", "2", "--trials", "4",
        "--seed", "3", "--format", "jsonl", "--out", str(tmp_path), "--no-plot",
    ]
    assert main(args) == 0
    lines = read(tmp_path / "gap.jsonl").splitlines()
    assert len(lines) == 8
    record = json.loads(lines[0])
    assert set(record) == {"trial", "label", "edges", "maxcut", "ratio"}


def test_decay_row_schema(tmp_path):
    assert main(["decay", "--seed", "3", "--out", str(tmp_path), "--no-plot"]) == 0
    lines = read(tmp_path / "decay.csv").splitlines()
    assert lines[0] == b"d,weight,envelope,pass"
    assert len(lines) == 1 + (8 // 2 + 1)


def test_verify_passes_and_writes_report(tmp_path):
    assert main(["verify", "--out", str(tmp_path), "--no-plot"]) == 0
    lines = read(tmp_path / "verify.csv").splitlines()
    assert lines[0] == b"name,status,lhs,rhs,tolerance,detail"
    assert all(b",fail," not in line for line in lines[1:])


def test_verify_zero_tolerance_negative_control(tmp_path, capsys):
    # Float-backed identities cannot meet an exact-zero tolerance; the
    # rational ones still must.
    code = main(["verify", "--tolerance", "0", "--out", str(tmp_path)])
    assert code == 1
    out = capsys.readouterr().out
    assert "[FAIL] character-orthonormality" in out
    assert "[PASS] psi-oracle" in out
    assert "[PASS] yes-mass-formula-vs-direct" in out


def test_refine_and_discrepancy_and_decompose(tmp_path):
    assert main(["refine", "--seed", "2", "--out", str(tmp_path), "--no-plot"]) == 0
    header = read(tmp_path / "refine.csv").splitlines()[0]
    assert header == b"round,rectangle,zeta_size,potential,mass_no,mass_yes"
    assert (
        main(
            [
                "discrepancy", "--trials", "10", "--seed", "5",
                "--out", str(tmp_path), "--no-plot",
            ]
        )
        == 0
    )
    assert (tmp_path / "discrepancy.csv").exists()
    assert (
        main(
            [
                "decompose", "--density", "0.25", "--seed", "4",
                "--out", str(tmp_path), "--no-plot",
            ]
        )
        == 0
    )
    records = [
        json.loads(line)
        for line in read(tmp_path / "decompose.jsonl").splitlines()
    ]
    assert records and all(
        set(r) == {"restriction", "piece_size", "density_ratio"} for r in records
    )


def test_leveld_and_hyper_schema(tmp_path):
    assert main(["leveld", "--seed", "2", "--out", str(tmp_path), "--no-plot"]) == 0
    assert main(["hyper", "--seed", "2", "--out", str(tmp_path), "--no-plot"]) == 0
    for name in ("leveld.csv", "hyper.csv"):
        header = read(tmp_path / name).splitlines()[0]
        assert header == b"n,m,d,q,lhs,rhs,ratio,preconditions_met"


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trials": 3, "seed": 11, "n": 8, "m": 2, "K": 2}))
    out = tmp_path / "out"
    assert (
        main(
            [
                "gap", "--config", str(cfg), "--trials", "5",
                "--out", str(out), "--no-plot",
            ]
        )
        == 0
    )
    lines = read(out / "gap.csv").splitlines()
    assert len(lines) == 1 + 2 * 5  # the flag wins over the config file


def test_invalid_shape_is_usage_error(tmp_path):
    with pytest.raises(SystemExit):
        main(["gap", "--n", "4", "--m", "3", "--out", str(tmp_path)])


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
