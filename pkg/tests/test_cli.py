import io
import json
import math
import os

import pytest

from disclab.cli import main


def run_cli(argv, env=None):
    out = io.StringIO()
    old = {}
    env = env or {}
    for k, v in env.items():
        old[k] = os.environ.get(k)
        if v is None:
            os.environ.pop(k, None)
        else:
            os.environ[k] = v
    try:
        code = main(argv, out=out)
    finally:
        for k, v in old.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v
    return code, out.getvalue()


def test_partition_gaussian_json():
    code, text = run_cli(
        [
            "partition",
            "--dim", "2",
            "--action", "x1^2 + x2^2",
            "--output", "json",
        ]
    )
    assert code == 0
    payload = json.loads(text)
    assert payload["columns"] == ["route", "value"]
    vals = {row[0]: float(row[1]) for row in payload["rows"]}
    assert abs(vals["direct"] - math.pi) <= 1e-7 * math.pi
    assert vals["max-pairwise-deviation"] <= 1e-6


def test_parse_error_exit_code():
    code, _ = run_cli(["partition", "--dim", "2", "--action", "x1^2 +"])
    assert code == 2


def test_missing_action_exit_code():
    code, _ = run_cli(["partition", "--dim", "2"])
    assert code == 2


def test_degenerate_action_exit_code():
    code, _ = run_cli(["partition", "--dim", "2", "--action", "x1^2*x2^2"])
    assert code == 3


def test_bad_flag_exit_code():
    code, _ = run_cli(["partition", "--dim", "2", "--action", "x1^2+x2^2",
                       "--tol", "1"])
    assert code == 2


def test_unknown_subcommand_exit_code():
    code, _ = run_cli(["frobnicate"])
    assert code == 2


def test_moments_text_table():
    code, text = run_cli(
        ["moments", "--dim", "1", "--action", "x1^4", "--max-deg", "2"]
    )
    assert code == 0
    assert "alpha" in text and "gamma-ratio" in text


def test_recover_roundtrip_small_error():
    code, text = run_cli(
        [
            "recover",
            "--dim", "2",
            "--action", "x1^4 + 0.5*x1^2*x2^2 + x2^4",
            "--output", "json",
        ]
    )
    assert code == 0
    payload = json.loads(text)
    err_row = [r for r in payload["rows"] if r[0] == "max-relative-error"][0]
    assert float(err_row[1]) <= 1e-6


def test_verify_all_pass():
    code, text = run_cli(
        ["verify", "--dim", "2", "--action", "x1^4 + x2^4", "--output", "json"]
    )
    assert code == 0
    payload = json.loads(text)
    assert all(row[3] == "PASS" for row in payload["rows"])


def test_volume_csv_columns():
    code, text = run_cli(
        [
            "volume",
            "--dim", "1",
            "--action", "16*x1^4",
            "--t-max", "3",
            "--compare",
            "--output", "csv",
        ]
    )
    assert code == 0
    lines = text.strip().split("\n")
    assert lines[0] == "t,rho_t,delta_t,vol_exact,gap_plain,gap_stokes"
    assert len(lines) == 3  # header + t=2, t=3
    first = lines[1].split(",")
    assert first[0] == "2"
    assert abs(float(first[3]) - 1.0) <= 1e-7


def test_volume_stokes_below_plain():
    code, text = run_cli(
        [
            "volume",
            "--dim", "1",
            "--action", "16*x1^4",
            "--t-max", "3",
            "--compare",
            "--output", "json",
        ]
    )
    assert code == 0
    for row in json.loads(text)["rows"]:
        assert float(row[2]) <= float(row[1]) + 1e-6


def test_entropy_report_fields():
    code, text = run_cli(
        ["entropy", "--dim", "1", "--action", "x1^2", "--output", "json"]
    )
    assert code == 0
    fields = {row[0]: float(row[1]) for row in json.loads(text)["rows"]}
    want = -math.log(math.sqrt(math.pi)) - 0.5
    assert abs(fields["entropy-primal"] - want) <= 1e-7
    assert fields["gap"] <= 1e-8
    assert "entropy-closed-c2n" in fields


def test_determinism_across_runs_and_thread_env():
    argv = [
        "volume",
        "--dim", "1",
        "--action", "16*x1^4",
        "--t-max", "3",
        "--compare",
        "--seed", "0",
        "--output", "json",
    ]
    outputs = set()
    for threads in (None, "1", "4"):
        code, text = run_cli(argv, env={"DISCLAB_THREADS": threads})
        assert code == 0
        outputs.add(text)
    assert len(outputs) == 1


def test_invalid_thread_env_rejected():
    code, _ = run_cli(
        ["partition", "--dim", "1", "--action", "x1^2"],
        env={"DISCLAB_THREADS": "0"},
    )
    assert code == 2


def test_action_file(tmp_path):
    path = tmp_path / "action.txt"
    path.write_text("x1^2 + x2^2\n")
    code, text = run_cli(
        [
            "partition",
            "--dim", "2",
            "--action-file", str(path),
            "--output", "json",
        ]
    )
    assert code == 0
    vals = {r[0]: float(r[1]) for r in json.loads(text)["rows"]}
    assert abs(vals["direct"] - math.pi) <= 1e-7 * math.pi
