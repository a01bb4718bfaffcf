import json

import pytest
from click.testing import CliRunner

from hoabench.cli import main

from support import FIXTURES


@pytest.fixture()
def runner():
    return CliRunner()


def test_parse_command(runner):
    result = runner.invoke(main, ["parse", str(FIXTURES / "grant.hoa")])
    assert result.exit_code == 0, result.output
    body = json.loads(result.output)
    assert body["states"] == 6


def test_validate_command(runner):
    result = runner.invoke(main, ["validate", str(FIXTURES / "arbiter2.hoa")])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["deterministic"] is True


def test_trace_and_check_commands(runner, tmp_path):
    result = runner.invoke(
        main, ["trace", str(FIXTURES / "latch.hoa"), "--length", "6", "--seed", "4"]
    )
    assert result.exit_code == 0, result.output
    trace_file = tmp_path / "trace.txt"
    trace_file.write_text(result.output.strip() + "\n", encoding="utf-8")

    result = runner.invoke(main, ["check", str(FIXTURES / "latch.hoa"), str(trace_file)])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["accepted"] is True


def test_check_rejection_exits_nonzero(runner, tmp_path):
    trace_file = tmp_path / "bad.txt"
    trace_file.write_text("g&!r\n", encoding="utf-8")
    result = runner.invoke(main, ["check", str(FIXTURES / "grant.hoa"), str(trace_file)])
    assert result.exit_code == 1
    assert json.loads(result.output)["accepted"] is False


def test_causal_command_golden(runner, tmp_path):
    trace_file = tmp_path / "trace.txt"
    trace_file.write_text("!g&!r;!g&r;!g&!r;g&r\n", encoding="utf-8")
    result = runner.invoke(
        main,
        ["causal", str(FIXTURES / "grant.hoa"), str(trace_file), "--effect", "XXX g"],
    )
    assert result.exit_code == 0, result.output
    assert json.loads(result.output) == {
        "XXX g": {
            "0": ["no constraints"],
            "1": ["no constraints"],
            "2": ["no constraints"],
            "3": ["r"],
        }
    }


def test_gen_is_byte_deterministic(runner, tmp_path):
    for name in ("one", "two"):
        result = runner.invoke(
            main,
            ["gen", "--spec-dir", str(FIXTURES), "--out", str(tmp_path / name),
             "--count", "12", "--seed", "99"],
        )
        assert result.exit_code == 0, result.output
    for filename in ("tte.jsonl", "tce.jsonl", "config.json"):
        assert (tmp_path / "one" / filename).read_bytes() == (tmp_path / "two" / filename).read_bytes()


def test_gen_respects_config_file(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"traceLength": 4, "negativeRate": 0.0}), encoding="utf-8")
    result = runner.invoke(
        main,
        ["gen", "--spec-dir", str(FIXTURES), "--out", str(tmp_path / "ds"),
         "--count", "6", "--seed", "1", "--config", str(config)],
    )
    assert result.exit_code == 0, result.output
    for line in (tmp_path / "ds" / "tte.jsonl").read_text(encoding="utf-8").splitlines():
        record = json.loads(line)
        assert record["ground_truth"]["verdict"] is True
        assert len(record["ground_truth"]["steps"]) == 4


def test_split_command(runner, tmp_path):
    runner.invoke(
        main,
        ["gen", "--spec-dir", str(FIXTURES), "--out", str(tmp_path / "ds"),
         "--count", "10", "--seed", "2"],
    )
    result = runner.invoke(
        main,
        ["split", "--dataset", str(tmp_path / "ds" / "tce.jsonl"), "--top-n", "2"],
    )
    assert result.exit_code == 0, result.output
    hard = (tmp_path / "ds" / "tce-hard.jsonl").read_text(encoding="utf-8").splitlines()
    normal = (tmp_path / "ds" / "tce-normal.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(hard) + len(normal) == 10


def test_score_command_on_synthetic_run(runner, tmp_path):
    runner.invoke(
        main,
        ["gen", "--spec-dir", str(FIXTURES), "--out", str(tmp_path / "ds"),
         "--count", "4", "--seed", "3"],
    )
    dataset = tmp_path / "ds" / "tce.jsonl"
    run_dir = tmp_path / "run"
    run_dir.mkdir()
    lines = []
    for raw in dataset.read_text(encoding="utf-8").splitlines():
        record = json.loads(raw)
        completion = "### JSON Ground Truth ###:\n```json\n" + json.dumps(record["ground_truth"]) + "\n```"
        lines.append(json.dumps({"task_id": record["id"], "completion": completion}))
    (run_dir / "transcripts.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (run_dir / "run.json").write_text(
        json.dumps({"endpoint": {"model": "synthetic"}}), encoding="utf-8"
    )

    result = runner.invoke(
        main,
        ["score", "--dataset", str(dataset), "--run-dir", str(run_dir),
         "--out", str(tmp_path / "scores")],
    )
    assert result.exit_code == 0, result.output
    assert "F1(AP)=1.000" in result.output
    for name in ("reports.jsonl", "summary.csv", "summary.json", "scores.csv", "features.csv"):
        assert (tmp_path / "scores" / name).exists()
    scores_csv = (tmp_path / "scores" / "scores.csv").read_text(encoding="utf-8")
    assert scores_csv.splitlines()[0].startswith("task_id,model,kind,difficulty")


def test_score_command_on_raw_completion_files(runner, tmp_path):
    runner.invoke(
        main,
        ["gen", "--spec-dir", str(FIXTURES), "--out", str(tmp_path / "ds"),
         "--count", "3", "--seed", "8"],
    )
    dataset = tmp_path / "ds" / "tce.jsonl"
    completions_dir = tmp_path / "raw"
    completions_dir.mkdir()
    for raw in dataset.read_text(encoding="utf-8").splitlines():
        record = json.loads(raw)
        text = "### JSON Ground Truth ###:\n" + json.dumps(record["ground_truth"])
        (completions_dir / f"{record['id']}.txt").write_text(text, encoding="utf-8")

    result = runner.invoke(
        main,
        ["score", "--dataset", str(dataset), "--completions-dir", str(completions_dir),
         "--out", str(tmp_path / "scores"), "--model", "filedrop"],
    )
    assert result.exit_code == 0, result.output
    assert "filedrop" in result.output and "F1(AP)=1.000" in result.output


def test_score_requires_exactly_one_source(runner, tmp_path):
    runner.invoke(
        main,
        ["gen", "--spec-dir", str(FIXTURES), "--out", str(tmp_path / "ds"),
         "--count", "2", "--seed", "8"],
    )
    result = runner.invoke(
        main,
        ["score", "--dataset", str(tmp_path / "ds" / "tce.jsonl"),
         "--out", str(tmp_path / "scores")],
    )
    assert result.exit_code != 0
    assert "exactly one" in result.output
