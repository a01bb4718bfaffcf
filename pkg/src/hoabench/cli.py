"""Command-line client for the benchmark service.

Every data operation goes through the HTTP API. Without ``--server`` the
commands mount the FastAPI app in-process (same wire format, no socket),
so batch work does not require a running daemon; with ``--server URL``
they talk to a remote instance. ``serve`` starts the service and ``run``
drives an external chat-completion endpoint directly, since it is itself
an HTTP client by nature.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import httpx

from .runner import EndpointConfig, read_transcripts, run_suite
from .taskgen import read_tasks

SERVER_OPTION = click.option(
    "--server", default=None, help="Base URL of a running service; defaults to in-process."
)


def make_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    response = client.post(path, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except Exception:
            detail = response.text
        raise click.ClickException(f"{path} failed ({response.status_code}): {detail}")
    return response.json()


@click.group()
def main():
    """Generate, serve and score temporal-reasoning benchmark tasks."""


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--mock-dataset", type=click.Path(exists=True), default=None,
              help="Task JSONL to preload into the mock chat endpoint.")
def serve(host: str, port: int, mock_dataset: str | None):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    app = create_app()
    if mock_dataset:
        from .taskgen import tasks_from_jsonl

        text = Path(mock_dataset).read_text(encoding="utf-8")
        app.state.mock_tasks = {t.id: t for t in tasks_from_jsonl(text)}
        click.echo(f"preloaded {len(app.state.mock_tasks)} tasks into the mock endpoint")
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.argument("hoa_file", type=click.Path(exists=True))
@SERVER_OPTION
def parse(hoa_file: str, server: str | None):
    """Parse an HOA file and print a summary."""
    with make_client(server) as client:
        result = _post(client, "/automata/parse", {"hoa": Path(hoa_file).read_text(encoding="utf-8")})
    click.echo(json.dumps(result, indent=2))


@main.command()
@click.argument("hoa_file", type=click.Path(exists=True))
@SERVER_OPTION
def validate(hoa_file: str, server: str | None):
    """Report determinism conflicts and assignment holes."""
    with make_client(server) as client:
        result = _post(client, "/automata/validate", {"hoa": Path(hoa_file).read_text(encoding="utf-8")})
    click.echo(json.dumps(result, indent=2))


@main.command()
@click.argument("hoa_file", type=click.Path(exists=True))
@click.option("--length", default=10, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--style", default="semicolon", type=click.Choice(["semicolon", "tuples"]))
@SERVER_OPTION
def trace(hoa_file: str, length: int, seed: int, style: str, server: str | None):
    """Generate one seeded random trace."""
    payload = {
        "hoa": Path(hoa_file).read_text(encoding="utf-8"),
        "length": length,
        "seed": seed,
        "style": style,
    }
    with make_client(server) as client:
        result = _post(client, "/traces/random", payload)
    click.echo(result["trace"])


@main.command()
@click.argument("hoa_file", type=click.Path(exists=True))
@click.argument("trace_file", type=click.Path(exists=True))
@SERVER_OPTION
def check(hoa_file: str, trace_file: str, server: str | None):
    """Check a trace against an automaton."""
    payload = {
        "hoa": Path(hoa_file).read_text(encoding="utf-8"),
        "trace": Path(trace_file).read_text(encoding="utf-8"),
    }
    with make_client(server) as client:
        result = _post(client, "/traces/check", payload)
    click.echo(json.dumps(result, indent=2))
    if not result["accepted"]:
        sys.exit(1)


@main.command()
@click.argument("hoa_file", type=click.Path(exists=True))
@click.argument("trace_file", type=click.Path(exists=True))
@click.option("--effect", required=True, help="Effect string such as 'XXX g'.")
@SERVER_OPTION
def causal(hoa_file: str, trace_file: str, effect: str, server: str | None):
    """Print per-step causal input constraints for an effect."""
    payload = {
        "hoa": Path(hoa_file).read_text(encoding="utf-8"),
        "trace": Path(trace_file).read_text(encoding="utf-8"),
        "effect": effect,
    }
    with make_client(server) as client:
        result = _post(client, "/causality/analyze", payload)
    click.echo(json.dumps({result["effect"]: result["per_step"]}, indent=2))


@main.command()
@click.option("--spec-dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory of .hoa controller files.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--count", default=400, type=int, help="Tasks per family.")
@click.option("--seed", default=0, type=int, help="Master seed.")
@click.option("--config", "config_file", type=click.Path(exists=True), default=None,
              help="JSON config file (masterSeed, traceLength, negativeRate, ...).")
@SERVER_OPTION
def gen(spec_dir: str, out: str, count: int, seed: int, config_file: str | None, server: str | None):
    """Generate a dataset of trace and causal tasks."""
    hoa_paths = sorted(Path(spec_dir).glob("*.hoa"))
    if not hoa_paths:
        raise click.ClickException(f"no .hoa files in {spec_dir}")
    config = json.loads(Path(config_file).read_text(encoding="utf-8")) if config_file else {}
    config.setdefault("masterSeed", seed)
    payload = {
        "automata": [{"name": p.stem, "hoa": p.read_text(encoding="utf-8")} for p in hoa_paths],
        "config": config,
        "tte_count": count,
        "tce_count": count,
    }
    with make_client(server) as client:
        result = _post(client, "/datasets/generate", payload)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "tte.jsonl").write_text(result["tte_jsonl"], encoding="utf-8")
    (out_dir / "tce.jsonl").write_text(result["tce_jsonl"], encoding="utf-8")
    (out_dir / "config.json").write_text(result["config_echo"], encoding="utf-8")
    click.echo(f"wrote {count} TTE + {count} TCE tasks to {out_dir}")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--top-n", required=True, type=int)
@click.option("--out-prefix", default=None, help="Defaults to the dataset path without extension.")
@SERVER_OPTION
def split(dataset: str, top_n: int, out_prefix: str | None, server: str | None):
    """Re-split a dataset into normal/hard by per-feature top-n."""
    payload = {"tasks_jsonl": Path(dataset).read_text(encoding="utf-8"), "top_n": top_n}
    with make_client(server) as client:
        result = _post(client, "/datasets/split", payload)
    prefix = out_prefix if out_prefix else str(Path(dataset).with_suffix(""))
    Path(prefix + "-normal.jsonl").write_text(result["normal_jsonl"], encoding="utf-8")
    Path(prefix + "-hard.jsonl").write_text(result["hard_jsonl"], encoding="utf-8")
    click.echo(f"{len(result['hard_ids'])} hard tasks -> {prefix}-hard.jsonl")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True), multiple=True,
              help="Task JSONL file; repeat for several families.")
@click.option("--endpoint-config", required=True, type=click.Path(exists=True),
              help="JSON EndpointConfig (base_url, model, api_key_env, ...).")
@click.option("--out-run-dir", required=True, type=click.Path(file_okay=False))
@click.option("--resume/--no-resume", default=True)
@click.option("--shot-file", type=click.Path(exists=True), default=None,
              help="Override the built-in worked example.")
def run(dataset: tuple[str, ...], endpoint_config: str, out_run_dir: str, resume: bool,
        shot_file: str | None):
    """Run an external chat-completion endpoint over a dataset."""
    cfg = EndpointConfig.from_file(Path(endpoint_config))
    tasks = []
    for path in dataset:
        tasks.extend(read_tasks(Path(path)))
    shot = Path(shot_file).read_text(encoding="utf-8") if shot_file else None
    path = run_suite(cfg, tasks, Path(out_run_dir), resume=resume, shot=shot)
    click.echo(f"transcripts at {path}")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True), multiple=True)
@click.option("--run-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Run directory holding transcripts.jsonl and run.json.")
@click.option("--completions-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Directory of raw completion text files named <task_id>.txt.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--model", default=None, help="Model label; defaults to the run metadata.")
@SERVER_OPTION
def score(dataset: tuple[str, ...], run_dir: str | None, completions_dir: str | None,
          out: str, model: str | None, server: str | None):
    """Score a finished run and write reports, summary and diagnostics files."""
    if (run_dir is None) == (completions_dir is None):
        raise click.ClickException("provide exactly one of --run-dir or --completions-dir")
    if run_dir is not None:
        run_path = Path(run_dir)
        completions = read_transcripts(run_path / "transcripts.jsonl")
        if model is None:
            meta = json.loads((run_path / "run.json").read_text(encoding="utf-8"))
            model = meta.get("endpoint", {}).get("model", "unknown")
    else:
        completions = {
            p.stem: p.read_text(encoding="utf-8")
            for p in sorted(Path(completions_dir).glob("*.txt"))
        }
        if model is None:
            model = "unknown"

    all_rows: list[dict] = []
    all_summaries: list[dict] = []
    feature_rows: list[dict] = []
    with make_client(server) as client:
        for path in dataset:
            text = Path(path).read_text(encoding="utf-8")
            result = _post(client, "/score/batch",
                           {"tasks_jsonl": text, "completions": completions, "model": model})
            all_rows.extend(result["rows"])
            all_summaries.extend(result["summary"])
            for task in read_tasks(Path(path)):
                feature_rows.append({"task_id": task.id, **task.features.to_dict()})

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "reports.jsonl", "w", encoding="utf-8") as sink:
        for row in all_rows:
            sink.write(json.dumps(row, sort_keys=True) + "\n")
    (out_dir / "summary.json").write_text(
        json.dumps(all_summaries, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_csv(
        out_dir / "summary.csv",
        ["model", "task", "f1_ap", "f1_ts", "precision_ap", "recall_ap",
         "precision_ts", "recall_ts", "n"],
        [{**row, "task": row["task_label"]} for row in all_summaries],
    )
    _write_csv(
        out_dir / "scores.csv",
        ["task_id", "model", "kind", "difficulty", "parse_failed",
         "f1_ap", "f1_ts", "precision_ap", "recall_ap", "precision_ts", "recall_ts"],
        all_rows,
    )
    _write_csv(
        out_dir / "features.csv",
        ["task_id", "effect_depth", "hoa_states", "transition_count",
         "causal_inputs_count", "unique_inputs_in_trace"],
        feature_rows,
    )
    click.echo(f"scored {len(all_rows)} tasks -> {out_dir}")
    for row in all_summaries:
        click.echo(
            f"  {row['model']} {row['task_label']}: "
            f"F1(AP)={row['f1_ap']:.3f} F1(TS)={row['f1_ts']:.3f} (n={row['n']})"
        )


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as sink:
        writer = csv.DictWriter(sink, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)


if __name__ == "__main__":
    main()
