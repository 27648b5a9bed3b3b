"""Report bundles and file emission.

A bundle wraps one canonical machine-readable payload (a JSON-compatible
dict) plus non-canonical execution notes (timings). ``emit_report``
writes:

* ``results.json``      the payload, sorted keys, full-precision floats
* ``shapley.csv``       per-agent attribution table
* ``metrics.csv``       social metrics (when computed)
* ``metrics_per_agent.csv``
* ``series_*.csv``      plot-ready x/y(/stderr) columns
* ``marginals_<mode>.npy``  per-draw marginal contributions
* ``summary.txt``       human-readable digest, derived from the payload
* ``run_log.txt``       timings and environment notes (non-canonical)

Everything except ``run_log.txt`` is a pure function of the payload, so
rerunning a config with the same seed reproduces the files byte for byte
regardless of worker count. The summary never shows a number that is not
present in (or derived from) ``results.json``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class ReportBundle:
    kind: str
    payload: dict
    marginals: dict[str, np.ndarray] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)


def _fmt(x) -> str:
    """Full-precision, locale-independent cell format."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _shapley_rows(payload: dict):
    agents = payload.get("agents", [])
    kind_by_index = {a["index"]: a["kind"] for a in agents}
    for mode in sorted(payload.get("attribution", {})):
        att = payload["attribution"][mode]
        scope = att["scope"]
        for pos, agent_idx in enumerate(scope):
            yield (
                mode,
                agent_idx,
                kind_by_index.get(agent_idx, ""),
                att["values"][pos],
                att["stderr"][pos],
                att["samples_per_player"][pos],
                att["method"],
                att["num_draws"],
            )


def _metrics_rows(metrics: dict):
    yield ("efficiency", metrics["efficiency"], "")
    eq = metrics["equality"]
    yield ("equality", "" if eq["value"] is None else eq["value"], eq["excluded_episodes"])
    su = metrics["sustainability"]
    yield (
        "sustainability",
        "" if su["value"] is None else su["value"],
        su["excluded_episodes"],
    )


def emit_report(bundle: ReportBundle, directory: str | Path) -> list[Path]:
    """Write all report files; returns the written paths."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {directory}: {exc}") from exc

    written: list[Path] = []

    def emit(name: str, text: str) -> None:
        path = directory / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write report file {path}: {exc}") from exc
        written.append(path)

    payload = bundle.payload
    emit("results.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")

    if payload.get("attribution"):
        path = directory / "shapley.csv"
        _write_csv(
            path,
            ["mode", "agent", "kind", "value", "stderr", "samples", "method", "num_draws"],
            _shapley_rows(payload),
        )
        written.append(path)

    metrics = payload.get("metrics")
    if metrics:
        path = directory / "metrics.csv"
        _write_csv(path, ["metric", "value", "excluded_episodes"], _metrics_rows(metrics))
        written.append(path)
        per_agent = metrics.get("per_agent")
        if per_agent:
            path = directory / "metrics_per_agent.csv"
            rows = [
                (
                    i,
                    per_agent["efficiency"][i],
                    per_agent["sustainability"][i]
                    if per_agent["sustainability"][i] is not None
                    else "",
                    per_agent["equality"][i]
                    if per_agent["equality"][i] is not None
                    else "",
                )
                for i in range(len(per_agent["efficiency"]))
            ]
            _write_csv(path, ["agent", "efficiency", "sustainability", "equality"], rows)
            written.append(path)

    for series in payload.get("series", []):
        path = directory / f"series_{series['name']}.csv"
        columns = series["columns"]
        rows = zip(*(series["data"][c] for c in columns))
        _write_csv(path, columns, rows)
        written.append(path)

    for mode in sorted(bundle.marginals):
        path = directory / f"marginals_{mode}.npy"
        np.save(path, bundle.marginals[mode])
        written.append(path)

    emit("summary.txt", render_summary(payload))

    log_lines = [f"{stage}: {seconds:.3f} s" for stage, seconds in bundle.timings.items()]
    (directory / "run_log.txt").write_text(
        "non-canonical execution log (excluded from determinism checks)\n"
        + "\n".join(log_lines)
        + "\n"
    )
    written.append(directory / "run_log.txt")
    return written


def _g(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def render_summary(payload: dict) -> str:
    """Human-readable digest; every number comes from the payload."""
    lines: list[str] = []
    add = lines.append
    add(f"experiment: {payload.get('kind', 'run')}")
    cfg = payload.get("config", {})
    env = cfg.get("environment", {})
    if env:
        add(
            f"environment: {env.get('kind')} "
            f"(episode_length={env.get('episode_length')}, seed={cfg.get('seed')})"
        )
    agents = payload.get("agents", [])
    if agents:
        add("agents:")
        for a in agents:
            flag = " [fixed]" if a.get("fixed") else ""
            add(
                f"  {a['index']}: {a['kind']} skill={_g(a['skill'])} "
                f"speed={_g(a['speed'])}{flag}"
            )

    for mode in sorted(payload.get("attribution", {})):
        att = payload["attribution"][mode]
        add(f"attribution [{mode}] ({att['method']}, M={att['num_draws']}):")
        for pos, agent_idx in enumerate(att["scope"]):
            add(
                f"  agent {agent_idx}: value={_g(att['values'][pos])} "
                f"stderr={_g(att['stderr'][pos])}"
            )
        add(
            f"  grand mean={_g(att['grand_mean'])} over {att['grand_mean_episodes']} "
            f"episodes; baseline={_g(att['baseline_mean'])}; "
            f"rollouts={att['rollout_count']}"
        )

    ordering = payload.get("ordering")
    if ordering:
        add(
            "contribution ranking (by value): "
            + " > ".join(str(i) for i in ordering["shapley_ranking"])
        )
        add(
            "catch-count ranking:            "
            + " > ".join(str(i) for i in ordering["catch_ranking"])
        )
        add(f"rankings match: {ordering['match']}")

    gaps = payload.get("mode_gaps")
    if gaps:
        add("exclusion-mode gaps (mean over agents):")
        for pair in sorted(gaps):
            g = gaps[pair]
            add(f"  {pair}: signed={_g(g['mean_signed_gap'])} abs={_g(g['mean_abs_gap'])}")

    metrics = payload.get("metrics")
    if metrics:
        add(f"social metrics over {metrics['episodes']} episodes:")
        add(f"  efficiency: {_g(metrics['efficiency'])}")
        eq = metrics["equality"]
        su = metrics["sustainability"]
        add(f"  equality: {_g(eq['value'])}")
        add(f"  sustainability: {_g(su['value'])}")
        for note in metrics.get("notes", []):
            add(f"  note: {note}")

    compare = payload.get("comparison")
    if compare:
        add("monte-carlo vs exact:")
        for row in compare["per_agent"]:
            flag = " (near zero: absolute check)" if row["near_zero"] else ""
            add(
                f"  agent {row['agent']}: mc={_g(row['mc'])} exact={_g(row['exact'])} "
                f"rel_diff={_g(row['rel_diff_pct'])}%{flag}"
            )
        add(f"  mean relative difference: {_g(compare['mean_rel_diff_pct'])}%")

    sweep = payload.get("sweep")
    if sweep:
        add(
            f"sweep of agent {sweep['agent']} {sweep['param']} over "
            + ", ".join(_g(v) for v in sweep["values"])
        )
        for v, y, se in zip(sweep["values"], sweep["shapley"], sweep["stderr"]):
            add(f"  {sweep['param']}={_g(v)}: value={_g(y)} stderr={_g(se)}")
        add(f"  strictly increasing: {sweep['strictly_increasing']}")

    for note in payload.get("notes", []):
        add(f"note: {note}")
    return "\n".join(lines) + "\n"
