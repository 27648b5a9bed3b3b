"""Experiment front-end.

Three commands, each driven by one YAML config:

* ``run``           attribution per configured exclusion mode, social
                    metrics, catch statistics and mode-gap tables
* ``compare-exact`` Monte Carlo estimate next to the full-enumeration
                    one, with per-agent relative differences
* ``sweep-skill``   re-run attribution while varying one agent's skill
                    or speed parameter over a list of values

Every command writes the same report bundle layout (see
:mod:`coopshap.reporting`). Exit status is 0 on success; failures abort
with a stage-tagged message and leave an ``INCOMPLETE`` marker in the
output directory.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .attribution import AttributionReport, run_exact_attribution, run_mc_attribution, simulate_traces
from .config import ExperimentConfig, load_config
from .errors import CoopShapError
from .metrics import efficiency, equality, per_agent_metrics, sustainability
from .policies import PolicySpec
from .reporting import ReportBundle, emit_report


class StageError(CoopShapError):
    def __init__(self, stage: str, error: Exception):
        super().__init__(f"[{stage}] {error}")
        self.stage = stage
        self.error = error


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _nan_to_none(values) -> list:
    return [None if np.isnan(v) else float(v) for v in values]


def attribution_payload(report: AttributionReport) -> dict:
    est = report.estimate
    return {
        "method": est.method.value,
        "values": [float(v) for v in est.values],
        "stderr": [float(v) for v in est.stderr],
        "samples_per_player": [int(v) for v in est.samples_per_player],
        "num_draws": est.num_draws,
        "scope": list(report.scope),
        "exclusion": report.exclusion.value if report.exclusion else None,
        "grand_mean": report.grand_mean,
        "baseline_mean": report.baseline_mean,
        "grand_mean_episodes": report.grand_mean_episodes,
        "rollout_count": report.rollout_count,
    }


def _metrics_payload(traces) -> dict:
    eff = efficiency(traces)
    eq = equality(traces)
    su = sustainability(traces)
    pa = per_agent_metrics(traces)
    notes = []
    if eq.excluded_episodes:
        notes.append(
            f"equality: {eq.excluded_episodes} episode(s) excluded (zero total reward)"
        )
    if eq.value is None:
        notes.append("equality skipped: every episode had zero total reward")
    if su.excluded_episodes:
        notes.append(
            f"sustainability: {su.excluded_episodes} episode(s) excluded "
            "(no positive rewards)"
        )
    if su.excluded_agent_terms:
        notes.append(
            f"sustainability: {su.excluded_agent_terms} agent term(s) dropped "
            "(agent never collected positive reward)"
        )
    if su.value is None:
        notes.append("sustainability skipped: no positive rewards in any episode")
    return {
        "episodes": len(traces),
        "efficiency": eff,
        "equality": {"value": eq.value, "excluded_episodes": eq.excluded_episodes},
        "sustainability": {
            "value": su.value,
            "excluded_episodes": su.excluded_episodes,
            "excluded_agent_terms": su.excluded_agent_terms,
        },
        "per_agent": {
            "efficiency": [float(v) for v in pa.efficiency],
            "sustainability": _nan_to_none(pa.sustainability),
            "equality": _nan_to_none(pa.equality),
        },
        "notes": notes,
    }


def _ranking(values, scope) -> list[int]:
    order = np.argsort(-np.asarray(values), kind="stable")
    return [int(scope[i]) for i in order]


def run_experiment(config: ExperimentConfig) -> ReportBundle:
    """Attribution per exclusion mode plus social metrics."""
    settings = config.attribution
    payload: dict = {"kind": "run", "config": config.canonical()}
    payload["agents"] = payload["config"]["agents"]
    bundle = ReportBundle(kind="run", payload=payload)

    payload["attribution"] = {}
    reports: dict[str, AttributionReport] = {}
    for mode in settings.exclusion_modes:
        t0 = time.perf_counter()
        report = _stage(
            f"attribution:{mode.value}",
            run_mc_attribution,
            config.rollout_game(mode),
            M=settings.M,
            seed=config.seed,
            workers=config.workers,
            grand_episodes=settings.grand_episodes,
        )
        bundle.timings[f"attribution:{mode.value}"] = time.perf_counter() - t0
        reports[mode.value] = report
        payload["attribution"][mode.value] = attribution_payload(report)
        if report.marginals is not None:
            bundle.marginals[mode.value] = report.marginals

    t0 = time.perf_counter()
    traces, trace_info = _stage(
        "metrics",
        simulate_traces,
        config.env_config,
        config.roster,
        config.metrics_episodes,
        seed=config.seed,
    )
    payload["metrics"] = _stage("metrics", _metrics_payload, traces)
    bundle.timings["metrics"] = time.perf_counter() - t0

    series = []
    for mode_name in sorted(payload["attribution"]):
        att = payload["attribution"][mode_name]
        series.append(
            {
                "name": f"shapley_{mode_name}",
                "columns": ["agent", "value", "stderr"],
                "data": {
                    "agent": att["scope"],
                    "value": att["values"],
                    "stderr": att["stderr"],
                },
            }
        )

    if "catches" in trace_info:
        mean_catches = trace_info["catches"].mean(axis=0)
        payload["catch_stats"] = {
            "episodes": config.metrics_episodes,
            "mean_catches": [float(v) for v in mean_catches],
        }
        series.append(
            {
                "name": "catches",
                "columns": ["agent", "mean_catches"],
                "data": {
                    "agent": list(range(len(mean_catches))),
                    "mean_catches": [float(v) for v in mean_catches],
                },
            }
        )
        first_mode = settings.exclusion_modes[0].value
        att = payload["attribution"][first_mode]
        shap_ranking = _ranking(att["values"], att["scope"])
        catch_ranking = _ranking(
            [mean_catches[i] for i in att["scope"]], att["scope"]
        )
        payload["ordering"] = {
            "mode": first_mode,
            "shapley_ranking": shap_ranking,
            "catch_ranking": catch_ranking,
            "match": shap_ranking == catch_ranking,
        }

    if len(settings.exclusion_modes) > 1:
        gaps = {}
        modes = [m.value for m in settings.exclusion_modes]
        for i in range(len(modes)):
            for j in range(i + 1, len(modes)):
                a = np.asarray(payload["attribution"][modes[i]]["values"])
                b = np.asarray(payload["attribution"][modes[j]]["values"])
                gaps[f"{modes[i]}_vs_{modes[j]}"] = {
                    "mean_signed_gap": float((a - b).mean()),
                    "mean_abs_gap": float(np.abs(a - b).mean()),
                }
        payload["mode_gaps"] = gaps

    payload["series"] = series
    return bundle


NEAR_ZERO_FRACTION = 0.01


def compare_exact_experiment(config: ExperimentConfig) -> ReportBundle:
    """Monte Carlo vs full enumeration on the first exclusion mode."""
    settings = config.attribution
    mode = settings.exclusion_modes[0]
    payload: dict = {"kind": "compare_exact", "config": config.canonical()}
    payload["agents"] = payload["config"]["agents"]
    bundle = ReportBundle(kind="compare_exact", payload=payload)

    game = config.rollout_game(mode)
    t0 = time.perf_counter()
    mc = _stage(
        "attribution:mc",
        run_mc_attribution,
        game,
        M=settings.M,
        seed=config.seed,
        workers=config.workers,
        grand_episodes=settings.grand_episodes,
    )
    bundle.timings["attribution:mc"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    exact = _stage(
        "attribution:exact",
        run_exact_attribution,
        game,
        samples_per_coalition=settings.samples_per_coalition,
        seed=config.seed,
        workers=config.workers,
    )
    bundle.timings["attribution:exact"] = time.perf_counter() - t0

    payload["attribution"] = {
        f"{mode.value}_mc": attribution_payload(mc),
        f"{mode.value}_exact": attribution_payload(exact),
    }
    if mc.marginals is not None:
        bundle.marginals[mode.value] = mc.marginals

    exact_values = exact.estimate.values
    scale = float(np.max(np.abs(exact_values))) if len(exact_values) else 0.0
    floor = NEAR_ZERO_FRACTION * scale
    rows = []
    rel_diffs = []
    for pos, agent_idx in enumerate(game.scope):
        mc_v = float(mc.estimate.values[pos])
        ex_v = float(exact_values[pos])
        near_zero = abs(ex_v) < floor or scale == 0.0
        rows.append(
            {
                "agent": int(agent_idx),
                "mc": mc_v,
                "exact": ex_v,
                "abs_diff": abs(mc_v - ex_v),
                "rel_diff_pct": (abs(mc_v - ex_v) / abs(ex_v) * 100.0)
                if ex_v != 0.0
                else None,
                "near_zero": bool(near_zero),
                "mc_stderr": float(mc.estimate.stderr[pos]),
            }
        )
        if not near_zero:
            rel_diffs.append(rows[-1]["rel_diff_pct"])
    payload["comparison"] = {
        "per_agent": rows,
        "mean_rel_diff_pct": float(np.mean(rel_diffs)) if rel_diffs else None,
        "near_zero_floor": floor,
    }
    payload["series"] = [
        {
            "name": "mc_vs_exact",
            "columns": ["agent", "mc", "exact", "mc_stderr"],
            "data": {
                "agent": [r["agent"] for r in rows],
                "mc": [r["mc"] for r in rows],
                "exact": [r["exact"] for r in rows],
                "mc_stderr": [r["mc_stderr"] for r in rows],
            },
        }
    ]
    return bundle


def sweep_experiment(
    config: ExperimentConfig, agent: int, param: str, values
) -> ReportBundle:
    """Attribution across a sweep of one agent's skill or speed."""
    if param not in ("speed", "skill"):
        raise StageError("sweep", ValueError(f"cannot sweep parameter {param!r}"))
    if agent not in config.scope:
        raise StageError(
            "sweep", ValueError(f"agent {agent} is not in the attribution scope")
        )
    values = [float(v) for v in values]
    if len(values) < 2:
        raise StageError("sweep", ValueError("need at least two sweep values"))

    mode = config.attribution.exclusion_modes[0]
    payload: dict = {"kind": "sweep", "config": config.canonical()}
    payload["agents"] = payload["config"]["agents"]
    bundle = ReportBundle(kind="sweep", payload=payload)

    swept_values = []
    swept_stderr = []
    runs = []
    for v in values:
        base_spec = config.agents[agent].spec
        spec = PolicySpec(
            kind=base_spec.kind,
            skill=v if param == "skill" else base_spec.skill,
            speed=v if param == "speed" else base_spec.speed,
        )
        point_config = config.with_agent(agent, spec)
        t0 = time.perf_counter()
        report = _stage(
            f"sweep:{param}={v:g}",
            run_mc_attribution,
            point_config.rollout_game(mode),
            M=config.attribution.M,
            seed=config.seed,
            workers=config.workers,
            grand_episodes=config.attribution.grand_episodes,
        )
        bundle.timings[f"sweep:{param}={v:g}"] = time.perf_counter() - t0
        pos = report.scope.index(agent)
        swept_values.append(float(report.estimate.values[pos]))
        swept_stderr.append(float(report.estimate.stderr[pos]))
        runs.append(attribution_payload(report))

    payload["sweep"] = {
        "agent": agent,
        "param": param,
        "mode": mode.value,
        "values": values,
        "shapley": swept_values,
        "stderr": swept_stderr,
        "strictly_increasing": all(
            a < b for a, b in zip(swept_values, swept_values[1:])
        ),
        "runs": runs,
    }
    payload["series"] = [
        {
            "name": f"sweep_{param}_agent{agent}",
            "columns": [param, "value", "stderr"],
            "data": {param: values, "value": swept_values, "stderr": swept_stderr},
        }
    ]
    return bundle


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopshap",
        description="Shapley-value contribution analysis for multi-agent simulations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="path to the experiment YAML config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--workers", type=int, default=None, help="override the worker count"
        )
        p.add_argument("--out", default=None, help="output directory for the report")

    p_run = sub.add_parser("run", help="attribution plus social metrics")
    common(p_run)

    p_cmp = sub.add_parser(
        "compare-exact", help="Monte Carlo estimate vs full enumeration"
    )
    common(p_cmp)

    p_sweep = sub.add_parser(
        "sweep-skill", help="sweep one agent's skill or speed parameter"
    )
    common(p_sweep)
    p_sweep.add_argument("--agent", type=int, required=True, help="agent index to vary")
    p_sweep.add_argument(
        "--param", choices=("skill", "speed"), default="skill", help="parameter to vary"
    )
    p_sweep.add_argument(
        "--values", type=float, nargs="+", required=True, help="sweep values"
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out_dir: Path | None = None
    try:
        config = _stage("config", load_config, args.config)
        if args.seed is not None:
            config = config.replace(seed=args.seed)
        if args.workers is not None:
            config = config.replace(workers=args.workers)
        out_dir = Path(
            args.out
            or config.output_dir
            or Path("out") / Path(args.config).stem
        )

        if args.command == "run":
            bundle = run_experiment(config)
        elif args.command == "compare-exact":
            bundle = compare_exact_experiment(config)
        else:
            bundle = sweep_experiment(config, args.agent, args.param, args.values)

        written = _stage("report", emit_report, bundle, out_dir)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        if out_dir is not None and out_dir.exists():
            (out_dir / "INCOMPLETE").write_text(f"{exc}\n")
        return 1

    for path in written:
        print(f"wrote {path}")
    for stage_name, seconds in bundle.timings.items():
        print(f"time {stage_name}: {seconds:.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
