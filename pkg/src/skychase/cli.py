"""Command-line front end: run one scenario or benchmark a suite directory.

``skychase run <file> --out <dir> [--seed N]`` executes a single scenario and
writes timeline.csv, metrics.json, events.csv, and timing.json. Every value
in metrics.json is deterministic for a fixed seed; wall-clock numbers live in
timing.json so reruns stay byte-identical.

``skychase bench <dir> --out <dir> [--seed N] [--parallel N]`` runs every
scenario file in a directory and writes one bench.csv row per scenario. Each
scenario gets a seed derived from the base seed and its name, so rows do not
depend on suite composition or execution order.

Set CHASE_LOG=DEBUG (or any logging level name) for diagnostics on stderr.
Exit codes: 0 success, 1 input error, 2 when the run ends still in fallback,
unable to certify a plan.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from pathlib import Path

from .errors import ScenarioInvalid
from .simulation import SimReport, run
from .scenario_io import load_scenario

BENCH_COLUMNS = (
    "name",
    "status",
    "safe_ratio",
    "visible_ratio",
    "accel_cost",
    "distance_tracking_ratio",
    "path_length_ratio",
    "replan_count",
    "replan_ms_mean",
    "replan_ms_median",
    "replan_ms_max",
    "candidates_per_replan",
)


def _json_value(x):
    # strict JSON has no Infinity/NaN literal
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _metrics_payload(report: SimReport, seed: int) -> dict:
    m = report.metrics
    return {
        "scenario": report.scenario_name,
        "seed": seed,
        "safe_ratio": m.safe_ratio,
        "visible_ratio": m.visible_ratio,
        "accel_cost": m.accel_cost,
        "distance_tracking_ratio": m.distance_tracking_ratio,
        "path_length_ratio": _json_value(m.path_length_ratio),
        "replan_count": m.replan_count,
        "fallback_count": sum(1 for e in report.events if e.kind == "fallback"),
        "final_mode": report.final_mode,
        "candidates_per_replan": report.candidates_per_replan,
    }


def _write_timeline(report: SimReport, path: Path) -> None:
    tl = report.timeline
    header = (
        ["t", "chaser_x", "chaser_y", "chaser_z", "target_x", "target_y", "target_z"]
        + [f"clearance_{label}" for label in tl.obstacle_labels]
        + ["yaw"]
    )
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(len(tl)):
            row = (
                [tl.times[k]]
                + list(tl.chaser_pos[k])
                + list(tl.target_pos[k])
                + list(tl.visibility_clearance[k])
                + [tl.yaw[k]]
            )
            writer.writerow([float(v) for v in row])


def _write_events(report: SimReport, path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "kind", "cause", "detail"])
        for e in report.events:
            writer.writerow([float(e.time), e.kind, e.cause, e.detail])


def _write_timing(report: SimReport, path: Path) -> None:
    m = report.metrics
    payload = {
        "replan_ms": [r.total_ms for r in report.replans],
        "predict_ms": [r.predict_ms for r in report.replans],
        "plan_ms": [r.plan_ms for r in report.replans],
        "replan_ms_mean": m.replan_ms_mean,
        "replan_ms_median": m.replan_ms_median,
        "replan_ms_max": m.replan_ms_max,
    }
    path.write_text(json.dumps(payload, indent=2) + "\n")


def cmd_run(scenario_path: str, out_dir: str, seed: int) -> int:
    try:
        scenario = load_scenario(scenario_path)
    except ScenarioInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = run(scenario, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_timeline(report, out / "timeline.csv")
    (out / "metrics.json").write_text(
        json.dumps(_metrics_payload(report, seed), indent=2, sort_keys=True) + "\n"
    )
    _write_events(report, out / "events.csv")
    _write_timing(report, out / "timing.json")
    m = report.metrics
    print(
        f"{report.scenario_name}: safe={m.safe_ratio:.3f} visible={m.visible_ratio:.3f} "
        f"replans={m.replan_count} median_ms={m.replan_ms_median:.1f} -> {out}"
    )
    if report.final_mode == "fallback":
        print("error: run ended in fallback without a certified plan", file=sys.stderr)
        return 2
    return 0


def _scenario_seed(base_seed: int, name: str) -> int:
    """Stable per-scenario seed, independent of suite order and size."""
    return (base_seed * 1_000_003 + zlib.crc32(name.encode())) % 2**63


def _bench_row(scenario_path: str, base_seed: int) -> dict:
    """One scenario end to end; failures become a marked row, not a crash."""
    name = Path(scenario_path).stem
    try:
        scenario = load_scenario(scenario_path)
        name = scenario.name
        report = run(scenario, seed=_scenario_seed(base_seed, scenario.name))
    except Exception as exc:
        log = logging.getLogger(__name__)
        log.warning("bench scenario %s failed: %s", name, exc)
        row = {col: "" for col in BENCH_COLUMNS}
        row["name"] = name
        row["status"] = f"failed: {exc}"
        return row
    m = report.metrics
    return {
        "name": report.scenario_name,
        "status": report.final_mode if report.final_mode != "plan" else "ok",
        "safe_ratio": m.safe_ratio,
        "visible_ratio": m.visible_ratio,
        "accel_cost": m.accel_cost,
        "distance_tracking_ratio": m.distance_tracking_ratio,
        "path_length_ratio": m.path_length_ratio,
        "replan_count": m.replan_count,
        "replan_ms_mean": m.replan_ms_mean,
        "replan_ms_median": m.replan_ms_median,
        "replan_ms_max": m.replan_ms_max,
        "candidates_per_replan": report.candidates_per_replan,
    }


def cmd_bench(suite_dir: str, out_dir: str, seed: int, parallel: int) -> int:
    suite = Path(suite_dir)
    paths = sorted(str(p) for p in suite.glob("*.json"))
    if not paths:
        print(f"error: no scenario files in {suite}", file=sys.stderr)
        return 1
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            rows = list(pool.map(_bench_row, paths, repeat(seed)))
    else:
        rows = [_bench_row(p, seed) for p in paths]
    rows.sort(key=lambda r: r["name"])

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "bench.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    for row in rows:
        print(
            f"{row['name']}: {row['status']}"
            + (
                f" safe={row['safe_ratio']} visible={row['visible_ratio']}"
                f" median_ms={row['replan_ms_median']:.1f}"
                if row["status"] in ("ok", "fallback")
                else ""
            )
        )
    failed = [r for r in rows if str(r["status"]).startswith("failed")]
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="skychase",
        description="Chase a moving target among ellipsoidal obstacles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario file")
    p_run.add_argument("scenario", help="scenario JSON file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=_seed_value, default=0)

    p_bench = sub.add_parser("bench", help="run every scenario in a directory")
    p_bench.add_argument("suite", help="directory of scenario JSON files")
    p_bench.add_argument("--out", required=True, help="output directory")
    p_bench.add_argument("--seed", type=_seed_value, default=0)
    p_bench.add_argument("--parallel", type=int, default=1, metavar="N",
                         help="run up to N scenarios concurrently")

    args = parser.parse_args(argv)
    level = os.environ.get("CHASE_LOG")
    if level:
        logging.basicConfig(
            level=getattr(logging, level.upper(), logging.INFO),
            format="%(levelname)s %(name)s: %(message)s",
        )
    if args.command == "run":
        return cmd_run(args.scenario, args.out, args.seed)
    return cmd_bench(args.suite, args.out, args.seed, args.parallel)


def _seed_value(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


if __name__ == "__main__":
    sys.exit(main())
