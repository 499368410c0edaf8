"""Closed-loop run of a bundled scenario with a per-event trace.

Usage:
    python3 demos/closed_loop.py [scenario.json] [seed]

Defaults to scenarios/s_open_field.json with seed 0.
"""

import sys
from collections import Counter

from skychase import load_scenario, run


def main(argv=None):
    args = sys.argv[1:] if argv is None else argv
    path = args[0] if args else "scenarios/s_open_field.json"
    seed = int(args[1]) if len(args) > 1 else 0

    sc = load_scenario(path)
    print(
        f"{sc.name}: {sc.duration:.0f} s, {len(sc.obstacles)} obstacles, "
        f"{sc.chaser.n_skeletons ** sc.chaser.n_steps} chase candidates per replan, "
        f"seed {seed}"
    )

    report = run(sc, seed=seed)
    m = report.metrics

    print(f"final mode               {report.final_mode}")
    print(f"safe ratio               {m.safe_ratio:.3f}")
    print(f"visible ratio            {m.visible_ratio:.3f}")
    print(f"distance tracking ratio  {m.distance_tracking_ratio:.3f}")
    print(f"path length ratio        {m.path_length_ratio:.3f}")
    print(f"accel cost               {m.accel_cost:.3f}")
    print(f"replans                  {m.replan_count}  (median {m.replan_ms_median:.1f} ms)")

    causes = Counter(r.cause for r in report.replans)
    print("replan causes            " + ", ".join(f"{c}={n}" for c, n in causes.most_common()))

    interesting = [ev for ev in report.events if ev.kind != "sense"]
    print(f"events ({len(interesting)} shown, sensing omitted):")
    for ev in interesting[:20]:
        print(f"  t={ev.time:6.2f}  {ev.kind:9s} {ev.cause:16s} {ev.detail}")
    if len(interesting) > 20:
        print(f"  ... {len(interesting) - 20} more")

    return 0 if report.final_mode == "plan" else 2


if __name__ == "__main__":
    raise SystemExit(main())
