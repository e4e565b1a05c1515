#!/usr/bin/env python3
"""Compare every built-in scheduling policy over a sweep of arrival rates.

Generates one Poisson workload per rate (shared across policies, so rows are
directly comparable), runs each policy on it, and prints a table of miss
rate, cancel rate, makespan and total energy. Optionally writes the same
rows to a CSV.

Example:
    python3 scripts/compare_policies.py --rates 0.5,1.0,1.5 --count 2000 \\
        --seed 7 --csv sweep.csv
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hetsim import (  # noqa: E402
    MachineSpec,
    Poisson,
    PowerProfile,
    SimulationConfig,
    WorkloadSpec,
    generate_workload,
    init,
    parse_eet_csv,
    registered_policies,
)

DEFAULT_EET = "task_type,quick,steady\nA,2,3\nB,4,8\n"
DEFAULT_POWER = {"quick": PowerProfile(3.0, 11.0), "steady": PowerProfile(2.0, 7.0)}

HEADER = ("policy", "rate", "completed", "missed", "cancelled",
          "miss_rate", "cancel_rate", "makespan", "energy_j")


def parse_args(argv=None) -> argparse.Namespace:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--eet", type=Path, help="EET matrix CSV (default: built-in 2x2)")
    p.add_argument("--machines", type=int, default=4,
                   help="machine count, types assigned round-robin (default 4)")
    p.add_argument("--count", type=int, default=1000, help="tasks per workload")
    p.add_argument("--rates", default="0.6,0.9,1.2,1.5",
                   help="comma list of Poisson arrival rates")
    p.add_argument("--deadline-factor", type=float, default=3.0)
    p.add_argument("--queue-size", type=int, default=2)
    p.add_argument("--no-cancel", action="store_true",
                   help="disable cancellation of hopeless tasks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", type=Path, help="also write rows to this CSV file")
    return p.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    eet = parse_eet_csv(args.eet.read_bytes() if args.eet else DEFAULT_EET)
    mtypes = eet.machine_types
    machines = tuple(
        MachineSpec(f"m{i}", mtypes[i % len(mtypes)]) for i in range(args.machines)
    )
    power = DEFAULT_POWER if args.eet is None else {}
    rates = [float(r) for r in args.rates.split(",") if r.strip()]
    type_mix = {t: 1.0 / len(eet.task_types) for t in eet.task_types}

    rows = []
    for rate in rates:
        spec = WorkloadSpec(count=args.count, arrival=Poisson(rate),
                            type_mix=type_mix,
                            deadline_factor=args.deadline_factor)
        trace = generate_workload(spec, eet, args.seed)
        for policy in registered_policies():
            config = SimulationConfig(
                machines=machines,
                scheduler_policy=policy,
                machine_queue_size=args.queue_size,
                cancellation_enabled=not args.no_cancel,
                seed=args.seed,
                power_profiles=power,
            )
            report = init(config, eet, trace).run()
            t = report.totals
            energy = sum(m["energy_joules"] for m in report.per_machine)
            rows.append((policy, rate, t["completed"], t["missed"], t["cancelled"],
                         round(report.miss_rate, 4), round(report.cancel_rate, 4),
                         round(report.makespan, 2), round(energy, 1)))

    widths = [max(len(str(v)) for v in [h] + [r[i] for r in rows])
              for i, h in enumerate(HEADER)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    print(fmt.format(*HEADER))
    for row in rows:
        print(fmt.format(*row))

    if args.csv:
        with args.csv.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(HEADER)
            writer.writerows(rows)
        print(f"\nwrote {args.csv}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
