"""Headless experiment runner.

`run` executes one simulation and writes its report; `sweep` runs a
scheduler x arrival-rate grid over a shared base workload and additionally
writes one combined CSV row per grid cell. Identical invocations produce
byte-identical files.

Exit codes: 0 success, 2 invalid flags, 3 input validation failure,
1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

from . import engine, metrics, policies, workload
from .model import MachineSpec, PowerProfile, SimulationConfig, SimulatorError
from .workload import TraceRow, ValidationFailed, WorkloadSpec


class UsageError(Exception):
    """Bad flag combination or grammar; maps to exit code 2."""


SWEEP_HEADER = (
    "scheduler", "rate", "arrived", "completed", "missed", "cancelled",
    "miss_rate", "makespan", "total_energy_j",
)

# --config file key that each flag duplicates; giving both is an error
_CONFIG_KEYS = {
    "machines": "machines",
    "scheduler": "scheduler_policy",
    "queue_size": "machine_queue_size",
    "cancel": "cancellation_enabled",
    "seed": "seed",
    "until": "until",
    "power": "power_profiles",
}


def _parse_machines(spec: str) -> tuple[MachineSpec, ...]:
    """Comma-separated machines: `id=type` or bare `type` (id becomes m<i>)."""
    out = []
    for i, entry in enumerate(s.strip() for s in spec.split(",")):
        if not entry:
            raise UsageError(f"--machines: empty entry at position {i}")
        if "=" in entry:
            mid, _, mtype = entry.partition("=")
            mid, mtype = mid.strip(), mtype.strip()
        else:
            mid, mtype = f"m{i}", entry
        if not mid or not mtype:
            raise UsageError(f"--machines: bad entry {entry!r}")
        out.append(MachineSpec(mid, mtype))
    return tuple(out)


def _parse_power(spec: str) -> dict[str, PowerProfile]:
    """Comma-separated `machine_type=idle:busy` watt pairs."""
    out: dict[str, PowerProfile] = {}
    for entry in (s.strip() for s in spec.split(",")):
        if not entry:
            continue
        mtype, sep, watts = entry.partition("=")
        idle, sep2, busy = watts.partition(":")
        if not sep or not sep2:
            raise UsageError(f"--power: bad entry {entry!r}, want type=idle:busy")
        try:
            out[mtype.strip()] = PowerProfile(float(idle), float(busy))
        except ValueError as exc:
            raise UsageError(f"--power: {exc}") from exc
    return out


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eet", help="EET matrix CSV (rows task types, columns machine types)")
    p.add_argument("--trace", help="task trace CSV")
    p.add_argument("--generate", help="workload spec JSON; synthesizes the trace")
    p.add_argument("--machines", help="comma list of id=type or bare type")
    p.add_argument("--scheduler", help="policy name (case-insensitive)")
    p.add_argument("--queue-size", type=int, help="per-machine local queue slots")
    p.add_argument("--cancel", action="store_true", default=None,
                   help="cancel tasks that cannot meet their deadline anywhere")
    p.add_argument("--seed", type=int, help="workload generator seed (default 0)")
    p.add_argument("--until", type=float, help="stop clock: no event beyond this time")
    p.add_argument("--power", help="comma list of machine_type=idle:busy watts")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("json", "csv", "both"), default="json")
    p.add_argument("--config", help="JSON file with the simulation config; "
                                    "flags repeating a file key are an error")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetsim",
        description="Discrete-event simulator for deadline-constrained "
                    "heterogeneous computing systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="one simulation, one report")
    _add_common_flags(run_p)
    sweep_p = sub.add_parser("sweep", help="scheduler x rate grid, combined CSV")
    _add_common_flags(sweep_p)
    sweep_p.add_argument("--sweep-schedulers", help="comma list of policy names")
    sweep_p.add_argument("--sweep-rates", help="comma list of Poisson rates")
    return parser


def _load_config(args: argparse.Namespace,
                 fallback_scheduler: str | None = None) -> SimulationConfig:
    file_data: dict = {}
    if args.config:
        file_data = json.loads(Path(args.config).read_text("utf-8"))
        for flag, key in _CONFIG_KEYS.items():
            if key in file_data and getattr(args, flag) is not None:
                raise UsageError(
                    f"--{flag.replace('_', '-')} conflicts with config key {key!r}; "
                    "give each setting once"
                )
    machines = file_data.get("machines")
    if args.machines is not None:
        machines = [{"id": m.id, "type": m.type_id} for m in _parse_machines(args.machines)]
    scheduler = file_data.get("scheduler_policy") if args.scheduler is None else args.scheduler
    if not scheduler:
        scheduler = fallback_scheduler
    if not scheduler:
        raise UsageError("--scheduler (or config scheduler_policy) is required")
    power = file_data.get("power_profiles") or {}
    if args.power is not None:
        power = {
            t: {"idle_watts": p.idle_watts, "busy_watts": p.busy_watts}
            for t, p in _parse_power(args.power).items()
        }
    try:
        return SimulationConfig.from_dict({
            "machines": machines or [],
            "scheduler_policy": scheduler,
            "machine_queue_size": (
                file_data.get("machine_queue_size") if args.queue_size is None
                else args.queue_size
            ),
            "cancellation_enabled": (
                file_data.get("cancellation_enabled", False) if args.cancel is None
                else args.cancel
            ),
            "seed": file_data.get("seed", 0) if args.seed is None else args.seed,
            "until": file_data.get("until") if args.until is None else args.until,
            "power_profiles": power,
        })
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _check_policy(name: str, queue_size: int | None) -> None:
    entry = policies.get_policy(name)  # raises UnknownPolicy
    if entry.descriptor.requires_queue_size and queue_size is None:
        raise policies.MissingQueueSize(
            f"MissingQueueSize: batch policy {name!r} requires --queue-size"
        )


def _load_inputs(args: argparse.Namespace, config: SimulationConfig):
    """Returns (eet, trace, workload_spec|None)."""
    if args.eet is None:
        raise UsageError("--eet is required")
    if (args.trace is None) == (args.generate is None):
        raise UsageError("give exactly one of --trace or --generate")
    eet = workload.parse_eet_csv(Path(args.eet).read_bytes())
    if args.trace is not None:
        return eet, workload.parse_trace_csv(Path(args.trace).read_bytes()), None
    spec = WorkloadSpec.from_dict(json.loads(Path(args.generate).read_text("utf-8")))
    return eet, workload.generate_workload(spec, eet, config.seed), spec


def _fnum(x: float) -> str:
    """Shortest exact decimal; integers lose the trailing .0 for readability."""
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _write_report(report: metrics.SimulationReport, out_dir: Path, fmt: str,
                  stem: str = "report") -> None:
    if fmt in ("json", "both"):
        (out_dir / f"{stem}.json").write_bytes(metrics.export_json(report))
    if fmt in ("csv", "both"):
        (out_dir / f"{stem}.csv").write_bytes(metrics.export_csv(report))


def _summary_line(report: metrics.SimulationReport) -> str:
    t = report.totals
    return (f"completed={t['completed']} missed={t['missed']} "
            f"cancelled={t['cancelled']} makespan={_fnum(report.makespan)}")


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    _check_policy(config.scheduler_policy, config.machine_queue_size)
    eet, trace, spec = _load_inputs(args, config)
    state = engine.init(config, eet, trace)
    report = state.run()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if spec is not None:
        (out_dir / "trace.csv").write_bytes(workload.serialize_trace_csv(trace))
    _write_report(report, out_dir, args.format)
    print(_summary_line(report))
    return 0


def _slug(rate: float) -> str:
    return _fnum(rate).replace(".", "p").replace("-", "neg")


def _cmd_sweep(args: argparse.Namespace) -> int:
    swept = []
    if args.sweep_schedulers:
        swept = [s.strip().lower() for s in args.sweep_schedulers.split(",") if s.strip()]
        if not swept:
            raise UsageError("--sweep-schedulers is empty")
    config = _load_config(args, fallback_scheduler=swept[0] if swept else None)
    schedulers = swept or [config.scheduler_policy]
    for name in schedulers:
        _check_policy(name, config.machine_queue_size)

    rates: list[float | None] = [None]
    if args.sweep_rates:
        try:
            rates = [float(r) for r in args.sweep_rates.split(",") if r.strip()]
        except ValueError as exc:
            raise UsageError(f"--sweep-rates: {exc}") from exc
        if not rates:
            raise UsageError("--sweep-rates is empty")
        if args.generate is None:
            raise UsageError("--sweep-rates needs --generate (a Poisson workload spec)")

    eet, base_trace, spec = _load_inputs(args, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    # one base trace per rate, shared by every scheduler at that rate
    traces: dict[float | None, list[TraceRow]] = {}
    for rate in rates:
        if rate is None:
            traces[rate] = list(base_trace)
        else:
            traces[rate] = workload.generate_workload(spec.with_rate(rate), eet, config.seed)
            (out_dir / f"trace_rate_{_slug(rate)}.csv").write_bytes(
                workload.serialize_trace_csv(traces[rate])
            )

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for name in schedulers:
        for rate in rates:
            cell_config = SimulationConfig.from_dict(
                {**config.to_dict(), "scheduler_policy": name}
            )
            report = engine.init(cell_config, eet, traces[rate]).run()
            stem = f"report_{name}" if rate is None else f"report_{name}_rate_{_slug(rate)}"
            _write_report(report, out_dir, args.format, stem=stem)
            t = report.totals
            total_energy = sum(row["energy_joules"] for row in report.per_machine)
            writer.writerow([
                name,
                "" if rate is None else _fnum(rate),
                t["arrived"], t["completed"], t["missed"], t["cancelled"],
                _fnum(round(report.miss_rate, 9)),
                _fnum(round(report.makespan, 9)),
                _fnum(round(total_energy, 9)),
            ])
            print(f"{name}" + ("" if rate is None else f" rate={_fnum(rate)}")
                  + " " + _summary_line(report))
    (out_dir / "sweep.csv").write_bytes(buf.getvalue().encode("utf-8"))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_sweep(args)
    except (UsageError, policies.UnknownPolicy, policies.MissingQueueSize) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationFailed as exc:
        for issue in exc.issues:
            print(f"validation: {issue}", file=sys.stderr)
        return 3
    except (SimulatorError, OSError, json.JSONDecodeError) as exc:
        print(f"validation: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
