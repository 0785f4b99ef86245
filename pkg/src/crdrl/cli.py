"""Command-line entry point: load a config, run seeds x protocols (x sweep values), write reports.

Precedence, lowest to highest: built-in defaults, the ``--config`` file,
``--seed``/``--seeds``/``--protocol`` flags, then each ``--sweep`` value.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import engine
from .config import KEYS, ConfigInvalid, ParseError, Protocol, ScenarioConfig, UnknownKey, apply_overrides, parse_config
from .metrics import SERIES, compute_kpis


@dataclass
class RunManifest:
    config_path: str | None
    config: ScenarioConfig
    seeds: list[int]
    out_dir: Path
    protocols: list[Protocol]
    emit_trace: bool = False
    sweep_key: str | None = None
    sweep_values: list[str] | None = None
    jobs: int = 1


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_text(event_log) -> str:
    return "".join(json.dumps(ev, allow_nan=False) + "\n" for ev in event_log)


def read_trace(path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def _slug(value: str) -> str:
    return "".join(c if c.isalnum() or c in "-." else "_" for c in value)


def _run_one(cfg: ScenarioConfig, out_dir: Path, emit_trace: bool, tag: str) -> str:
    world = engine.simulate(cfg)
    report = compute_kpis(world.event_log, cfg)
    stem = f"report_{cfg.protocol.value}_{cfg.seed}{tag}"
    write_atomic(out_dir / f"{stem}.json", report.to_json())
    write_atomic(out_dir / f"{stem}.csv", report.csv_row())
    for name in SERIES:
        write_atomic(out_dir / "series" / f"{stem}_{name}.csv", report.series_csv(name))
    if emit_trace:
        write_atomic(out_dir / f"trace_{cfg.protocol.value}_{cfg.seed}{tag}.ndjson", trace_text(world.event_log))

    def fmt(v, spec):
        return "n/a" if v is None else format(v, spec)

    return (f"{cfg.protocol.value} seed={cfg.seed}{tag.replace('_', ' ', 1)} "
            f"pdr={fmt(report.delivery_ratio, '.3f')} delay_s={fmt(report.mean_e2e_delay_s, '.1f')} "
            f"hops={fmt(report.mean_hops, '.2f')} thr_bps={report.throughput_bps:.0f} "
            f"energy={report.mean_residual_energy_frac:.3f} epochs={report.epochs}")


def plan_runs(m: RunManifest) -> list[tuple[ScenarioConfig, str]]:
    runs = []
    sweep = [(None, "")] if m.sweep_key is None else [(v, f"_{m.sweep_key.split('.')[-1]}-{_slug(v)}")
                                                      for v in m.sweep_values]
    for value, tag in sweep:
        base = m.config if value is None else apply_overrides(m.config, {m.sweep_key: value})
        for proto in m.protocols:
            for seed in m.seeds:
                runs.append((base.replace(protocol=proto, seed=seed), tag))
    return runs


def run(m: RunManifest) -> int:
    """Execute every planned run; exit status is 0 only if all complete."""
    runs = plan_runs(m)
    failures = 0
    if m.jobs > 1 and len(runs) > 1:
        with ProcessPoolExecutor(max_workers=m.jobs) as pool:
            futs = [pool.submit(_run_one, cfg, m.out_dir, m.emit_trace, tag) for cfg, tag in runs]
            for (cfg, tag), fut in zip(runs, futs):
                try:
                    print(fut.result(), flush=True)
                except Exception as exc:  # report and keep going
                    failures += 1
                    print(f"run {cfg.protocol.value} seed={cfg.seed}{tag} failed: {exc}", file=sys.stderr)
    else:
        for cfg, tag in runs:
            try:
                print(_run_one(cfg, m.out_dir, m.emit_trace, tag), flush=True)
            except Exception as exc:
                failures += 1
                print(f"run {cfg.protocol.value} seed={cfg.seed}{tag} failed: {exc}", file=sys.stderr)
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crdrl", description="Clustered opportunistic-network routing simulator.")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="single seed (overrides the file)")
    p.add_argument("--seeds", help="comma-separated seeds, e.g. 1,2,3")
    p.add_argument("--protocol", choices=["CRDRL", "SCF_EPIDEMIC", "both"], help="protocol to run")
    p.add_argument("--out", default=os.environ.get("CRDRL_OUT", "out"),
                   help="output directory (default: $CRDRL_OUT or ./out)")
    p.add_argument("--trace", action="store_true", help="also write the event log as NDJSON")
    p.add_argument("--sweep", metavar="KEY=V1,V2,...", help="run once per value of a config key")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
    return p


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    cfg = parse_config(args.config) if args.config else ScenarioConfig()
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    elif args.seed is not None:
        seeds = [args.seed]
    else:
        seeds = [cfg.seed]
    if len(set(seeds)) != len(seeds):
        raise ConfigInvalid("seeds", "seeds must be distinct")
    if args.protocol == "both":
        protocols = [Protocol.CRDRL, Protocol.SCF_EPIDEMIC]
    elif args.protocol:
        protocols = [Protocol(args.protocol)]
    else:
        protocols = [cfg.protocol]
    key = values = None
    if args.sweep:
        key, _, rhs = args.sweep.partition("=")
        key = key.strip()
        if key not in KEYS:
            raise UnknownKey(key)
        # a "|"-separated list allows values that themselves contain commas
        sep = "|" if "|" in rhs else ","
        values = [v.strip() for v in rhs.split(sep) if v.strip()]
        if not values:
            raise ConfigInvalid("sweep", "no values given")
        for v in values:
            apply_overrides(cfg, {key: v})
    if args.jobs < 1:
        raise ConfigInvalid("jobs", "must be >= 1")
    return RunManifest(args.config, cfg, seeds, Path(args.out), protocols, args.trace, key, values, args.jobs)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = manifest_from_args(args)
    except FileNotFoundError as exc:
        print(f"error: config file not found: {exc.filename or exc}", file=sys.stderr)
        return 2
    except (ConfigInvalid, ParseError, UnknownKey, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
