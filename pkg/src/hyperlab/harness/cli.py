"""Command line: ``hyperlab run <experiment>`` and ``hyperlab report <verdicts.json>``.

Exit codes: 0 all verdicts pass, 1 some claim fails, 2 usage or configuration
error, 3 numerical failure inside an experiment.
"""
from __future__ import annotations

import argparse
import json
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .claims import CLAIMS, EXPERIMENT_CLAIMS
from .config import ConfigError, config_hash, load_config
from .experiments import EXPERIMENTS, ExperimentOutput, experiment_rng, table_bytes

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
VERDICTS_FILE = "verdicts.json"


class NumericalFailure(RuntimeError):
    def __init__(self, experiment: str, claim: str, detail: str):
        self.experiment, self.claim, self.detail = experiment, claim, detail
        super().__init__(f"{claim}: {detail}")


def run_experiment(name: str, cfg: dict) -> ExperimentOutput:
    """Run one experiment; any arithmetic or solver error becomes a NumericalFailure."""
    try:
        return EXPERIMENTS[name](cfg, experiment_rng(cfg, name))
    except Exception as exc:  # noqa: BLE001 - reported with the claim id
        detail = "".join(traceback.format_exception_only(type(exc), exc)).strip()
        raise NumericalFailure(name, EXPERIMENT_CLAIMS[name][0], detail) from exc


def _select(experiment: str, claims: str | None) -> tuple:
    names = list(EXPERIMENTS) if experiment == "all" else [experiment]
    if not claims:
        return names, None
    wanted = [c.strip() for c in claims.split(",") if c.strip()]
    unknown = [c for c in wanted if c not in CLAIMS]
    if unknown:
        raise ConfigError([f"unknown claim id: {c}" for c in unknown])
    names = [n for n in names if any(c in EXPERIMENT_CLAIMS[n] for c in wanted)]
    if not names:
        raise ConfigError(["no selected experiment produces the requested claims"])
    return names, set(wanted)


def write_outputs(out_dir: Path, cfg: dict, names: list, outputs: dict, wanted) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for name in names:
        for table in outputs[name].tables:
            (out_dir / f"{table.name}.csv").write_bytes(table_bytes(table))
        records += [r.to_dict() for r in outputs[name].records if wanted is None or r.claim in wanted]
    summary = {
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "experiments": names,
        "passed": all(r["passed"] for r in records),
        "verdicts": records,
    }
    (out_dir / VERDICTS_FILE).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, args.seed)
        names, wanted = _select(args.experiment, args.claims)
    except ConfigError as exc:
        print("invalid configuration:", file=sys.stderr)
        for p in exc.problems:
            print(f"  {p}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out or cfg["output"]["dir"])
    try:
        if args.jobs > 1 and len(names) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                futures = {n: pool.submit(run_experiment, n, cfg) for n in names}
                outputs = {n: f.result() for n, f in futures.items()}
        else:
            outputs = {n: run_experiment(n, cfg) for n in names}
    except NumericalFailure as exc:
        print(f"numerical failure in {exc.experiment}, claim {exc.claim}: {exc.detail}", file=sys.stderr)
        return EXIT_NUMERICAL
    summary = write_outputs(out_dir, cfg, names, outputs, wanted)
    print(format_report([summary]))
    return EXIT_PASS if summary["passed"] else EXIT_FAIL


def load_verdicts(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    if not isinstance(data, dict) or not isinstance(data.get("verdicts"), list) or "config_hash" not in data:
        raise ConfigError([f"{path}: not a verdict summary"])
    for rec in data["verdicts"]:
        if not isinstance(rec, dict) or not {"claim", "ref", "passed", "measured", "threshold"} <= set(rec):
            raise ConfigError([f"{path}: malformed verdict record"])
    return data


def _short(obj, limit: int = 60) -> str:
    text = json.dumps(obj, sort_keys=True, default=str)
    return text if len(text) <= limit else text[:limit - 3] + "..."


def format_report(summaries: list) -> str:
    rows = [(r["claim"], r["ref"], "PASS" if r["passed"] else "FAIL", _short(r["measured"]), _short(r["threshold"]))
            for s in summaries for r in s["verdicts"]]
    header = ("claim", "ref", "result", "measured", "threshold")
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows]
    fails = sum(row[2] == "FAIL" for row in rows)
    lines.append(f"{len(rows)} claims, {fails} FAIL")
    return "\n".join(lines)


def cmd_report(args) -> int:
    try:
        summaries = [load_verdicts(p) for p in args.paths]
    except ConfigError as exc:
        for p in exc.problems:
            print(p, file=sys.stderr)
        return EXIT_USAGE
    hashes = {s["config_hash"] for s in summaries}
    if len(hashes) > 1:
        print(f"config hash mismatch across verdict files: {sorted(hashes)}", file=sys.stderr)
        return EXIT_USAGE
    print(format_report(summaries))
    return EXIT_PASS if all(r["passed"] for s in summaries for r in s["verdicts"]) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperlab", description="Numerical checks for hyperboloid-averaged fields.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run experiments and write CSV tables plus verdicts.json")
    run.add_argument("experiment", choices=[*EXPERIMENTS, "all"])
    run.add_argument("--config", help="TOML config (default: packaged default)")
    run.add_argument("--out", help="output directory (default: output.dir of the config)")
    run.add_argument("--claims", help="comma-separated subset of claim ids")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for 'all'")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.set_defaults(func=cmd_run)
    rep = sub.add_parser("report", help="print verdict tables")
    rep.add_argument("paths", nargs="+")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    if getattr(args, "jobs", 1) < 1:
        print("--jobs must be positive", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
