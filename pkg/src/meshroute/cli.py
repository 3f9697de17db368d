"""Command-line front end: ``meshroute gen|run|train|compare|pipeline``.

Exit codes: 0 ok, 2 bad configuration or input files, 3 missing model
bundle, 4 unusable training data, 5 logs that cover different scenarios.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import metrics
from .config import ConfigError, PipelineConfig, load_config
from .models_abcd import BundleError, load_bundle, save_bundle, train_bundle
from .records import LogError, MODES, read_log, write_log
from .scenario import (ScenarioError, atomic_write_text, generate_scenario, load_suite,
                       save_suite)
from .sim_core import run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_BUNDLE, EXIT_DATA, EXIT_MISMATCH = 0, 2, 3, 4, 5

VALIDATION_FILE = "validation_metrics.csv"
SUMMARY_FILE = "summary.csv"
MATRIX_FILE = "per_scenario_pdr.csv"
STATS_FILE = "significance.csv"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---- command bodies (also usable from Python) ----------------------------------

def gen(cfg: PipelineConfig, out_dir: Path) -> List[Path]:
    scenarios = [generate_scenario(c, i + 1) for i, c in enumerate(cfg.scenarios)]
    return save_suite(scenarios, out_dir)


def run(cfg: PipelineConfig, scenario_dir: Path, mode: str, out_log: Path,
        bundle_dir: Optional[Path] = None) -> int:
    if mode not in MODES:
        raise CliError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}", EXIT_CONFIG)
    bundle = None
    if mode != "baseline":
        if bundle_dir is None:
            raise CliError(f"mode {mode} needs --bundle", EXIT_BUNDLE)
        try:
            bundle = load_bundle(bundle_dir)
        except (BundleError, OSError) as exc:
            raise CliError(f"cannot load bundle: {exc}", EXIT_BUNDLE) from exc
    scenarios = load_suite(scenario_dir)
    if not scenarios:
        raise CliError(f"no scenario files in {scenario_dir}", EXIT_CONFIG)
    logs = []
    for s in scenarios:
        logs.extend(run_scenario(s, cfg.simulation, mode, bundle, cfg.fusion_params(mode)))
    write_log(logs, out_log)
    return len(logs)


def validation_csv(validation: Dict[str, Dict[str, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "metric", "value"])
    for role in sorted(validation):
        for name in sorted(validation[role]):
            w.writerow([role, name, f"{validation[role][name]:.6f}"])
    return buf.getvalue()


def train(cfg: PipelineConfig, log_path: Path, out_dir: Path, seed: Optional[int] = None):
    logs = read_log(log_path)
    try:
        bundle = train_bundle(logs, seed=cfg.train_seed if seed is None else seed,
                              split_seed=cfg.split_seed, fraction=cfg.train_fraction)
    except BundleError as exc:
        raise CliError(str(exc), EXIT_DATA) from exc
    save_bundle(bundle, out_dir)
    atomic_write_text(Path(out_dir) / VALIDATION_FILE, validation_csv(bundle.validation))
    return bundle


def compare(cfg: PipelineConfig, log_paths: Dict[str, Path], out_dir: Path) -> str:
    logs = {mode: read_log(p) for mode, p in log_paths.items()}
    try:
        ids, modes, matrix = metrics.per_scenario_table(logs)
    except metrics.ScenarioMismatchError as exc:
        raise CliError(str(exc), EXIT_MISMATCH) from exc
    summaries = [metrics.aggregate(logs[m], m) for m in modes]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / SUMMARY_FILE, metrics.summary_csv(summaries))
    atomic_write_text(out / MATRIX_FILE, metrics.matrix_csv(ids, modes, matrix))
    text = metrics.render_text(summaries)
    if "baseline" in modes and "abcd" in modes:
        diffs = matrix[:, modes.index("abcd")] - matrix[:, modes.index("baseline")]
        try:
            test = metrics.wilcoxon_signed_rank(diffs)
        except metrics.MetricsError as exc:
            text += f"abcd vs baseline: test not computed ({exc})\n"
        else:
            ci = metrics.bootstrap_ci(diffs, cfg.ci_level, cfg.bootstrap_resamples,
                                      cfg.bootstrap_seed)
            atomic_write_text(out / STATS_FILE,
                              metrics.stats_csv("abcd-baseline", diffs, test, ci, cfg.ci_level))
            text += (f"abcd vs baseline: mean PDR gain {diffs.mean():+.2f} pp, "
                     f"Wilcoxon W+={test.statistic:g} p={test.p_value:.6g} ({test.method}, n={test.n}), "
                     f"{cfg.ci_level:.0%} CI [{ci[0]:+.2f}, {ci[1]:+.2f}] pp\n")
    return text


def pipeline(cfg: PipelineConfig, out_dir: Path) -> str:
    out = Path(out_dir)
    gen(cfg, out / "scenarios")
    run(cfg, out / "scenarios", "baseline", out / "logs" / "baseline.csv")
    train(cfg, out / "logs" / "baseline.csv", out / "bundle")
    for mode in ("abc", "abcd"):
        run(cfg, out / "scenarios", mode, out / "logs" / f"{mode}.csv", out / "bundle")
    return compare(cfg, {m: out / "logs" / f"{m}.csv" for m in MODES}, out / "reports")


# ---- argument handling -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meshroute", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, default=None, help="key-value config file")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate scenario CSV files")
    g.add_argument("--out", type=Path, required=True, help="output directory")

    r = sub.add_parser("run", help="simulate every scenario in a directory")
    r.add_argument("--scenarios", type=Path, required=True)
    r.add_argument("--mode", choices=MODES, required=True)
    r.add_argument("--bundle", type=Path, default=None)
    r.add_argument("--out", type=Path, required=True, help="hop-log CSV to write")

    t = sub.add_parser("train", help="train the model bundle on a baseline hop log")
    t.add_argument("log", type=Path)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--out", type=Path, required=True, help="bundle directory")

    c = sub.add_parser("compare", help="summary, per-scenario PDR and significance reports")
    for mode in MODES:
        c.add_argument(f"--{mode}", type=Path, default=None, help=f"{mode} hop log")
    c.add_argument("--out", type=Path, required=True, help="report directory")

    a = sub.add_parser("pipeline", help="gen, run baseline, train, run abc/abcd, compare")
    a.add_argument("--out", type=Path, required=True)
    a.add_argument("--seed", type=int, default=None, help="training seed override")
    for sp in (g, r, t, c, a):
        sp.add_argument("--config", type=Path, default=argparse.SUPPRESS)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "gen":
            paths = gen(cfg, args.out)
            print(f"wrote {len(paths)} scenario files to {args.out}")
        elif args.command == "run":
            n = run(cfg, args.scenarios, args.mode, args.out, args.bundle)
            print(f"wrote {n} hop records to {args.out}")
        elif args.command == "train":
            bundle = train(cfg, args.log, args.out, args.seed)
            print(validation_csv(bundle.validation), end="")
        elif args.command == "compare":
            paths = {m: getattr(args, m) for m in MODES if getattr(args, m) is not None}
            if not paths:
                raise CliError("give at least one of --baseline/--abc/--abcd", EXIT_CONFIG)
            print(compare(cfg, paths, args.out), end="")
        else:
            if args.seed is not None:
                cfg.train_seed = args.seed
            print(pipeline(cfg, args.out), end="")
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LogError, metrics.MetricsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
