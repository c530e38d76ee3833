"""
censorlab command line.

    censorlab simulate --config FILE --out DIR [--n N] [--seed S]
    censorlab sweep    --spec FILE --out DIR [--jobs K] [--realizations R]
    censorlab metrics  --cohort FILE --out DIR
    censorlab detect   --records FILE --out DIR [--alpha A] [--tests LIST]
    censorlab audit    --input FILE --out DIR [--alpha A] ...
    censorlab theory   --out DIR (--check-bcn | --tau1-bound | --undertesting | --check-parallel FILE)

Exit codes: 0 success, 1 analysis failure, 2 usage or configuration error.
Every command that reaches its output directory writes manifest.json there.
"""

import argparse
import json
import os
import sys
import time

import numpy as np
import polars as pl
from dotenv import load_dotenv
from hydra import compose, initialize_config_dir
from omegaconf import OmegaConf

from prefect_dags.detect_pipeline import run_detection
from prefect_dags.reporting_pipeline import SweepReportingPipeline
from prefect_dags.sweep_pipeline import sweep
from src.classifier.scorer import SvmConfig
from src.core.exceptions import (
    CensorlabError,
    ConfigError,
    ConvergenceError,
    RealizationError,
    SchemaError,
    UndefinedMetricError,
)
from src.core.rng import TRAIN_STREAM, Rng, derive_realization_seed
from src.core.types import SimulationConfig, load_structured
from src.detect.audit import audit_frame
from src.detect.records import load_testing_records
from src.harness.experiment import ExperimentSpec
from src.metrics.gaps import class_group_weights, decomposition_residual, gap_report
from src.reporting.file_utils import ensure_directory_exists
from src.reporting.reporting_funcs import write_manifest
from src.synthgen.cohort_io import read_cohort_csv, write_cohort_csv
from src.synthgen.dgp import (
    censorship_rate,
    generate_cohort,
    missed_positive_rate,
    setting_config,
    testing_rate,
)
from src.theory.bcn import GaussianMarginals, check_bcn_admissible, tau1_bound, marginal_shift_noise_model
from src.theory.boundaries import LinearBoundaries, check_parallel_boundaries
from src.theory.undertesting import empirical_risk_profile, threshold_undertesting, undertesting_level

EXIT_OK = 0
EXIT_ANALYSIS_FAILURE = 1
EXIT_USAGE = 2

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
CONFIG_DIR = os.path.join(REPO_ROOT, "configs_and_globals")
JOBS_ENV = "CENSORLAB_JOBS"


class UsageError(CensorlabError):
    """Invalid flag values detected after parsing."""


def load_main_config(overrides=None) -> dict:
    """Compose configs_and_globals/config_main.yaml and resolve interpolations."""
    with initialize_config_dir(config_dir=CONFIG_DIR, version_base=None):
        cfg = compose(config_name="config_main", overrides=overrides or [])
    return OmegaConf.to_container(cfg, resolve=True)


def _write_json(path, payload):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
    return path


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def _csv_list(text):
    return [item.strip() for item in text.split(",") if item.strip()] if text else None


def cmd_simulate(args) -> tuple:
    if args.config:
        config = SimulationConfig.from_json(args.config)
    else:
        config = setting_config(args.setting)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    n = config.n_train if args.n is None else args.n
    if n < 2:
        raise UsageError(f"--n must be >= 2, got {n}")

    ensure_directory_exists(args.out)
    rng = Rng(derive_realization_seed(config.seed, 0)).stream(TRAIN_STREAM)
    cohort = generate_cohort(config, n, rng)
    write_cohort_csv(cohort, os.path.join(args.out, "cohort.csv"))

    def guarded(fn, *a):
        try:
            return fn(*a)
        except UndefinedMetricError:
            return None

    profile = empirical_risk_profile(cohort.score, cohort.t, cohort.group)
    summary = {
        "n": n,
        "config": config.to_dict(),
        "testing_rate": {g: testing_rate(cohort, g) for g in (0, 1)},
        "censorship_rate": {g: censorship_rate(cohort, g) for g in (0, 1)},
        "missed_positive_rate": {
            "0": guarded(missed_positive_rate, cohort, 0),
            "1": guarded(missed_positive_rate, cohort, 1),
            "all": guarded(missed_positive_rate, cohort, None),
        },
        "undertesting_level": threshold_undertesting(config.tau0, config.tau1, config.c),
        "empirical_undertesting_level": undertesting_level(profile) if profile.r.size >= 2 else None,
    }
    _write_json(os.path.join(args.out, "summary.json"), summary)
    print(
        f"Simulated {n} patients: P0(t=1)={summary['testing_rate'][0]:.3f}, "
        f"P1(t=1)={summary['testing_rate'][1]:.3f}"
    )
    return EXIT_OK, config.to_dict(), config.seed


def cmd_sweep(args) -> tuple:
    spec = ExperimentSpec.from_json(args.spec)
    if args.realizations is not None:
        if args.realizations < 1:
            raise UsageError(f"--realizations must be >= 1, got {args.realizations}")
        spec = spec.replace(realizations=args.realizations)
    if args.jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {args.jobs}")

    config = load_main_config()
    svm_config = load_structured(SvmConfig, config["svm_config"])
    reporting = config["reporting_config"]
    ensure_directory_exists(args.out)

    start = time.perf_counter()
    result = sweep(
        spec,
        jobs=args.jobs,
        svm_config=svm_config,
        percentage_points=reporting["local_reporting"]["percentage_points"],
    )
    SweepReportingPipeline(reporting).run(
        result,
        args.out,
        command="sweep",
        wall_time=time.perf_counter() - start,
        extra={"jobs": args.jobs},
    )
    if result.failed:
        print(f"{len(result.failures)} cells failed; see the 'error' column of table.csv", file=sys.stderr)
        return EXIT_ANALYSIS_FAILURE, None, None
    # Manifest already written by the reporting pipeline
    return EXIT_OK, None, None


def cmd_metrics(args) -> tuple:
    cohort = read_cohort_csv(args.cohort, score_column=args.score_column)
    if cohort.score is None:
        raise SchemaError(f"cohort has no '{args.score_column}' values to evaluate", columns=[args.score_column])
    ensure_directory_exists(args.out)
    report = gap_report(cohort)
    weights = class_group_weights(cohort.group, cohort.y)
    payload = {
        **report.to_dict(),
        "class_group_weights": [list(row) for row in weights.p],
        "decomposition_residual": decomposition_residual(report, weights),
    }
    _write_json(os.path.join(args.out, "gap_report.json"), payload)
    print(f"AUC={report.auc_overall:.4f} dAUC={report.delta_auc:.4f} dxAUC={report.delta_xauc:.4f}")
    return EXIT_OK, {"cohort": os.path.abspath(args.cohort)}, None


def cmd_detect(args) -> tuple:
    tests = _csv_list(args.tests)
    table = load_testing_records(args.records, tests=tests, subset_column=args.subset_column)
    ensure_directory_exists(args.out)
    results = run_detection(table, tests=tests, alpha=args.alpha, out_dir=args.out)
    n_significant = sum(r.significant for r in results)
    print(f"{n_significant} of {len(results)} tests differ significantly between groups")
    return EXIT_OK, {"records": os.path.abspath(args.records), "alpha": args.alpha, "tests": tests}, None


def cmd_audit(args) -> tuple:
    frame = pl.read_csv(args.input)
    boundaries = None
    if args.boundaries:
        with open(args.boundaries) as f:
            boundaries = LinearBoundaries.from_dict(json.load(f))
    ensure_directory_exists(args.out)
    verdict = audit_frame(
        frame,
        group_column=args.group_column,
        tested_column=args.tested_column,
        score_column=args.score_column,
        covariate_columns=_csv_list(args.covariates),
        alpha=args.alpha,
        high_risk_group=args.high_risk_group,
        boundaries=boundaries,
    )
    _write_json(os.path.join(args.out, "audit.json"), verdict.to_dict())
    print(f"{verdict.verdict}: {verdict.reason}")
    return EXIT_OK, {"input": os.path.abspath(args.input), "alpha": args.alpha}, None


def cmd_theory(args) -> tuple:
    ensure_directory_exists(args.out)
    g = GaussianMarginals(mu0=args.mu0, mu1=args.mu1, sigma2=args.sigma2, p_a=args.p_a, c=args.c)
    payload = {}
    if args.tau1_bound:
        payload["tau1_bound"] = tau1_bound(g)
        payload["tau1_bound_double_offset"] = tau1_bound(g, double_offset=True)
        print(
            f"tau1 bound: {payload['tau1_bound']:.4f} "
            f"(double offset {payload['tau1_bound_double_offset']:.4f}); f1 stays nonincreasing for tau1 at or above it"
        )
    if args.undertesting:
        payload["undertesting_level"] = threshold_undertesting(args.tau0, args.tau1, args.c)
        print(f"undertesting level: {payload['undertesting_level']:.4f}")
    if args.check_bcn:
        grid = np.linspace(args.grid_min, args.grid_max, args.grid_points)
        verdict = check_bcn_admissible(marginal_shift_noise_model(g, args.tau0, args.tau1, args.b), grid)
        payload["bcn"] = verdict.to_dict()
        print("admissible" if verdict.admissible else f"violated: {verdict.condition} at {verdict.location}")
    if args.check_parallel:
        with open(args.check_parallel) as f:
            verdict = check_parallel_boundaries(LinearBoundaries.from_dict(json.load(f)))
        payload["parallel"] = verdict.to_dict()
        print("parallel" if verdict.parallel else f"not parallel (group {verdict.group})")
    if not payload:
        raise UsageError("theory needs at least one of --check-bcn, --tau1-bound, --undertesting, --check-parallel")
    _write_json(os.path.join(args.out, "theory.json"), payload)
    return EXIT_OK, None, None


def build_parser(default_jobs: int = 1) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="censorlab", description="Disparate censorship toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one censored cohort")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="SimulationConfig JSON")
    source.add_argument("--setting", type=int, choices=[1, 2, 3], help="preset setting instead of a config file")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, help="cohort size (default: config n_train)")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run an experiment sweep")
    p.add_argument("--spec", required=True, help="ExperimentSpec JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=default_jobs, help=f"worker threads (default ${JOBS_ENV} or config)")
    p.add_argument("--realizations", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrics", help="gap report for a scored cohort CSV")
    p.add_argument("--cohort", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--score-column", default="score")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("detect", help="testing-rate z-tests on admission records")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--tests", help="comma-separated test columns (default: all)")
    p.add_argument("--subset-column", help="keep only rows flagged 1 in this column")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("audit", help="walk the disparate-censorship decision tree")
    p.add_argument("--input", required=True, help="cohort CSV or per-patient table")
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--group-column", default="group")
    p.add_argument("--tested-column", default="t")
    p.add_argument("--score-column", default="score")
    p.add_argument("--covariates", help="comma-separated covariate columns (default: x1..xd)")
    p.add_argument("--high-risk-group", type=int, choices=[0, 1])
    p.add_argument("--boundaries", help="LinearBoundaries JSON (simulation mode)")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("theory", help="theory checks on Gaussian score marginals")
    p.add_argument("--out", required=True)
    p.add_argument("--check-bcn", action="store_true")
    p.add_argument("--tau1-bound", action="store_true")
    p.add_argument("--undertesting", action="store_true")
    p.add_argument("--check-parallel", metavar="FILE", help="LinearBoundaries JSON")
    p.add_argument("--mu0", type=float, default=4.6)
    p.add_argument("--mu1", type=float, default=5.4)
    p.add_argument("--sigma2", type=float, default=0.25)
    p.add_argument("--p-a", type=float, default=0.5)
    p.add_argument("--c", type=float, default=0.05)
    p.add_argument("--tau0", type=float, default=5.0)
    p.add_argument("--tau1", type=float, default=4.5)
    p.add_argument("--b", type=float, default=4.0)
    p.add_argument("--grid-min", type=float, default=0.0)
    p.add_argument("--grid-max", type=float, default=10.0)
    p.add_argument("--grid-points", type=int, default=10_001)
    p.set_defaults(func=cmd_theory)
    return parser


def _default_jobs() -> int:
    value = os.environ.get(JOBS_ENV)
    if value:
        try:
            return int(value)
        except ValueError:
            raise UsageError(f"{JOBS_ENV} must be an integer, got {value!r}")
    return int(load_main_config()["global_config"]["JOBS"])


def main(argv=None) -> int:
    load_dotenv()
    try:
        parser = build_parser(_default_jobs())
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    start = time.perf_counter()
    manifest_config, seed = {k: v for k, v in vars(args).items() if k != "func"}, None
    try:
        code, config, seed = args.func(args)
        manifest_config = config or manifest_config
    except (ConfigError, SchemaError, UsageError) as e:
        # ConfigError messages already lead with the key path
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (UndefinedMetricError, ConvergenceError, RealizationError, CensorlabError, ValueError) as e:
        print(f"analysis failed: {e}", file=sys.stderr)
        code = EXIT_ANALYSIS_FAILURE

    if args.command != "sweep" and os.path.isdir(args.out):
        write_manifest(
            args.out,
            args.command,
            manifest_config,
            seed=seed,
            wall_time=time.perf_counter() - start,
            extra={"exit_code": code},
        )
    return code


if __name__ == "__main__":
    sys.exit(main())
