"""
Subcommands of the mrtime command line.

Each ``cmd_*`` function validates its parsed arguments into a plain params
dict, runs the core, writes its outputs and returns an exit code.
"""
from __future__ import annotations

import argparse
import logging
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from cli import reports
from cli.modelfile import ModelFile, Provenance, load_model, load_truth, save_model
from mrtime import eximlog, profiling, regression, workloads
from mrtime.profiling import Aggregation

logger = logging.getLogger(__name__)

DEFAULT_COUNT = profiling.DEFAULT_COUNT
DEFAULT_MIN = 5
DEFAULT_MAX = 40
DEFAULT_SEED = 42
DEFAULT_REPEATS = profiling.DEFAULT_REPEATS
DEFAULT_DEGREE = regression.DEFAULT_DEGREE
DEFAULT_CORPUS_SIZE = 1 << 20
DEFAULT_TRANSACTIONS = 1000


class UsageError(ValueError):
    """A flag combination or flag value the command cannot work with."""


def parse_config(text: str) -> regression.ConfigPoint:
    """Parses ``M,R`` into a (mappers, reducers) configuration."""
    try:
        mappers, reducers = (int(part) for part in text.split(","))
        return regression.ConfigPoint.of(mappers=mappers, reducers=reducers)
    except ValueError:
        raise UsageError(
            _("'{}' is not a configuration, expected MAPPERS,REDUCERS").format(text)
        ) from None


def _ranges(lower: int, upper: int) -> tuple:
    if lower < 1 or upper < lower:
        raise UsageError(_("Invalid range [{}, {}]: need 1 <= min <= max.").format(lower, upper))
    return tuple((name, lower, upper) for name in regression.CANONICAL_PARAMETERS)


def _aggregation(name: str) -> Aggregation:
    return Aggregation[name.upper()]


def _log_progress(percent: int):
    logger.debug(_("profiling {}% done").format(percent))


def validate_gen_experiments_params(args) -> dict:
    if args.count < 1:
        raise UsageError(_("--count must be at least 1."))
    return dict(
        param_ranges=_ranges(args.min, args.max),
        count=args.count,
        seed=args.seed,
    )


def cmd_gen_experiments(args) -> int:
    if args.config:
        configs = [parse_config(text) for text in args.config]
        if len(set(configs)) != len(configs):
            raise UsageError(_("Explicit configurations must be distinct."))
    else:
        configs = profiling.generate_grid(**validate_gen_experiments_params(args))

    profiling.save_plan(configs, args.output)
    logger.info(_("Wrote {} configurations to {}").format(len(configs), args.output))
    return 0


def _read_input(args, app: str) -> bytes:
    if args.input is not None:
        try:
            return Path(args.input).read_bytes()
        except OSError as err:
            raise UsageError(_("Cannot read input '{}': {}").format(args.input, err.strerror))
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    if app == "wordcount":
        return workloads.generate_corpus(args.size, seed=seed)
    return eximlog.generate_log(args.transactions, seed=seed)[0]


def make_workload(args):
    """Builds the workload named by ``args.workload`` from its flags."""
    name = args.workload
    if name == "synthetic":
        if args.truth is None:
            raise UsageError(_("The synthetic workload needs --truth <model file>."))
        truth = load_truth(args.truth, noise_sigma=args.noise_sigma, seed=args.seed)
        return workloads.create_workload(name, truth)
    if name in workloads.WORKLOADS:
        return workloads.create_workload(name, _read_input(args, name))
    return workloads.create_workload(name)


def validate_profile_params(args) -> dict:
    if args.repeats < 1:
        raise UsageError(_("--repeats must be at least 1."))
    configs = profiling.load_plan(args.plan)
    workload = make_workload(args)
    seed = args.seed
    if seed is None:
        seed = workload.truth.seed if isinstance(workload, workloads.SyntheticWorkload) else 0
    return dict(
        plan=profiling.ExperimentPlan(
            app=args.workload,
            configs=configs,
            repeats=args.repeats,
            seed=seed,
        ),
        workload=workload,
    )


def cmd_profile(args) -> int:
    params = validate_profile_params(args)
    samples = profiling.run_plan(**params, progress=_log_progress)
    profiling.save_dataset(samples, args.output)
    logger.info(_("Wrote {} run samples to {}").format(len(samples), args.output))
    return 0


def split_holdout(samples, holdout: int, seed: int):
    """Moves every sample of ``holdout`` randomly chosen configurations aside."""
    configs = list(dict.fromkeys(sample.config for sample in samples))
    if holdout >= len(configs):
        raise UsageError(
            _("Cannot hold out {} of {} configurations.").format(holdout, len(configs))
        )
    rng = np.random.default_rng(seed)
    chosen = {configs[i] for i in rng.choice(len(configs), size=holdout, replace=False)}
    train = [s for s in samples if s.config not in chosen]
    test = [s for s in samples if s.config in chosen]
    return train, test


def validate_fit_params(args) -> dict:
    if args.degree < 1:
        raise UsageError(_("--degree must be at least 1."))
    if args.holdout < 0:
        raise UsageError(_("--holdout cannot be negative."))
    samples = profiling.load_dataset(args.dataset)
    if args.app is not None:
        samples = [s for s in samples if s.app == args.app]
        if not samples:
            raise UsageError(_("Dataset {} has no runs of '{}'.").format(args.dataset, args.app))
    return dict(
        samples=samples,
        degree=args.degree,
        mode=_aggregation(args.agg),
        holdout=args.holdout,
        seed=args.seed if args.seed is not None else DEFAULT_SEED,
    )


def cmd_fit(args) -> int:
    params = validate_fit_params(args)
    samples = params["samples"]

    held_out = []
    if params["holdout"]:
        samples, held_out = split_holdout(samples, params["holdout"], params["seed"])

    experiments = profiling.aggregate_runs(samples, params["mode"])
    model = regression.fit(experiments, params["degree"])
    provenance = Provenance(
        trained_from=str(args.dataset),
        trained_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        m=len(experiments),
    )
    save_model(ModelFile(model=model, provenance=provenance), args.output)
    logger.info(
        _("Fitted {} over {} experiments, LSE {:.6g} s").format(
            model.app, len(experiments), regression.lse(model, experiments)
        )
    )

    if held_out:
        holdout_path = args.holdout_output or Path(args.output).with_suffix(".holdout.csv")
        profiling.save_dataset(held_out, holdout_path)
        logger.info(_("Held out {} run samples in {}").format(len(held_out), holdout_path))
    return 0


def validate_predict_params(args) -> dict:
    models = [load_model(path).model for path in args.model]
    if args.grid:
        if len(models) != 1:
            raise UsageError(_("--grid evaluates exactly one --model."))
        if args.output is None:
            raise UsageError(_("--grid needs -o <surface CSV>."))
        configs = profiling.lattice(_ranges(args.min, args.max))
    elif args.configs is not None:
        configs = profiling.load_plan(args.configs)
    elif args.config:
        configs = [parse_config(text) for text in args.config]
    else:
        raise UsageError(_("Give --config M,R, --configs <plan CSV> or --grid."))
    return dict(models=models, configs=configs)


def cmd_predict(args) -> int:
    params = validate_predict_params(args)
    models, configs = params["models"], params["configs"]

    if args.grid:
        model = models[0]
        predictions = regression.predict_many(model, configs)
        reports.write_surface(configs, predictions, args.output)
        best = int(np.argmin(predictions))
        print(
            "argmin {} predicted_s={}".format(
                " ".join(f"{name}={value}" for name, value in configs[best].values),
                profiling.format_seconds(float(predictions[best])),
            )
        )
        logger.info(_("Wrote {} surface points to {}").format(len(configs), args.output))
        return 0

    print("app,mappers,reducers,predicted_s")
    for model in models:
        for config in configs:
            value = regression.predict(model, config)
            print("{},{},{}".format(model.app, ",".join(map(str, config.numbers)), repr(value)))
    return 0


def validate_evaluate_params(args) -> dict:
    model = load_model(args.model).model
    samples = profiling.load_dataset(args.dataset)
    apps = {s.app for s in samples}
    if model.app in apps and len(apps) > 1:
        logger.warning(
            _("Evaluating only the {} runs of {}").format(model.app, args.dataset)
        )
        samples = [s for s in samples if s.app == model.app]
    elif model.app not in apps:
        logger.warning(
            _("Dataset applications {} differ from model application {}").format(
                sorted(apps), model.app
            )
        )
    experiments = profiling.aggregate_runs(samples, _aggregation(args.agg))
    return dict(model=model, experiments=experiments)


def cmd_evaluate(args) -> int:
    params = validate_evaluate_params(args)
    model, experiments = params["model"], params["experiments"]

    report = regression.error_stats(model, experiments)
    lse_value = regression.lse(model, experiments)
    reports.write_report(report, lse_value, args.output)
    print(reports.summary_line(report, lse_value))
    logger.info(_("Wrote {} report rows to {}").format(len(report.rows), args.output))
    return 0


def cmd_run_job(args) -> int:
    if args.mappers < 1 or args.reducers < 1:
        raise UsageError(_("--mappers and --reducers must be at least 1."))
    if args.per_transaction and args.app != "eximparse":
        raise UsageError(_("--per-transaction only applies to eximparse."))

    spec = workloads.JobSpec(args.app, args.mappers, args.reducers, Path(args.input))
    if args.app == "wordcount":
        result = workloads.run_wordcount(spec)
        reports.write_word_counts(result.output, args.output)
    elif args.app == "eximparse":
        result = workloads.run_exim_job(spec)
        if args.per_transaction:
            reports.write_transaction_files(result.output, args.output)
        else:
            reports.write_transactions(result.output, args.output)
    else:
        raise UsageError(_("run-job supports wordcount and eximparse, not '{}'.").format(args.app))

    logger.info(
        _("{} with {} mappers and {} reducers took {:.6f} s ({} pairs, {} skipped lines)").format(
            args.app,
            args.mappers,
            args.reducers,
            result.timing.exec_time_s,
            result.stats.map_pairs,
            result.stats.skipped_lines,
        )
    )
    return 0


def cmd_gen_input(args) -> int:
    if args.app == "wordcount":
        data = workloads.generate_corpus(args.size, seed=args.seed)
    elif args.app == "eximparse":
        data, manifest = eximlog.generate_log(args.transactions, seed=args.seed)
        if args.manifest:
            reports.write_manifest(manifest, args.manifest)
    else:
        raise UsageError(_("gen-input supports wordcount and eximparse, not '{}'.").format(args.app))

    try:
        Path(args.output).write_bytes(data)
    except OSError as err:
        raise UsageError(_("Cannot write '{}': {}").format(args.output, err.strerror))
    logger.info(_("Wrote {} bytes to {}").format(len(data), args.output))
    return 0


def build_parser(version: str) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrtime",
        description=_("Model MapReduce execution time from the number of mappers and reducers."),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {version}")
    parser.add_argument("-v", "--verbose", action="store_true", help=_("log debug messages"))
    parser.add_argument(
        "--lang",
        default=os.environ.get("MRTIME_LANG", "en"),
        help=_("message language (default: $MRTIME_LANG or en)"),
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    gen = commands.add_parser("gen-experiments", help=_("draw a plan of configurations"))
    gen.add_argument("--count", type=int, default=DEFAULT_COUNT)
    gen.add_argument("--min", type=int, default=DEFAULT_MIN)
    gen.add_argument("--max", type=int, default=DEFAULT_MAX)
    gen.add_argument("--seed", type=int, default=DEFAULT_SEED)
    gen.add_argument(
        "--config", action="append", metavar="M,R", help=_("explicit configuration (repeatable)")
    )
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(handler=cmd_gen_experiments)

    profile = commands.add_parser("profile", help=_("run a workload over a plan"))
    profile.add_argument("--plan", required=True)
    profile.add_argument("--workload", required=True, help=_("synthetic, wordcount or eximparse"))
    profile.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    profile.add_argument("--seed", type=int, default=None)
    profile.add_argument("--truth", help=_("truth model file of the synthetic workload"))
    profile.add_argument("--noise-sigma", type=float, default=None)
    profile.add_argument("--input", help=_("input file of a wordcount or eximparse workload"))
    profile.add_argument("--size", type=int, default=DEFAULT_CORPUS_SIZE)
    profile.add_argument("--transactions", type=int, default=DEFAULT_TRANSACTIONS)
    profile.add_argument("-o", "--output", required=True)
    profile.set_defaults(handler=cmd_profile)

    fit = commands.add_parser("fit", help=_("fit a model to a dataset"))
    fit.add_argument("--dataset", required=True)
    fit.add_argument("--degree", type=int, default=DEFAULT_DEGREE)
    fit.add_argument("--agg", choices=("mean", "median"), default="mean")
    fit.add_argument("--app", default=None, help=_("fit only the runs of this application"))
    fit.add_argument("--holdout", type=int, default=0)
    fit.add_argument("--seed", type=int, default=None)
    fit.add_argument("--holdout-output", default=None)
    fit.add_argument("-o", "--output", required=True)
    fit.set_defaults(handler=cmd_fit)

    predict = commands.add_parser("predict", help=_("predict execution times"))
    predict.add_argument("--model", action="append", required=True)
    predict.add_argument("--config", action="append", metavar="M,R")
    predict.add_argument("--configs", default=None, help=_("plan CSV of configurations"))
    predict.add_argument("--grid", action="store_true")
    predict.add_argument("--min", type=int, default=DEFAULT_MIN)
    predict.add_argument("--max", type=int, default=DEFAULT_MAX)
    predict.add_argument("-o", "--output", default=None)
    predict.set_defaults(handler=cmd_predict)

    evaluate = commands.add_parser("evaluate", help=_("report prediction errors on a dataset"))
    evaluate.add_argument("--model", required=True)
    evaluate.add_argument("--dataset", required=True)
    evaluate.add_argument("--agg", choices=("mean", "median"), default="mean")
    evaluate.add_argument("-o", "--output", required=True)
    evaluate.set_defaults(handler=cmd_evaluate)

    run_job = commands.add_parser("run-job", help=_("run one job and write its output"))
    run_job.add_argument("--app", required=True)
    run_job.add_argument("--input", required=True)
    run_job.add_argument("--mappers", type=int, default=1)
    run_job.add_argument("--reducers", type=int, default=1)
    run_job.add_argument("--per-transaction", action="store_true")
    run_job.add_argument("-o", "--output", required=True)
    run_job.set_defaults(handler=cmd_run_job)

    gen_input = commands.add_parser("gen-input", help=_("generate a workload input"))
    gen_input.add_argument("--app", required=True)
    gen_input.add_argument("--size", type=int, default=DEFAULT_CORPUS_SIZE)
    gen_input.add_argument("--transactions", type=int, default=DEFAULT_TRANSACTIONS)
    gen_input.add_argument("--seed", type=int, default=DEFAULT_SEED)
    gen_input.add_argument("--manifest", default=None)
    gen_input.add_argument("-o", "--output", required=True)
    gen_input.set_defaults(handler=cmd_gen_input)

    return parser
