"""Command-line entry point: ``simplexreg <stage> [options]``.

Every stage of :class:`~simplexreg.pipeline.Pipeline` is a subcommand,
and ``run`` executes all of them. Exit status is 0 on success, 2 for
schema, parse or configuration problems and 3 for numerical failures.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from simplexreg.errors import LookupFailure, ParameterError, ParseError, SchemaError
from simplexreg.io import OUTPUT_DIR_ENV, AnalysisConfig, load_config
from simplexreg.pipeline import STAGES, Pipeline, StageFailure

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERIC = 0, 2, 3
_SCHEMA_ERRORS = (SchemaError, ParseError, LookupFailure, ParameterError, FileNotFoundError)


def _csv_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _categorical(text):
    out = {}
    for item in _csv_list(text):
        name, sep, ref = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected NAME=REFERENCE, got {item!r}")
        out[name] = ref
    return out


def _ratio(text):
    num, sep, den = text.partition("/")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NUM/DEN, got {text!r}")
    return [p.strip() for p in num.split("+")], [p.strip() for p in den.split("+")]


def _weights(text):
    if text in ("average", "uniform"):
        return text
    return [float(v) for v in _csv_list(text)]


def _add_common(p):
    p.add_argument("--config", help="JSON file with AnalysisConfig fields; flags override it")
    p.add_argument("--input", help="input CSV file")
    p.add_argument("--parts", type=_csv_list, help="comma-separated part columns")
    p.add_argument("--covariates", type=_csv_list, help="comma-separated covariate columns")
    p.add_argument("--categorical", type=_categorical,
                   help="categorical covariates with reference levels, e.g. race=EA")
    p.add_argument("--id-column", help="column holding sample identifiers")
    p.add_argument("--k", type=int, help="neighbours for zero replacement (default 5)")
    p.add_argument("--weights", type=_weights,
                   help="average, uniform or comma-separated explicit weights")
    p.add_argument("--alr-denominator", help="auto or a part name")
    p.add_argument("--replicates", type=int, help="bootstrap replicates, 0 disables")
    p.add_argument("--seed", type=int, help="seed for all resampling")
    p.add_argument("--output-dir",
                   help=f"output directory (default ${OUTPUT_DIR_ENV} or ./simplexreg-output)")
    p.add_argument("--formats", type=_csv_list, help="any of json,csv,svg")
    p.add_argument("--group", help="two-level covariate for group comparisons")
    p.add_argument("--pairwise-ratio", type=_ratio, help="pairwise ratio NUM/DEN")
    p.add_argument("--slr", type=_ratio, help="summated ratio, e.g. A+B/C+D")
    p.add_argument("--subcomposition", type=_csv_list,
                   help="parts for the group-only subcomposition regression")
    p.add_argument("--dirichlet-covariates", type=_csv_list,
                   help="covariates for the Dirichlet model (default: all)")
    p.add_argument("--composite-threshold", type=float)
    p.add_argument("--workers", type=int, help="threads for the bootstrap")
    p.add_argument("--from-imputed", action="store_true",
                   help="read OUTPUT_DIR/imputed.csv written by an earlier impute run")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="simplexreg",
        description="Log-ratio and Dirichlet regression for compositional data.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="run every stage in order"))
    for stage in STAGES:
        _add_common(sub.add_parser(stage, help=f"run the {stage} stage"))
    return parser


def config_from_args(args):
    fields = {
        "input": args.input, "parts": args.parts, "covariates": args.covariates,
        "categorical": args.categorical, "id_column": args.id_column, "k": args.k,
        "weights": args.weights, "alr_denominator": args.alr_denominator,
        "replicates": args.replicates, "seed": args.seed, "output_dir": args.output_dir,
        "formats": args.formats, "group": args.group, "subcomposition": args.subcomposition,
        "dirichlet_covariates": args.dirichlet_covariates,
        "composite_threshold": args.composite_threshold, "workers": args.workers,
    }
    if args.pairwise_ratio:
        num, den = args.pairwise_ratio
        fields["pairwise_ratio"] = [num[0], den[0]]
    if args.slr:
        fields["slr_numerator"], fields["slr_denominator"] = args.slr
    if args.config:
        config = load_config(args.config, **fields)
    else:
        fields = {k: v for k, v in fields.items() if v is not None}
        if "input" not in fields or "parts" not in fields:
            raise ParameterError("--input and --parts are required without --config")
        config = AnalysisConfig(**fields)
    if args.from_imputed:
        config.input = str(Path(config.output_dir) / "imputed.csv")
        config.id_column = config.id_column or "sample_id"
    return config


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    stages = list(STAGES) if args.command == "run" else [args.command]
    try:
        config = config_from_args(args)
    except (*_SCHEMA_ERRORS, TypeError) as exc:
        print(f"simplexreg: configuration error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        Pipeline(config).run(stages)
    except StageFailure as failure:
        code = EXIT_NUMERIC
        if failure.stage == "ingest" or isinstance(failure.error, _SCHEMA_ERRORS):
            code = EXIT_SCHEMA
        record = {"stage": failure.stage, "type": type(failure.error).__name__,
                  "message": str(failure.error), "exit_code": code}
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n",
                                        encoding="utf-8")
        print(f"simplexreg: {failure}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
