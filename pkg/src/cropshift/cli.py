"""Command-line interface.

Subcommands: features, synth, experiment, entropy, priors-from-areas, train.
Exit codes: 0 success, 2 malformed input, 3 training-data problems,
4 configuration problems. Environment variables are never consulted; rerunning
any command with identical inputs and seed produces byte-identical outputs.
"""

import argparse
import dataclasses
import datetime
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from cropshift import csvio, modelio
from cropshift.classify import ClassifierConfig, ForestParams, fit_classifier
from cropshift.errors import (
    ClassMismatch,
    CropshiftError,
    EmptyClass,
    FeatureBuildError,
    InvalidParams,
    InvalidSpec,
    MissingPriors,
    ParseError,
    SingularCovariance,
    SmoteInfeasible,
    TooFewGroups,
    TrainRegionMissingClass,
)
from cropshift.evaluate import METHODS, run_transfer_experiment, shannon_entropy
from cropshift.features import build_features, filter_clear
from cropshift.rng import derive_seed
from cropshift.synth import generate, load_spec

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_TRAINING_DATA = 3
EXIT_CONFIGURATION = 4

CONFIG_SCHEMA_VERSION = 1

_INPUT_ERRORS = (ParseError, InvalidSpec, FeatureBuildError, OSError)
_TRAINING_ERRORS = (
    TrainRegionMissingClass,
    EmptyClass,
    SingularCovariance,
    SmoteInfeasible,
    TooFewGroups,
)
_CONFIG_ERRORS = (MissingPriors, ClassMismatch, InvalidParams)


@dataclass
class RunConfig:
    """Resolved experiment configuration; mirrors the config-file keys."""

    method: str = "fpsa"
    classifier: str = "lda"
    ridge: float = 1e-6
    n_trees: int = 100
    features_per_split: int = 0  # 0 -> ceil(sqrt(d))
    min_leaf: int = 1
    max_depth: int = 0  # 0 -> unlimited
    smote_k: int = 5
    seed: int = 0
    features: tuple = ()
    priors: str = ""
    train_region: str = ""
    out_dir: str = ""
    workers: int = 1

    def validate(self):
        if self.method not in METHODS:
            raise InvalidParams(f"method must be one of {METHODS}")
        if self.classifier not in ("lda", "rf"):
            raise InvalidParams("classifier must be 'lda' or 'rf'")
        if not self.features:
            raise InvalidParams("no feature CSVs given")
        if not self.train_region:
            raise InvalidParams("train_region is required")
        if not self.out_dir:
            raise InvalidParams("out_dir is required")

    def classifier_config(self) -> ClassifierConfig:
        return ClassifierConfig(
            kind=self.classifier,
            ridge=self.ridge,
            forest_params=ForestParams(
                n_trees=self.n_trees,
                features_per_split=self.features_per_split or None,
                min_leaf=self.min_leaf,
                max_depth=self.max_depth or None,
                seed=self.seed,
            ),
            workers=self.workers,
        )

    def to_jsonable(self) -> dict:
        out = dataclasses.asdict(self)
        out["features"] = list(self.features)
        out["schema_version"] = CONFIG_SCHEMA_VERSION
        # execution detail, contractually barred from changing any output
        del out["workers"]
        return out


_CONFIG_PARSERS = {
    "method": str,
    "classifier": str,
    "ridge": float,
    "n_trees": int,
    "features_per_split": int,
    "min_leaf": int,
    "max_depth": int,
    "smote_k": int,
    "seed": int,
    "features": lambda v: tuple(p.strip() for p in v.split(",") if p.strip()),
    "priors": str,
    "train_region": str,
    "out_dir": str,
    "workers": int,
}


def parse_config_file(path) -> dict:
    """Flat `key = value` configuration; '#' starts a comment line."""
    values = {}
    seen_version = False
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', found {line!r}", line=line_no)
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "schema_version":
                if value != str(CONFIG_SCHEMA_VERSION):
                    raise ParseError(
                        f"unsupported config schema_version {value!r}", line=line_no
                    )
                seen_version = True
                continue
            if key not in _CONFIG_PARSERS:
                raise ParseError(f"unknown config key {key!r}", line=line_no)
            try:
                values[key] = _CONFIG_PARSERS[key](value)
            except ValueError:
                raise ParseError(
                    f"invalid value {value!r} for key {key!r}", line=line_no
                ) from None
    if not seen_version:
        raise ParseError("config file must declare schema_version")
    return values


def _json_dump(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


# --- subcommands --------------------------------------------------------------


def cmd_features(args) -> int:
    bands = [b.strip() for b in args.bands.split(",") if b.strip()]
    if not bands:
        raise InvalidParams("band manifest is empty")
    anchor = (
        datetime.date.fromisoformat(args.anchor_date) if args.anchor_date else None
    )
    series_list = csvio.read_timeseries_csv(args.input, anchor_date=anchor)
    vectors, drops = [], []
    for series in series_list:
        clear = filter_clear(series)
        try:
            vectors.append(
                build_features(
                    clear,
                    bands,
                    gcvi_band=args.gcvi_band,
                    nir_band=args.nir_band,
                    green_band=args.green_band,
                )
            )
        except FeatureBuildError as exc:
            drops.append((series.pixel_id, f"band {exc.band}: {exc}"))
    csvio.write_features_csv(args.out, vectors, 5 * len(bands))
    base, _ = os.path.splitext(args.out)
    csvio.write_band_manifest(base + ".manifest.txt", bands)
    csvio.write_drop_report(base + ".drops.csv", drops)
    if not series_list:
        print("warning: input file contained no observations", file=sys.stderr)
    if drops:
        print(f"dropped {len(drops)} of {len(series_list)} pixels", file=sys.stderr)
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = load_spec(args.spec)
    os.makedirs(args.out_dir, exist_ok=True)
    regions = generate(spec)
    for rid, data in regions.items():
        vectors = [
            # synthetic pixels get stable ids so reruns are byte-identical
            csvio.FeatureVector(f"{rid}_{i:06d}", rid, label, row)
            for i, (label, row) in enumerate(zip(data.labels, data.features))
        ]
        csvio.write_features_csv(
            os.path.join(args.out_dir, f"features_{rid}.csv"),
            vectors,
            spec.n_features,
        )
    priors = {rid: spec.class_priors(rid) for rid in spec.region_ids}
    csvio.write_priors_csv(os.path.join(args.out_dir, "priors.csv"), priors)
    return EXIT_OK


def cmd_experiment(args) -> int:
    values = parse_config_file(args.config) if args.config else {}
    for key in _CONFIG_PARSERS:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            values[key] = _CONFIG_PARSERS[key](flag) if isinstance(flag, str) else flag
    config = RunConfig(**values)
    config.validate()

    vectors = csvio.read_features_csv(config.features)
    if not vectors:
        raise ParseError("feature CSVs contain no rows")
    regions = csvio.datasets_by_region(vectors)
    if config.train_region not in regions:
        raise InvalidParams(
            f"train_region {config.train_region!r} not present in the feature data"
        )
    class_list = regions[config.train_region].class_list
    priors = None
    if config.priors:
        priors = csvio.read_priors_csv(config.priors)
        for rid, cp in priors.items():
            if set(cp.classes) != set(class_list):
                raise ClassMismatch(
                    f"priors for region {rid!r} cover {sorted(cp.classes)}, "
                    f"data has {sorted(class_list)}"
                )

    result = run_transfer_experiment(
        regions,
        config.train_region,
        config.method,
        priors,
        classifier_config=config.classifier_config(),
        seed=config.seed,
        smote_k=config.smote_k,
    )

    os.makedirs(config.out_dir, exist_ok=True)
    for rid, cm in result.per_region.items():
        csvio.write_confusion_csv(
            os.path.join(config.out_dir, f"confusion_{rid}.csv"), cm
        )
    csvio.write_confusion_csv(
        os.path.join(config.out_dir, "confusion_aggregate.csv"), result.aggregate
    )
    if result.shifts:
        csvio.write_shifts_csv(
            os.path.join(config.out_dir, "shifts.csv"), result.shifts
        )
    report = {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "method": result.method,
        "seed": result.seed,
        "train_region": result.train_region_id,
        "config": config.to_jsonable(),
        "aggregate": result.aggregate_metrics.to_jsonable(),
        "regions": {
            rid: {
                "size": regions[rid].features.shape[0],
                **result.per_region_metrics[rid].to_jsonable(),
            }
            for rid in result.per_region
        },
    }
    _json_dump(report, os.path.join(config.out_dir, "metrics.json"))
    return EXIT_OK


def cmd_entropy(args) -> int:
    priors = csvio.read_priors_csv(args.priors)
    lines = ["region_id,entropy_nats"]
    for rid in sorted(priors):
        lines.append(f"{rid},{csvio.fmt(shannon_entropy(priors[rid]))}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_priors_from_areas(args) -> int:
    priors = csvio.read_priors_csv(args.areas)
    csvio.write_priors_csv(args.out, priors)
    return EXIT_OK


def cmd_train(args) -> int:
    vectors = csvio.read_features_csv(
        tuple(p.strip() for p in args.features.split(",") if p.strip())
    )
    regions = csvio.datasets_by_region(vectors)
    if args.train_region not in regions:
        raise InvalidParams(
            f"train_region {args.train_region!r} not present in the feature data"
        )
    train = regions[args.train_region]
    if np.any(train.class_counts() == 0):
        missing = [c for c, n in zip(train.class_list, train.class_counts()) if n == 0]
        raise TrainRegionMissingClass(
            f"training region {args.train_region!r} lacks classes {missing}"
        )
    config = ClassifierConfig(
        kind=args.classifier,
        ridge=args.ridge,
        forest_params=ForestParams(
            n_trees=args.n_trees,
            features_per_split=args.features_per_split or None,
            min_leaf=args.min_leaf,
            max_depth=args.max_depth or None,
            seed=args.seed,
        ),
        workers=args.workers,
    )
    model = fit_classifier(train, config, derive_seed(args.seed, 0))
    modelio.save_model(model, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cropshift",
        description="Prior- and feature-shift adjusted crop classifier transfer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="harmonic features from a time series CSV")
    p.add_argument("input", help="long-format time series CSV")
    p.add_argument("--bands", required=True,
                   help="comma-separated band manifest, e.g. B02,...,GCVI")
    p.add_argument("--out", required=True, help="output wide feature CSV")
    p.add_argument("--anchor-date", default=None,
                   help="ISO date mapped to t=0 when the CSV has a 'date' column")
    p.add_argument("--gcvi-band", default="GCVI")
    p.add_argument("--nir-band", default="NIR")
    p.add_argument("--green-band", default="GREEN")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("synth", help="generate a synthetic world from a spec file")
    p.add_argument("spec", help="JSON world specification")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", help="train on one region, test on the rest")
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--method", default=None, choices=METHODS)
    p.add_argument("--classifier", default=None, choices=("lda", "rf"))
    p.add_argument("--ridge", default=None, type=float)
    p.add_argument("--n-trees", default=None, type=int)
    p.add_argument("--features-per-split", default=None, type=int)
    p.add_argument("--min-leaf", default=None, type=int)
    p.add_argument("--max-depth", default=None, type=int)
    p.add_argument("--smote-k", default=None, type=int)
    p.add_argument("--seed", default=None, type=int)
    p.add_argument("--features", default=None, help="comma-separated feature CSVs")
    p.add_argument("--priors", default=None, help="priors CSV")
    p.add_argument("--train-region", default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--workers", default=None, type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("entropy", help="per-region label entropy in nats")
    p.add_argument("priors", help="priors CSV")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("priors-from-areas",
                       help="convert aggregate areas to class priors")
    p.add_argument("areas", help="CSV region_id,class,area,mean_field_area")
    p.add_argument("--out", required=True, help="output priors CSV")
    p.set_defaults(func=cmd_priors_from_areas)

    p = sub.add_parser("train", help="fit a classifier and save the model")
    p.add_argument("--features", required=True, help="comma-separated feature CSVs")
    p.add_argument("--train-region", required=True)
    p.add_argument("--classifier", default="lda", choices=("lda", "rf"))
    p.add_argument("--ridge", default=1e-6, type=float)
    p.add_argument("--n-trees", default=100, type=int)
    p.add_argument("--features-per-split", default=0, type=int)
    p.add_argument("--min-leaf", default=1, type=int)
    p.add_argument("--max-depth", default=0, type=int)
    p.add_argument("--seed", default=0, type=int)
    p.add_argument("--workers", default=1, type=int)
    p.add_argument("--out", required=True, help="output model file")
    p.set_defaults(func=cmd_train)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _TRAINING_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING_DATA
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIGURATION
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CropshiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
