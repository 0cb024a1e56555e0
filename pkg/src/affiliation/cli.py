"""Command line: synth -> extract -> evaluate / rfe -> bayes -> report.

Results go to ``--out``; progress and warnings go to stderr. Exit codes:
0 success, 1 input or configuration error, 2 numeric or degenerate failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

from .bayes import BayesConfig, robustness_sweep
from .core import SchemaError, read_feature_table, write_feature_table
from .evaluation import make_split_plan, rfe_cv, results_document, subsample_plan
from .experiment import (
    BASELINES, SCORE_KINDS, ExperimentConfig, bayes_document, cell_scores, compare_cells, plot_scores,
    run_experiment, write_table,
)
from .learn.imputation import ImputationError
from .learn.models import ConfigError, ModelConfig
from .lexicon import LexiconError, load_lexicon
from .pipeline import InputError, extract_corpus
from .synth import SynthConfig, generate, write_corpus

log = logging.getLogger("affiliation")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class NumericFailure(RuntimeError):
    """A computation finished without a usable result (e.g. every split failed)."""


def _timestamp(args) -> str | None:
    if args.no_timestamp:
        return None
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def _load_config(args) -> dict:
    if not args.config:
        return {}
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{args.config}: cannot read config ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{args.config}: config must be a JSON object")
    return cfg


def _write_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, allow_nan=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: cannot read JSON ({exc})") from None


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    cfg = dict(cfg.get("synth", cfg))
    if args.seed is not None:
        cfg["seed"] = args.seed
    for key in ("n_dyads", "signal_strength"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    try:
        config = SynthConfig.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid synth config: {exc}") from None
    if not args.out:
        raise ConfigError("synth needs --out DIR")
    sessions, _ = generate(config)
    paths = write_corpus(sessions, args.out, audio=args.audio)
    log.info("wrote %d sessions to %s", len(paths), args.out)
    return EXIT_OK


def cmd_extract(args) -> int:
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    data = extract_corpus(args.manifest_dir, lexicon)
    if not args.out:
        raise ConfigError("extract needs --out FILE.csv")
    write_feature_table(data, args.out)
    log.info("wrote %d participants x %d features to %s", len(data), len(data.schema), args.out)
    return EXIT_OK


def _experiment_config(args) -> ExperimentConfig:
    raw = _load_config(args)
    base = Path(args.config).parent if args.config else None
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.repeats is not None:
        raw["repeats"] = args.repeats
    if args.no_tune:
        raw["tune"] = False
    if args.imputation is not None:
        raw["imputation"] = args.imputation
    if args.splits is not None:
        raw["splits"] = args.splits
    if getattr(args, "rfe", None):
        raw["rfe"] = str(Path(args.rfe).resolve())
    try:
        return ExperimentConfig.from_dict(raw, base)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from None


def cmd_evaluate(args) -> int:
    data = read_feature_table(args.table)
    cfg = _experiment_config(args)
    doc = run_experiment(data, cfg, jobs=args.jobs, timestamp=_timestamp(args), progress=log.info)
    _write_json(doc, args.out)
    failed = [name for name, c in doc["cells"].items() if c["cv"]["summary"]["n_scores"] == 0]
    if failed:
        log.error("no usable scores for: %s", ", ".join(failed))
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_rfe(args) -> int:
    data = read_feature_table(args.table)
    raw = _load_config(args)
    seed = args.seed if args.seed is not None else int(raw.get("seed", 0))
    repeats = args.repeats if args.repeats is not None else int(raw.get("repeats", 10))
    splits = args.splits if args.splits is not None else raw.get("splits")
    plan = make_split_plan(data)
    if splits is not None:
        plan = subsample_plan(plan, int(splits), seed)
    res = rfe_cv(data, plan, repeats, seed, jobs=args.jobs,
                 config=ModelConfig("forest", "regress", seed=seed))
    config = {"repeats": repeats, "seed": seed, "splits": splits}
    doc = results_document(config, {"rfe": res.to_dict()}, _timestamp(args))
    doc["optimal_features"] = list(res.optimal_features)
    _write_json(doc, args.out)
    return EXIT_OK


def _bayes_config(args, raw: dict) -> BayesConfig:
    b = dict(raw.get("bayes", {}))
    if args.prior_width is not None:
        b["prior_width"] = args.prior_width
    if args.direction is not None:
        b["direction"] = args.direction
    if "robustness_widths" in b:
        b["robustness_widths"] = tuple(b["robustness_widths"])
    try:
        return BayesConfig(**b)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid bayes config: {exc}") from None


def cmd_bayes(args) -> int:
    raw = _load_config(args)
    bayes = _bayes_config(args, raw)
    results = _read_json(args.scores)
    if "cells" not in results:
        raise InputError(f"{args.scores}: not an evaluate results file")
    try:
        rows = compare_cells(results, bayes, args.scores_kind, args.baseline)
    except (KeyError, ValueError) as exc:
        raise InputError(f"{args.scores}: malformed results ({exc})") from None
    robustness = {}
    if args.robustness:
        for name, cell, res in rows:
            if isinstance(res, str):
                continue
            scores = cell_scores(cell, args.scores_kind)
            base = args.baseline if args.baseline is not None else BASELINES[cell["task"]]
            robustness[name] = robustness_sweep(scores, base, bayes.robustness_widths, bayes.direction)
    _write_json(bayes_document(rows, bayes, args.scores_kind, robustness, args.baseline), args.out)
    return _report_undefined(rows)


def _report_undefined(rows) -> int:
    bad = [(name, res) for name, _, res in rows if isinstance(res, str)]
    for name, msg in bad:
        log.error("%s: %s", name, msg)
    return EXIT_NUMERIC if bad else EXIT_OK


def cmd_report(args) -> int:
    raw = _load_config(args)
    bayes = _bayes_config(args, raw)
    results = _read_json(args.results)
    if "cells" not in results:
        raise InputError(f"{args.results}: not an evaluate results file")
    if not args.out:
        raise ConfigError("report needs --out DIR")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        write_table(results, out / "comparison.csv", bayes, args.scores_kind)
        plot_scores(results, out / "scores.png", args.scores_kind)
    except (KeyError, ValueError) as exc:
        raise InputError(f"{args.results}: malformed results ({exc})") from None
    log.info("wrote %s and %s", out / "comparison.csv", out / "scores.png")
    return _report_undefined(compare_cells(results, bayes, args.scores_kind))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output path (file or directory, per subcommand)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for CV repetitions")
    common.add_argument("--no-timestamp", action="store_true", help="omit timestamps from JSON output")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="affiliation", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    s.add_argument("--n-dyads", dest="n_dyads", type=int)
    s.add_argument("--signal-strength", dest="signal_strength", type=float)
    s.add_argument("--audio", choices=("wav", "timeline"), default="wav",
                   help="render speech as WAV (default) or write timeline CSVs")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("extract", parents=[common], help="corpus -> 75-feature table CSV")
    s.add_argument("manifest_dir")
    s.add_argument("--lexicon", help="lexicon file (default: bundled demo lexicon)")
    s.set_defaults(func=cmd_extract)

    def cv_flags(s):
        s.add_argument("table", help="feature table CSV")
        s.add_argument("--repeats", type=int, help="CV repetitions (default 10)")
        s.add_argument("--splits", type=int, help="evaluate a random subset of this many splits")

    s = sub.add_parser("evaluate", parents=[common], help="repeated leave-two-dyads-out CV")
    cv_flags(s)
    s.add_argument("--no-tune", action="store_true", help="skip the inner grid search")
    s.add_argument("--imputation", choices=("fold", "global"))
    s.add_argument("--rfe", help="RFE result JSON providing the 'best' feature set")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("rfe", parents=[common], help="recursive feature elimination")
    cv_flags(s)
    s.set_defaults(func=cmd_rfe)

    def bayes_flags(s):
        s.add_argument("--prior-width", type=float)
        s.add_argument("--direction", choices=("greater", "two_sided"))
        s.add_argument("--scores", dest="scores_kind", choices=SCORE_KINDS, default="pooled",
                       help="pooled: one score per repetition (default); split: every split score")

    s = sub.add_parser("bayes", parents=[common], help="JZS tests of evaluate results vs baselines")
    s.add_argument("scores", help="results JSON from evaluate")
    s.add_argument("--baseline", type=float, help="override the per-task baseline")
    s.add_argument("--robustness", action="store_true", help="add a prior-width sweep")
    bayes_flags(s)
    s.set_defaults(func=cmd_bayes)

    s = sub.add_parser("report", parents=[common], help="comparison CSV and score plot")
    s.add_argument("results", help="results JSON from evaluate")
    bayes_flags(s)
    s.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (InputError, SchemaError, ConfigError, LexiconError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericFailure, ImputationError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
