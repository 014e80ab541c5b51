"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data validation failure. Every
command writing files takes ``--out DIR`` and leaves a ``run.json`` there
echoing the resolved configuration, seed and library versions.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__, gaze, rde, rotation
from .classifiers import ClassifierSpec, SingleClassError
from .data import (DataValidationError, FeatureSchema, ManualFeatureTable, MODALITIES, SynthConfig,
                   generate_synthetic, load_dataset, save_dataset)
from .evaluation import Pipeline, SelectionSpec, SplitPlan, fit_pipeline, run_protocol, write_roc_csv
from .features import STATS, FeatureMatrix, check_stats, build_feature_matrix, manual_feature_matrix
from .metrics import confusion, correlate, roc_auc
from .relevance import FRACTION_PRESETS, permutation_importance, select_top_fraction
from .sequence import SequenceSpec, compare_losses, dataset_to_batch, validation_auc, write_curves
from .splits import stratified_split, stream
from .studies import feature_distributions, feature_timeline, frame_correlation, write_rows

logger = logging.getLogger("veridict")

SEED_ENV = "VERIDICT_SEED"
LSTM_LENGTH_PRESETS = {"BxL": 40}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- helpers

def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, args, seed: int | None):
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    doc = {"command": args.command, "config": config, "seed": seed,
           "versions": {"veridict": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                        "python": platform.python_version()}}
    (out / "run.json").write_text(json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n",
                                  encoding="utf-8")


def _write_json(path: Path, doc):
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _schema(args) -> FeatureSchema:
    aus = tuple(a for a in (args.aus or "").split(",") if a) or FeatureSchema().au_names
    return FeatureSchema(au_names=aus, gaze_unit=args.gaze_unit, pose_unit=args.pose_unit)


def _stats(args) -> tuple[str, ...]:
    stats = tuple(s for s in args.stats.split(",") if s)
    try:
        return check_stats(stats)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _modalities(args) -> tuple[str, ...] | None:
    spec = getattr(args, "modalities", None) or "all"
    groups = [g.strip() for g in spec.split(",") if g.strip()]
    if "all" in groups:
        if len(groups) > 1:
            raise UsageError("--modalities 'all' cannot be combined with other groups")
        return None
    bad = [g for g in groups if g not in MODALITIES]
    if bad or not groups:
        raise UsageError(f"unknown modality groups {bad}; choose from {MODALITIES} or 'all'")
    return tuple(groups)


def _feature_matrix(args) -> FeatureMatrix:
    sources = [s for s in ("data", "features", "manual") if getattr(args, s, None)]
    if len(sources) != 1:
        raise UsageError("give exactly one of --data, --features, --manual")
    groups = _modalities(args)
    if groups is not None and args.manual:
        raise UsageError("--modalities does not apply to manual feature tables")
    if args.data:
        fm = build_feature_matrix(load_dataset(args.data, _schema(args)), _stats(args))
    elif args.features:
        fm = FeatureMatrix.read_csv(args.features)
    else:
        fm = manual_feature_matrix(ManualFeatureTable.read_csv(args.manual))
    if groups is not None:
        fm = fm.filter_modalities(groups)
    return fm


def _classifier(args) -> ClassifierSpec | SequenceSpec:
    if args.clf == "lstm":
        length = args.seq_len or LSTM_LENGTH_PRESETS.get(args.preset, 200)
        return SequenceSpec(length=length, hidden=args.hidden, loss_kind=args.loss, lr=args.lr,
                            momentum=args.momentum, epochs=args.epochs or 100)
    return ClassifierSpec(args.clf, c=args.c, epochs=args.epochs or 1000, n_trees=args.n_trees,
                          max_depth=args.max_depth, mtry=args.mtry, n_jobs=args.jobs)


def _selection(args) -> SelectionSpec | None:
    fraction = args.select
    if fraction is None and args.preset:
        fraction = FRACTION_PRESETS[args.preset]
    if fraction is not None and not 0.0 < fraction <= 1.0:
        raise UsageError("--select must lie in (0, 1]")
    if args.pca is not None and not 0.0 < args.pca <= 1.0:
        raise UsageError("--pca must lie in (0, 1]")
    if fraction is None and args.pca is None:
        return None
    return SelectionSpec(fraction=fraction, ranker=ClassifierSpec(args.rank_clf),
                         n_repeats=args.rank_repeats, pca_threshold=args.pca)


def _print(doc):
    print(json.dumps(doc, indent=1, sort_keys=True))


# --------------------------------------------------------------- commands

def cmd_synth(args):
    seed = _resolve_seed(args)
    try:
        cfg = SynthConfig(n_samples=args.n_samples, n_frames=args.n_frames,
                          deception_fraction=args.deception_fraction, effect_deg=args.effect,
                          arousal_var_factor=args.arousal_factor, fps=args.fps, dataset_id=args.dataset_id)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _outdir(args)
    save_dataset(generate_synthetic(cfg, seed), out)
    _write_manifest(out, args, seed)
    print(f"wrote {cfg.n_samples} samples to {out}")


def cmd_featstats(args):
    fm = _feature_matrix(args)
    out = _outdir(args)
    fm.write_csv(out / "features.csv")
    _write_manifest(out, args, None)
    print(f"{fm.shape[0]} samples x {fm.shape[1]} features -> {out / 'features.csv'}")


def cmd_rank(args):
    seed = _resolve_seed(args)
    fm = _feature_matrix(args)
    out = _outdir(args)
    kinds = ["svm", "rf"] if args.clf == "both" else [args.clf]
    rankings = {}
    for kind in kinds:
        rankings[kind] = permutation_importance(fm, ClassifierSpec(kind, n_jobs=args.jobs), args.repeats, seed)
        rankings[kind].write_csv(out / f"ranking_{kind}.csv")
    fraction = args.fraction or FRACTION_PRESETS.get(args.preset, 0.25)
    # selection follows the SVM ranking whenever it was computed
    canonical = rankings.get("svm", rankings[kinds[0]])
    top = select_top_fraction(canonical, fraction)
    (out / "top_features.txt").write_text("\n".join(top) + "\n", encoding="utf-8")
    _write_manifest(out, args, seed)
    print(f"top {len(top)} of {fm.shape[1]} features ({fraction:.0%}):")
    for name in top:
        print(f"  {name}\t{canonical.importance(name):+.4f}")


def cmd_train(args):
    seed = _resolve_seed(args)
    fm = _feature_matrix(args)
    if args.clf == "lstm":
        raise UsageError("train supports trivial, svm and rf; use losscompare for the sequence model")
    if args.pca is not None:
        raise UsageError("PCA pipelines are evaluation-only")
    pipe = fit_pipeline(fm, _classifier(args), _selection(args), seed)
    out = _outdir(args)
    _write_json(out / "model.json", pipe.to_dict())
    _write_manifest(out, args, seed)
    print(f"trained {args.clf} on {fm.shape[0]} samples, {len(pipe.columns)} features -> {out / 'model.json'}")


def _plan(args, kind=None) -> SplitPlan:
    try:
        return SplitPlan(kind or args.protocol, args.train_frac, args.repeats, _resolve_seed(args),
                         not args.unstratified)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _report(report, out: Path, args):
    report.write_json(out / "report.json")
    report.write_repeats_csv(out / "repeats.csv")
    if report.roc is not None:
        report.write_roc_csv(out / "roc.csv")
    _write_manifest(out, args, report.protocol["plan"]["seed"])
    agg = report.aggregate
    summary = {"n_repeats": len(report.repeats), "redraws": report.redraws,
               "accuracy_mean": agg["accuracy"]["mean"], "accuracy_median": agg["accuracy"]["median"],
               "accuracy_std": agg["accuracy"]["std"], "f1_pooled": report.confusion.f1,
               "mcc_pooled": report.confusion.mcc, "auc_pooled": report.auc}
    _print(summary)


def _eval_inputs(args):
    clf = _classifier(args)
    if isinstance(clf, SequenceSpec):
        if not args.data:
            raise UsageError("the lstm classifier needs --data")
        if _modalities(args) is not None:
            raise UsageError("--modalities is not supported for lstm")
        return load_dataset(args.data, _schema(args)), clf
    return _feature_matrix(args), clf


def cmd_evaluate(args):
    data, clf = _eval_inputs(args)
    report = run_protocol(data, _plan(args), clf, _selection(args), n_jobs=args.jobs)
    _report(report, _outdir(args), args)


def cmd_crosseval(args):
    clf = _classifier(args)
    if isinstance(clf, SequenceSpec):
        train, test = load_dataset(args.train, _schema(args)), load_dataset(args.test, _schema(args))
    else:
        stats = _stats(args)
        train = build_feature_matrix(load_dataset(args.train, _schema(args)), stats)
        test = build_feature_matrix(load_dataset(args.test, _schema(args)), stats)
        groups = _modalities(args)
        if groups is not None:
            train, test = train.filter_modalities(groups), test.filter_modalities(groups)
    report = run_protocol(train, _plan(args, "cross-dataset"), clf, _selection(args), test_data=test)
    _report(report, _outdir(args), args)


def cmd_roc(args):
    out = _outdir(args)
    if args.model:
        doc = json.loads(Path(args.model).read_text(encoding="utf-8"))
        pipe = Pipeline.from_dict(doc)
        fm = _feature_matrix(args)
        scores = pipe.score(fm)
        y = fm.labels
        c = confusion(y, (scores > pipe.model.threshold).astype(int))
        if len(np.unique(y)) < 2:
            raise DataValidationError("ROC needs both labels in the evaluation data")
        roc = roc_auc(scores, y)
        write_roc_csv(roc, out / "roc.csv")
        summary = {"auc": roc.auc, "f1": c.f1, "mcc": c.mcc, "accuracy": c.accuracy, **c.to_dict()}
        _write_json(out / "metrics.json", summary)
        _write_manifest(out, args, None)
        _print(summary)
        return
    data, clf = _eval_inputs(args)
    report = run_protocol(data, _plan(args), clf, _selection(args), n_jobs=args.jobs)
    _report(report, out, args)


def cmd_losscompare(args):
    seed = _resolve_seed(args)
    ds = load_dataset(args.data, _schema(args))
    X, y = dataset_to_batch(ds, args.seq_len)
    train, val = stratified_split(y, args.train_frac, stream(seed, "losscompare"))
    kinds = tuple(k.strip().upper() for k in args.losses.split(","))
    results = compare_losses(X[train], y[train], X[val], y[val], hidden=args.hidden, lr=args.lr,
                             momentum=args.momentum, epochs=args.epochs, seed=seed, kinds=kinds)
    out = _outdir(args)
    write_curves(results, out / "curves.csv")
    _write_manifest(out, args, seed)
    summary = {k: {"final_train_loss": r.curve[-1].train_loss, "final_val_accuracy": r.curve[-1].val_accuracy,
                   "final_val_ccc": r.curve[-1].val_ccc, "val_auc": validation_auc(r, X[val], y[val])}
               for k, r in results.items()}
    _print(summary)


def cmd_distributions(args):
    ds = load_dataset(args.data, _schema(args))
    out = _outdir(args)
    write_rows(feature_distributions(ds), out / "distributions.csv")
    _write_manifest(out, args, None)
    print(f"wrote {out / 'distributions.csv'}")


def cmd_timeline(args):
    ds = load_dataset(args.data, _schema(args))
    match = [s for s in ds.samples if s.sample_id == args.sample]
    if not match:
        raise DataValidationError(f"no sample {args.sample!r} in {args.data}")
    feats = [f for f in (args.features_list or "").split(",") if f] or None
    try:
        rows = feature_timeline(match[0], feats)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _outdir(args)
    write_rows(rows, out / f"timeline_{args.sample}.csv")
    _write_manifest(out, args, None)
    print(f"wrote {len(rows)} frames to {out / f'timeline_{args.sample}.csv'}")


def cmd_correlate(args):
    if args.data:
        fit = frame_correlation(load_dataset(args.data, _schema(args)), args.x, args.y)
    elif args.csv:
        import csv
        with open(args.csv, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        try:
            fit = correlate([float(r[args.x]) for r in rows], [float(r[args.y]) for r in rows])
        except KeyError as exc:
            raise DataValidationError(f"column {exc} not in {args.csv}") from None
    else:
        raise UsageError("give --data or --csv")
    _print({"x": args.x, "y": args.y, "r": fit.r, "slope": fit.slope, "intercept": fit.intercept, "n": fit.n})


def cmd_rde_ledger(args):
    records = rde.read_records(args.records)
    ledger = rde.build_ledger(records)
    doc = ledger.to_dict()
    doc["blind"] = rde.estimate_lie_rate_blind(rde.claim_histogram(records)).to_dict()
    if args.out:
        out = _outdir(args)
        _write_json(out / "ledger.json", doc)
        _write_manifest(out, args, None)
    print(f"truthful={ledger.truthful} overclaimed={ledger.overclaimed} "
          f"underclaimed={ledger.underclaimed} no_roll={ledger.no_roll} "
          f"honest_fraction={ledger.honest_fraction:.1%}")


def cmd_rde_simulate(args):
    seed = _resolve_seed(args)
    try:
        study = rde.deviation_from_ideal(args.rolls, args.sims, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out:
        out = _outdir(args)
        study.write_csv(out / "simulations.csv")
        _write_manifest(out, args, seed)
    print(f"{study.mean:.2f} ± {study.std:.2f} %  (rolls={args.rolls}, sims={args.sims}, seed={seed})")


def cmd_rde_blind(args):
    if args.records:
        hist = rde.claim_histogram(rde.read_records(args.records))
    else:
        hist = [int(v) for v in args.counts.split(",")]
    try:
        est = rde.estimate_lie_rate_blind(hist)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _print(est.to_dict())


def cmd_rotmath_check(args):
    res = rotation.self_check(args.n, _resolve_seed(args))
    ok = res["orthonormality"] < rotation.ORTHO_TOL and res["euler_round_trip_deg"] < 1e-6
    _print({**res, "ok": ok})
    return 0 if ok else 3


def cmd_gaze_selfcheck(args):
    err = gaze.self_check(args.n, _resolve_seed(args))
    ok = err < 1e-6
    _print({"max_rel_grad_error": err, "ok": ok})
    return 0 if ok else 3


def cmd_selfcheck(args):
    r1 = cmd_rotmath_check(argparse.Namespace(n=200, seed=args.seed))
    r2 = cmd_gaze_selfcheck(argparse.Namespace(n=20, seed=args.seed))
    return max(r1 or 0, r2 or 0)


# ----------------------------------------------------------------- parser

def _add_schema(p):
    p.add_argument("--aus", help="comma-separated AU columns (default AU06,AU10,AU12,AU14,AU17)")
    p.add_argument("--gaze-unit", choices=("rad", "deg"), default="rad")
    p.add_argument("--pose-unit", choices=("rad", "deg"), default="deg")


def _add_source(p):
    p.add_argument("--data", help="dataset directory with manifest.jsonl")
    p.add_argument("--features", help="feature-matrix CSV written by featstats")
    p.add_argument("--manual", help="manual feature table CSV (sample_id,label,features...)")
    p.add_argument("--stats", default=",".join(STATS))
    p.add_argument("--modalities", default="all", help="comma-separated subset of gaze,au,pose,emotion or 'all'")
    _add_schema(p)


def _add_clf(p, with_lstm=True):
    p.add_argument("--clf", default="svm", choices=("trivial", "svm", "rf") + (("lstm",) if with_lstm else ()))
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--mtry", type=int, default=None)
    p.add_argument("--select", type=float, default=None, help="keep this top fraction of ranked features")
    p.add_argument("--pca", type=float, default=None, help="PCA explained-variance threshold")
    p.add_argument("--rank-clf", default="svm", choices=("svm", "rf"))
    p.add_argument("--rank-repeats", type=int, default=10)
    p.add_argument("--preset", choices=sorted(FRACTION_PRESETS), default=None)
    p.add_argument("--seq-len", type=int, default=None)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--loss", default="MAE", choices=("MAE", "BCE", "MSE"))
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)


def _add_plan(p, protocol=True):
    if protocol:
        p.add_argument("--protocol", default="repeated-random",
                       choices=("repeated-random", "leave-one-out", "resubstitution"))
    p.add_argument("--repeats", type=int, default=50)
    p.add_argument("--train-frac", type=float, default=0.7)
    p.add_argument("--unstratified", action="store_true")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = _Parser(prog="veridict", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file of option defaults for the chosen command")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    cmds = {}

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        cmds[name] = p
        return p

    p = add("synth", cmd_synth, "write a seeded synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n-samples", type=int, default=200)
    p.add_argument("--n-frames", type=int, default=100)
    p.add_argument("--deception-fraction", type=float, default=0.5)
    p.add_argument("--effect", type=float, default=15.0, help="head-yaw shift of deceptive samples (deg)")
    p.add_argument("--arousal-factor", type=float, default=1.5)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--dataset-id", default="synthetic")
    p.add_argument("--seed", type=int, default=None)

    p = add("featstats", cmd_featstats, "statistical feature matrix (features.csv)")
    _add_source(p)
    p.add_argument("--out", required=True)

    p = add("rank", cmd_rank, "permutation feature ranking and top-fraction list")
    _add_source(p)
    p.add_argument("--clf", default="svm", choices=("svm", "rf", "both"))
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--fraction", type=float, default=None)
    p.add_argument("--preset", choices=sorted(FRACTION_PRESETS), default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, "fit a classifier on all samples and save it")
    _add_source(p)
    _add_clf(p, with_lstm=False)
    p.add_argument("--out", required=True)

    for name, func, help_ in (("evaluate", cmd_evaluate, "intra-dataset evaluation protocol"),
                              ("roc", cmd_roc, "ROC points (roc.csv) from a protocol run or a saved model")):
        p = add(name, func, help_)
        _add_source(p)
        _add_clf(p)
        _add_plan(p)
        p.add_argument("--out", required=True)
        if name == "roc":
            p.add_argument("--model", help="score a saved model.json instead of running a protocol")

    p = add("crosseval", cmd_crosseval, "train on one dataset, test on another")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--stats", default=",".join(STATS))
    p.add_argument("--modalities", default="all")
    _add_schema(p)
    _add_clf(p)
    _add_plan(p, protocol=False)
    p.add_argument("--out", required=True)

    p = add("losscompare", cmd_losscompare, "train the sequence model with MAE/BCE/MSE (curves.csv)")
    p.add_argument("--data", required=True)
    _add_schema(p)
    p.add_argument("--losses", default="MAE,BCE,MSE")
    p.add_argument("--seq-len", type=int, default=200)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--train-frac", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)

    p = add("distributions", cmd_distributions, "per-label feature distribution summary")
    p.add_argument("--data", required=True)
    _add_schema(p)
    p.add_argument("--out", required=True)

    p = add("timeline", cmd_timeline, "per-frame feature series of one sample")
    p.add_argument("--data", required=True)
    p.add_argument("--sample", required=True)
    p.add_argument("--features-list", dest="features_list", help="comma-separated base features")
    _add_schema(p)
    p.add_argument("--out", required=True)

    p = add("correlate", cmd_correlate, "Pearson r and regression line between two series")
    p.add_argument("--data")
    p.add_argument("--csv")
    p.add_argument("--x", default="AU12")
    p.add_argument("--y", default="AU06")
    _add_schema(p)

    p = add("rde", None, "rolling-dice experiment analytics")
    rsub = p.add_subparsers(dest="rde_command", required=True, parser_class=_Parser)
    q = rsub.add_parser("ledger", help="claim-vs-actual ledger from subject_id,actual,claimed CSV")
    q.add_argument("--records", required=True)
    q.add_argument("--out")
    q.set_defaults(func=cmd_rde_ledger)
    q = rsub.add_parser("simulate", help="deviation of fair-die face frequencies from uniform")
    q.add_argument("--rolls", type=int, required=True)
    q.add_argument("--sims", type=int, default=50)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--out")
    q.set_defaults(func=cmd_rde_simulate)
    q = rsub.add_parser("blind", help="excess claim mass without the actual rolls")
    q.add_argument("--records")
    q.add_argument("--counts", help="six comma-separated claim counts for faces 1..6")
    q.set_defaults(func=cmd_rde_blind)

    p = add("rotmath", None, "rotation utilities")
    rsub = p.add_subparsers(dest="rot_command", required=True, parser_class=_Parser)
    q = rsub.add_parser("check", help="orthonormality and Euler round-trip self-test")
    q.add_argument("--n", type=int, default=1000)
    q.add_argument("--seed", type=int, default=None)
    q.set_defaults(func=cmd_rotmath_check)

    p = add("gaze", None, "gaze decoding utilities")
    rsub = p.add_subparsers(dest="gaze_command", required=True, parser_class=_Parser)
    q = rsub.add_parser("selfcheck", help="combined-loss gradient vs finite differences")
    q.add_argument("--n", type=int, default=100)
    q.add_argument("--seed", type=int, default=None)
    q.set_defaults(func=cmd_gaze_selfcheck)

    p = add("selfcheck", cmd_selfcheck, "run the rotation and gaze self-tests")
    p.add_argument("--seed", type=int, default=None)
    return parser, cmds


def _apply_config(argv, parser, cmds):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    command = next((a for a in argv if a in cmds), None)
    if command is None:
        return
    target = cmds[command]
    valid = {a.dest for a in target._actions}
    dests = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(dests) - valid)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {unknown}")
    target.set_defaults(**dests)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser, cmds = build_parser()
        _apply_config(argv, parser, cmds)
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.func is None:
            raise UsageError(f"{args.command} needs a subcommand")
        return int(args.func(args) or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataValidationError, SingleClassError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
