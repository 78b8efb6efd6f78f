"""Command-line surface wiring data -> models -> evaluation -> interpretation.

Each command writes exactly one output file (split writes the two halves of
the partition), atomically (temp file + rename), and prints a one-line
summary. Exit codes: 0 success, 1 usage error, 2 data/model error. The
default seed is 42, overridable through the MODESWITCH_SEED environment
variable; an explicit --seed always wins. A JSON manifest can chain
commands for reproducible pipelines.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import evaluate, interpret, svg, synth
from .dataset import (DataError, Dataset, crosstab, load_csv, stratified_split,
                      to_csv_text, vif)
from .models import MODEL_KINDS, fit, load_model, model_to_json

ENV_SEED = "MODESWITCH_SEED"
FORMATS = ("csv", "json", "svg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_seed() -> int:
    raw = os.environ.get(ENV_SEED)
    if raw is None:
        return 42
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{ENV_SEED} must be an integer, got {raw!r}") from None


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".modeswitch-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser() -> _Parser:
    parser = _Parser(prog="modeswitch",
                     description="train and interpret mode-switching classifiers")
    parser.add_argument("--manifest", help="JSON file with a list of commands to run")
    sub = parser.add_subparsers(dest="command")

    def add(name, help_, **flags):
        p = sub.add_parser(name, help=help_)
        for flag, kwargs in flags.items():
            p.add_argument(f"--{flag.replace('_', '-')}", **kwargs)
        p.add_argument("--seed", type=int, default=None,
                       help="random seed (default 42; env MODESWITCH_SEED)")
        p.add_argument("--threads", type=int, default=1,
                       help="parallelism cap (current implementation is "
                            "single-threaded; results never depend on this)")
        return p

    out = {"out": dict(required=True, help="output file")}
    data = {"data": dict(required=True, help="dataset CSV")}
    model = {"model": dict(required=True, help="trained model JSON")}
    fmt = {"format": dict(choices=FORMATS, default=None, help="output format "
                          "(default from --out extension)")}

    add("synth", "generate a synthetic survey dataset", **out,
        rows=dict(type=int, default=8141), config=dict(help="SynthConfig JSON file"))
    add("split", "stratified train/test split",
        **data, out_train=dict(required=True), out_test=dict(required=True),
        test_fraction=dict(type=float, default=0.10))
    add("vif", "variance inflation factors", **data, **out, **fmt)
    add("crosstab", "current mode x switching decision counts", **data, **out, **fmt)
    add("cv", "cross-validate model kinds and select the best", **data, **out, **fmt,
        k=dict(type=int, default=10),
        kinds=dict(default=",".join(MODEL_KINDS), help="comma-separated kinds"))
    add("train", "fit one model and save it", **data, **out,
        model_kind=dict(required=True, choices=MODEL_KINDS))
    add("evaluate", "score a model on a dataset, segmented by current mode",
        **model, **data, **out, **fmt)
    for cmd, help_ in (("pdp", "partial dependence of the average prediction"),
                       ("ice", "individual conditional expectation curves"),
                       ("cpdp", "PDP restricted to one segment"),
                       ("cipdp", "ICE curves restricted to one segment")):
        extra = {}
        if cmd in ("cpdp", "cipdp"):
            extra = {"mode": dict(help="current-mode segment (Car/Walk/Bike/Bus)"),
                     "segment_by": dict(help="conditioning feature name"),
                     "value": dict(type=float, help="conditioning feature value")}
        add(cmd, help_, **model, **data, **out, **fmt,
            feature=dict(required=True), grid_points=dict(type=int, default=50),
            center=dict(action="store_true", help="center curves at --anchor"),
            anchor=dict(type=int, default=0, help="grid index for centering"),
            max_curves=dict(type=int, default=100,
                            help="curve export cap (averages always use all rows)"),
            **extra)
    add("slopes", "approximate global slopes of PDPs and CPDPs", **model, **data,
        **out, **fmt, features=dict(default=",".join(interpret.LEVEL_OF_SERVICE)))
    add("effects", "marginal effects and elasticities by segment", **model, **data,
        **out, **fmt)
    return parser


def _pick_format(args, allowed=FORMATS) -> str:
    fmt = getattr(args, "format", None)
    if fmt is None:
        ext = os.path.splitext(args.out)[1].lstrip(".").lower()
        fmt = ext if ext in allowed else allowed[0]
    if fmt not in allowed:
        raise UsageError(f"format {fmt!r} not supported here (allowed: {allowed})")
    return fmt


def _load_data(path) -> Dataset:
    if not os.path.exists(path):
        raise DataError(f"no such data file: {path}")
    return load_csv(path, synth.table1_schema())


def _load_model(path):
    if not os.path.exists(path):
        raise DataError(f"no such model file: {path}")
    return load_model(path)


def _condition(args, data) -> interpret.Condition | None:
    if getattr(args, "mode", None):
        return interpret.mode_condition(data, args.mode)
    if getattr(args, "segment_by", None):
        if getattr(args, "value", None) is None:
            raise UsageError("--segment-by requires --value")
        return interpret.Condition.equals(args.segment_by, args.value)
    return None


def _seed(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _cmd_synth(args) -> str:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = synth.config_from_json(fh.read())
        if args.seed is not None or args.rows != 8141:
            config = synth.SynthConfig(
                n_rows=args.rows, seed=_seed(args),
                marginal_targets=config.marginal_targets,
                mode_shares=config.mode_shares, utility_spec=config.utility_spec)
    else:
        config = synth.default_config(args.rows, _seed(args))
    data = synth.synthesize(config)
    _write_atomic(args.out, to_csv_text(data))
    return (f"synth: wrote {data.n_rows} rows to {args.out} "
            f"(switching share {100 * data.y.mean():.2f}%)")


def _cmd_split(args) -> str:
    data = _load_data(args.data)
    train, test = stratified_split(data, args.test_fraction, _seed(args))
    _write_atomic(args.out_train, to_csv_text(train))
    _write_atomic(args.out_test, to_csv_text(test))
    return (f"split: {train.n_rows} train rows -> {args.out_train}, "
            f"{test.n_rows} test rows -> {args.out_test}")


def _cmd_vif(args) -> str:
    data = _load_data(args.data)
    values = vif(data)
    fmt = _pick_format(args, ("csv", "json"))
    if fmt == "json":
        # +inf (perfect collinearity) serializes as Infinity, which the
        # python json reader round-trips
        text = json.dumps(values, indent=2, sort_keys=True)
    else:
        lines = ["feature,vif"] + [f"{k},{v!r}" for k, v in values.items()]
        text = "\n".join(lines) + "\n"
    _write_atomic(args.out, text)
    worst = max(values, key=lambda k: values[k])
    return f"vif: wrote {len(values)} features to {args.out} " \
           f"(max {values[worst]:.4f} at {worst})"


def _cmd_crosstab(args) -> str:
    data = _load_data(args.data)
    ct = crosstab(data)
    fmt = _pick_format(args, ("csv", "json"))
    if fmt == "json":
        text = json.dumps({"modes": list(ct.modes),
                           "counts": ct.counts.tolist()}, indent=2, sort_keys=True)
    else:
        lines = ["mode,stay,switch"]
        for mode, (stay, switch) in zip(ct.modes, ct.counts):
            lines.append(f"{mode},{stay},{switch}")
        text = "\n".join(lines) + "\n"
    _write_atomic(args.out, text)
    return f"crosstab: wrote {ct.counts.sum()} decisions over {len(ct.modes)} " \
           f"modes to {args.out}"


def _cmd_cv(args) -> str:
    data = _load_data(args.data)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for k in kinds:
        if k not in MODEL_KINDS:
            raise UsageError(f"unknown model kind {k!r}")
    report = evaluate.cross_validate(data, args.k, kinds, _seed(args))
    fmt = _pick_format(args, ("json", "csv"))
    text = evaluate.cv_report_json(report) if fmt == "json" \
        else evaluate.cv_report_csv(report)
    _write_atomic(args.out, text)
    best = report.mean_accuracy[report.selected_model]
    return (f"cv: {len(kinds)} kinds x {args.k} folds -> {args.out}; selected "
            f"{report.selected_model} (mean accuracy {best:.4f})")


def _cmd_train(args) -> str:
    data = _load_data(args.data)
    model = fit(args.model_kind, data, seed=_seed(args))
    _write_atomic(args.out, model_to_json(model))
    return f"train: fitted {args.model_kind} on {data.n_rows} rows -> {args.out}"


def _cmd_evaluate(args) -> str:
    model = _load_model(args.model)
    data = _load_data(args.data)
    reports = evaluate.segment_report(model, data)
    fmt = _pick_format(args, ("json", "csv"))
    text = evaluate.segment_report_json(reports) if fmt == "json" \
        else evaluate.segment_report_csv(reports)
    _write_atomic(args.out, text)
    overall = reports["All"]
    return (f"evaluate: accuracy {overall.overall_accuracy:.4f}, market-share "
            f"L1 {overall.l1_norm:.4f} on {overall.n} rows -> {args.out}")


def _cmd_curves(args, averaged_only: bool) -> str:
    model = _load_model(args.model)
    data = _load_data(args.data)
    grid = interpret.make_grid(data, args.feature, args.grid_points)
    condition = _condition(args, data)
    if args.command in ("cpdp", "cipdp") and condition is None:
        raise UsageError(f"{args.command} requires --mode or --segment-by/--value")
    family = interpret.ice(model, data, grid, condition)
    if args.center:
        family = interpret.center_curves(family, args.anchor)
    fmt = _pick_format(args)
    if fmt == "svg":
        text = svg.render_curves(family, max_curves=0 if averaged_only
                                 else args.max_curves, seed=_seed(args))
    elif fmt == "json":
        text = interpret.curve_family_json(family, max_curves=0 if averaged_only
                                           else args.max_curves, seed=_seed(args))
    else:
        text = interpret.curve_family_csv(family, max_curves=0 if averaged_only
                                          else args.max_curves, seed=_seed(args))
    _write_atomic(args.out, text)
    what = {"pdp": "PDP", "cpdp": "CPDP", "ice": "ICE", "cipdp": "CIPDP"}[args.command]
    seg = f" | {condition.describe()}" if condition else ""
    return (f"{args.command}: {what} of {args.feature}{seg} over "
            f"{family.n_instances} instances x {grid.n_points} grid points "
            f"-> {args.out}")


def _cmd_slopes(args) -> str:
    model = _load_model(args.model)
    data = _load_data(args.data)
    features = [f.strip() for f in args.features.split(",") if f.strip()]
    segments = ["All"] + list(data.mode_names())
    rows = []
    for feature in features:
        grid = interpret.make_grid(data, feature)
        for seg in segments:
            cond = None if seg == "All" else interpret.mode_condition(data, seg)
            family = interpret.ice(model, data, grid, cond)
            rows.append({"feature": feature, "segment": seg,
                         "slope": interpret.global_slope(family)})
    fmt = _pick_format(args, ("csv", "json"))
    if fmt == "json":
        text = json.dumps(rows, indent=2, sort_keys=True)
    else:
        lines = ["feature,segment,slope"]
        lines += [f"{r['feature']},{r['segment']},{r['slope']!r}" for r in rows]
        text = "\n".join(lines) + "\n"
    _write_atomic(args.out, text)
    return f"slopes: {len(features)} features x {len(segments)} segments -> {args.out}"


def _cmd_effects(args) -> str:
    model = _load_model(args.model)
    data = _load_data(args.data)
    table = interpret.effects_suite(model, data)
    fmt = _pick_format(args)
    if fmt == "svg":
        text = svg.render_effects(table)
    elif fmt == "json":
        text = interpret.effects_table_json(table)
    else:
        text = interpret.effects_table_csv(table)
    _write_atomic(args.out, text)
    return f"effects: {len(table)} rows -> {args.out}"


_HANDLERS = {
    "synth": _cmd_synth, "split": _cmd_split, "vif": _cmd_vif,
    "crosstab": _cmd_crosstab, "cv": _cmd_cv, "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "pdp": lambda a: _cmd_curves(a, averaged_only=True),
    "cpdp": lambda a: _cmd_curves(a, averaged_only=True),
    "ice": lambda a: _cmd_curves(a, averaged_only=False),
    "cipdp": lambda a: _cmd_curves(a, averaged_only=False),
    "slopes": _cmd_slopes, "effects": _cmd_effects,
}


def _run_args(args) -> None:
    if args.command is None:
        raise UsageError("a command (or --manifest) is required")
    print(_HANDLERS[args.command](args))


def _run_manifest(parser, path) -> None:
    if not os.path.exists(path):
        raise DataError(f"no such manifest: {path}")
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    steps = doc["steps"] if isinstance(doc, dict) else doc
    for step in steps:
        step = dict(step)
        argv = [str(step.pop("command"))]
        for key, value in step.items():
            flag = f"--{key.replace('_', '-')}"
            if value is True:
                argv.append(flag)
            else:
                argv += [flag, str(value)]
        _run_args(parser.parse_args(argv))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.manifest:
            _run_manifest(parser, args.manifest)
        else:
            _run_args(args)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
