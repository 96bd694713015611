"""``ihards`` command line.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
Every subcommand accepts ``--config FILE`` (``key=value`` lines using flag
names); explicit flags override file values. The effective configuration is
echoed and written as a manifest next to the outputs, and a manifest can be
fed back through ``--config`` to repeat the run.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__, bench, metrics, pipeline
from .cnn import ARCHITECTURES, ArchSpec, TrainConfig, checkpoint_load, checkpoint_save, evaluate_model, get_arch
from .cnn.backend import BACKEND
from .containers import CSV_ROW_LIMIT, export_csv, load_dataset, read_ihds, save_dataset, write_ihds
from .drwcc import correlation_summary, load_mask, save_mask
from .errors import ConfigError, DataError, IhardsError
from .ingest import CLASS_NAMES, LabelMap, SourceDataset, load_ku_har, load_uci_har, load_wisdm_raw
from .integrate import IntegrationConfig, ReplacementPolicy, build_integrated_dataset, generate_synthetic, split_dataset
from .ingest import CanonicalFrame

log = logging.getLogger("ihards")

# keys a manifest carries that are not flags
_MANIFEST_ONLY = {"command", "version", "backend", "rng"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _fraction(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("must lie strictly between 0 and 1")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    p = _Parser(prog="ihards", description="Integrated HAR dataset, correlation pruning and 1D-CNN pipeline.")
    p.add_argument("--version", action="version", version=f"ihards {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def common(sp):
        sp.add_argument("--config", metavar="FILE", help="key=value defaults; explicit flags win")
        sp.add_argument("--seed", type=_nonneg_int, default=0, help="root random seed (default 0)")

    sp = sub.add_parser("synth", help="write three synthetic source frames (561/3/7 columns)")
    common(sp)
    sp.add_argument("--per-class", type=_pos_int, default=1000, help="rows per class per source")
    sp.add_argument("--sigma", type=float, default=0.5, help="Gaussian noise standard deviation")
    sp.add_argument("--out-dir", required=True, help="directory for uci.ihds, wisdm.ihds, kuhar.ihds")

    sp = sub.add_parser("integrate", help="build the integrated 571-column dataset (IHDS container)")
    common(sp)
    sp.add_argument("--synthetic", action="store_true", help="use generated Gaussian-blob sources")
    sp.add_argument("--sigma", type=float, default=0.5, help="noise level for --synthetic")
    sp.add_argument("--frames", metavar="DIR", help="directory written by 'synth'")
    sp.add_argument("--uci", metavar="DIR", help="UCI HAR Dataset directory")
    sp.add_argument("--wisdm", metavar="FILE", help="WISDM raw accelerometer log")
    sp.add_argument("--kuhar", metavar="FILE", help="KU-HAR comma-separated table")
    sp.add_argument("--kuhar-cols", type=_int_list, help="7 KU-HAR feature column indices")
    sp.add_argument("--kuhar-label-col", type=int, default=-1, help="KU-HAR class-code column (default last)")
    sp.add_argument("--kuhar-skip-header", action="store_true", help="ignore the first KU-HAR line")
    sp.add_argument("--label-maps", metavar="JSON", help="override the shipped source label maps")
    sp.add_argument("--per-class", type=_pos_int, default=420_000, help="integrated rows per class")
    sp.add_argument("--policy", choices=["replace", "error"], default="replace",
                    help="when a source class is short: sample with replacement or fail")
    sp.add_argument("--out", required=True, help="output IHDS file")
    sp.add_argument("--csv", metavar="FILE", help=f"also export CSV (<= {CSV_ROW_LIMIT} rows)")

    sp = sub.add_parser("analyze", help="correlation analysis and feature-mask pruning")
    common(sp)
    sp.add_argument("--data", required=True, help="IHDS input")
    sp.add_argument("--threshold", type=_fraction, default=0.9, help="drop columns with |r| above this")
    sp.add_argument("--fit-on-all", action="store_true", help="correlate all rows, not just the training split")
    sp.add_argument("--test-fraction", type=_fraction, default=0.5, help="test share of the split")
    sp.add_argument("--out", required=True, help="output mask file")

    def train_flags(sp):
        sp.add_argument("--data", required=True, help="IHDS input")
        sp.add_argument("--mask", help="feature mask from 'analyze'")
        sp.add_argument("--arch", default="arch1", help=f"one of {', '.join(ARCHITECTURES)}")
        sp.add_argument("--arch-file", help="key=value architecture file (overrides --arch)")
        d = TrainConfig()
        sp.add_argument("--lr", type=float, default=d.learning_rate, help="Adam learning rate")
        sp.add_argument("--batch-size", type=_pos_int, default=d.batch_size, help="minibatch rows")
        sp.add_argument("--epochs", type=_pos_int, default=d.epochs, help="passes over the training rows")
        sp.add_argument("--repeats", type=_pos_int, default=d.repeats, help="independently seeded runs")
        sp.add_argument("--beta1", type=float, default=d.adam_beta1, help="Adam beta1")
        sp.add_argument("--beta2", type=float, default=d.adam_beta2, help="Adam beta2")
        sp.add_argument("--adam-eps", type=float, default=d.adam_epsilon, help="Adam epsilon")
        sp.add_argument("--test-fraction", type=_fraction, default=0.5, help="test share of the split")
        sp.add_argument("--out-dir", required=True, help="directory for model, reports and manifest")

    sp = sub.add_parser("train", help="split, standardise, train, evaluate and report")
    common(sp)
    train_flags(sp)

    sp = sub.add_parser("eval", help="score a checkpoint on an IHDS file")
    common(sp)
    sp.add_argument("--model", required=True, help="checkpoint (.ihck)")
    sp.add_argument("--data", required=True, help="IHDS input")
    sp.add_argument("--split", choices=["test", "all"], default="test",
                    help="score the seeded test split or every row")
    sp.add_argument("--test-fraction", type=_fraction, default=0.5, help="test share of the split")
    sp.add_argument("--out-dir", required=True, help="directory for the report")

    sp = sub.add_parser("predict", help="write per-row class predictions")
    common(sp)
    sp.add_argument("--model", required=True, help="checkpoint (.ihck)")
    sp.add_argument("--data", required=True, help="IHDS input (labels optional)")
    sp.add_argument("--out", required=True, help="output CSV: row,prediction,class,p0..p4")

    sp = sub.add_parser("benchmark", help="conv/dense scaling check and backend comparison")
    common(sp)
    sp.add_argument("--trials", type=_pos_int, default=5, help="timed trials per measurement (median)")
    sp.add_argument("--backend", choices=["cython", "numpy"], help="kernel backend to time")
    sp.add_argument("--compare-backends", action="store_true", help="also time every available backend")
    sp.add_argument("--out", help="write the report here as well as stdout")
    return p


# -- config files and manifests --------------------------------------------


def read_kv(path):
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    with fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{n}: expected key=value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def _config_argv(parser, argv):
    """Expand ``--config FILE`` into flag tokens placed before the explicit ones."""
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return argv
    cmd_idx = next((i for i, a in enumerate(argv) if not a.startswith("-")), None)
    if cmd_idx is None:
        return argv
    sp = _subparser(parser, argv[cmd_idx])
    if sp is None:
        return argv
    rest = argv[cmd_idx + 1 :]
    path = None
    for i, a in enumerate(rest):
        if a == "--config" and i + 1 < len(rest):
            path = rest[i + 1]
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
    if path is None:
        return argv
    values = read_kv(path)
    if values.get("command", argv[cmd_idx]) != argv[cmd_idx]:
        raise ConfigError(f"{path} is a manifest for '{values['command']}', not '{argv[cmd_idx]}'")
    by_dest = {a.dest: a for a in sp._actions if a.option_strings}
    injected = []
    for key, value in values.items():
        if key in _MANIFEST_ONLY or key == "config":
            continue
        action = by_dest.get(key)
        if action is None:
            raise ConfigError(f"{path}: unknown key {key!r}")
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes"):
                injected.append(flag)
        elif value != "" and value != "None":
            injected += [flag, value]
    return argv[: cmd_idx + 1] + injected + rest


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def manifest_text(args):
    lines = [f"command={args.command}", f"version={__version__}", "rng=PCG64"]
    for key in sorted(vars(args)):
        if key in ("command", "config", "verbose", "func"):
            continue
        lines.append(f"{key}={_fmt(getattr(args, key))}")
    return "\n".join(lines) + "\n"


def write_manifest(args, path):
    text = manifest_text(args)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(text, end="")


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)


# -- subcommands -----------------------------------------------------------


def cmd_synth(args):
    if args.sigma < 0:
        raise ConfigError("--sigma must be >= 0")
    _ensure_dir(args.out_dir)
    frames = generate_synthetic(args.per_class, args.sigma, args.seed)
    for name, frame in zip(("uci", "wisdm", "kuhar"), frames):
        write_ihds(os.path.join(args.out_dir, f"{name}.ihds"), frame.features, frame.labels)
    write_manifest(args, os.path.join(args.out_dir, "manifest.txt"))
    return 0


def _load_sources(args):
    if args.synthetic:
        if args.sigma < 0:
            raise ConfigError("--sigma must be >= 0")
        return generate_synthetic(args.per_class, args.sigma, args.seed)
    if args.frames:
        out = []
        for name, src in zip(("uci", "wisdm", "kuhar"), SourceDataset):
            feats, labels = read_ihds(os.path.join(args.frames, f"{name}.ihds"))
            if labels is None:
                raise DataError(f"{name}.ihds carries no labels")
            out.append(CanonicalFrame(feats, labels, src))
        return tuple(out)
    defaults = pipeline.default_source_paths()
    uci = args.uci or defaults.get("uci")
    wisdm = args.wisdm or defaults.get("wisdm")
    kuhar = args.kuhar or defaults.get("kuhar")
    if not (uci and wisdm and kuhar):
        raise ConfigError("give --synthetic, --frames DIR, or all of --uci/--wisdm/--kuhar (or set IHARDS_DATA_DIR)")
    maps = {}
    if args.label_maps:
        maps = {s: LabelMap.from_json(args.label_maps, s) for s in SourceDataset}
    return (
        load_uci_har(uci, maps.get(SourceDataset.UCI_HAR)),
        load_wisdm_raw(wisdm, maps.get(SourceDataset.WISDM)),
        load_ku_har(
            kuhar,
            maps.get(SourceDataset.KU_HAR),
            feature_cols=args.kuhar_cols,
            label_col=args.kuhar_label_col,
            skip_header=args.kuhar_skip_header,
        ),
    )


def cmd_integrate(args):
    frames = _load_sources(args)
    policy = ReplacementPolicy.REPLACE_IF_SHORT if args.policy == "replace" else ReplacementPolicy.ERROR_IF_SHORT
    cfg = IntegrationConfig(args.per_class, args.seed, policy)
    data = build_integrated_dataset(*frames, cfg)
    save_dataset(args.out, data)
    if args.csv:
        export_csv(args.csv, data.features, data.labels)
    write_manifest(args, args.out + ".manifest")
    print(f"rows={data.row_count} columns={data.col_count}")
    return 0


def cmd_analyze(args):
    data = load_dataset(args.data)
    mask, corr = pipeline.fit_mask(data, args.threshold, args.seed, args.fit_on_all, args.test_fraction)
    save_mask(args.out, mask)
    summary = correlation_summary(corr, args.threshold)
    summary.update(
        threshold=args.threshold,
        kept_count=mask.kept_count,
        dropped_count=mask.dropped_count,
        fitted_on="all" if args.fit_on_all else "train",
    )
    with open(args.out + ".summary", "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(summary):
            fh.write(f"{key}={_fmt(summary[key])}\n")
    write_manifest(args, args.out + ".manifest")
    print(f"kept={mask.kept_count} dropped={mask.dropped_count}")
    return 0


def _spec(args):
    if args.arch_file:
        return ArchSpec.from_file(args.arch_file)
    return get_arch(args.arch)


def cmd_train(args):
    spec = _spec(args)
    try:
        cfg = TrainConfig(
            learning_rate=args.lr,
            batch_size=args.batch_size,
            epochs=args.epochs,
            repeats=args.repeats,
            adam_beta1=args.beta1,
            adam_beta2=args.beta2,
            adam_epsilon=args.adam_eps,
            seed=args.seed,
        )
    except ConfigError:
        raise
    data = load_dataset(args.data)
    mask = load_mask(args.mask) if args.mask else None
    if mask is not None and mask.keep.size != data.col_count:
        raise DataError(f"mask covers {mask.keep.size} columns, data has {data.col_count}")
    _ensure_dir(args.out_dir)

    def on_epoch(rec):
        print(f"epoch {rec['epoch']} loss={rec['loss']:.6g} accuracy={rec['accuracy']:.6f}", flush=True)

    runs, best, agg = pipeline.run_repeats(data, spec, cfg, mask, args.test_fraction, on_epoch)
    run = runs[best]
    checkpoint_save(run.train.checkpoint, os.path.join(args.out_dir, "model.ihck"))
    extra = {"arch": spec.name, "repeats": cfg.repeats, "best_repeat": best, **agg}
    metrics.emit_report(
        run.report,
        run.train.curves,
        os.path.join(args.out_dir, "report.txt"),
        os.path.join(args.out_dir, "curves.csv"),
        os.path.join(args.out_dir, "confusion.csv"),
        extra=extra,
    )
    write_manifest(args, os.path.join(args.out_dir, "manifest.txt"))
    print(f"test_accuracy={run.report.accuracy!r} macro_f1={run.report.macro['f1']!r}")
    return 0


def cmd_eval(args):
    ckpt = checkpoint_load(args.model)
    data = load_dataset(args.data)
    if args.split == "test":
        data = split_dataset(data, args.seed, args.test_fraction)[1]
    ev = evaluate_model(ckpt, ckpt.prepare(data.features), data.labels)
    report = metrics.derive_scores(metrics.confusion_matrix(data.labels, ev.predictions), loss=ev.loss)
    _ensure_dir(args.out_dir)
    metrics.emit_report(
        report,
        [],
        os.path.join(args.out_dir, "report.txt"),
        confusion_path=os.path.join(args.out_dir, "confusion.csv"),
        extra={"arch": ckpt.spec.name, "split": args.split},
    )
    write_manifest(args, os.path.join(args.out_dir, "manifest.txt"))
    print(f"accuracy={report.accuracy!r}")
    return 0


def cmd_predict(args):
    ckpt = checkpoint_load(args.model)
    feats, _ = read_ihds(args.data)
    x = ckpt.prepare(feats)
    probs = np.concatenate(
        [ckpt.model.predict_proba(x[i : i + 4096]) for i in range(0, x.shape[0], 4096)]
    ) if x.shape[0] else np.empty((0, len(CLASS_NAMES)))
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("row,prediction,class," + ",".join(f"p{i}" for i in range(len(CLASS_NAMES))) + "\n")
        for i, p in enumerate(probs):
            k = int(p.argmax())
            fh.write(f"{i},{k},{CLASS_NAMES[k]}," + ",".join(repr(float(v)) for v in p) + "\n")
    write_manifest(args, args.out + ".manifest")
    return 0


def cmd_benchmark(args):
    name = args.backend or BACKEND
    results = bench.run_scaling(trials=args.trials, kernel_backend=name)
    text = bench.format_scaling(results, name)
    text += f"boundary.k_equals_n.output_shape={bench.conv_boundary(name)}\n"
    if args.compare_backends:
        text += bench.format_comparison(bench.compare_backends(trials=args.trials))
    print(text, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "integrate": cmd_integrate,
    "analyze": cmd_analyze,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "benchmark": cmd_benchmark,
}


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _config_argv(parser, argv)
    except ConfigError as exc:
        print(f"ihards: config error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except IhardsError as exc:
        kind = {2: "config", 3: "data", 4: "numeric"}.get(exc.exit_code, "error")
        print(f"ihards: {kind} error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"ihards: data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
