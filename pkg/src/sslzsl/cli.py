"""Command-line interface: ``sslzsl {gen,train,eval,retrieve,gradcheck,baseline}``.

Every subcommand accepts ``--config FILE`` with ``key=value`` lines whose
keys are option names (``batch_size`` or ``batch-size``); explicit flags win.
The default output directory comes from ``$SSLZSL_OUTPUT_DIR``.

Exit codes: 0 success, 1 threshold or training failure, 2 usage or data error.
"""

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import baselines
from .data import (
    DataFormatError,
    SyntheticSpec,
    load_dataset,
    load_matrix,
    make_synthetic,
    parse_bool,
    read_kv,
    save_dataset,
    save_matrix,
    validate_dataset,
)
from .eval import (
    evaluate,
    prototype_diagnostic,
    report_from_scores,
    retrieval_map,
    write_diagnostic_csv,
    write_pr_csv,
    write_pr_svg,
)
from .linalg import ShapeError, SingularSystemError
from .model import Hyperparams, ModelParams, init_params, load_checkpoint, save_checkpoint
from .optim import TrainingDiverged, grad_check, train

OUTPUT_ENV = "SSLZSL_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def default_outdir():
    return os.environ.get(OUTPUT_ENV, "sslzsl-out")


# -- argument parsing ------------------------------------------------------


def _add_data(p):
    p.add_argument("--data", required=True, help="dataset manifest")
    p.add_argument("--no-normalize-features", dest="normalize_features", action="store_false",
                   default=None, help="keep ingested feature rows as-is")
    p.add_argument("--normalize-descriptors", dest="normalize_descriptors", action="store_true",
                   default=None, help="unit-normalize descriptor rows")


def _add_hyper(p):
    d = Hyperparams()
    p.add_argument("--lam", type=float, default=d.lam, help="Frobenius weight on V")
    p.add_argument("--beta", type=float, default=d.beta, help="hypersphere penalty weight")
    p.add_argument("--alpha", type=float, default=d.alpha, help="hypersphere radius")
    p.add_argument("--lr", type=float, default=d.lr)
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--batch-size", type=int, default=d.batch_size)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--optimizer", choices=("sgd", "sgd_momentum", "adam"), default=d.optimizer)


def _add_model_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="checkpoint directory or model.manifest")
    src.add_argument("--ground-truth", nargs="?", const="auto",
                     help="score with the generator's ground-truth map (path, or the manifest's entry)")
    p.add_argument("--similarity", choices=("cosine", "inner"), default="cosine")


def build_parser():
    parser = argparse.ArgumentParser(prog="sslzsl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="key=value defaults file")
        p.add_argument("--outdir", default=None, help=f"output directory (default ${OUTPUT_ENV} or ./sslzsl-out)")
        return p

    p = add("gen", "write a synthetic dataset")
    s = SyntheticSpec()
    p.add_argument("--d-f", type=int, default=s.d_f)
    p.add_argument("--d-a", type=int, default=s.d_a)
    p.add_argument("--seen", type=int, default=s.seen_classes)
    p.add_argument("--unseen", type=int, default=s.unseen_classes)
    p.add_argument("--per-class", type=int, default=s.per_class)
    p.add_argument("--noise", type=float, default=s.noise_sigma)
    p.add_argument("--seed", type=int, default=s.seed)
    p.add_argument("--format", choices=("bin", "csv"), default="bin")

    p = add("train", "fit V and b on the seen classes")
    _add_data(p)
    _add_hyper(p)

    p = add("eval", "zero-shot classification and retrieval report")
    _add_data(p)
    _add_model_source(p)

    p = add("retrieve", "zero-shot retrieval mAP and PR curves")
    _add_data(p)
    _add_model_source(p)
    p.add_argument("--svg", action="store_true", help="also emit one SVG plot per class")

    p = add("gradcheck", "compare the analytic gradient with central differences")
    p.add_argument("--data", help="dataset manifest (default: random instance)")
    p.add_argument("--model", help="checkpoint to check at (default: random parameters)")
    p.add_argument("--batch", type=int, default=8, help="number of instances")
    p.add_argument("--step", type=float, default=1e-6)
    p.add_argument("--threshold", type=float, default=1e-5)
    _add_hyper(p)

    p = add("baseline", "fit and evaluate LR, RLR or ESZSL")
    _add_data(p)
    p.add_argument("--kind", choices=baselines.KINDS, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--encoding", choices=baselines.ENCODINGS, default="onehot",
                   help="ESZSL label targets: 0/1 one-hot or +-1")
    p.add_argument("--sweep", type=int, nargs=2, metavar=("LO", "HI"),
                   help="also report gamma (and lam for eszsl) over 10^LO..10^HI")
    return parser


def _bool_dests(parser):
    out = set()
    for action in parser._actions:
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            out.add(action.dest)
    return out


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        kv = {k.replace("-", "_"): v for k, v in read_kv(args.config).items()}
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(kv) - known)
        if unknown:
            raise UsageError(f"{args.config}: unknown keys {unknown}")
        bools = _bool_dests(sub)
        kv = {k: parse_bool(v) if k in bools else v for k, v in kv.items()}
        sub.set_defaults(**kv)
        args = parser.parse_args(argv)
    if args.outdir is None:
        args.outdir = default_outdir()
    return args


# -- helpers ---------------------------------------------------------------


def _hyper(args):
    return Hyperparams(
        lam=args.lam, beta=args.beta, alpha=args.alpha, lr=args.lr, epochs=args.epochs,
        batch_size=args.batch_size, seed=args.seed, optimizer=args.optimizer,
    )


def _dataset(args):
    ds = load_dataset(args.data, args.normalize_features, args.normalize_descriptors)
    problems = validate_dataset(ds)
    if problems:
        raise DataFormatError("invalid dataset:\n  " + "\n  ".join(problems))
    return ds


def _params(args, ds):
    if args.model:
        params, _ = load_checkpoint(args.model)
        return params
    path = args.ground_truth
    if path == "auto":
        kv = read_kv(args.data)
        if "ground_truth" not in kv:
            raise UsageError(f"{args.data} names no ground_truth map")
        path = Path(args.data).parent / kv["ground_truth"]
    return ModelParams(V=load_matrix(path), b=np.zeros(ds.num_seen))


def _outdir(args):
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


# -- subcommands -----------------------------------------------------------


def cmd_gen(args):
    spec = SyntheticSpec(
        d_f=args.d_f, d_a=args.d_a, seen_classes=args.seen, unseen_classes=args.unseen,
        per_class=args.per_class, noise_sigma=args.noise, seed=args.seed,
    )
    ds, v_true = make_synthetic(spec)
    out = _outdir(args)
    gt_name = f"ground_truth.{args.format}"
    save_matrix(out / gt_name, v_true, args.format)
    manifest = save_dataset(out, ds, args.format, extra={"ground_truth": gt_name})
    print(
        f"wrote {manifest}: {ds.train_features.shape[0]} train / {ds.test_features.shape[0]} test rows, "
        f"{ds.num_seen} seen / {ds.num_unseen} unseen classes, d_f={ds.feature_dim}, d_a={ds.descriptor_dim}"
    )
    return EXIT_OK


def cmd_train(args):
    ds = _dataset(args)
    h = _hyper(args)
    out = _outdir(args)
    t0 = time.perf_counter()
    params, history = train(ds, h)
    seconds = time.perf_counter() - t0
    save_checkpoint(out, params, h, extra={"epochs_run": len(history.records)})
    history.to_csv(out / "history.csv")
    last = history.records[-1] if history.records else None
    summary = {
        "seed": h.seed,
        "epochs": len(history.records),
        "seconds": seconds,
        "final": None if last is None else {
            "total": last.total, "ce": last.ce, "reg": last.reg, "penalty": last.penalty,
        },
    }
    _dump(out / "summary.json", summary)
    if last is None:
        print(f"0 epochs; wrote initial checkpoint to {out}")
    else:
        print(f"epoch {last.epoch}: loss {last.total:.6f} (ce {last.ce:.6f}, reg {last.reg:.6f}, "
              f"penalty {last.penalty:.6f}) in {seconds:.2f}s; checkpoint in {out}")
    return EXIT_OK


def cmd_eval(args):
    ds = _dataset(args)
    params = _params(args, ds)
    out = _outdir(args)
    report = evaluate(params, ds, args.similarity)
    report.to_json(out / "report.json", similarity=args.similarity)
    write_diagnostic_csv(out / "prototype_distances.csv", prototype_diagnostic(params, ds))
    print(f"mean per-class top-1: {report.mean_accuracy:.6f}  mAP: {report.map:.6f}")
    return EXIT_OK


def cmd_retrieve(args):
    ds = _dataset(args)
    params = _params(args, ds)
    out = _outdir(args)
    res = retrieval_map(params, ds, args.similarity)
    pr_dir = out / "pr"
    pr_dir.mkdir(exist_ok=True)
    for j, curve in enumerate(res["pr_curves"]):
        write_pr_csv(pr_dir / f"class_{j}.csv", curve)
        if args.svg:
            write_pr_svg(pr_dir / f"class_{j}.svg", curve, title=f"unseen class {j}")
    _dump(out / "retrieval.json", {"per_class_ap": res["per_class_ap"], "map": res["map"]})
    print(f"mAP: {res['map']:.6f} over {len(res['per_class_ap'])} unseen classes")
    return EXIT_OK


def _random_problem(args, h):
    rng = np.random.Generator(np.random.PCG64([h.seed, 7]))
    m, c, d_a, d_f = args.batch, 4, 3, 5
    F = rng.standard_normal((m, d_f))
    F /= np.linalg.norm(F, axis=1, keepdims=True)
    A = rng.standard_normal((c, d_a))
    y = rng.integers(0, c, size=m)
    params = ModelParams(rng.standard_normal((d_a, d_f)) * 0.5, rng.standard_normal(c) * 0.1)
    return params, F, y, A


def cmd_gradcheck(args):
    h = _hyper(args)
    if args.data:
        ds = load_dataset(args.data)
        F = ds.train_features[: args.batch]
        y = ds.train_labels[: args.batch]
        A = ds.seen_descriptors
        if args.model:
            params, _ = load_checkpoint(args.model)
        else:
            rng = np.random.Generator(np.random.PCG64([h.seed, 7]))
            params = init_params(A.shape[1], F.shape[1], A.shape[0], h.seed)
            params = ModelParams(params.V + 0.1 * rng.standard_normal(params.V.shape), params.b)
    else:
        params, F, y, A = _random_problem(args, h)
    err = grad_check(params, F, y, A, h, args.step)
    ok = err < args.threshold
    print(f"max relative error: {err:.3e} ({'ok' if ok else 'FAIL'}, threshold {args.threshold:g})")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_baseline(args):
    ds = _dataset(args)
    out = _outdir(args)
    model = baselines.fit(args.kind, ds.train_features, ds.train_labels, ds.seen_descriptors,
                          args.gamma, args.lam, args.encoding)
    baselines.save_baseline(out, model)
    report = report_from_scores(
        baselines.scores(model, ds.test_features, ds.unseen_descriptors), ds.test_labels, ds.num_unseen
    )
    extra = {"kind": args.kind, "gamma": args.gamma, "lam": args.lam, "encoding": args.encoding}
    if args.sweep:
        lo, hi = args.sweep
        grid = [10.0**k for k in range(lo, hi + 1)]
        lams = grid if args.kind == "eszsl" else [args.lam]
        sweep = []
        for g in grid:
            for lam in lams:
                try:
                    m = baselines.fit(args.kind, ds.train_features, ds.train_labels, ds.seen_descriptors,
                                      g, lam, args.encoding)
                except SingularSystemError:
                    continue
                r = report_from_scores(
                    baselines.scores(m, ds.test_features, ds.unseen_descriptors), ds.test_labels, ds.num_unseen
                )
                sweep.append({"gamma": g, "lam": lam, "mean_accuracy": r.mean_accuracy, "map": r.map})
        extra["sweep"] = sweep
        for row in sweep:
            print(f"  gamma={row['gamma']:g} lam={row['lam']:g}: acc {row['mean_accuracy']:.4f} mAP {row['map']:.4f}")
    report.to_json(out / "report.json", **extra)
    print(f"{args.kind}: mean per-class top-1 {report.mean_accuracy:.6f}  mAP {report.map:.6f}")
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "retrieve": cmd_retrieve,
    "gradcheck": cmd_gradcheck,
    "baseline": cmd_baseline,
}


def main(argv=None):
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, DataFormatError, ShapeError, SingularSystemError, ValueError,
            KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
