"""Command-line interface.

Subcommands cover the full pipeline: build grids, synthesize datasets,
tune the fixed concentration, train learned estimators, evaluate truth
log-likelihood, filter by estimate likelihood, render saved results as
tables, and export axis-angle heat maps.

Every command prints its resolved configuration (including the seed), and
every report embeds a hash of that configuration so identical invocations
produce byte-identical files.
"""
import argparse
import hashlib
import json
import sys

import numpy as np

from . import bingham, dataset as ds, grid as gridmod, histogram, learners, metrics
from .nets import Mlp

METHODS = ("uniform", "fixed-bingham", "bingham-mixture", "mc-dropout",
           "confusion-matrix", "bingham-head", "comparison",
           "direct-histogram", "cosine")

TRAINABLE = ("comparison", "bingham-head", "direct-histogram", "pose-dropout")


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _config_line(args):
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k != "func" and not callable(v)}
    digest = hashlib.sha256(
        json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()[:16]
    return cfg, digest


def _announce(args):
    cfg, digest = _config_line(args)
    print(f"config {json.dumps(cfg, sort_keys=True, default=str)}")
    print(f"config-hash {digest} seed {cfg.get('seed')}")
    return digest


def _write_report(path, digest, seed, header_cols, rows):
    lines = [f"# oridist-report config={digest} seed={seed}"]
    lines.append(",".join(header_cols))
    for row in rows:
        lines.append(",".join(_fmt(c) for c in row))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as f:
            f.write(text)
    return text


def _fmt(value):
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


# ---------------------------------------------------------------------------
# commands


def cmd_grid(args):
    _announce(args)
    g = gridmod.build_grid(args.grid_level, cache_dir=args.cache_dir)
    print(f"level {g.level}: {len(g)} vertices, {len(g.tetra)} tetrahedra, "
          f"{g.unique_orientation_count} unique orientations, "
          f"full-sphere count {g.full_sphere_vertex_count}")
    if args.samples:
        rng = np.random.default_rng(args.seed)
        mx, mean = g.coverage_stats(args.samples, rng)
        print(f"coverage over {args.samples} samples: "
              f"max {mx:.2f} deg, mean {mean:.2f} deg")
    return 0


def cmd_synth(args):
    _announce(args)
    rng = np.random.default_rng(args.seed)
    objects = ds.standard_objects(args.objects.split(","))
    lo, _, hi = args.noise_deg.partition(":")
    noise = (float(lo), float(hi)) if hi else float(lo)
    data = ds.synth_dataset(objects, args.n, rng, noise_deg=noise,
                            n_candidates=args.candidates,
                            translation_noise=args.translation_noise)
    data.save(args.out)
    print(f"wrote {len(data)} records for {len(objects)} objects to {args.out}")
    return 0


def cmd_tune(args):
    digest = _announce(args)
    data = _load_dataset(args.dataset)
    rng = np.random.default_rng(args.seed)
    out = {}
    for object_id in sorted(data.objects):
        recs = data.records_for(object_id)
        lam, score = learners.tune_fixed_sigma(recs, trials=args.trials, rng=rng)
        out[object_id] = lam
        print(f"{object_id}: concentration {lam:.4f} "
              f"(mean clipped log-likelihood {score:.4f})")
    with open(args.out, "w") as f:
        json.dump({"config": digest, "seed": args.seed,
                   "concentration": out}, f, sort_keys=True)
    return 0


def cmd_train(args):
    digest = _announce(args)
    if args.method not in TRAINABLE:
        raise CliError("unknown-method",
                       f"cannot train {args.method!r}; one of {TRAINABLE}")
    data = _load_dataset(args.dataset)
    hidden = tuple(int(w) for w in args.hidden.split(","))
    needs_grid = args.method in ("comparison", "direct-histogram")
    g = gridmod.build_grid(args.grid_level, args.cache_dir) if needs_grid else None
    per_object = {}
    for obj_index, object_id in enumerate(sorted(data.objects)):
        recs = data.records_for(object_id)
        rng = np.random.default_rng([args.seed, obj_index])
        if args.method == "comparison":
            refs = ds.reference_features(g, data.objects[object_id].symmetry)
            scorer = learners.ComparisonScorer.build(refs, hidden=hidden, rng=rng)
            history = learners.train_comparison(
                scorer, recs, g, epochs=args.epochs, lr=args.lr, rng=rng,
                batch_size=args.batch_size, k=args.k)
            net = scorer.mlp
        elif args.method == "direct-histogram":
            net = learners.make_direct_regressor(
                data.feature_dim, len(g), hidden=hidden, rng=rng)
            history = learners.train_direct_histogram(
                net, recs, g, epochs=args.epochs, lr=args.lr, rng=rng,
                batch_size=args.batch_size, k=args.k)
        elif args.method == "bingham-head":
            net = learners.make_bingham_head(data.feature_dim, hidden, rng=rng)
            history = learners.train_bingham_head(
                net, recs, epochs=args.epochs, lr=args.lr, rng=rng,
                batch_size=args.batch_size)
        else:  # pose-dropout
            net = learners.make_pose_regressor(data.feature_dim, hidden, rng=rng)
            history = learners.train_pose_regressor(
                net, recs, epochs=args.epochs, lr=args.lr, rng=rng,
                batch_size=args.batch_size)
        per_object[object_id] = net.to_payload()
        print(f"{object_id}: loss {history[0]:.4f} -> {history[-1]:.4f} "
              f"over {len(history)} epochs")
    payload = {"method": args.method, "grid_level": args.grid_level,
               "k": args.k, "seed": args.seed, "config": digest,
               "per_object": per_object}
    with open(args.out, "w") as f:
        json.dump(payload, f, sort_keys=True)
    print(f"checkpoint written to {args.out}")
    return 0


def _load_dataset(path):
    try:
        return ds.Dataset.load(path)
    except FileNotFoundError:
        raise CliError("missing-file", f"dataset not found: {path}")
    except ValueError as e:
        raise CliError("parse-error", str(e))


def _load_checkpoint(args, expected_methods):
    if not args.checkpoint:
        raise CliError("missing-checkpoint",
                       f"method {args.method!r} requires --checkpoint")
    try:
        with open(args.checkpoint) as f:
            payload = json.load(f)
    except FileNotFoundError:
        raise CliError("missing-checkpoint",
                       f"checkpoint not found: {args.checkpoint}")
    if payload.get("method") not in expected_methods:
        raise CliError("unknown-method",
                       f"checkpoint holds {payload.get('method')!r}, "
                       f"expected one of {expected_methods}")
    if payload.get("grid_level") != args.grid_level and \
            payload.get("method") in ("comparison", "direct-histogram"):
        raise CliError("grid-level-mismatch",
                       f"checkpoint grid level {payload.get('grid_level')} "
                       f"!= requested {args.grid_level}")
    return payload


def _nets_by_object(payload):
    return {oid: Mlp.from_payload(p) for oid, p in payload["per_object"].items()}


def _resolve_evaluator(args, data, g):
    method = args.method
    if method not in METHODS:
        raise CliError("unknown-method",
                       f"unknown method {method!r}; one of {METHODS}")
    if method == "uniform":
        return learners.uniform_evaluator()
    if method in ("fixed-bingham", "bingham-mixture"):
        if not args.sigma_file:
            raise CliError("missing-checkpoint",
                           f"method {method!r} requires --sigma-file from `tune`")
        with open(args.sigma_file) as f:
            lam = json.load(f)["concentration"]
        missing = set(data.objects) - set(lam)
        if missing:
            raise CliError("parse-error",
                           f"sigma file lacks objects {sorted(missing)}")
        factory = (learners.fixed_bingham_evaluator if method == "fixed-bingham"
                   else learners.bingham_mixture_evaluator)
        return factory(lam)
    if method == "mc-dropout":
        payload = _load_checkpoint(args, ("pose-dropout",))
        return learners.dropout_evaluator(_nets_by_object(payload),
                                          n_passes=args.dropout_passes,
                                          seed=args.seed)
    if method == "confusion-matrix":
        if not args.train_dataset:
            raise CliError("missing-checkpoint",
                           "confusion-matrix requires --train-dataset")
        train = _load_dataset(args.train_dataset)
        matrices = learners.build_confusion_matrices(train, g, epsilon=args.epsilon,
                                                     k=args.k)
        return learners.confusion_evaluator(matrices)
    if method == "bingham-head":
        payload = _load_checkpoint(args, ("bingham-head",))
        return learners.bingham_head_evaluator(_nets_by_object(payload))
    if method == "comparison":
        payload = _load_checkpoint(args, ("comparison",))
        nets = _nets_by_object(payload)
        scorers = {oid: learners.ComparisonScorer(
            net, ds.reference_features(g, data.objects[oid].symmetry))
            for oid, net in nets.items()}
        return learners.comparison_evaluator(scorers, g, k=args.k)
    if method == "direct-histogram":
        payload = _load_checkpoint(args, ("direct-histogram",))
        return learners.direct_histogram_evaluator(_nets_by_object(payload),
                                                   g, k=args.k)
    if method == "cosine":
        refs = learners.build_reference_features(data, g)
        return learners.cosine_evaluator(refs, g, k=args.k)
    raise CliError("unknown-method", f"unhandled method {method!r}")


def cmd_eval(args):
    digest = _announce(args)
    data = _load_dataset(args.dataset)
    g = gridmod.build_grid(args.grid_level, args.cache_dir)
    evaluator = _resolve_evaluator(args, data, g)
    by_object = {oid: [] for oid in sorted(data.objects)}
    for index, record in enumerate(data.records):
        density = evaluator(record, index)
        by_object[record.object_id].append(
            metrics.gt_log_likelihood(density, record))
    rows = []
    everything = []
    for oid in sorted(by_object):
        vals = by_object[oid]
        everything.extend(vals)
        rows.append((oid, len(vals),
                     float(np.mean(vals)) if vals else None))
    rows.append(("all", len(everything),
                 float(np.mean(everything)) if everything else None))
    text = _write_report(args.out, digest, args.seed,
                         ["object", "n_records", "mean_gt_log_likelihood"], rows)
    print(f"method {args.method}")
    print(text, end="")
    return 0


def cmd_filter(args):
    digest = _announce(args)
    data = _load_dataset(args.dataset)
    g = gridmod.build_grid(args.grid_level, args.cache_dir)
    evaluator = _resolve_evaluator(args, data, g)
    multipliers = [float(m) for m in args.multipliers.split(",")]
    densities = np.array([
        evaluator(record, index)(record.q_est)
        for index, record in enumerate(data.records)])
    symmetries = {oid: o.symmetry for oid, o in data.objects.items()}
    points = {oid: o.model_points for oid, o in data.objects.items()}
    table = metrics.filter_by_likelihood(data.records, densities, symmetries,
                                         multipliers, model_points=points)
    rows = [(r["multiplier"], r["n_retained"], r["reject_pct"],
             r["mean_angular_error_deg"], r["mean_add"], r["mean_add_s"])
            for r in table]
    text = _write_report(args.out, digest, args.seed,
                         ["multiplier", "n_retained", "reject_pct",
                          "mean_angular_error_deg", "mean_add", "mean_add_s"],
                         rows)
    print(f"method {args.method}")
    print(text, end="")
    return 0


def cmd_heatmap(args):
    digest = _announce(args)
    data = _load_dataset(args.dataset)
    g = gridmod.build_grid(args.grid_level, args.cache_dir)
    evaluator = _resolve_evaluator(args, data, g)
    if not 0 <= args.record_index < len(data.records):
        raise CliError("invalid-arg",
                       f"record index {args.record_index} out of range "
                       f"[0, {len(data.records)})")
    record = data.records[args.record_index]
    density = evaluator(record, args.record_index)
    values = np.array([density(v) for v in g.vertices])
    table = histogram.axis_angle_table(g, values)
    rows = [tuple(float(x) for x in row) for row in table]
    text = _write_report(args.out, digest, args.seed,
                         ["ax", "ay", "az", "density"], rows)
    if not args.out:
        print(text, end="")
    else:
        print(f"wrote heat map for record {args.record_index} "
              f"({record.object_id}) to {args.out}")
    return 0


def cmd_report(args):
    _announce(args)
    tables = []
    for path in args.inputs.split(","):
        with open(path) as f:
            lines = [ln.rstrip("\n") for ln in f if ln.strip()]
        header = lines[1].split(",")
        body = [ln.split(",") for ln in lines[2:]]
        tables.append((path, header, body))
    out_lines = []
    for path, header, body in tables:
        out_lines.append(path)
        widths = [max(len(header[c]), *(len(r[c]) for r in body))
                  for c in range(len(header))]
        out_lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for r in body:
            out_lines.append("  ".join(v.rjust(w) for v, w in zip(r, widths)))
        out_lines.append("")
    text = "\n".join(out_lines)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    print(text)
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="oridist",
        description="estimate, train, and evaluate orientation distributions")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid_args=True):
        p.add_argument("--seed", type=int, default=0)
        if grid_args:
            p.add_argument("--grid-level", type=int, default=2)
            p.add_argument("--k", type=int, default=histogram.DEFAULT_K)
            p.add_argument("--cache-dir", default=None)

    p = sub.add_parser("grid", help="build/cache a grid and report coverage")
    common(p)
    p.add_argument("--samples", type=int, default=0,
                   help="coverage sample count (0 skips coverage)")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    common(p, grid_args=False)
    p.add_argument("--objects", default="plain,c4box",
                   help="comma list of presets: plain,c4box,c2bar,bowl")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--noise-deg", default="5:25",
                   help="base-estimate noise range lo:hi in degrees")
    p.add_argument("--candidates", type=int, default=0)
    p.add_argument("--translation-noise", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("tune", help="tune the fixed concentration per object")
    common(p, grid_args=False)
    p.add_argument("--dataset", required=True)
    p.add_argument("--trials", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train", help="train a learned estimator")
    common(p)
    p.add_argument("--method", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--hidden", default="256,256")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    def eval_like(p):
        common(p)
        p.add_argument("--method", required=True)
        p.add_argument("--dataset", required=True)
        p.add_argument("--checkpoint", default=None)
        p.add_argument("--sigma-file", default=None)
        p.add_argument("--train-dataset", default=None,
                       help="training data for the confusion matrix")
        p.add_argument("--epsilon", type=float, default=1e-3)
        p.add_argument("--dropout-passes", type=int, default=50)
        p.add_argument("--out", default=None)

    p = sub.add_parser("eval", help="mean truth log-likelihood per object")
    eval_like(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("filter", help="metrics after likelihood thresholding")
    eval_like(p)
    p.add_argument("--multipliers", default="0,1,10,50,100",
                   help="thresholds as multiples of the uniform density")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("heatmap", help="axis-angle density table for a record")
    eval_like(p)
    p.add_argument("--record-index", type=int, default=0)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("report", help="render saved CSV reports as text tables")
    common(p, grid_args=False)
    p.add_argument("--inputs", required=True, help="comma list of CSV reports")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"ERROR {e.code}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
