"""Command-line front end.

Subcommands: sample | embed | project | cluster | experiment-bias |
experiment-classify | bound-check.  Every command validates its inputs
before writing anything, removes partial output on error, and is
bit-reproducible given --seed.  Exit codes: 0 success, 2 usage error,
3 data error, 4 numeric failure.
"""

import argparse
import os
import shutil
import sys

import numpy as np

from .embedding import (EmbedConfig, joint_embed, project_graph, scree)
from .experiments import (bias_experiment, bound_check, classify_experiment,
                          cluster_pipeline, CLASSIFY_METHODS)
from .graphs import (GraphFormatError, load_graph_set, read_graph,
                     write_graph_set)
from .inference import ari, purity
from .models import (InvalidParametersError, LoadingDistribution, MregModel,
                     RdpgParams, SbmParams, sample_mreg, sample_rdpg,
                     sample_sbm)
from .numerics import ConvergenceError

__all__ = ["main", "entrypoint"]


class UsageError(Exception):
    """Bad flags or flag values; maps to exit code 2."""


def _fmt(x):
    return f"{x:.17g}"


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return _fmt(float(x))


def _read_kv_file(path):
    """key=value lines; '#' starts a comment; blank lines ignored."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GraphFormatError(f"{path}: expected key=value, got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if key in out:
                raise GraphFormatError(f"{path}: duplicate key {key!r}")
            out[key] = value.strip()
    return out


def _read_matrix_csv(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            rows.append([float(x) for x in line.split(",")])
    if not rows:
        raise GraphFormatError(f"{path}: empty matrix file")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise GraphFormatError(f"{path}: ragged rows")
    return np.array(rows, dtype=np.float64)


class _OutputDir:
    """Create-or-reuse an output directory with cleanup on error."""

    def __init__(self, path):
        self.path = path
        self.created = not os.path.isdir(path)
        self.written = []
        if self.created:
            os.makedirs(path)

    def file(self, name):
        p = os.path.join(self.path, name)
        self.written.append(p)
        return p

    def discard(self):
        if self.created:
            shutil.rmtree(self.path, ignore_errors=True)
            return
        for p in self.written:
            if os.path.exists(p):
                os.remove(p)


# -- model specification files ----------------------------------------------


def _load_model_spec(path):
    spec = _read_kv_file(path)
    base = os.path.dirname(os.path.abspath(path))

    def resolve(name):
        return os.path.join(base, spec[name])

    kind = spec.get("kind")
    known = {
        "er": {"kind", "n", "p"},
        "sbm": {"kind", "b_file", "tau_file", "pi_file", "n"},
        "rdpg": {"kind", "x_file"},
        "mreg": {"kind", "h_file", "f_kind", "f_file", "loops", "on_invalid"},
    }
    if kind not in known:
        raise GraphFormatError(f"{path}: unknown model kind {kind!r}")
    unknown = set(spec) - known[kind]
    if unknown:
        raise GraphFormatError(f"{path}: unknown keys {sorted(unknown)}")

    if kind == "er":
        n, p = int(spec["n"]), float(spec["p"])
        params = SbmParams(B=np.array([[p]]), tau=np.ones(n, dtype=np.int64))
        return ("sbm", params, {})
    if kind == "sbm":
        B = _read_matrix_csv(resolve("b_file"))
        if "tau_file" in spec:
            tau = _read_matrix_csv(resolve("tau_file")).ravel().astype(np.int64)
            return ("sbm", SbmParams(B=B, tau=tau), {})
        return ("sbm", SbmParams(B=B, pi=_read_matrix_csv(resolve("pi_file")).ravel(),
                                 n=int(spec["n"])), {})
    if kind == "rdpg":
        return ("rdpg", RdpgParams(X=_read_matrix_csv(resolve("x_file"))), {})

    H = _read_matrix_csv(resolve("h_file"))
    f_kind = spec.get("f_kind")
    table = _read_matrix_csv(resolve("f_file"))
    if f_kind == "mixture":
        F = LoadingDistribution.point_mass_mixture(table[:, 1:], table[:, 0])
    elif f_kind == "box":
        if table.shape[0] != 2:
            raise GraphFormatError(f"{path}: box f_file needs exactly two rows")
        F = LoadingDistribution.uniform_box(table[0], table[1])
    elif f_kind == "list":
        F = LoadingDistribution.fixed_list(table)
    else:
        raise GraphFormatError(f"{path}: unknown f_kind {f_kind!r}")
    model = MregModel(n=H.shape[0], d=H.shape[1], H=H, F=F)
    opts = {
        "loops": spec.get("loops", "0") == "1",
        "invalid_lambda": spec.get("on_invalid", "error"),
    }
    return ("mreg", model, opts)


# -- commands -----------------------------------------------------------------


def _cmd_sample(args):
    kind, params, opts = _load_model_spec(args.model)
    if args.m < 1:
        raise UsageError("--m must be at least 1")
    out = _OutputDir(args.out)
    try:
        lambdas = None
        if kind == "mreg":
            if params.F.kind == "list" and params.F.atoms.shape[0] != args.m:
                raise GraphFormatError(
                    "fixed-list loading distribution must list one loading per graph")
            gs, lambdas = sample_mreg(params, args.m, args.seed, **opts)
        elif kind == "sbm":
            gs = sample_sbm(params, args.m, args.seed)
        else:
            gs = sample_rdpg(params, args.m, args.seed)
        for i in range(gs.m):
            out.file(f"graph_{i:04d}.txt")
        out.file("manifest.tsv")
        write_graph_set(gs, out.path)
        if lambdas is not None:
            d = lambdas.shape[1]
            _write_csv(out.file("lambdas.csv"),
                       "graph_id," + ",".join(f"l{k + 1}" for k in range(d)),
                       ([str(i)] + [_fmt(v) for v in lambdas[i]]
                        for i in range(lambdas.shape[0])))
        return 0
    except BaseException:
        out.discard()
        raise


def _embed_config(args, d):
    return EmbedConfig(
        d=d,
        outer_tol=args.tol,
        max_inner_iter=args.max_inner,
        init=args.init,
        restarts=args.restarts,
        seed=args.seed if args.seed is not None else 0,
    )


def _write_embedding(out, res):
    m, d = res.Lambda.shape
    _write_csv(out.file("lambda.csv"),
               "graph_id," + ",".join(f"l{k + 1}" for k in range(d)),
               ([str(i)] + [_fmt(v) for v in res.Lambda[i]] for i in range(m)))
    _write_csv(out.file("h.csv"),
               "vertex_id," + ",".join(f"h{k + 1}" for k in range(d)),
               ([str(s)] + [_fmt(v) for v in res.H[s]] for s in range(res.H.shape[0])))
    trace_rows = []
    for k, tr in enumerate(res.inner_traces):
        for it, val in enumerate(tr):
            trace_rows.append([str(k + 1), str(it), _fmt(val)])
    _write_csv(out.file("trace.csv"), "dim,iter,objective", trace_rows)
    _write_csv(out.file("scree.csv"), "dim,objective,mean_abs_loading",
               ([str(r.dim), _fmt(r.objective), _fmt(r.mean_abs_loading)]
                for r in scree(res)))


def _cmd_embed(args):
    if args.d < 1:
        raise UsageError("--d must be at least 1")
    if (args.init == "random" or args.restarts > 0) and args.seed is None:
        raise UsageError("--seed is required with random initialization or restarts")
    gs = load_graph_set(args.manifest)
    config = _embed_config(args, args.d)
    out = _OutputDir(args.out)
    try:
        res = joint_embed(gs, config)
        _write_embedding(out, res)
        return 0
    except BaseException:
        out.discard()
        raise


def _read_h_csv(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("vertex_id"):
            raise GraphFormatError(f"{path}: not a component file")
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(x) for x in line.split(",")[1:]])
    return np.array(rows, dtype=np.float64)


def _cmd_project(args):
    if (args.graph is None) == (args.manifest is None):
        raise UsageError("give exactly one of --graph and --manifest")
    H = _read_h_csv(args.h_file)
    if args.graph is not None:
        graphs = [read_graph(args.graph)]
    else:
        graphs = list(load_graph_set(args.manifest).graphs)
    out = _OutputDir(args.out)
    try:
        d = H.shape[1]
        rows = []
        for i, g in enumerate(graphs):
            if g.n != H.shape[0]:
                raise GraphFormatError(
                    f"graph has {g.n} vertices but components have {H.shape[0]}")
            lam = project_graph(g, H, mode=args.mode)
            rows.append([str(i)] + [_fmt(v) for v in lam])
        _write_csv(out.file("lambda.csv"),
                   "graph_id," + ",".join(f"l{k + 1}" for k in range(d)), rows)
        return 0
    except BaseException:
        out.discard()
        raise


def _cmd_cluster(args):
    if args.d < 1 or args.K < 1:
        raise UsageError("--d and --K must be at least 1")
    gs = load_graph_set(args.manifest)
    truth = None
    if args.truth is not None:
        truth = _read_matrix_csv(args.truth).ravel().astype(np.int64)
        if truth.shape[0] != gs.n:
            raise GraphFormatError("--truth must list one label per vertex")
    out = _OutputDir(args.out)
    try:
        labelings = cluster_pipeline(gs, args.d, args.K, args.seed)
        rows = []
        for i, labels in enumerate(labelings):
            for v, lab in enumerate(labels):
                rows.append([str(i), str(v), str(int(lab))])
        _write_csv(out.file("labels.csv"), "graph_id,vertex_id,label", rows)
        if truth is not None:
            lines = []
            aris, purities = [], []
            for i, labels in enumerate(labelings):
                a, p = ari(labels, truth), purity(labels, truth)
                aris.append(a)
                purities.append(p)
                lines.append(f"ari_{i}={_fmt(a)}")
                lines.append(f"purity_{i}={_fmt(p)}")
            lines.append(f"ari_mean={_fmt(np.mean(aris))}")
            lines.append(f"purity_mean={_fmt(np.mean(purities))}")
            with open(out.file("metrics.txt"), "w", encoding="utf-8", newline="") as fh:
                fh.write("\n".join(lines) + "\n")
        return 0
    except BaseException:
        out.discard()
        raise


def _cmd_experiment_bias(args):
    if args.m_max < 16 or (args.m_max & (args.m_max - 1)) != 0:
        raise UsageError("--m-max must be a power of two >= 16")
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    out = _OutputDir(args.out)
    try:
        rows = bias_experiment(args.m_max, args.reps, args.seed, workers=args.workers)
        _write_csv(out.file("bias_curves.csv"), "rep,m,k,bias,delta",
                   ([_cell(c) for c in row] for row in rows))
        return 0
    except BaseException:
        out.discard()
        raise


def _cmd_experiment_classify(args):
    try:
        m_list = [int(x) for x in args.m_list.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--m-list must be comma-separated integers, got {args.m_list!r}")
    if not m_list or any(m < 4 or m % 2 for m in m_list):
        raise UsageError("every m must be even and at least 4")
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    out = _OutputDir(args.out)
    try:
        rows = classify_experiment(m_list, args.reps, args.seed,
                                   workers=args.workers,
                                   shuffle_labels=args.shuffle_labels)
        _write_csv(out.file("accuracy.csv"), "method,m,rep,accuracy",
                   ([row[2], str(row[1]), str(row[0]), _fmt(row[3])] for row in rows))
        return 0
    except BaseException:
        out.discard()
        raise


def _cmd_bound_check(args):
    if not 0.0 <= args.p <= 1.0:
        raise UsageError("--p must lie in [0,1]")
    if args.n < 1 or args.m < 1:
        raise UsageError("--n and --m must be positive")
    out = _OutputDir(args.out)
    try:
        rep = bound_check(args.n, args.p, args.m, args.seed)
        lines = [
            f"n={rep['n']}",
            f"p={_fmt(rep['p'])}",
            f"m={rep['m']}",
            f"seed={rep['seed']}",
            f"empirical_error={_fmt(rep['empirical_error'])}",
            f"overlap={_fmt(rep['overlap'])}",
            f"bound={_fmt(rep['bound'])}",
            f"within_bound={'true' if rep['within_bound'] else 'false'}",
        ]
        with open(out.file("report.txt"), "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
        print("\n".join(lines))
        return 0
    except BaseException:
        out.discard()
        raise


# -- argument plumbing ---------------------------------------------------------


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mgembed",
        description="Joint embedding of vertex-aligned graph collections.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_required):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", default=None,
                       help="key=value file supplying defaults for flags")
        p.add_argument("--seed", type=int, default=None, required=False)
        p.add_argument("--workers", type=int, default=1)
        p.set_defaults(seed_required=seed_required)

    p = sub.add_parser("sample", help="sample a graph set from a model spec")
    p.add_argument("--model", required=True, help="model specification file")
    p.add_argument("--m", type=int, required=True)
    common(p, seed_required=True)
    p.set_defaults(run=_cmd_sample)

    p = sub.add_parser("embed", help="jointly embed a graph set")
    p.add_argument("--manifest", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-inner", type=int, default=500)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--init", choices=("eig", "random"), default="eig")
    common(p, seed_required=False)
    p.set_defaults(run=_cmd_embed)

    p = sub.add_parser("project", help="project graphs onto fitted components")
    p.add_argument("--h-file", required=True, help="h.csv from an embedding run")
    p.add_argument("--graph", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--mode", choices=("greedy", "joint"), default="greedy")
    common(p, seed_required=False)
    p.set_defaults(run=_cmd_project)

    p = sub.add_parser("cluster", help="cluster vertices via latent positions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--truth", default=None, help="CSV of true vertex labels")
    common(p, seed_required=True)
    p.set_defaults(run=_cmd_cluster)

    p = sub.add_parser("experiment-bias", help="bias/convergence experiment")
    p.add_argument("--m-max", type=int, default=4096)
    p.add_argument("--reps", type=int, default=5)
    common(p, seed_required=True)
    p.set_defaults(run=_cmd_experiment_bias)

    p = sub.add_parser("experiment-classify", help="classification benchmark")
    p.add_argument("--m-list", default="4,8,16,32,64,128,200")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--shuffle-labels", action="store_true")
    common(p, seed_required=True)
    p.set_defaults(run=_cmd_experiment_classify)

    p = sub.add_parser("bound-check", help="numeric check of the bias bound")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--m", type=int, default=1024)
    common(p, seed_required=True)
    p.set_defaults(run=_cmd_bound_check)

    return parser


def _apply_config(parser, args):
    """Fill unset flags from --config; unknown keys are usage errors."""
    if args.config is None:
        return
    values = _read_kv_file(args.config)
    known = {k for k in vars(args)
             if k not in ("run", "command", "config", "seed_required")}
    for key, raw in values.items():
        if key not in known:
            raise UsageError(f"unknown config key {key!r}")
        current = getattr(args, key)
        default = parser.get_default(key)
        if current is not None and current != default:
            continue  # explicit flags win over the config file
        if key in ("m", "d", "K", "m_max", "reps", "seed", "workers", "max_inner",
                   "restarts", "n"):
            setattr(args, key, int(raw))
        elif key in ("tol", "p"):
            setattr(args, key, float(raw))
        elif key == "shuffle_labels":
            setattr(args, key, raw.strip() in ("1", "true", "yes"))
        else:
            setattr(args, key, raw)


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _apply_config(parser, args)
        if args.seed_required and args.seed is None:
            raise UsageError(f"{args.command}: --seed is required")
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise UsageError("--seed must be a u64")
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        return args.run(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GraphFormatError, InvalidParametersError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (ConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


def entrypoint():
    sys.exit(main())
