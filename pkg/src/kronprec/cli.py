"""Command-line pipeline: simulate, residualize, cov, estimate, analyze.

Each subcommand reads files written by the previous stage and writes its own
outputs into ``--out`` (default: ``$KRONPREC_OUT`` or the current directory).
Exit codes: 0 success, 1 invalid input or arguments, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .covariance import (
    load_matrix,
    matrix_to_json,
    sample_cov,
    theoretical_penalties,
    to_correlation,
    write_matrix_csv,
)
from .data import load_metadata, load_tensor, residualize, write_tensor
from .errors import NoConvergence, NumericalError, ValidationError
from .glasso import SolverConfig, glasso
from .graphs import (
    GraphMetrics,
    LabeledGraph,
    cluster_cut_weights,
    edge_fraction_by_attribute,
    graph_from_precision,
    graph_metrics,
    graph_set_ops,
    mean_abs_pearson_among_edges,
    read_edge_csv,
    supernode_graph,
    write_dot,
    write_edge_csv,
)
from .nodewise import mb_edges, nodewise
from .simulate import FACTOR_KINDS, FactorSpec, make_factor, precision_support, sample_matrix_normal

OUT_ENV = "KRONPREC_OUT"
ANALYSES = ("fractions", "pearson_means", "cut", "supernode", "metrics", "setops")

# (n_w, n_s, n_r) of the original study, whose rounded word-count penalty was quoted as 0.03
REPORTED_LAMBDA_A = {(93, 20, 4): 0.03}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _lambda_arg(raw: str):
    if raw == "theory":
        return raw
    try:
        value = float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'theory', got {raw!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"penalty must be nonnegative, got {raw!r}")
    return value


def _nonneg(raw: str) -> float:
    value = float(raw)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {raw!r}")
    return value


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(obj, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _edge_pairs(mask: np.ndarray, labels) -> list[list[str]]:
    ii, jj = np.nonzero(np.triu(mask, 1))
    return [[labels[i], labels[j]] for i, j in zip(ii, jj)]


# --------------------------------------------------------------------------
# simulate


def _factor_spec(args, axis: str, dim: int, labels) -> FactorSpec:
    get = lambda name: getattr(args, f"{axis}_{name}")  # noqa: E731
    sizes = tuple(int(x) for x in get("blocks").split(",")) if get("blocks") else (dim,)
    return FactorSpec(
        kind=get("factor"),
        dim=dim,
        rho=get("rho"),
        bandwidth=get("bandwidth"),
        decay=get("decay"),
        sizes=sizes,
        within_corr=get("within"),
        sparse_inverse=args.sparse_inverse in (axis, "both"),
        labels=tuple(labels),
    )


def _placeholder_metadata(words, path: Path) -> None:
    vowels = ("a", "e", "i", "o", "u")
    onsets = (("m", "nasal"), ("b", "labial"), ("d", "alveolar"), ("f", "fricative"))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["word", "vowel", "vowel_length", "onset", "coda_first", "coda_last", "consonant_class"])
        for j, w in enumerate(words):
            onset, cls = onsets[j % len(onsets)]
            length = "long" if (j // len(vowels)) % 2 == 0 else "short"
            out.writerow([w, vowels[j % len(vowels)], length, onset, "s", "t", cls])


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    words = tuple(f"w{k}" for k in range(1, args.n_w + 1))
    times = tuple(f"t{k}" for k in range(1, args.n_t + 1))
    A = make_factor(_factor_spec(args, "time", args.n_t, times))
    B = make_factor(_factor_spec(args, "word", args.n_w, words))
    t = sample_matrix_normal(A, B, args.n_s, args.n_r, args.seed, mean_scale=args.mean_scale)
    write_tensor(t, out / "tensor.csv")
    truth = {
        "seed": args.seed,
        "A": matrix_to_json(A),
        "B": matrix_to_json(B),
        "supports": {
            "time": _edge_pairs(precision_support(A), A.labels),
            "word": _edge_pairs(precision_support(B), B.labels),
        },
    }
    _write_json(truth, out / "truth.json")
    _placeholder_metadata(words, out / "metadata.csv")
    return 0


# --------------------------------------------------------------------------
# residualize / cov


def cmd_residualize(args) -> int:
    r = residualize(load_tensor(args.tensor))
    path = Path(args.output) if args.output else _out_dir(args) / "residuals.csv"
    write_tensor(r, path)
    return 0


def cmd_cov(args) -> int:
    out = _out_dir(args)
    r = residualize(load_tensor(args.tensor))
    s = sample_cov(r, args.axis)
    write_matrix_csv(s, out / f"gram_{args.axis}.csv")
    write_matrix_csv(to_correlation(s), out / f"corr_{args.axis}.csv")
    return 0


# --------------------------------------------------------------------------
# estimate


def _penalty(args, r) -> tuple[float, dict]:
    info: dict = {"lambda_A": None, "lambda_B": None, "lambda_A_reported": None}
    if r is not None:
        n_eff = args.n_eff_t if args.n_eff_t is not None else 1
        pen = theoretical_penalties(r.n_w, r.n_s, r.n_r, n_eff)
        info["lambda_A"] = pen.lambda_A
        info["lambda_A_reported"] = REPORTED_LAMBDA_A.get((r.n_w, r.n_s, r.n_r))
        if args.n_eff_t is not None:
            info["lambda_B"] = pen.lambda_B
        info.update(n_w=r.n_w, n_s=r.n_s, n_r=r.n_r, n_t=r.n_t, n_eff_t=args.n_eff_t)
    if args.lam != "theory":
        return float(args.lam), {**info, "lambda_source": "explicit"}
    if r is None:
        raise ValidationError("--lambda theory needs --tensor (sample sizes come from the tensor)")
    # the word-axis penalty uses the effective time count, the time-axis one the word count
    if args.axis == "word":
        if args.n_eff_t is None:
            raise ValidationError("--lambda theory on the word axis needs --n-eff-t")
        return info["lambda_B"], {**info, "lambda_source": "theory"}
    return info["lambda_A"], {**info, "lambda_source": "theory"}


def _recorded(fn):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NoConvergence)
        result = fn()
    msgs = [str(w.message) for w in caught if issubclass(w.category, NoConvergence)]
    for w in caught:
        if not issubclass(w.category, NoConvergence):
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    return result, msgs


def cmd_estimate(args) -> int:
    out = _out_dir(args)
    if (args.tensor is None) == (args.matrix is None):
        raise ValidationError("give exactly one of --tensor or --matrix")
    r = None
    if args.tensor is not None:
        r = residualize(load_tensor(args.tensor))
        gamma = to_correlation(sample_cov(r, args.axis))
    else:
        gamma = load_matrix(args.matrix, kind="correlation")
    groups = None
    if args.metadata is not None:
        meta = load_metadata(args.metadata, gamma.labels if args.axis == "word" else None)
        if args.axis == "word" and args.attribute:
            groups = {w: meta.attribute(w, args.attribute) for w in gamma.labels}
    lam, info = _penalty(args, r)
    cfg = SolverConfig()
    ax = args.axis
    report = {"axis": ax, "lambda": lam, "threshold": args.threshold, "method": args.method, **info}
    write_matrix_csv(gamma, out / f"corr_{ax}.csv")

    graphs: dict[str, LabeledGraph] = {}
    methods = ("glasso", "nodewise") if args.method == "both" else (args.method,)
    for method in methods:
        if method == "glasso":
            est, warns = _recorded(lambda: glasso(gamma, lam, cfg))
            theta = est.theta
            entry = {**est.report(), "n_structural_edges": est.n_edges}
        else:
            fit, warns = _recorded(lambda: nodewise(gamma, lam, cfg, threshold=args.threshold))
            theta = fit.theta
            entry = {
                **fit.report(),
                "n_or_edges": len(mb_edges(fit, "or")),
                "n_and_edges": len(mb_edges(fit, "and")),
                "converged": not warns,
            }
        g = graph_from_precision(theta, gamma, args.threshold)
        entry.update(n_edges=g.n_edges, warning="; ".join(warns) or None)
        report[method] = entry
        graphs[method] = g
        write_matrix_csv(theta, out / f"theta_{method}_{ax}.csv")
        write_edge_csv(g, out / f"edges_{method}_{ax}.csv")
        write_dot(g, out / f"graph_{method}_{ax}.dot", groups)

    if args.method == "both":
        both, only_g, only_n = graph_set_ops(graphs["glasso"], graphs["nodewise"])
        write_edge_csv(both, out / f"edges_intersection_{ax}.csv")
        write_edge_csv(only_g, out / f"edges_glasso_only_{ax}.csv")
        write_edge_csv(only_n, out / f"edges_nodewise_only_{ax}.csv")
        report["comparison"] = {"intersection": both.n_edges, "glasso_only": only_g.n_edges, "nodewise_only": only_n.n_edges}
    _write_json(report, out / f"report_{ax}.json")
    return 0


# --------------------------------------------------------------------------
# analyze


def _write_rows(rows, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _metrics_rows(m: GraphMetrics) -> list[list[str]]:
    return [
        ["avg_degree", "n_edges", "trace_over_frobenius", "spectral_norm"],
        [format(m.avg_degree, ".17g"), str(m.n_edges), format(m.trace_over_frobenius, ".17g"), format(m.spectral_norm, ".17g")],
    ]


def cmd_analyze(args) -> int:
    out = _out_dir(args)
    matrix = load_matrix(args.matrix) if args.matrix else None
    meta = load_metadata(args.metadata) if args.metadata else None
    if not args.graph:
        raise ValidationError("give at least one --graph edge list")
    analyses = args.analysis
    if not analyses:
        # everything the given inputs allow
        analyses = [a for a in ANALYSES if a not in ("fractions", "pearson_means", "cut", "supernode") or meta and args.attribute]
        analyses = [a for a in analyses if (a != "metrics" or matrix) and (a != "setops" or len(args.graph) == 2)]
    if matrix is not None:
        vertices = matrix.labels
    elif meta is not None:
        vertices = meta.words
    else:
        vertices = None
    graphs = [read_edge_csv(p, vertices) for p in args.graph]
    g = graphs[0]
    attr = args.attribute

    def need_meta(what):
        if meta is None or not attr:
            raise ValidationError(f"{what} needs --metadata and --attribute")
        return {v: meta.attribute(v, attr) for v in g.vertices}

    for analysis in analyses:
        if analysis == "fractions":
            need_meta(analysis)
            edge_fraction_by_attribute(g, meta, attr).to_csv(out / f"fractions_{attr}.csv")
        elif analysis == "pearson_means":
            need_meta(analysis)
            mean_abs_pearson_among_edges(g, meta, attr).to_csv(out / f"pearson_means_{attr}.csv")
        elif analysis == "cut":
            within, between = cluster_cut_weights(g, need_meta(analysis))
            _write_rows([["within", "between"], [format(within, ".17g"), format(between, ".17g")]], out / f"cut_{attr}.csv")
        elif analysis == "supernode":
            sg = supernode_graph(g, need_meta(analysis))
            write_edge_csv(sg, out / f"supernode_{attr}.csv")
            write_dot(sg, out / f"supernode_{attr}.dot")
        elif analysis == "metrics":
            if matrix is None:
                raise ValidationError("metrics needs --matrix")
            _write_rows(_metrics_rows(graph_metrics(matrix, g)), out / "metrics.csv")
        elif analysis == "setops":
            if len(graphs) != 2:
                raise ValidationError("setops needs exactly two --graph files")
            both, only1, only2 = graph_set_ops(graphs[0], graphs[1])
            write_edge_csv(both, out / "setops_intersection.csv")
            write_edge_csv(only1, out / "setops_only_1.csv")
            write_edge_csv(only2, out / "setops_only_2.csv")
    return 0


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kronprec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")

    s = sub.add_parser("simulate", help="draw a matrix-normal tensor with known factors")
    common(s)
    s.add_argument("--n-w", type=int, default=93)
    s.add_argument("--n-t", type=int, default=19)
    s.add_argument("--n-s", type=int, default=20)
    s.add_argument("--n-r", type=int, default=4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mean-scale", type=float, default=0.0, help="scale of per-speaker mean offsets")
    s.add_argument("--sparse-inverse", choices=("none", "word", "time", "both"), default="word",
                   help="place the factor pattern on the precision instead of the covariance")
    for axis, kind in (("word", "banded"), ("time", "ar1")):
        s.add_argument(f"--{axis}-factor", choices=FACTOR_KINDS, default=kind)
        s.add_argument(f"--{axis}-rho", type=float, default=0.5)
        s.add_argument(f"--{axis}-bandwidth", type=int, default=1)
        s.add_argument(f"--{axis}-decay", type=float, default=0.3)
        s.add_argument(f"--{axis}-blocks", default="", help="comma-separated block sizes")
        s.add_argument(f"--{axis}-within", type=float, default=0.0)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("residualize", help="subtract per-speaker trial means")
    common(r)
    r.add_argument("--tensor", required=True)
    r.add_argument("--output", help="output file (default <out>/residuals.csv)")
    r.set_defaults(func=cmd_residualize)

    c = sub.add_parser("cov", help="Gram and correlation matrices for one axis")
    common(c)
    c.add_argument("--tensor", required=True)
    c.add_argument("--axis", choices=("word", "time"), default="word")
    c.set_defaults(func=cmd_cov)

    e = sub.add_parser("estimate", help="sparse precision estimates, edge lists and report")
    common(e)
    e.add_argument("--tensor")
    e.add_argument("--matrix", help="correlation matrix CSV/JSON instead of a tensor")
    e.add_argument("--metadata")
    e.add_argument("--attribute", help="metadata attribute used as DOT cluster")
    e.add_argument("--axis", choices=("word", "time"), default="word")
    e.add_argument("--lambda", dest="lam", type=_lambda_arg, required=True)
    e.add_argument("--n-eff-t", type=int)
    e.add_argument("--threshold", type=_nonneg, default=0.0)
    e.add_argument("--method", choices=("glasso", "nodewise", "both"), default="glasso")
    e.add_argument("--seed", type=int, default=0, help="accepted for symmetry; estimation is deterministic")
    e.set_defaults(func=cmd_estimate)

    a = sub.add_parser("analyze", help="graph analytics tables")
    common(a)
    a.add_argument("--graph", action="append", help="edge-list CSV (repeat for setops)")
    a.add_argument("--metadata")
    a.add_argument("--attribute")
    a.add_argument("--matrix", help="factor estimate for metrics; its labels fix the vertex set")
    a.add_argument("--analysis", action="append", choices=ANALYSES)
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"kronprec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except np.linalg.LinAlgError as exc:
        print(f"kronprec: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"kronprec: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"kronprec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
