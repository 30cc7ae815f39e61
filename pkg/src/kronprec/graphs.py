"""Labeled conditional-independence graphs and the analytics run on them.

An edge ``i - j`` records a nonzero off-diagonal precision entry; it carries
the precision value as ``weight`` and the sample correlation of the same pair
as ``pearson``.  Attribute-pair tables group vertices by a metadata attribute
(vowel, onset, ...) and summarise the edges between each pair of groups.
"""
from __future__ import annotations

import csv
import math
import os
import warnings
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .covariance import SymMatrix
from .data import WordMetadata
from .errors import (
    DimensionMismatch,
    MissingAttribute,
    MissingWord,
    NotEnoughEdges,
    UnassignedVertex,
    ValidationError,
    VertexSetMismatch,
)

ZERO_TOL = 1e-10


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    weight: float
    pearson: float = float("nan")


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """Undirected simple graph on ordered vertex labels.

    ``edges`` is keyed by endpoint pairs in vertex order, so ``(a, b)`` with
    ``a`` listed before ``b`` in ``vertices``.
    """

    vertices: tuple[str, ...]
    edges: Mapping[tuple[str, str], Edge] = field(default_factory=dict)
    attributes: Mapping[str, Mapping[str, str]] = field(default_factory=dict)

    def __post_init__(self):
        vertices = tuple(str(v) for v in self.vertices)
        if len(set(vertices)) != len(vertices):
            raise ValidationError("vertex labels are not unique")
        pos = {v: k for k, v in enumerate(vertices)}
        canon: dict[tuple[str, str], Edge] = {}
        for e in self.edges.values():
            if e.a not in pos or e.b not in pos:
                raise ValidationError(f"edge {e.a!r}-{e.b!r} has an undeclared endpoint")
            if e.a == e.b:
                raise ValidationError(f"self-loop on {e.a!r}")
            if pos[e.a] > pos[e.b]:
                e = Edge(e.b, e.a, e.weight, e.pearson)
            key = (e.a, e.b)
            if key in canon:
                raise ValidationError(f"edge {key} listed twice")
            canon[key] = e
        ordered = dict(sorted(canon.items(), key=lambda kv: (pos[kv[0][0]], pos[kv[0][1]])))
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", ordered)

    @classmethod
    def from_edges(cls, vertices: Sequence[str], edges: Iterable[Edge], attributes=None) -> LabeledGraph:
        return cls(tuple(vertices), {(e.a, e.b): e for e in edges}, attributes or {})

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def pairs(self) -> frozenset[frozenset[str]]:
        return frozenset(frozenset(k) for k in self.edges)

    def degree(self) -> dict[str, int]:
        deg = dict.fromkeys(self.vertices, 0)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def get(self, a: str, b: str) -> Edge | None:
        return self.edges.get((a, b)) or self.edges.get((b, a))


@dataclass(frozen=True)
class GraphMetrics:
    avg_degree: float
    n_edges: int
    trace_over_frobenius: float
    spectral_norm: float


@dataclass(frozen=True)
class PairTable:
    """Values indexed by unordered pairs of attribute values.

    Keys are ``(a, b)`` with ``a <= b``.  Cells that are undefined or have no
    contributing edges are simply missing from ``values``; ``counts`` keeps the
    integer numerator/denominator behind each cell.
    """

    attribute: str
    groups: tuple[str, ...]
    values: Mapping[tuple[str, str], float]
    counts: Mapping[tuple[str, str], tuple[int, int]] = field(default_factory=dict)
    undefined: frozenset[tuple[str, str]] = frozenset()

    def get(self, a: str, b: str) -> float | None:
        return self.values.get((min(a, b), max(a, b)))

    def to_rows(self) -> list[list[str]]:
        rows = [[self.attribute, *self.groups]]
        for a in self.groups:
            row = [a]
            for b in self.groups:
                v = self.get(a, b)
                row.append("" if v is None else format(v, ".17g"))
            rows.append(row)
        return rows

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(self.to_rows())


# --------------------------------------------------------------------------
# construction


def graph_from_precision(
    theta: SymMatrix, gamma: SymMatrix | None = None, tau: float = 0.0, labels: Sequence[str] | None = None
) -> LabeledGraph:
    """Edge ``i - j`` iff ``|theta_ij| >= max(tau, 1e-10)``."""
    labels = tuple(labels) if labels is not None else theta.labels
    if len(labels) != theta.dim or (gamma is not None and gamma.dim != theta.dim):
        raise DimensionMismatch("precision, correlation and labels must share one dimension")
    if not tau >= 0:
        raise ValidationError(f"threshold must be nonnegative, got {tau}")
    t = theta.entries
    cut = max(tau, ZERO_TOL)
    ii, jj = np.nonzero(np.triu(np.abs(t) >= cut, 1))
    edges = [
        Edge(labels[i], labels[j], float(t[i, j]), float(gamma.entries[i, j]) if gamma is not None else math.nan)
        for i, j in zip(ii, jj)
    ]
    return LabeledGraph.from_edges(labels, edges)


def top_k_edges(theta: SymMatrix, k: int, gamma: SymMatrix | None = None) -> LabeledGraph:
    """Keep the ``k`` largest ``|theta_ij|`` off-diagonal entries.

    Ties at the cutoff go to the lexicographically smaller label pair.  When
    fewer than ``k`` nonzero entries exist, all are returned and
    :class:`NotEnoughEdges` is warned.
    """
    if int(k) != k or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k!r}")
    labels = theta.labels
    t = theta.entries
    ii, jj = np.nonzero(np.triu(np.abs(t) >= ZERO_TOL, 1))
    cand = sorted(
        zip(ii.tolist(), jj.tolist()),
        key=lambda ij: (-abs(t[ij]), tuple(sorted((labels[ij[0]], labels[ij[1]])))),
    )
    if len(cand) < k:
        warnings.warn(f"requested {k} edges but only {len(cand)} are nonzero", NotEnoughEdges, stacklevel=2)
    keep = cand[: int(k)]
    edges = [
        Edge(labels[i], labels[j], float(t[i, j]), float(gamma.entries[i, j]) if gamma is not None else math.nan)
        for i, j in keep
    ]
    return LabeledGraph.from_edges(labels, edges)


# --------------------------------------------------------------------------
# attribute tables


def _vertex_groups(g: LabeledGraph, m: WordMetadata | Mapping[str, str], attribute: str) -> dict[str, str]:
    out = {}
    for v in g.vertices:
        try:
            out[v] = m.attribute(v, attribute) if isinstance(m, WordMetadata) else m[v]
        except (MissingWord, KeyError):
            raise MissingAttribute(f"vertex {v!r} has no {attribute!r} attribute") from None
    return out


def _members(groups: Mapping[str, str]) -> dict[str, int]:
    sizes: dict[str, int] = {}
    for value in groups.values():
        sizes[value] = sizes.get(value, 0) + 1
    return dict(sorted(sizes.items()))


def _cell(groups: Mapping[str, str], a: str, b: str) -> tuple[str, str]:
    x, y = groups[a], groups[b]
    return (x, y) if x <= y else (y, x)


def edge_fraction_by_attribute(g: LabeledGraph, m, attribute: str) -> PairTable:
    """Fraction of possible edges present between each pair of attribute values.

    Possible edges are ``|a| |b|`` between different groups and ``C(|a|, 2)``
    within a group; same-group cells of singleton groups are undefined.
    """
    groups = _vertex_groups(g, m, attribute)
    sizes = _members(groups)
    present: dict[tuple[str, str], int] = {}
    for a, b in g.edges:
        key = _cell(groups, a, b)
        present[key] = present.get(key, 0) + 1
    values, counts, undefined = {}, {}, set()
    for x, y in combinations_with_replacement(sizes, 2):
        possible = sizes[x] * sizes[y] if x != y else sizes[x] * (sizes[x] - 1) // 2
        if possible == 0:
            undefined.add((x, y))
            continue
        n = present.get((x, y), 0)
        counts[(x, y)] = (n, possible)
        values[(x, y)] = n / possible
    return PairTable(attribute, tuple(sizes), values, counts, frozenset(undefined))


def mean_abs_pearson_among_edges(g: LabeledGraph, m, attribute: str) -> PairTable:
    """Mean ``|pearson|`` over the edges in each attribute-pair cell.

    Cells without edges are absent, not zero.
    """
    groups = _vertex_groups(g, m, attribute)
    sizes = _members(groups)
    acc: dict[tuple[str, str], list[float]] = {}
    for (a, b), e in g.edges.items():
        acc.setdefault(_cell(groups, a, b), []).append(abs(e.pearson))
    values = {key: math.fsum(v) / len(v) for key, v in sorted(acc.items())}
    counts = {key: (len(v), len(v)) for key, v in sorted(acc.items())}
    return PairTable(attribute, tuple(sizes), values, counts)


# --------------------------------------------------------------------------
# partitions


def _check_total(g: LabeledGraph, assignment: Mapping[str, str]) -> None:
    missing = [v for v in g.vertices if v not in assignment]
    if missing:
        raise UnassignedVertex(f"no group for vertices: {', '.join(missing)}")


def cluster_cut_weights(g: LabeledGraph, partition: Mapping[str, str]) -> tuple[float, float]:
    """``(within, between)`` sums of ``|weight|`` for edges inside / across clusters."""
    _check_total(g, partition)
    within, between = [], []
    for (a, b), e in g.edges.items():
        (within if partition[a] == partition[b] else between).append(abs(e.weight))
    return math.fsum(within), math.fsum(between)


def supernode_graph(g: LabeledGraph, grouping: Mapping[str, str]) -> LabeledGraph:
    """Collapse each group to one vertex.

    Groups ``a != b`` are joined when any edge of ``g`` connects them; the
    supernode edge weight counts those edges and ``pearson`` is their mean.
    Supernodes are ordered by group label.
    """
    _check_total(g, grouping)
    nodes = sorted({grouping[v] for v in g.vertices})
    acc: dict[tuple[str, str], list[float]] = {}
    for a, b in g.edges:
        x, y = grouping[a], grouping[b]
        if x == y:
            continue
        acc.setdefault((min(x, y), max(x, y)), []).append(g.edges[(a, b)].pearson)
    edges = [Edge(x, y, float(len(ps)), math.fsum(ps) / len(ps)) for (x, y), ps in acc.items()]
    return LabeledGraph.from_edges(nodes, edges)


def graph_set_ops(g1: LabeledGraph, g2: LabeledGraph) -> tuple[LabeledGraph, LabeledGraph, LabeledGraph]:
    """``(intersection, only_g1, only_g2)`` of the edge sets.

    Intersection edges keep the attributes from ``g1``; all three graphs use
    ``g1``'s vertex order.
    """
    if set(g1.vertices) != set(g2.vertices):
        raise VertexSetMismatch("graphs must have the same vertex set")
    both, only1, only2 = [], [], []
    for e in g1.edges.values():
        (both if g2.get(e.a, e.b) is not None else only1).append(e)
    for e in g2.edges.values():
        if g1.get(e.a, e.b) is None:
            only2.append(e)
    make = lambda es: LabeledGraph.from_edges(g1.vertices, es, g1.attributes)  # noqa: E731
    return make(both), make(only1), make(only2)


def graph_metrics(matrix: SymMatrix, g: LabeledGraph) -> GraphMetrics:
    """Degree summary of ``g`` and norms of the factor estimate ``matrix``.

    ``trace_over_frobenius`` is computed as ``sign(tr) sqrt(tr^2 / ||M||_F^2)``,
    which is exact for scaled identities.
    """
    if matrix.dim != len(g.vertices):
        raise DimensionMismatch(f"matrix has dim {matrix.dim}, graph has {len(g.vertices)} vertices")
    a = matrix.entries
    tr = float(np.trace(a))
    fro2 = float(np.sum(a * a))
    ratio = math.copysign(math.sqrt(tr * tr / fro2), tr) if fro2 > 0 else 0.0
    return GraphMetrics(
        avg_degree=2.0 * g.n_edges / len(g.vertices),
        n_edges=g.n_edges,
        trace_over_frobenius=ratio,
        spectral_norm=float(np.linalg.norm(a, 2)),
    )


# --------------------------------------------------------------------------
# export


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_edge_csv(g: LabeledGraph, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["label_a", "label_b", "weight", "pearson"])
        for e in g.edges.values():
            out.writerow([e.a, e.b, _fmt(e.weight), _fmt(e.pearson)])


def read_edge_csv(path: str | os.PathLike, vertices: Sequence[str] | None = None) -> LabeledGraph:
    """Read an edge list; without ``vertices`` the vertex set is the edge endpoints."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        edges = [
            Edge(r["label_a"].strip(), r["label_b"].strip(), float(r["weight"]), float(r.get("pearson") or "nan"))
            for r in reader
        ]
    if vertices is None:
        seen: dict[str, None] = {}
        for e in edges:
            seen.setdefault(e.a)
            seen.setdefault(e.b)
        vertices = list(seen)
    return LabeledGraph.from_edges(vertices, edges)


def _q(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: LabeledGraph, groups: Mapping[str, str] | None = None, name: str = "G") -> str:
    lines = [f"graph {_q(name)} {{"]
    for v in g.vertices:
        attrs = [f"label={_q(v)}"]
        if groups is not None and v in groups:
            attrs.append(f"cluster={_q(groups[v])}")
        lines.append(f"  {_q(v)} [{', '.join(attrs)}];")
    for e in g.edges.values():
        lines.append(f"  {_q(e.a)} -- {_q(e.b)} [label={_q(_fmt(e.weight))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_dot(g: LabeledGraph, path: str | os.PathLike, groups: Mapping[str, str] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_dot(g, groups))
