"""Cluster graphs of correlation specs and the width exponents they predict.

Two derivative tensors are joined by an edge when they share a summed index.
With ``n_e`` even-size and ``n_o`` odd-size components on ``m`` vertices the
mean scales at most like ``n ** (n_e + (n_o - m) / 2)``.

Exponents are :class:`fractions.Fraction` values with denominator 1 or 2 so
that comparisons in tests are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .corrspec import CorrelationSpec
from .unionfind import UnionFind

__all__ = [
    "ClusterGraph",
    "ExponentPrediction",
    "EXACT_ZERO",
    "build_cluster_graph",
    "graph_from_edges",
    "predict_exponent",
    "predict_variance_exponent",
    "predict_covariance_exponent",
    "predict",
]


class _ExactZero:
    """Marker for a covariance that vanishes identically at every width."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EXACT_ZERO"

    __str__ = lambda self: "exact-zero"  # noqa: E731


EXACT_ZERO = _ExactZero()


@dataclass(frozen=True)
class ClusterGraph:
    vertex_count: int
    edges: frozenset[tuple[int, int]]
    components: tuple[tuple[int, ...], ...]

    @property
    def m(self) -> int:
        return self.vertex_count

    @property
    def n_even(self) -> int:
        return sum(1 for c in self.components if len(c) % 2 == 0)

    @property
    def n_odd(self) -> int:
        return sum(1 for c in self.components if len(c) % 2 == 1)

    @property
    def census(self) -> tuple[int, int]:
        return self.n_even, self.n_odd

    def with_edge(self, i: int, j: int) -> "ClusterGraph":
        return graph_from_edges(self.vertex_count, set(self.edges) | {(min(i, j), max(i, j))})


def graph_from_edges(vertex_count: int, edges) -> ClusterGraph:
    """Cluster graph on ``vertex_count`` vertices; self-loops are dropped."""
    uf = UnionFind(vertex_count)
    clean = set()
    for i, j in edges:
        if i == j:
            continue
        clean.add((min(i, j), max(i, j)))
        uf.union(i, j)
    components = tuple(tuple(g) for g in uf.groups())
    return ClusterGraph(vertex_count, frozenset(clean), components)


def build_cluster_graph(spec: CorrelationSpec) -> ClusterGraph:
    """Edge between tensors I != J whenever some index is shared between them.

    A pairing between two slots of the same tensor adds no edge.
    """
    return graph_from_edges(spec.m, spec.tensor_pairs())


@dataclass(frozen=True)
class ExponentPrediction:
    n_even: int
    n_odd: int
    m: int
    s_C: Fraction
    s_V: Fraction

    def __post_init__(self):
        assert (2 * self.s_C).denominator == 1


def predict_exponent(graph: ClusterGraph) -> Fraction:
    """Width exponent bounding the mean: ``n_e + (n_o - m) / 2``."""
    return graph.n_even + Fraction(graph.n_odd - graph.vertex_count, 2)


def predict_variance_exponent(graph: ClusterGraph) -> Fraction:
    """Width exponent bounding the variance of the sampled product."""
    s_c = predict_exponent(graph)
    return 2 * s_c - 1 if graph.n_odd == 0 else 2 * s_c


def predict_covariance_exponent(gx: ClusterGraph, gy: ClusterGraph):
    """Exponent bounding ``Cov[F_x, F_y]``, or ``EXACT_ZERO`` when the odd-component total is odd."""
    odd = gx.n_odd + gy.n_odd
    if odd % 2 == 1:
        return EXACT_ZERO
    s = predict_exponent(gx) + predict_exponent(gy)
    return s - 1 if odd == 0 else s


def predict(spec: CorrelationSpec) -> ExponentPrediction:
    g = build_cluster_graph(spec)
    return ExponentPrediction(
        g.n_even, g.n_odd, g.vertex_count, predict_exponent(g), predict_variance_exponent(g)
    )


def format_exponent(value) -> str:
    if value is EXACT_ZERO:
        return str(EXACT_ZERO)
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
