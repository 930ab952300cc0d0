"""Explicit Isserlis enumeration over weight monomials.

This is the transparent route: every derivative choice and every per-layer
perfect matching is materialized as a :class:`Contraction`, index classes are
merged with union-find and the width power is read off the surviving classes.
It is exponential in the number of factors and guarded by a budget; the
memoized evaluator in :mod:`widecorr.wick.engine` computes the same numbers
for larger instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from ..clustergraph import ClusterGraph, graph_from_edges
from ..corrspec import CorrelationSpec
from ..unionfind import UnionFind
from .expansion import (
    BudgetExceeded,
    MonomialNetworkConfig,
    WeightMonomial,
    expand_network,
    resolve_layers,
)
from .laurent import CorrelationValue

__all__ = [
    "perfect_matchings",
    "DerivedTerm",
    "Contraction",
    "differentiate",
    "enumerate_contractions",
    "single_contraction",
    "evaluate_expectation",
    "correlate_explicit",
    "derived_terms",
    "pairing_layers",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 12

FactorId = tuple[int, int]  # (tensor position, factor index within its monomial)


def perfect_matchings(items):
    """Yield every partition of ``items`` into unordered pairs ((2k-1)!! of them)."""
    items = list(items)
    if not items:
        yield ()
        return
    if len(items) % 2:
        return
    first, rest = items[0], items[1:]
    for i, other in enumerate(rest):
        for tail in perfect_matchings(rest[:i] + rest[i + 1 :]):
            yield ((first, other),) + tail


@dataclass(frozen=True)
class DerivedTerm:
    """One product-rule term: the monomials, the factors removed by derivatives
    and the pairings those derivative pairs force."""

    monomials: tuple[WeightMonomial, ...]
    forced: tuple[tuple[FactorId, FactorId], ...]
    multiplicity: int = 1

    @property
    def removed(self) -> frozenset[FactorId]:
        return frozenset(f for pair in self.forced for f in pair)

    def remaining_by_layer(self) -> dict[int, list[FactorId]]:
        out: dict[int, list[FactorId]] = {}
        removed = self.removed
        for t, mono in enumerate(self.monomials):
            for k, f in enumerate(mono.factors):
                if (t, k) not in removed:
                    out.setdefault(f.layer, []).append((t, k))
        return out

    @property
    def m(self) -> int:
        return len(self.monomials)


def pairing_layers(layers, count: int, depth: int):
    """Normalize a layer restriction to one set of layer numbers per pairing."""
    if layers is None:
        return None
    layers = list(layers)
    if all(isinstance(x, (str, int)) for x in layers):
        return [resolve_layers(layers, depth)] * count
    if len(layers) != count:
        raise ValueError("per-pairing layer restriction needs one entry per pairing")
    return [resolve_layers(x, depth) for x in layers]


def differentiate(monomials, spec: CorrelationSpec, layers=None) -> list[DerivedTerm]:
    """Apply the spec's paired derivatives to a product of monomials by the product rule.

    Each pairing ``sum_mu d_mu(.) d_mu(.)`` picks one not-yet-differentiated
    factor in each of its two tensors, of the same layer, removes both and
    forces them into an Isserlis pair (the two Kronecker deltas the summed
    derivative produces).  ``layers`` optionally restricts the layers a
    derivative may hit, either for all pairings or as one collection per
    pairing.  Terms with no matching weight type are dropped.
    """
    monomials = tuple(monomials)
    if len(monomials) != spec.m:
        raise ValueError("need one monomial per tensor of the spec")
    allowed = pairing_layers(layers, len(spec.pairings), monomials[0].depth)
    out: list[DerivedTerm] = []

    def rec(p, used: frozenset, forced: tuple):
        if p == len(spec.pairings):
            out.append(DerivedTerm(monomials, forced))
            return
        (ta, _), (tb, _) = spec.pairings[p]
        for ka, fa in enumerate(monomials[ta].factors):
            if (ta, ka) in used or (allowed is not None and fa.layer not in allowed[p]):
                continue
            for kb, fb in enumerate(monomials[tb].factors):
                if fb.layer != fa.layer or (tb, kb) in used or (tb, kb) == (ta, ka):
                    continue
                rec(p + 1, used | {(ta, ka), (tb, kb)}, forced + (((ta, ka), (tb, kb)),))

    rec(0, frozenset(), ())
    return out


@dataclass(frozen=True)
class Contraction:
    """A full set of per-layer pairings (forced ones included) and its contribution."""

    pairings: tuple[tuple[int, tuple[tuple[FactorId, FactorId], ...]], ...]
    forced: tuple[tuple[FactorId, FactorId], ...]
    coefficient: Fraction
    power: int
    input_key: tuple[tuple[str, str], ...]
    graph: ClusterGraph

    @property
    def component_count(self) -> int:
        return len(self.graph.components)

    def all_pairs(self):
        for _, pairs in self.pairings:
            yield from pairs

    def joins(self, i: int, j: int) -> bool:
        return any({a[0], b[0]} == {i, j} for a, b in self.all_pairs())


def _check_budget(term: DerivedTerm, budget: int):
    counts: dict[int, int] = {}
    for mono in term.monomials:
        for f in mono.factors:
            counts[f.layer] = counts.get(f.layer, 0) + 1
    for layer, c in counts.items():
        if c > budget:
            raise BudgetExceeded(
                f"layer {layer} carries {c} weight factors, above the budget of {budget}"
            )


class _TermFrame:
    """Index bookkeeping shared by all contractions of one derived term."""

    def __init__(self, term: DerivedTerm):
        monos = term.monomials
        self.term = term
        self.offsets = []
        total = 0
        for mono in monos:
            self.offsets.append(total)
            total += len(mono.var_kinds)
        self.total = total
        self.kinds = [k for mono in monos for k in mono.var_kinds]
        self.n_half = sum(mono.n_half for mono in monos)
        coef = Fraction(term.multiplicity)
        for mono in monos:
            coef *= mono.coefficient
        self.coefficient = coef
        self.base = UnionFind(total)
        for t, mono in enumerate(monos):
            for a, b in mono.deltas:
                self.base.union(self.offsets[t] + a, self.offsets[t] + b)
        for a, b in term.forced:
            self._join(self.base, a, b)
        self.label_of_dvar = {}
        for t, mono in enumerate(monos):
            for lab, v in mono.inputs:
                self.label_of_dvar[self.offsets[t] + v] = lab

    def _join(self, uf: UnionFind, a: FactorId, b: FactorId):
        monos = self.term.monomials
        fa = monos[a[0]].factors[a[1]]
        fb = monos[b[0]].factors[b[1]]
        if fa.layer != fb.layer:
            raise ValueError("only factors of the same layer can be paired")
        for sa, sb in zip(fa.slots, fb.slots):
            uf.union(self.offsets[a[0]] + sa, self.offsets[b[0]] + sb)

    def contraction(self, free_pairs) -> Contraction:
        """The contraction made of the forced pairs plus ``free_pairs``."""
        uf = UnionFind(self.total)
        uf.parent = list(self.base.parent)
        uf.size = list(self.base.size)
        uf.count = self.base.count
        for a, b in free_pairs:
            self._join(uf, a, b)
        n_classes = len({uf.find(v) for v, k in enumerate(self.kinds) if k == "n"})
        d_classes: dict[int, list[str]] = {}
        for v, lab in self.label_of_dvar.items():
            d_classes.setdefault(uf.find(v), []).append(lab)
        key = []
        for members in d_classes.values():
            if len(members) != 2:
                raise AssertionError("input-index classes always hold exactly two components")
            key.append(tuple(sorted(members)))
        monos = self.term.monomials
        full: dict[int, list] = {}
        for a, b in list(free_pairs) + list(self.term.forced):
            full.setdefault(monos[a[0]].factors[a[1]].layer, []).append((a, b))
        graph = graph_from_edges(self.term.m, [(a[0], b[0]) for pairs in full.values() for a, b in pairs])
        return Contraction(
            tuple(sorted((layer, tuple(ps)) for layer, ps in full.items())),
            self.term.forced,
            self.coefficient,
            n_classes - self.n_half // 2,
            tuple(sorted(key)),
            graph,
        )


def single_contraction(term: DerivedTerm, free_pairs) -> Contraction:
    """Evaluate one given completion of a derived term's forced pairs."""
    frame = _TermFrame(term)
    used = [f for pair in free_pairs for f in pair] + list(term.removed)
    expected = [(t, k) for t, mono in enumerate(term.monomials) for k in range(len(mono.factors))]
    if sorted(used) != sorted(expected):
        raise ValueError("pairs must cover every weight factor exactly once")
    return frame.contraction(free_pairs)


def enumerate_contractions(term: DerivedTerm, budget: int = DEFAULT_BUDGET):
    """Yield every nonzero :class:`Contraction` of a derived term."""
    _check_budget(term, budget)
    remaining = term.remaining_by_layer()
    layers = sorted(remaining)
    if any(len(remaining[layer]) % 2 for layer in layers):
        return
    frame = _TermFrame(term)
    if frame.n_half % 2:
        return
    per_layer = [list(perfect_matchings(remaining[layer])) for layer in layers]
    for choice in product(*per_layer):
        yield frame.contraction([p for pairs in choice for p in pairs])


def evaluate_expectation(terms, budget: int = DEFAULT_BUDGET) -> CorrelationValue:
    """Exact expectation of derived terms: the sum of all their contractions."""
    if isinstance(terms, DerivedTerm):
        terms = [terms]
    counts: dict = {}
    for term in terms:
        for c in enumerate_contractions(term, budget):
            k = (c.power, c.input_key)
            counts[k] = counts.get(k, 0) + c.coefficient
    return CorrelationValue.from_counts(counts)


def derived_terms(spec: CorrelationSpec, config: MonomialNetworkConfig, layers=None, cap: int = 10_000):
    """All product-rule terms of the spec over the network's monomial expansion."""
    expansions = [expand_network(config, t.input_label, cap) for t in spec.tensors]
    for monos in product(*expansions):
        yield from differentiate(monos, spec, layers)


def correlate_explicit(spec, config, budget: int = DEFAULT_BUDGET, layers=None) -> CorrelationValue:
    return evaluate_expectation(derived_terms(spec, config, layers), budget)
