"""Memoized exact evaluation of correlation functions.

The explicit enumerator materializes every matching; here the same sum is
organized layer by layer from the readout ``V`` down to ``U``.  At each layer
the hidden indices form *open classes*: groups of neurons already forced to
share an index value by the pairings made above.  A class is described only
by the multiset of weight factors hanging from it, each factor by its tensor
tag and the shape of the neuron it owns, so states from different product
terms coincide and are solved once.

Pairing two factors merges their classes; a class whose factors are all
paired is closed and contributes one free sum, a factor ``n``.  The two
neurons owned by a paired ``W`` (or ``V``) couple become one open class of
the next layer down; a paired ``U`` couple yields the Gram entry of its two
inputs.

Summed derivatives need no product rule here.  A derivative pairing between
tensors ``I`` and ``J`` that hits layer ``l`` is a *demand*: among the
layer-``l`` pairs exactly one ``I``–``J`` pair must be designated for it.
Summing over designations of full matchings counts every (derivative choice,
remaining matching) combination exactly once.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache
from itertools import product

from ..corrspec import CorrelationSpec
from .contractions import DEFAULT_BUDGET, pairing_layers
from .expansion import BudgetExceeded, MonomialNetworkConfig, expand_shapes, shape_factor_counts, _shape_key
from .laurent import CorrelationValue

__all__ = ["correlate", "layer_assignments"]


def layer_assignments(spec: CorrelationSpec, depth: int, layers=None):
    """Every way of sending each derivative pairing to one weight layer."""
    allowed = pairing_layers(layers, len(spec.pairings), depth)
    if allowed is None:
        allowed = [set(range(1, depth + 2))] * len(spec.pairings)
    return product(*[sorted(a) for a in allowed])


def _children(shape, level: int, tag: int):
    """Factor descriptors hanging from a level-``level`` neuron of ``shape``."""
    if level == 1:
        return [(tag, None)] * shape
    return [(tag, child) for child in shape]


def _sort_key(desc):
    return (desc[0], _shape_key(desc[1]))


def _canon_class(descs) -> tuple:
    return tuple(sorted(descs, key=_sort_key))


def _canon_classes(classes) -> tuple:
    return tuple(sorted((c for c in classes), key=lambda c: [_sort_key(d) for d in c]))


class _Solver:
    def __init__(self, labels: tuple[str, ...], depth: int):
        self.labels = labels
        self.depth = depth
        self.solve_layer = lru_cache(maxsize=None)(self._solve_layer)
        self.step = lru_cache(maxsize=None)(self._step)

    # A demand is a sorted tensor pair; ``pending`` is a sorted tuple of them.
    def _solve_layer(self, layer: int, classes: tuple, demands: tuple) -> dict:
        """Sum over all matchings of layers ``layer..1`` given the open classes."""
        if layer == 0:
            return {(0, ()): 1}
        pending = demands[layer - 1]
        closed = sum(1 for c in classes if not c)
        classes = _canon_classes(c for c in classes if c)
        out = self.step(layer, classes, (), pending, demands)
        if closed:
            out = {(p + closed, g): v for (p, g), v in out.items()}
        return out

    def _step(self, layer: int, classes: tuple, built: tuple, pending: tuple, demands: tuple) -> dict:
        if not classes:
            if pending:
                return {}
            nxt = _canon_classes(built) if layer > 1 else ()
            return self.solve_layer(layer - 1, nxt, demands)
        first = classes[0]
        x, rest_first = first[0], first[1:]
        others = classes[1:]
        out: dict = {}

        def add(result, power, gram, weight):
            for (p, g), v in result.items():
                if gram is not None:
                    g = tuple(sorted(g + (gram,)))
                key = (p + power, g)
                out[key] = out.get(key, 0) + v * weight

        # Partner candidates: same class first, then every other class.
        targets = [(-1, rest_first)] + list(enumerate(others))
        for ci, members in targets:
            for y, mult in Counter(members).items():
                if ci == -1:
                    merged = list(rest_first)
                    merged.remove(y)
                    new_classes = list(others)
                else:
                    merged = list(rest_first) + list(members)
                    merged.remove(y)
                    new_classes = [c for k, c in enumerate(others) if k != ci]
                power = 0
                if merged:
                    new_classes.append(_canon_class(merged))
                elif layer <= self.depth:
                    power = 1  # the class index is now free; the readout root adds nothing
                new_classes = _canon_classes(new_classes)
                if layer == 1:
                    gram = tuple(sorted((self.labels[x[0]], self.labels[y[0]])))
                    new_built = built
                else:
                    gram = None
                    cls = _children(x[1], layer - 1, x[0]) + _children(y[1], layer - 1, y[0])
                    new_built = tuple(sorted(built + (_canon_class(cls),), key=lambda c: [_sort_key(d) for d in c]))
                # Either the pair serves no derivative, or it serves one pending demand.
                options = [(pending, 1)]
                pair = tuple(sorted((x[0], y[0])))
                count = pending.count(pair)
                if count:
                    left = list(pending)
                    left.remove(pair)
                    options.append((tuple(left), count * (2 if pair[0] == pair[1] else 1)))
                for new_pending, w in options:
                    res = self.step(layer, new_classes, new_built, new_pending, demands)
                    if res:
                        add(res, power, gram, w * mult)
        return out


def _demands_by_layer(spec: CorrelationSpec, assignment, depth: int) -> tuple:
    per = [[] for _ in range(depth + 1)]
    for ((ta, _), (tb, _)), layer in zip(spec.pairings, assignment):
        per[layer - 1].append((min(ta, tb), max(ta, tb)))
    return tuple(tuple(sorted(p)) for p in per)


def correlate(
    spec: CorrelationSpec,
    config: MonomialNetworkConfig,
    budget: int = DEFAULT_BUDGET,
    layers=None,
    cap: int = 10_000,
) -> CorrelationValue:
    """Exact ``E[prod_I d^k f(x_I)]`` as a Laurent polynomial in the width.

    ``layers`` optionally restricts which weight layers the summed derivatives
    may hit (names like ``"U"``, ``"W2"``, ``"V"`` or layer numbers), either
    for all pairings at once or as one collection per pairing.  ``budget``
    caps the weight factors per layer across all tensors.
    """
    depth = config.depth
    m = spec.m
    labels = tuple(t.input_label for t in spec.tensors)
    if m == 0:
        return CorrelationValue.from_counts({(0, ()): 1})
    shapes = sorted(expand_shapes(config, cap).items(), key=lambda kv: _shape_key(kv[0]))
    assignments = list(layer_assignments(spec, depth, layers))
    solver = _Solver(labels, depth)
    counts: dict = {}
    for combo in product(shapes, repeat=m):
        per_layer = Counter()
        coef = Fraction(1)
        for shape, c in combo:
            coef *= c
            for layer, k in shape_factor_counts(shape, depth).items():
                per_layer[layer] += k
        for layer, k in per_layer.items():
            if k > budget:
                raise BudgetExceeded(
                    f"layer {layer} carries {k} weight factors, above the budget of {budget}"
                )
        n_factors = sum(k for layer, k in per_layer.items() if layer != 1)
        if n_factors % 2:
            continue
        shift = -n_factors // 2
        root = _canon_class([(t, combo[t][0]) for t in range(m)])
        for assignment in assignments:
            demands = _demands_by_layer(spec, assignment, depth)
            res = solver.solve_layer(depth + 1, (root,), demands)
            for (p, g), v in res.items():
                key = (p + shift, g)
                counts[key] = counts.get(key, 0) + coef * v
    return CorrelationValue.from_counts(counts)
