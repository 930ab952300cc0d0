"""One Monte Carlo sample of a correlation spec for given weights.

The spec is split into cluster-graph components and each becomes a product
of directional derivatives:

* a lone rank-0 tensor is ``f(x_I)``;
* two paired rank-1 tensors give ``<grad f(x_I), grad f(x_J)>``;
* tensors of rank >= 2 (*hubs*) take the gradients of their rank-1
  partners as directions.  Hubs joined to one another must form a tree; a
  hub hanging below another contributes ``grad D^(k-1) f[...]`` as one
  direction of its parent (a Hessian-vector product for ``k = 2``).

Anything else, such as two hubs sharing two indices or an index paired
within one tensor, needs traces over parameter space and is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corrspec import CorrelationSpec, render_spec
from .activations import get_activation
from .network import directional_derivative, forward, gradient, gradient_of_directional
from .params import ParamVector

__all__ = ["UnsupportedTopology", "ContractionPlan", "plan_contraction", "contract_spec", "SampleCache"]


class UnsupportedTopology(ValueError):
    """The spec cannot be evaluated by directional derivatives alone."""


@dataclass(frozen=True)
class _Hub:
    tensor: int
    gradient_dirs: tuple[int, ...]  # rank-1 tensors supplying directions
    children: tuple["_Hub", ...]


@dataclass(frozen=True)
class ContractionPlan:
    """Evaluation recipe: plain outputs, gradient inner products and hub trees."""

    outputs: tuple[int, ...]
    inner_products: tuple[tuple[int, int], ...]
    hubs: tuple[_Hub, ...]
    gradient_tensors: tuple[int, ...]


def _describe(spec: CorrelationSpec, pair) -> str:
    (ta, ka), (tb, kb) = pair
    la, lb = spec.tensors[ta].input_label, spec.tensors[tb].input_label
    return f"slot {ka} of f({la}) [tensor {ta}] with slot {kb} of f({lb}) [tensor {tb}]"


def plan_contraction(spec: CorrelationSpec) -> ContractionPlan:
    ranks = spec.ranks
    neighbours: dict[int, list[tuple[int, tuple]]] = {t: [] for t in range(spec.m)}
    for pair in spec.pairings:
        (ta, _), (tb, _) = pair
        if ta == tb:
            raise UnsupportedTopology(
                f"index pairs {_describe(spec, pair)}: a trace within one tensor is not supported "
                f"in {render_spec(spec)!r}"
            )
        neighbours[ta].append((tb, pair))
        neighbours[tb].append((ta, pair))

    outputs = tuple(t for t in range(spec.m) if ranks[t] == 0)
    inner = []
    hubs = {t for t in range(spec.m) if ranks[t] >= 2}
    for pair in spec.pairings:
        (ta, _), (tb, _) = pair
        if ranks[ta] == 1 and ranks[tb] == 1:
            inner.append((ta, tb))

    # Hub-to-hub links must form a forest without repeated edges.
    hub_links: dict[int, list[tuple[int, tuple]]] = {h: [] for h in hubs}
    seen_links = set()
    for pair in spec.pairings:
        (ta, _), (tb, _) = pair
        if ta in hubs and tb in hubs:
            key = (min(ta, tb), max(ta, tb))
            if key in seen_links:
                raise UnsupportedTopology(
                    f"index pairs {_describe(spec, pair)}: two higher-rank tensors share more than one "
                    f"index in {render_spec(spec)!r}"
                )
            seen_links.add(key)
            hub_links[ta].append((tb, pair))
            hub_links[tb].append((ta, pair))

    visited: set[int] = set()

    def build(h: int, parent: int | None, via) -> _Hub:
        visited.add(h)
        dirs = tuple(sorted(t for t, _ in neighbours[h] if ranks[t] == 1))
        children = []
        for other, pair in hub_links[h]:
            if other == parent and pair == via:
                continue
            if other in visited:
                raise UnsupportedTopology(
                    f"index pairs {_describe(spec, pair)}: higher-rank tensors form a cycle in "
                    f"{render_spec(spec)!r}"
                )
            children.append(build(other, h, pair))
        return _Hub(h, dirs, tuple(children))

    roots = []
    for h in sorted(hubs):
        if h not in visited:
            roots.append(build(h, None, None))
    grads = sorted({t for t in range(spec.m) if ranks[t] == 1})
    return ContractionPlan(outputs, tuple(inner), tuple(roots), tuple(grads))


class SampleCache:
    """Per-weights cache of outputs and gradients keyed by (activation, input label)."""

    def __init__(self, params: ParamVector, inputs: dict):
        self.params = params
        self.inputs = inputs
        self._f: dict = {}
        self._g: dict = {}

    def output(self, act, label) -> float:
        key = (act.name, act.coeffs, label)
        if key not in self._f:
            self._f[key] = forward(self.params, self.inputs[label], act)
        return self._f[key]

    def grad(self, act, label) -> ParamVector:
        key = (act.name, act.coeffs, label)
        if key not in self._g:
            f, g = gradient(self.params, self.inputs[label], act)
            self._f[key] = f
            self._g[key] = g
        return self._g[key]


def _hub_directions(hub: _Hub, spec, act, cache: SampleCache):
    labels = [t.input_label for t in spec.tensors]
    dirs = [cache.grad(act, labels[t]) for t in hub.gradient_dirs]
    for child in hub.children:
        child_dirs = _hub_directions(child, spec, act, cache)
        dirs.append(gradient_of_directional(cache.params, cache.inputs[labels[child.tensor]], act, child_dirs))
    return dirs


def contract_spec(params: ParamVector, spec: CorrelationSpec, inputs: dict, activation,
                  plan: ContractionPlan | None = None, cache: SampleCache | None = None) -> float:
    """The product of derivative tensors inside the expectation, for these weights.

    ``inputs`` maps each input label to a length-``d`` vector.
    """
    act = get_activation(activation)
    plan = plan or plan_contraction(spec)
    cache = cache or SampleCache(params, {k: np.asarray(v, dtype=np.float64) for k, v in inputs.items()})
    labels = [t.input_label for t in spec.tensors]
    value = 1.0
    for t in plan.outputs:
        value *= cache.output(act, labels[t])
    for a, b in plan.inner_products:
        value *= cache.grad(act, labels[a]).dot(cache.grad(act, labels[b]))
    for hub in plan.hubs:
        dirs = _hub_directions(hub, spec, act, cache)
        value *= directional_derivative(cache.params, cache.inputs[labels[hub.tensor]], act, dirs)
    return value
