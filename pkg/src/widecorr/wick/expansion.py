"""Expansion of polynomial-activation networks into sums of weight monomials.

Layers are numbered bottom-up: layer 1 holds the first-layer weights ``U``,
layers ``2..L`` the hidden matrices ``W^(l)`` and layer ``L + 1`` the readout
``V``.  A neuron at level ``l`` whose activation contributes the degree-``k``
term owns ``k`` weight factors of layer ``l``; each ``W`` factor in turn owns
one neuron of level ``l - 1``.

Node *shapes* describe these trees canonically: a level-1 node is the integer
number of ``U`` factors below it, a higher node is the sorted tuple of its
children's shapes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from math import factorial
from collections import Counter

__all__ = [
    "BudgetExceeded",
    "MonomialNetworkConfig",
    "Factor",
    "WeightMonomial",
    "expand_shapes",
    "expand_network",
    "shape_factor_counts",
    "layer_name",
]


class BudgetExceeded(RuntimeError):
    """The instance is too large for exact symbolic treatment."""


def layer_name(layer: int, depth: int) -> str:
    if layer == 1:
        return "U"
    if layer == depth + 1:
        return "V"
    return f"W{layer}"


def resolve_layers(layers, depth: int) -> set[int]:
    """Layer numbers from a mix of ints and names such as ``"U"``, ``"W2"``, ``"V"``."""
    out = set()
    for layer in layers:
        if isinstance(layer, str):
            name = layer.strip().upper()
            if name == "U":
                layer = 1
            elif name == "V":
                layer = depth + 1
            elif name.startswith("W") and name[1:].isdigit():
                layer = int(name[1:])
            else:
                raise ValueError(f"unknown layer {layer!r}")
        if not 1 <= layer <= depth + 1:
            raise ValueError(f"layer {layer} out of range for depth {depth}")
        out.add(layer)
    return out


@dataclass(frozen=True)
class MonomialNetworkConfig:
    """Depth, input dimension and per-layer polynomial activations.

    ``activations[l - 1]`` is the coefficient tuple ``(c_0, c_1, ...)`` of the
    activation of hidden layer ``l``.
    """

    depth: int
    input_dim: int
    activations: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.input_dim < 1:
            raise ValueError("input_dim must be at least 1")
        if len(self.activations) != self.depth:
            raise ValueError("need one activation per hidden layer")
        acts = []
        for coeffs in self.activations:
            coeffs = tuple(Fraction(c) for c in coeffs)
            while len(coeffs) > 1 and coeffs[-1] == 0:
                coeffs = coeffs[:-1]
            if not coeffs:
                raise ValueError("activation needs at least one coefficient")
            acts.append(coeffs)
        object.__setattr__(self, "activations", tuple(acts))

    @classmethod
    def monomial(cls, depth: int, degree, input_dim: int = 1) -> "MonomialNetworkConfig":
        """Activation ``x**degree`` in every layer, or per-layer degrees from a sequence."""
        degrees = [degree] * depth if isinstance(degree, int) else list(degree)
        if any(r < 0 for r in degrees):
            raise ValueError("degrees must be non-negative")
        acts = tuple(tuple([0] * r + [1]) for r in degrees)
        return cls(depth, input_dim, acts)

    @classmethod
    def polynomial(cls, depth: int, coeffs, input_dim: int = 1) -> "MonomialNetworkConfig":
        return cls(depth, input_dim, tuple(tuple(coeffs) for _ in range(depth)))

    def is_monomial(self) -> bool:
        return all(sum(1 for c in a if c) <= 1 for a in self.activations)

    def describe(self) -> str:
        parts = []
        for coeffs in self.activations:
            terms = [f"{c}*x^{k}" if c != 1 else f"x^{k}" for k, c in enumerate(coeffs) if c]
            parts.append(" + ".join(terms) or "0")
        return f"L={self.depth}, d={self.input_dim}, phi=[{'; '.join(parts)}]"


def _expand_level(config: MonomialNetworkConfig, level: int, cap: int, cache: dict):
    """All shapes of a level-``level`` neuron with their exact coefficients."""
    if level in cache:
        return cache[level]
    coeffs = config.activations[level - 1]
    out: dict = {}
    if level == 1:
        for k, c in enumerate(coeffs):
            if c:
                out[k] = c
    else:
        children = _expand_level(config, level - 1, cap, cache)
        items = list(children.items())
        for k, c in enumerate(coeffs):
            if not c:
                continue
            for combo in combinations_with_replacement(range(len(items)), k):
                mult = factorial(k)
                for v in Counter(combo).values():
                    mult //= factorial(v)
                coef = c * mult
                for idx in combo:
                    coef *= items[idx][1]
                shape = tuple(sorted((items[idx][0] for idx in combo), key=_shape_key))
                out[shape] = out.get(shape, 0) + coef
                if len(out) > cap:
                    raise BudgetExceeded(
                        f"activation expansion exceeds {cap} distinct terms at layer {level}"
                    )
    out = {s: c for s, c in out.items() if c}
    cache[level] = out
    return out


def _shape_key(shape):
    # Total order on nested shapes (ints at the leaves, tuples above).
    return repr(shape)


def expand_shapes(config: MonomialNetworkConfig, cap: int = 10_000) -> dict:
    """Top-level neuron shapes and coefficients; the readout sums over them."""
    return dict(_expand_level(config, config.depth, cap, {}))


def shape_factor_counts(shape, depth: int) -> dict[int, int]:
    """Weight factors per layer in one tensor whose top neuron has ``shape``."""
    counts = {layer: 0 for layer in range(1, depth + 2)}
    counts[depth + 1] = 1

    def walk(node, level):
        if level == 1:
            counts[1] += node
            return
        counts[level] += len(node)
        for child in node:
            walk(child, level - 1)

    walk(shape, depth)
    return counts


@dataclass(frozen=True)
class Factor:
    """One weight factor: its layer and the index variables it carries.

    ``V`` and ``U`` factors (for ``U``: neuron, input component) and ``W``
    factors (row, column) each own fresh variables; tree constraints live in
    :attr:`WeightMonomial.deltas`.
    """

    layer: int
    slots: tuple[int, ...]
    parent: int | None = None  # factor id owning the neuron this factor hangs from


@dataclass(frozen=True)
class WeightMonomial:
    """``coefficient * n**(-n_half/2) * d**(-d_half/2) * sum_vars prod(factors) prod(x)``.

    ``var_kinds[v]`` is ``"n"`` for hidden-neuron indices and ``"d"`` for input
    components.  ``inputs`` lists the input-component variables multiplying the
    monomial, one per ``U`` factor, as ``(label, var)``.
    """

    depth: int
    factors: tuple[Factor, ...]
    var_kinds: tuple[str, ...]
    deltas: tuple[tuple[int, int], ...]
    n_half: int
    d_half: int
    coefficient: Fraction
    inputs: tuple[tuple[str, int], ...]
    shape: object = field(default=None, compare=False)

    def __post_init__(self):
        nv = len(self.var_kinds)
        for a, b in self.deltas:
            if not (0 <= a < nv and 0 <= b < nv):
                raise ValueError("delta references a missing index slot")
        weights = len(self.factors)
        n_weights = sum(1 for f in self.factors if f.layer != 1)
        if self.n_half != n_weights:
            raise ValueError("normalization must be one n^-1/2 per V and W factor")
        if self.d_half != weights - n_weights:
            raise ValueError("normalization must be one d^-1/2 per U factor")

    def layer_counts(self) -> Counter:
        return Counter(f.layer for f in self.factors)

    def evaluate(self, n: int, d: int, weights: dict, x) -> float:
        """Float re-evaluation by brute-force index summation (tiny sizes only)."""
        from itertools import product as iproduct

        ranges = [range(n) if k == "n" else range(d) for k in self.var_kinds]
        total = 0.0
        for assign in iproduct(*ranges):
            if any(assign[a] != assign[b] for a, b in self.deltas):
                continue
            term = 1.0
            for f in self.factors:
                term *= weights[f.layer][tuple(assign[s] for s in f.slots)]
            for _, v in self.inputs:
                term *= x[assign[v]]
            total += term
        return float(self.coefficient) * total * n ** (-self.n_half / 2) * d ** (-self.d_half / 2)


def monomial_from_shape(shape, coefficient, depth: int, label: str) -> WeightMonomial:
    factors: list[Factor] = []
    kinds: list[str] = []
    deltas: list[tuple[int, int]] = []
    inputs: list[tuple[str, int]] = []

    def new_var(kind):
        kinds.append(kind)
        return len(kinds) - 1

    top = new_var("n")
    factors.append(Factor(depth + 1, (top,), None))

    def walk(node, level, neuron_var, owner):
        if level == 1:
            for _ in range(node):
                i, a = new_var("n"), new_var("d")
                deltas.append((neuron_var, i))
                inputs.append((label, a))
                factors.append(Factor(1, (i, a), owner))
            return
        for child in node:
            i, j = new_var("n"), new_var("n")
            deltas.append((neuron_var, i))
            factors.append(Factor(level, (i, j), owner))
            walk(child, level - 1, j, len(factors) - 1)

    walk(shape, depth, top, 0)
    n_half = sum(1 for f in factors if f.layer != 1)
    return WeightMonomial(
        depth,
        tuple(factors),
        tuple(kinds),
        tuple(deltas),
        n_half,
        len(factors) - n_half,
        Fraction(coefficient),
        tuple(inputs),
        shape,
    )


def expand_network(config: MonomialNetworkConfig, input_label: str, cap: int = 10_000) -> list[WeightMonomial]:
    """``f(x)`` as an explicit sum of weight monomials with tree-shaped index constraints."""
    shapes = expand_shapes(config, cap)
    return [
        monomial_from_shape(shape, coef, config.depth, input_label)
        for shape, coef in sorted(shapes.items(), key=lambda kv: _shape_key(kv[0]))
    ]
