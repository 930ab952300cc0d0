"""Brute-force expectation over concrete weight entries.

The network is written out as an explicit polynomial in the individual
weights ``V_i``, ``W^(l)_ij`` and ``U_ia`` for a small concrete width, the
spec's summed derivatives are applied entry by entry, and the expectation of
every resulting monomial is the product of the Gaussian moments
``E[g^k] = (k-1)!!`` of its variables.  Nothing here shares code with the
pair-enumeration route, which is the point.
"""

from __future__ import annotations

from fractions import Fraction

from ..corrspec import CorrelationSpec
from .expansion import BudgetExceeded, MonomialNetworkConfig

__all__ = ["exact_oracle", "oracle_table", "network_polynomial", "gaussian_moment", "ORACLE_MAX_WIDTH"]

ORACLE_MAX_WIDTH = 4
DEFAULT_MAX_TERMS = 200_000

# A polynomial maps (monomial, n_half, d_half) -> Fraction, where monomial is a
# sorted tuple of (variable, exponent) and the term carries n^(-n_half/2) d^(-d_half/2).
Poly = dict


def gaussian_moment(k: int) -> int:
    """``E[g**k]`` for a standard normal ``g``."""
    if k % 2:
        return 0
    out = 1
    for j in range(k - 1, 0, -2):
        out *= j
    return out


def _merge(m1, m2):
    acc = dict(m1)
    for v, e in m2:
        acc[v] = acc.get(v, 0) + e
    return tuple(sorted(acc.items()))


def _mul(p: Poly, q: Poly, max_terms: int) -> Poly:
    out: Poly = {}
    for (m1, h1, e1), c1 in p.items():
        for (m2, h2, e2), c2 in q.items():
            key = (_merge(m1, m2), h1 + h2, e1 + e2)
            out[key] = out.get(key, 0) + c1 * c2
            if len(out) > max_terms:
                raise BudgetExceeded(f"oracle product exceeds {max_terms} terms")
    return {k: c for k, c in out.items() if c}


def _add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for k, c in q.items():
        out[k] = out.get(k, 0) + c
    return {k: c for k, c in out.items() if c}


def _scale(p: Poly, c, dh: int = 0, de: int = 0) -> Poly:
    return {(m, h + dh, e + de): v * c for (m, h, e), v in p.items() if v * c}


def _activate(p: Poly, coeffs, max_terms: int) -> Poly:
    out: Poly = {}
    acc: Poly = {((), 0, 0): Fraction(1)}
    for k, c in enumerate(coeffs):
        if k:
            acc = _mul(acc, p, max_terms)
        if c:
            out = _add(out, _scale(acc, Fraction(c)))
    return out


def network_polynomial(config: MonomialNetworkConfig, n: int, x, max_terms: int = DEFAULT_MAX_TERMS) -> Poly:
    """``f(x)`` as an explicit polynomial in the weight entries at width ``n``."""
    x = [Fraction(v) for v in x]
    if len(x) != config.input_dim:
        raise ValueError("input has the wrong dimension")
    depth = config.depth
    hidden = []
    for i in range(n):
        pre = {}
        for a, xa in enumerate(x):
            if xa:
                pre = _add(pre, {((((1, i, a), 1),), 0, 1): xa})
        hidden.append(_activate(pre, config.activations[0], max_terms))
    for layer in range(2, depth + 1):
        nxt = []
        for i in range(n):
            pre = {}
            for j in range(n):
                pre = _add(pre, _mul({((((layer, i, j), 1),), 1, 0): Fraction(1)}, hidden[j], max_terms))
            nxt.append(_activate(pre, config.activations[layer - 1], max_terms))
        hidden = nxt
    out: Poly = {}
    for i in range(n):
        out = _add(out, _mul({((((depth + 1, i), 1),), 1, 0): Fraction(1)}, hidden[i], max_terms))
    return out


def _derivative(p: Poly, var) -> Poly:
    out: Poly = {}
    for (mono, h, e), c in p.items():
        for pos, (v, k) in enumerate(mono):
            if v == var:
                rest = mono[:pos] + (((v, k - 1),) if k > 1 else ()) + mono[pos + 1 :]
                out[(rest, h, e)] = out.get((rest, h, e), 0) + c * k
                break
    return out


def _variables(p: Poly) -> set:
    return {v for (mono, _, _) in p for v, _ in mono}


def _product(polys, max_terms: int) -> Poly:
    acc: Poly = {((), 0, 0): Fraction(1)}
    for q in polys:
        acc = _mul(acc, q, max_terms)
        if not acc:
            break
    return acc


def _odd_part(mono) -> tuple:
    return tuple(v for v, k in mono if k % 2)


def _product_expectation(polys, n: int, d: int, max_terms: int) -> Fraction:
    """``E[prod polys]`` without expanding the whole product.

    The factors are split in two halves that are expanded separately.  A
    product of two monomials has a nonzero Gaussian moment only when both
    have the same set of odd-power variables, so terms are bucketed by that
    set and only matching buckets are combined.
    """
    half = len(polys) // 2
    left = _product(polys[:half], max_terms)
    right = _product(polys[half:], max_terms)
    buckets: dict = {}
    for key, c in right.items():
        buckets.setdefault(_odd_part(key[0]), []).append((key, c))
    total = Fraction(0)
    for (m1, h1, e1), c1 in left.items():
        for (m2, h2, e2), c2 in buckets.get(_odd_part(m1), ()):
            moment = 1
            for _, k in _merge(m1, m2):
                moment *= gaussian_moment(k)
            h, e = h1 + h2, e1 + e2
            if h % 2 or e % 2:
                raise AssertionError("nonzero moment with a fractional width power")
            total += c1 * c2 * moment * Fraction(1, n ** (h // 2) * d ** (e // 2))
    return total


def exact_oracle(
    spec: CorrelationSpec,
    config: MonomialNetworkConfig,
    n: int,
    inputs,
    max_width: int = ORACLE_MAX_WIDTH,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> Fraction:
    """Exact ``E[prod_I d^k f(x_I)]`` at width ``n`` by explicit summation.

    ``inputs`` maps input labels to rational vectors of length ``d``.
    """
    if not 1 <= n <= max_width:
        raise BudgetExceeded(f"oracle width {n} outside 1..{max_width}")
    d = config.input_dim
    polys_by_label = {}
    polys = []
    for t in spec.tensors:
        if t.input_label not in polys_by_label:
            polys_by_label[t.input_label] = network_polynomial(config, n, inputs[t.input_label], max_terms)
        polys.append(polys_by_label[t.input_label])

    total = Fraction(0)

    def rec(p: int, current: list):
        nonlocal total
        if p == len(spec.pairings):
            total += _product_expectation(current, n, d, max_terms)
            return
        (ta, _), (tb, _) = spec.pairings[p]
        if ta == tb:
            candidates = _variables(current[ta])
        else:
            candidates = _variables(current[ta]) & _variables(current[tb])
        for var in sorted(candidates):
            nxt = list(current)
            nxt[ta] = _derivative(nxt[ta], var)
            if not nxt[ta]:
                continue
            nxt[tb] = _derivative(nxt[tb], var)
            if nxt[tb]:
                rec(p + 1, nxt)

    rec(0, polys)
    return total


def oracle_table(spec, config, inputs, widths=(1, 2, 3, 4), **kw) -> dict[int, Fraction]:
    return {n: exact_oracle(spec, config, n, inputs, **kw) for n in widths}

