"""Truncated multivariate jets with nilpotent tags.

A :class:`Jet` represents ``sum_S a_S prod_{t in S} eps_t`` where every tag
squares to zero, stored as ``{bitmask: array}``.  Evaluating a network on
parameters ``theta + sum_t eps_t v_t`` yields the mixed directional
derivative ``D^k f[v_1, ..., v_k]`` as the coefficient of the full mask.

Weight directions of the hidden matrices are gradients, which are sums of
outer products; :class:`LowRank` keeps them factored so that a direction
costs ``O(n)`` per product instead of ``O(n^2)``.
"""

from __future__ import annotations

from math import factorial

import numpy as np

__all__ = ["Jet", "LowRank", "jet_matvec", "jet_rmatvec", "jet_outer", "jet_apply"]


class LowRank:
    """The matrix ``sum_p u_p v_p^T`` kept as its factors."""

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        self.terms = [(np.asarray(u), np.asarray(v)) for u, v in terms]

    @property
    def shape(self):
        u, v = self.terms[0]
        return (u.shape[0], v.shape[0])

    def __matmul__(self, x):
        out = 0.0
        for u, v in self.terms:
            out = out + u * float(v @ x)
        return out

    def rmatvec(self, y):
        out = 0.0
        for u, v in self.terms:
            out = out + v * float(u @ y)
        return out

    def __add__(self, other: "LowRank") -> "LowRank":
        return LowRank(self.terms + other.terms)

    def scaled(self, c: float) -> "LowRank":
        return LowRank([(u * c, v) for u, v in self.terms])

    def dot(self, other) -> float:
        """Frobenius inner product with another low-rank or dense matrix."""
        if isinstance(other, LowRank):
            return sum(float(u @ u2) * float(v @ v2) for u, v in self.terms for u2, v2 in other.terms)
        return sum(float(u @ other @ v) for u, v in self.terms)

    def dense(self) -> np.ndarray:
        n, m = self.shape
        out = np.zeros((n, m))
        for u, v in self.terms:
            out += np.outer(u, v)
        return out


def _mat_times(a, x):
    return a @ x


def _mat_t_times(a, y):
    if isinstance(a, LowRank):
        return a.rmatvec(y)
    return a.T @ y


class Jet:
    """Nilpotent-tag jet; ``parts[0]`` is the primal value."""

    __slots__ = ("parts",)

    def __init__(self, parts: dict):
        self.parts = parts

    @classmethod
    def constant(cls, value) -> "Jet":
        return cls({0: value})

    @property
    def value(self):
        return self.parts[0]

    @property
    def mask(self) -> int:
        m = 0
        for k in self.parts:
            m |= k
        return m

    def coefficient(self, mask: int):
        return self.parts.get(mask, 0.0)

    def nilpotent(self) -> "Jet":
        return Jet({k: v for k, v in self.parts.items() if k})

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = Jet.constant(other)
        out = dict(self.parts)
        for k, v in other.parts.items():
            out[k] = out[k] + v if k in out else v
        return Jet(out)

    __radd__ = __add__

    def __neg__(self):
        return Jet({k: -v for k, v in self.parts.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -np.asarray(other))

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet({k: v * other for k, v in self.parts.items()})
        out: dict = {}
        for k1, v1 in self.parts.items():
            for k2, v2 in other.parts.items():
                if k1 & k2:
                    continue
                k = k1 | k2
                prod = v1 * v2
                out[k] = out[k] + prod if k in out else prod
        return Jet(out)

    __rmul__ = __mul__

    def dot(self, other: "Jet") -> "Jet":
        out: dict = {}
        for k1, v1 in self.parts.items():
            for k2, v2 in other.parts.items():
                if k1 & k2:
                    continue
                k = k1 | k2
                prod = float(v1 @ v2)
                out[k] = out[k] + prod if k in out else prod
        return Jet(out)


def jet_matvec(a: Jet, x: Jet) -> Jet:
    """``A x`` for a matrix jet (dense or low-rank parts) and a vector jet."""
    out: dict = {}
    for k1, m in a.parts.items():
        for k2, v in x.parts.items():
            if k1 & k2:
                continue
            k = k1 | k2
            prod = _mat_times(m, v)
            out[k] = out[k] + prod if k in out else prod
    return Jet(out)


def jet_rmatvec(a: Jet, y: Jet) -> Jet:
    """``A^T y``."""
    out: dict = {}
    for k1, m in a.parts.items():
        for k2, v in y.parts.items():
            if k1 & k2:
                continue
            k = k1 | k2
            prod = _mat_t_times(m, v)
            out[k] = out[k] + prod if k in out else prod
    return Jet(out)


def jet_outer(a: Jet, b: Jet, scale: float) -> Jet:
    """``scale * a b^T`` with every part kept low-rank."""
    out: dict = {}
    for k1, u in a.parts.items():
        for k2, v in b.parts.items():
            if k1 & k2:
                continue
            k = k1 | k2
            term = LowRank([(u * scale, v)])
            out[k] = out[k] + term if k in out else term
    return Jet(out)


def jet_dense_outer(a: Jet, b: Jet, scale: float) -> Jet:
    out: dict = {}
    for k1, u in a.parts.items():
        for k2, v in b.parts.items():
            if k1 & k2:
                continue
            k = k1 | k2
            term = np.multiply.outer(u, v) * scale
            out[k] = out[k] + term if k in out else term
    return Jet(out)


def jet_apply(derivs_of, h: Jet, shift: int = 0) -> Jet:
    """``phi^(shift)(h)`` by Taylor expansion around the primal part.

    ``derivs_of(z, order)`` must return ``[phi(z), ..., phi^(order)(z)]``.
    """
    tags = bin(h.mask).count("1")
    derivs = derivs_of(h.value, shift + tags)
    out = Jet.constant(derivs[shift])
    nil = h.nilpotent()
    power = nil
    j = 1
    while power.parts and j <= tags:
        c = derivs[shift + j]
        if not (np.isscalar(c) and c == 0):
            out = out + power * (c / factorial(j))
        power = power * nil
        j += 1
    return out
