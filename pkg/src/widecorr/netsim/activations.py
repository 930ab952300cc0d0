"""Activation functions with derivatives of any order.

Smooth sigmoidal activations use closed-form derivative polynomials:
``tanh^(k)(z) = P_k(tanh z)`` with ``P_{k+1} = P_k' * (1 - t^2)``, and
likewise for the logistic sigmoid in terms of ``s = sigmoid(z)``.  Softplus
is the antiderivative of the sigmoid.  Piecewise-linear activations use the
right derivative at their kinks; all higher derivatives vanish.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as P

__all__ = ["Activation", "get_activation", "ACTIVATION_NAMES"]

ACTIVATION_NAMES = (
    "linear",
    "relu",
    "hard_sigmoid",
    "tanh",
    "sigmoid",
    "softplus",
    "monomial(r)",
    "polynomial(c0,c1,...)",
)


@lru_cache(maxsize=None)
def _tanh_poly(k: int) -> np.ndarray:
    if k == 0:
        return np.array([0.0, 1.0])
    return P.polymul(P.polyder(_tanh_poly(k - 1)), [1.0, 0.0, -1.0])


@lru_cache(maxsize=None)
def _sigmoid_poly(k: int) -> np.ndarray:
    if k == 0:
        return np.array([0.0, 1.0])
    return P.polymul(P.polyder(_sigmoid_poly(k - 1)), [0.0, 1.0, -1.0])


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(frozen=True)
class Activation:
    """Named activation; ``coeffs`` is set for polynomial ones (lowest degree first)."""

    name: str
    coeffs: tuple[float, ...] | None = None

    def __call__(self, z):
        return self.derivatives(z, 0)[0]

    @property
    def is_polynomial(self) -> bool:
        return self.coeffs is not None

    def derivatives(self, z, order: int) -> list:
        """``[phi(z), phi'(z), ..., phi^(order)(z)]``; identically zero entries may be ``0.0``."""
        z = np.asarray(z, dtype=np.float64)
        name = self.name
        if self.coeffs is not None:
            out = []
            c = np.asarray(self.coeffs, dtype=np.float64)
            for _ in range(order + 1):
                out.append(P.polyval(z, c) if c.size else 0.0)
                c = P.polyder(c) if c.size > 1 else np.zeros(0)
            return out
        if name == "relu":
            first = [np.maximum(z, 0.0), (z >= 0).astype(np.float64)]
            return (first + [0.0] * order)[: order + 1]
        if name == "hard_sigmoid":
            val = np.clip(0.5 * (z + 1.0), 0.0, 1.0)
            slope = np.where((z >= -1.0) & (z < 1.0), 0.5, 0.0)
            return ([val, slope] + [0.0] * order)[: order + 1]
        if name == "tanh":
            t = np.tanh(z)
            return [P.polyval(t, _tanh_poly(k)) for k in range(order + 1)]
        if name == "sigmoid":
            s = _sigmoid(z)
            return [P.polyval(s, _sigmoid_poly(k)) for k in range(order + 1)]
        if name == "softplus":
            s = _sigmoid(z)
            return [np.logaddexp(0.0, z)] + [P.polyval(s, _sigmoid_poly(k)) for k in range(order)]
        raise ValueError(f"unknown activation {name!r}")

    def __str__(self):
        return self.name


def _monomial(r: int) -> Activation:
    if r < 0:
        raise ValueError("monomial degree must be non-negative")
    return Activation(f"monomial({r})", tuple([0.0] * r + [1.0]))


def get_activation(spec) -> Activation:
    """Parse ``"tanh"``, ``"monomial(3)"``, ``"x^3"``, ``"polynomial(0,1,0.5)"`` and friends."""
    if isinstance(spec, Activation):
        return spec
    text = str(spec).strip().lower().replace(" ", "")
    if text in ("linear", "identity"):
        return Activation("linear", (0.0, 1.0))
    if text in ("relu", "tanh", "sigmoid", "softplus"):
        return Activation(text)
    if text in ("hard_sigmoid", "hardsigmoid", "hard-sigmoid"):
        return Activation("hard_sigmoid")
    m = re.fullmatch(r"(?:monomial\((\d+)\)|x\^(\d+))", text)
    if m:
        return _monomial(int(m.group(1) or m.group(2)))
    m = re.fullmatch(r"polynomial\(([^)]*)\)", text)
    if m:
        coeffs = tuple(float(c) for c in m.group(1).split(",") if c)
        if not coeffs:
            raise ValueError("polynomial activation needs coefficients")
        return Activation(f"polynomial({','.join(repr(c) for c in coeffs)})", coeffs)
    raise ValueError(f"unknown activation {spec!r}; choose from {', '.join(ACTIVATION_NAMES)}")


def taylor_coefficient(derivs: list, j: int):
    """``phi^(j) / j!`` from a derivative list, zero beyond its end."""
    return derivs[j] / factorial(j) if j < len(derivs) else 0.0
