"""Forward evaluation, gradients and higher directional derivatives of the network.

``f(x) = n^-1/2 V . a_L``, ``a_l = phi(h_l)``, ``h_l = n^-1/2 W^(l) a_(l-1)``
for ``2 <= l <= L`` and ``h_1 = d^-1/2 U x``.  Everything runs on
:class:`~widecorr.netsim.jets.Jet` values: with no tags this is the plain
network, with ``k`` tags on the parameters it carries every mixed directional
derivative up to order ``k``.  The backward pass is written once and so
also yields gradients of directional derivatives (Hessian-vector products
and beyond).
"""

from __future__ import annotations

import numpy as np

from .activations import get_activation
from .jets import Jet, LowRank, jet_apply, jet_dense_outer, jet_matvec, jet_outer, jet_rmatvec
from .params import ParamVector

__all__ = [
    "forward",
    "gradient",
    "directional_derivative",
    "gradient_of_directional",
    "hessian_vector_product",
]


def _param_jets(params: ParamVector, directions):
    U = {0: params.U}
    W = [{0: w} for w in params.W]
    V = {0: params.V}
    for t, v in enumerate(directions):
        bit = 1 << t
        U[bit] = v.U
        for layer, w in enumerate(v.W):
            W[layer][bit] = w
        V[bit] = v.V
    return Jet(U), [Jet(w) for w in W], Jet(V)


def _forward(params: ParamVector, x, act, directions):
    U, Ws, V = _param_jets(params, directions)
    n, d = params.U.shape
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (d,):
        raise ValueError(f"input must have shape ({d},), got {x.shape}")
    hs = [jet_matvec(U, Jet.constant(x)) * (d**-0.5)]
    acts = [jet_apply(act.derivatives, hs[0])]
    for W in Ws:
        hs.append(jet_matvec(W, acts[-1]) * (n**-0.5))
        acts.append(jet_apply(act.derivatives, hs[-1]))
    f = V.dot(acts[-1]) * (n**-0.5)
    return f, (U, Ws, V, x, hs, acts)


def _backward(cache, act):
    U, Ws, V, x, hs, acts = cache
    n, d = U.value.shape
    s = n**-0.5
    gV = acts[-1] * s
    delta = V * jet_apply(act.derivatives, hs[-1], 1) * s
    gW = []
    for layer in range(len(Ws) - 1, -1, -1):
        gW.append(jet_outer(delta, acts[layer], s))
        delta = jet_rmatvec(Ws[layer], delta) * s * jet_apply(act.derivatives, hs[layer], 1)
    gW.reverse()
    gU = jet_dense_outer(delta, Jet.constant(x), d**-0.5)
    return gU, gW, gV


def _coefficient_vector(gU: Jet, gW, gV: Jet, mask: int, n: int, d: int) -> ParamVector:
    def part(j, shape):
        c = j.parts.get(mask)
        return np.zeros(shape) if c is None else c

    W = []
    for g in gW:
        c = g.parts.get(mask)
        W.append(LowRank([(np.zeros(n), np.zeros(n))]) if c is None else c)
    return ParamVector(part(gU, (n, d)), tuple(W), part(gV, (n,)))


def forward(params: ParamVector, x, activation) -> float:
    act = get_activation(activation)
    f, _ = _forward(params, x, act, ())
    return float(f.value)


def gradient(params: ParamVector, x, activation) -> tuple[float, ParamVector]:
    """``(f(x), grad_theta f(x))``; hidden-matrix blocks come back low-rank."""
    act = get_activation(activation)
    f, cache = _forward(params, x, act, ())
    gU, gW, gV = _backward(cache, act)
    n, d = params.U.shape
    return float(f.value), _coefficient_vector(gU, gW, gV, 0, n, d)


def directional_derivative(params: ParamVector, x, activation, directions) -> float:
    """``D^k f(x)[v_1, ..., v_k]``, exact up to floating point."""
    act = get_activation(activation)
    directions = list(directions)
    f, _ = _forward(params, x, act, directions)
    return float(f.coefficient((1 << len(directions)) - 1))


def gradient_of_directional(params: ParamVector, x, activation, directions) -> ParamVector:
    """``grad_theta D^k f(x)[v_1, ..., v_k]``."""
    act = get_activation(activation)
    directions = list(directions)
    _, cache = _forward(params, x, act, directions)
    gU, gW, gV = _backward(cache, act)
    n, d = params.U.shape
    return _coefficient_vector(gU, gW, gV, (1 << len(directions)) - 1, n, d)


def hessian_vector_product(params: ParamVector, x, activation, v: ParamVector) -> ParamVector:
    return gradient_of_directional(params, x, activation, [v])
