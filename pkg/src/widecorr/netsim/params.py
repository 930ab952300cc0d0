"""Network configuration, parameter draws and parameter-space vectors.

Every weight block is drawn from its own Philox stream keyed by
``SeedSequence([master_seed, width, seed_index, block])`` with blocks
``0 = U``, ``1 .. L-1 = W^(2) .. W^(L)`` and ``L = V``.  Philox is
counter-based, so any (width, seed) can be regenerated independently and in
any order, on any platform numpy supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activations import Activation, get_activation
from .jets import LowRank

__all__ = ["NetworkConfig", "ParamVector", "ParameterSet", "init_params", "block_rng"]


@dataclass(frozen=True)
class NetworkConfig:
    """Depth ``L`` (hidden layers), width ``n``, input dimension ``d`` and activation."""

    depth: int
    width: int
    input_dim: int
    activation: Activation = field(default_factory=lambda: get_activation("tanh"))

    def __post_init__(self):
        if self.depth < 1 or self.width < 1 or self.input_dim < 1:
            raise ValueError("depth, width and input_dim must all be at least 1")
        object.__setattr__(self, "activation", get_activation(self.activation))

    def with_width(self, width: int) -> "NetworkConfig":
        return NetworkConfig(self.depth, width, self.input_dim, self.activation)


@dataclass(frozen=True)
class ParamVector:
    """A vector in parameter space: ``U`` (n x d), hidden ``W`` matrices, ``V`` (n,).

    Hidden-matrix entries may be dense arrays or :class:`LowRank` factors.
    """

    U: np.ndarray
    W: tuple
    V: np.ndarray

    def dot(self, other: "ParamVector") -> float:
        total = float(np.sum(self.U * other.U)) + float(self.V @ other.V)
        for a, b in zip(self.W, other.W):
            if isinstance(a, LowRank):
                total += a.dot(b)
            elif isinstance(b, LowRank):
                total += b.dot(a)
            else:
                total += float(np.sum(a * b))
        return total

    def dense(self) -> "ParamVector":
        return ParamVector(
            np.array(self.U, dtype=np.float64),
            tuple(w.dense() if isinstance(w, LowRank) else np.array(w, dtype=np.float64) for w in self.W),
            np.array(self.V, dtype=np.float64),
        )

    def flat(self) -> np.ndarray:
        d = self.dense()
        return np.concatenate([d.U.ravel()] + [w.ravel() for w in d.W] + [d.V.ravel()])

    def axpy(self, c: float, other: "ParamVector") -> "ParamVector":
        """``self + c * other`` as a dense vector."""
        a, b = self.dense(), other.dense()
        return ParamVector(a.U + c * b.U, tuple(x + c * y for x, y in zip(a.W, b.W)), a.V + c * b.V)

    @property
    def size(self) -> int:
        n, d = np.shape(self.U)
        return n * d + len(self.W) * n * n + n


ParameterSet = ParamVector


def block_rng(master_seed: int, width: int, seed_index: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence([master_seed, width, seed_index, block])
    return np.random.Generator(np.random.Philox(ss))


def init_params(config: NetworkConfig, seed: int, master_seed: int = 0) -> ParameterSet:
    """Standard-normal weights for ``config``, deterministic in ``(master_seed, width, seed)``."""
    n, d, depth = config.width, config.input_dim, config.depth
    U = block_rng(master_seed, n, seed, 0).standard_normal((n, d))
    W = tuple(block_rng(master_seed, n, seed, b).standard_normal((n, n)) for b in range(1, depth))
    V = block_rng(master_seed, n, seed, depth).standard_normal(n)
    return ParamVector(U, W, V)
