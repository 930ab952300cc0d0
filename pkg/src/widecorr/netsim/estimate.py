"""Monte Carlo estimates of correlation functions across widths.

Each (width, seed) draw is independent and regenerated from its key, so the
work is split over seeds with a process pool.  Results are gathered in seed
order and summed with ``math.fsum``, which is exact up to the final rounding;
together with single-threaded BLAS inside every evaluation this makes the
output bit-identical for any worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from ..corrspec import CorrelationSpec, parse_spec, render_spec
from .activations import get_activation
from .contract import SampleCache, contract_spec, plan_contraction
from .params import NetworkConfig, init_params

__all__ = [
    "EstimateRow",
    "EstimateTable",
    "default_inputs",
    "summarize",
    "sample_values",
    "estimate",
    "estimate_many",
    "DESK_WIDTHS",
    "PAPER_WIDTHS",
    "INPUT_SPREAD",
]

DESK_WIDTHS = tuple(2**k for k in range(7, 11))
PAPER_WIDTHS = tuple(2**k for k in range(7, 14))
CSV_COLUMNS = ("spec", "activation", "width", "seeds", "mean", "stderr", "sample_variance")
_INPUT_STREAM = 0x696E707574  # keeps input streams apart from weight streams
INPUT_SPREAD = 0.3


@dataclass(frozen=True)
class EstimateRow:
    spec: str
    activation: str
    width: int
    seeds: int
    mean: float
    stderr: float
    sample_variance: float


class EstimateTable:
    """Rows of per-width Monte Carlo summaries, serializable as CSV."""

    def __init__(self, rows=()):
        self.rows: list[EstimateRow] = list(rows)

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def select(self, spec: str | None = None, activation: str | None = None) -> "EstimateTable":
        return EstimateTable(
            r for r in self.rows
            if (spec is None or r.spec == spec) and (activation is None or r.activation == activation)
        )

    def points(self, variance: bool = False) -> list[tuple[int, float, float]]:
        """``(width, value, stderr)`` triples for the power-law fit.

        In variance mode the value is the sample variance and no noise floor
        is applied (stderr 0).
        """
        if variance:
            return [(r.width, r.sample_variance, 0.0) for r in self.rows]
        return [(r.width, r.mean, r.stderr) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.spec, r.activation, r.width, r.seeds, repr(r.mean), repr(r.stderr), repr(r.sample_variance)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "EstimateTable":
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            rows.append(
                EstimateRow(
                    rec["spec"],
                    rec["activation"],
                    int(rec["width"]),
                    int(rec["seeds"]),
                    float(rec["mean"]),
                    float(rec["stderr"]),
                    float(rec["sample_variance"]),
                )
            )
        return cls(rows)


def default_inputs(labels, input_dim: int, master_seed: int = 0, spread: float = INPUT_SPREAD) -> dict[str, np.ndarray]:
    """A fixed unit-norm random vector per input label, keyed by the label text.

    Each vector is ``z0 + spread * z_I`` normalized, with ``z0`` shared by all
    labels and ``z_I`` drawn from the label's own stream.  Independent draws
    would be nearly orthogonal, which makes multi-input products small next
    to their seed-to-seed spread; the shared part keeps overlaps near
    ``1 / (1 + spread**2)``.
    """
    def draw(*key):
        ss = np.random.SeedSequence([master_seed, _INPUT_STREAM, *key])
        return np.random.Generator(np.random.Philox(ss)).standard_normal(input_dim)

    shared = draw()
    out = {}
    for label in labels:
        v = shared + spread * draw(1, *label.encode())
        out[label] = v / np.linalg.norm(v)
    return out


def summarize(values) -> tuple[float, float, float]:
    """``(mean, stderr, sample variance)`` with ``ddof = 1``."""
    values = [float(v) for v in values]
    s = len(values)
    if s < 2:
        raise ValueError("at least two seeds are needed for a variance")
    mean = math.fsum(values) / s
    var = math.fsum((v - mean) ** 2 for v in values) / (s - 1)
    return mean, math.sqrt(var / s), var


def sample_values(specs, activations, depth: int, input_dim: int, width: int, seed: int,
                  master_seed: int, inputs: dict) -> list[float]:
    """One draw: every spec under every activation, activation-major."""
    with threadpool_limits(limits=1):
        config = NetworkConfig(depth, width, input_dim, "linear")
        params = init_params(config, seed, master_seed)
        cache = SampleCache(params, inputs)
        plans = [plan_contraction(s) for s in specs]
        out = []
        for act in activations:
            for spec, plan in zip(specs, plans):
                out.append(contract_spec(params, spec, inputs, act, plan=plan, cache=cache))
        return out


def _task(args):
    spec_texts, act_names, depth, input_dim, width, seed, master_seed, inputs = args
    specs = [parse_spec(t) for t in spec_texts]
    acts = [get_activation(a) for a in act_names]
    return sample_values(specs, acts, depth, input_dim, width, seed, master_seed, inputs)


def estimate_many(specs: dict, activations, depth: int, input_dim: int, widths, seeds: int,
                  master_seed: int = 0, inputs: dict | None = None, workers: int = 1) -> EstimateTable:
    """Estimates for every (spec, activation) pair sharing the same weight draws.

    ``specs`` maps display names to :class:`CorrelationSpec` values.
    """
    if seeds < 2:
        raise ValueError("at least two seeds are needed for a variance")
    widths = list(widths)
    if not widths:
        raise ValueError("need at least one width")
    names = list(specs)
    spec_list = [specs[k] for k in names]
    acts = [get_activation(a) for a in activations]
    labels = sorted({t.input_label for s in spec_list for t in s.tensors})
    if inputs is None:
        inputs = default_inputs(labels, input_dim, master_seed)
    inputs = {k: np.asarray(v, dtype=np.float64) for k, v in inputs.items()}
    missing = [lab for lab in labels if lab not in inputs]
    if missing:
        raise ValueError(f"no input vector for labels {missing}")
    texts = [render_spec(s) for s in spec_list]
    act_names = [a.name for a in acts]
    tasks = [(texts, act_names, depth, input_dim, w, s, master_seed, inputs) for w in widths for s in range(seeds)]
    if workers <= 1:
        results = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    rows = []
    k = 0
    per_width = {}
    for w in widths:
        per_width[w] = results[k : k + seeds]
        k += seeds
    for ai, act in enumerate(acts):
        for si, name in enumerate(names):
            col = ai * len(names) + si
            for w in widths:
                mean, se, var = summarize(vals[col] for vals in per_width[w])
                rows.append(EstimateRow(name, act.name, w, seeds, mean, se, var))
    return EstimateTable(rows)


def estimate(spec: CorrelationSpec, config: NetworkConfig, widths, seeds: int, inputs: dict | None = None,
             master_seed: int = 0, workers: int = 1, name: str | None = None) -> EstimateTable:
    """Per-width mean, standard error and sample variance of one spec's sampled product.

    The width of ``config`` is ignored; its depth, input dimension and
    activation are used at every width in ``widths``.
    """
    return estimate_many(
        {name or render_spec(spec): spec},
        [config.activation],
        config.depth,
        config.input_dim,
        widths,
        seeds,
        master_seed,
        inputs,
        workers,
    )
