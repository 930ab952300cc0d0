"""Side-by-side comparison of predicted and measured width exponents."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

from .clustergraph import format_exponent, predict
from .corrspec import CorrelationSpec, canonical_builtin_name, render_spec
from .netsim import DESK_WIDTHS, PAPER_WIDTHS, EstimateTable, estimate_many
from .netsim.contract import UnsupportedTopology, plan_contraction
from .powerfit import NOISE_FLOOR, FitError, fit_power_law

__all__ = [
    "SCHEMA_VERSION",
    "TABLE_ACTIVATIONS",
    "ExperimentConfig",
    "ReportRow",
    "Report",
    "run_report",
]

SCHEMA_VERSION = 1
TABLE_ACTIVATIONS = ("tanh", "sigmoid", "softplus", "linear", "relu", "hard_sigmoid")
REPORT_COLUMNS = (
    "spec",
    "n_e",
    "n_o",
    "predicted",
    "activation",
    "measured",
    "agreement",
    "below_bound",
    "r_squared",
    "points_used",
    "dropped_widths",
    "note",
)


@dataclass
class ExperimentConfig:
    """Sweep settings; ``paper_scale`` swaps in the large-width defaults."""

    specs: dict = field(default_factory=dict)
    activations: tuple = TABLE_ACTIVATIONS
    depth: int = 3
    input_dim: int = 16
    widths: tuple = DESK_WIDTHS
    seeds: int = 200
    master_seed: int = 0
    paper_scale: bool = False
    variance_mode: bool = False
    tolerance: float | None = None
    noise_floor: float = NOISE_FLOOR
    workers: int = 1
    inputs: dict | None = None

    @classmethod
    def paper(cls, **kw) -> "ExperimentConfig":
        kw.setdefault("widths", PAPER_WIDTHS)
        kw.setdefault("seeds", 1000)
        return cls(paper_scale=True, **kw)

    @property
    def agreement_tolerance(self) -> float:
        if self.tolerance is not None:
            return self.tolerance
        return 0.1 if self.paper_scale else 0.2

    def metadata(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "activations": list(self.activations),
            "depth": self.depth,
            "input_dim": self.input_dim,
            "widths": list(self.widths),
            "seeds": self.seeds,
            "master_seed": self.master_seed,
            "paper_scale": self.paper_scale,
            "variance_mode": self.variance_mode,
            "tolerance": self.agreement_tolerance,
            "noise_floor": self.noise_floor,
        }


@dataclass(frozen=True)
class ReportRow:
    spec: str
    n_e: int
    n_o: int
    predicted: Fraction
    activation: str
    measured: float | None
    agreement: bool
    below_bound: bool
    r_squared: float | None = None
    points_used: int = 0
    dropped_widths: tuple = ()
    note: str = ""

    def to_json(self) -> dict:
        return {
            "spec": self.spec,
            "n_e": self.n_e,
            "n_o": self.n_o,
            "predicted": format_exponent(self.predicted),
            "activation": self.activation,
            "measured": self.measured,
            "agreement": self.agreement,
            "below_bound": self.below_bound,
            "r_squared": self.r_squared,
            "points_used": self.points_used,
            "dropped_widths": list(self.dropped_widths),
            "note": self.note,
        }


@dataclass
class Report:
    config: ExperimentConfig
    rows: list
    estimates: EstimateTable
    failures: list = field(default_factory=list)

    def row(self, spec: str, activation: str) -> ReportRow:
        for r in self.rows:
            if r.spec == spec and r.activation == activation:
                return r
        raise KeyError((spec, activation))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.rows:
            w.writerow([
                r.spec,
                r.n_e,
                r.n_o,
                format_exponent(r.predicted),
                r.activation,
                "" if r.measured is None else repr(r.measured),
                int(r.agreement),
                int(r.below_bound),
                "" if r.r_squared is None else repr(r.r_squared),
                r.points_used,
                " ".join(str(x) for x in r.dropped_widths),
                r.note,
            ])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "metadata": self.config.metadata(),
            "rows": [r.to_json() for r in self.rows],
            "failures": list(self.failures),
        }


def _display_name(name: str, spec: CorrelationSpec) -> str:
    return canonical_builtin_name(name) or render_spec(spec)


def run_report(config: ExperimentConfig) -> Report:
    """Estimate every (spec, activation) pair, fit exponents and compare with predictions.

    Specs whose contraction cannot be sampled are listed in ``failures`` and
    the rest are still reported.
    """
    specs, failures = {}, []
    for name, spec in config.specs.items():
        label = _display_name(name, spec)
        try:
            plan_contraction(spec)
        except UnsupportedTopology as exc:
            failures.append({"spec": label, "error": str(exc)})
            continue
        specs[label] = spec
    if not specs:
        return Report(config, [], EstimateTable(), failures)
    table = estimate_many(
        specs,
        config.activations,
        config.depth,
        config.input_dim,
        config.widths,
        config.seeds,
        config.master_seed,
        config.inputs,
        config.workers,
    )
    tol = config.agreement_tolerance
    rows = []
    for act in dict.fromkeys(r.activation for r in table):
        for label, spec in specs.items():
            p = predict(spec)
            target = p.s_V if config.variance_mode else p.s_C
            points = table.select(label, act).points(variance=config.variance_mode)
            try:
                fit = fit_power_law(points, noise_floor=config.noise_floor)
            except FitError as exc:
                rows.append(ReportRow(label, p.n_even, p.n_odd, target, act, None, False, False, note=str(exc)))
                continue
            gap = fit.slope - float(target)
            rows.append(
                ReportRow(
                    label,
                    p.n_even,
                    p.n_odd,
                    target,
                    act,
                    fit.slope,
                    abs(gap) <= tol,
                    gap < -tol,
                    fit.r_squared,
                    fit.points_used,
                    tuple(fit.dropped_widths),
                )
            )
    return Report(config, rows, table, failures)
