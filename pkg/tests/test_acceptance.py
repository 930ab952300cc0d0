"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the lines
interleaved with pytest's own output; they are printed either way).
"""

import random
import time
from fractions import Fraction

import numpy as np
import pytest

from widecorr.clustergraph import predict
from widecorr.corrspec import builtin_specs, get_builtin
from widecorr.netsim import NetworkConfig, ParamVector, estimate, forward, gradient, init_params
from widecorr.netsim import directional_derivative, hessian_vector_product
from widecorr.report import ExperimentConfig, run_report
from widecorr.wick import (
    BudgetExceeded,
    LaurentPolynomial,
    MonomialNetworkConfig,
    correlate,
    derived_terms,
    enumerate_contractions,
    evaluate_expectation,
    exact_oracle,
)

from pattern_term import pattern_term
from randcases import random_case

DESK_ACTIVATIONS = ("tanh", "sigmoid", "softplus", "linear", "relu")


@pytest.fixture
def verdict(capsys):
    """Print ``[PASS]``/``[FAIL]`` for a criterion, then assert it."""

    def emit(number: int, checks: dict, elapsed: float, limit: float):
        checks = dict(checks)
        checks[f"runtime {elapsed:.1f}s < {limit:g}s"] = elapsed < limit
        failed = [name for name, ok in checks.items() if not ok]
        status = "PASS" if not failed else "FAIL"
        detail = "all checks hold" if not failed else "failed: " + "; ".join(failed)
        with capsys.disabled():
            print(f"\n[{status}] criterion {number}: {detail}")
        assert not failed, failed

    return emit


def _lin(depth):
    return MonomialNetworkConfig.monomial(depth, 1)


# ---------------------------------------------------------------- 1


def test_criterion_1_cluster_graph_exactness(verdict):
    expected = {
        "C_{2,0}": ((0, 2), 0, 0),
        "C_{2,1}": ((1, 0), 0, -1),
        "C_{4,0}": ((0, 4), 0, 0),
        "C_{4,2}": ((0, 2), -1, -2),
        "C_{4,3}": ((1, 0), -1, -3),
        "C_{6,4}": ((0, 2), -2, -4),
    }
    start = time.perf_counter()
    checks = {}
    for name, (census, s_c, s_v) in expected.items():
        p = predict(get_builtin(name))
        checks[f"{name} census {census}"] = (p.n_even, p.n_odd) == census
        checks[f"{name} s_C={s_c}"] = p.s_C == s_c
        checks[f"{name} s_V={s_v}"] = p.s_V == s_v
    checks["six builtins"] = len(builtin_specs()) == 6
    verdict(1, checks, time.perf_counter() - start, 1.0)


# ---------------------------------------------------------------- 2


def test_criterion_2_symbolic_golden_values(verdict):
    start = time.perf_counter()
    sq1 = MonomialNetworkConfig.monomial(1, 2)
    checks = {}

    four = correlate(get_builtin("C_40"), sq1)
    checks["x^2 four-point = 3(9+96/n) x1^2..x4^2"] = (
        four.width_polynomial() == LaurentPolynomial({0: 27, -1: 288})
        and list(four.scalar_inputs()) == [tuple((f"x{k}", 2) for k in range(1, 5))]
    )

    c42 = correlate(get_builtin("C_42"), sq1).width_polynomial()
    checks[f"x^2 C_{{4,2}} = 132/n (computed {c42})"] = c42 == LaurentPolynomial({-1: 132})

    two = correlate(get_builtin("C_20"), _lin(1))
    checks["linear two-point = x1 x2"] = two.terms == {(("x1", "x2"),): LaurentPolynomial({0: 1})}
    checks["linear four-point = 3(1+2/n)"] = (
        correlate(get_builtin("C_40"), _lin(1)).width_polynomial() == LaurentPolynomial({0: 3, -1: 6})
    )
    ntk = correlate(get_builtin("C_21"), _lin(1), layers=["U", "V"])
    checks["linear NTK = 2"] = ntk.width_polynomial() == LaurentPolynomial({0: 2})

    c43 = correlate(get_builtin("C_43"), _lin(2), layers=[["V"], ["W2"], ["U"]])
    checks["linear C_{4,3} V-W-U term = 1/n^2"] = c43.width_polynomial() == LaurentPolynomial({-2: 1})

    total, _ = pattern_term()
    checks["x^2 C_{4,3} U-derivative term = 64/n"] = total == {-1: 64}
    lead = correlate(get_builtin("C_43"), MonomialNetworkConfig.monomial(2, 2), budget=16).leading_exponent()
    checks["x^2 C_{4,3} leading exponent -1"] = lead == -1

    verdict(2, checks, time.perf_counter() - start, 60.0)


# ---------------------------------------------------------------- 3


def test_criterion_3_oracle_equivalence(verdict):
    start = time.perf_counter()
    rng = random.Random(20240601)
    cases = mismatches = bound_violations = component_violations = 0
    while cases < 60:
        spec, config, inputs = random_case(rng)
        p = predict(spec)
        linked = {tuple(sorted(pair)) for pair in spec.tensor_pairs() if pair[0] != pair[1]}
        try:
            contractions = [c for t in derived_terms(spec, config) for c in enumerate_contractions(t)]
            value = evaluate_expectation(list(derived_terms(spec, config)))
        except BudgetExceeded:
            continue
        cases += 1
        for c in contractions:
            if c.power > p.s_C:
                bound_violations += 1
            sizes_even = all(len(comp) % 2 == 0 for comp in c.graph.components)
            joined = all(c.joins(i, j) for i, j in linked)
            if not (sizes_even and joined and 2 * c.component_count <= 2 * p.n_even + p.n_odd):
                component_violations += 1
        lead = value.leading_exponent()
        if lead is not None and lead > p.s_C:
            bound_violations += 1
        for n in (1, 2, 3, 4):
            if value.evaluate(n, inputs) != exact_oracle(spec, config, n, inputs):
                mismatches += 1
    checks = {
        f"{cases} in-budget cases >= 50": cases >= 50,
        f"exact agreement at n=1..4 ({mismatches} mismatches)": mismatches == 0,
        f"leading exponent <= s_C ({bound_violations} violations)": bound_violations == 0,
        f"component parity and count ({component_violations} violations)": component_violations == 0,
    }
    verdict(3, checks, time.perf_counter() - start, 600.0)


# ---------------------------------------------------------------- 4


def _direction(params, rng):
    return ParamVector(
        rng.standard_normal(params.U.shape),
        tuple(rng.standard_normal(w.shape) for w in params.W),
        rng.standard_normal(params.V.shape),
    )


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def test_criterion_4_differentiation(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_grad = worst_sym = 0.0
    draws = 0
    for act in ("tanh", "monomial(3)"):
        for k in range(100):
            depth, n, d = 1 + k % 3, int(rng.integers(2, 9)), int(rng.integers(1, 5))
            params = init_params(NetworkConfig(depth, n, d, "linear"), k, master_seed=11)
            x = rng.standard_normal(d)
            u, v, w = (_direction(params, rng) for _ in range(3))
            _, g = gradient(params, x, act)
            h = 1e-5
            fd = (forward(params.axpy(h, u), x, act) - forward(params.axpy(-h, u), x, act)) / (2 * h)
            analytic = g.dot(u)
            if abs(analytic - fd) > 1e-9:
                worst_grad = max(worst_grad, _rel(analytic, fd))
            vw = directional_derivative(params, x, act, [v, w])
            worst_sym = max(
                worst_sym,
                _rel(vw, directional_derivative(params, x, act, [w, v])),
                _rel(vw, hessian_vector_product(params, x, act, v).dot(w)),
            )
            third = [directional_derivative(params, x, act, dirs) for dirs in ([u, v, w], [w, u, v], [v, w, u], [u, w, v])]
            worst_sym = max(worst_sym, *(_rel(third[0], t) for t in third[1:]))
            draws += 1
    checks = {
        f"{draws} draws >= 200 (100 per activation)": draws >= 200,
        f"gradient vs central differences {worst_grad:.1e} < 1e-6": worst_grad < 1e-6,
        f"Hessian and third-derivative symmetry {worst_sym:.1e} < 1e-10": worst_sym < 1e-10,
    }
    verdict(4, checks, time.perf_counter() - start, 60.0)


# ---------------------------------------------------------------- 5 and 6


DESK_SPECS = ("C_20", "C_21", "C_40", "C_42", "C_43")


@pytest.fixture(scope="module")
def desk_report():
    start = time.perf_counter()
    cfg = ExperimentConfig(specs={s: get_builtin(s) for s in DESK_SPECS}, activations=DESK_ACTIVATIONS)
    return run_report(cfg), time.perf_counter() - start


@pytest.mark.slow
def test_criterion_5_desk_table(verdict, desk_report):
    report, elapsed = desk_report
    checks = {}
    for row in report.rows:
        m = row.measured
        if row.spec == "C_{4,3}":
            if row.activation == "tanh":
                checks[f"C_{{4,3}} tanh {m:.3f} within 0.3 of -1"] = m is not None and abs(m + 1) <= 0.3
            elif row.activation in ("linear", "relu"):
                checks[f"C_{{4,3}} {row.activation} {m:.3f} within 0.3 of -2"] = m is not None and abs(m + 2) <= 0.3
            continue
        label = f"{row.spec} {row.activation} {'n/a' if m is None else f'{m:.3f}'} within 0.2 of {row.predicted}"
        checks[label] = m is not None and abs(m - float(row.predicted)) <= 0.2
    checks["20 rows plus C_{4,3}"] = len(report.rows) == 25
    verdict(5, checks, elapsed, 1800.0)


@pytest.mark.slow
def test_criterion_6_desk_variance_spot_checks(verdict):
    start = time.perf_counter()
    specs = {s: get_builtin(s) for s in ("C_20", "C_21", "C_43", "C_64")}
    report = run_report(ExperimentConfig(specs=specs, activations=("tanh",), variance_mode=True))
    slope = {r.spec: r.measured for r in report.rows}
    checks = {
        f"C_{{2,0}} {slope['C_{2,0}']:.3f} within 0.3 of 0": abs(slope["C_{2,0}"]) <= 0.3,
        f"C_{{2,1}} {slope['C_{2,1}']:.3f} within 0.3 of -1": abs(slope["C_{2,1}"] + 1) <= 0.3,
        f"C_{{4,3}} {slope['C_{4,3}']:.3f} <= -3 + 0.3": slope["C_{4,3}"] <= -3 + 0.3,
        f"C_{{6,4}} {slope['C_{6,4}']:.3f} <= -4 + 0.3": slope["C_{6,4}"] <= -4 + 0.3,
    }
    verdict(6, checks, time.perf_counter() - start, 1800.0)


# ---------------------------------------------------------------- 7


def test_criterion_7_monte_carlo_matches_exact(verdict):
    start = time.perf_counter()
    x = {"x1": [0.9], "x2": [-1.1], "x3": [0.7], "x4": [1.3]}
    exact = correlate(get_builtin("C_40"), MonomialNetworkConfig.monomial(1, 2))
    checks = {}
    for n in (4, 8):
        table = estimate(get_builtin("C_40"), NetworkConfig(1, n, 1, "monomial(2)"), [n], 10_000, x, master_seed=0)
        row = table.rows[0]
        target = float(exact.evaluate(n, {k: [Fraction(v[0]).limit_denominator()] for k, v in x.items()}))
        z = abs(row.mean - target) / row.stderr
        checks[f"n={n}: mean {row.mean:.3f} vs exact {target:.3f}, {z:.2f} stderr <= 4"] = z <= 4
    verdict(7, checks, time.perf_counter() - start, 120.0)


# ---------------------------------------------------------------- 8


def test_criterion_8_determinism(verdict):
    start = time.perf_counter()
    specs = {s: get_builtin(s) for s in ("C_20", "C_21", "C_42", "C_43", "C_64")}
    outputs = []
    for workers in (1, 2, 4, 1):
        cfg = ExperimentConfig(specs=specs, activations=DESK_ACTIVATIONS, widths=(16, 32, 64), seeds=24,
                               master_seed=5, workers=workers)
        report = run_report(cfg)
        outputs.append((report.to_csv().encode(), report.estimates.to_csv().encode()))
    checks = {
        "report CSV byte-identical for workers 1, 2, 4 and a repeat": len({o[0] for o in outputs}) == 1,
        "estimate CSV byte-identical": len({o[1] for o in outputs}) == 1,
    }
    verdict(8, checks, time.perf_counter() - start, 600.0)
