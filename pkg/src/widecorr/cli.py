"""Command-line entry point: ``widecorr {predict,exact,estimate,fit,report}``.

Exit codes: 0 success, 1 other runtime failure, 2 usage error, 3 exact
evaluation over budget, 4 unsupported contraction topology.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction

from . import __version__
from .clustergraph import format_exponent, predict
from .corrspec import SpecError, builtin_specs, canonical_builtin_name, render_spec, resolve_spec
from .netsim import DESK_WIDTHS, PAPER_WIDTHS, EstimateTable, estimate_many, get_activation
from .netsim.contract import UnsupportedTopology, plan_contraction
from .powerfit import NOISE_FLOOR, FitError, fit_power_law
from .report import SCHEMA_VERSION, TABLE_ACTIVATIONS, ExperimentConfig, run_report
from .wick import DEFAULT_BUDGET, BudgetExceeded, MonomialNetworkConfig, correlate
from .wick.laurent import format_input_key, format_input_powers

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_BUDGET, EXIT_TOPOLOGY = 0, 1, 2, 3, 4

CONFIG_KEYS = {
    "schema_version", "spec", "specs", "activation", "activations", "depth", "input_dim", "widths",
    "seeds", "master_seed", "paper_scale", "variance_mode", "tolerance", "noise_floor", "workers", "inputs",
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers


def _widths(text: str) -> list[int]:
    out = []
    for item in text.split(","):
        item = item.strip()
        m = re.fullmatch(r"(\d+)\^(\d+)", item)
        out.append(int(m.group(1)) ** int(m.group(2)) if m else int(item))
    if not out or any(w < 1 for w in out):
        raise argparse.ArgumentTypeError("widths must be positive integers")
    return out


def _exact_activation(text: str) -> tuple[Fraction, ...]:
    """Polynomial coefficients of one layer's activation, kept exact."""
    t = text.strip().lower().replace(" ", "")
    if t in ("linear", "identity", "x"):
        return (Fraction(0), Fraction(1))
    m = re.fullmatch(r"(?:monomial\((\d+)\)|x\^(\d+))", t)
    if m:
        r = int(m.group(1) or m.group(2))
        return tuple([Fraction(0)] * r + [Fraction(1)])
    m = re.fullmatch(r"polynomial\(([^)]*)\)", t)
    if m:
        coeffs = tuple(Fraction(c) for c in m.group(1).split(",") if c)
        if coeffs:
            return coeffs
    raise UsageError(
        f"exact evaluation needs a polynomial activation (linear, x^r, monomial(r), "
        f"polynomial(c0,c1,...)), got {text!r}"
    )


def _monomial_config(activation: str, depth: int, input_dim: int) -> MonomialNetworkConfig:
    layers = [a for a in activation.split(";") if a.strip()]
    if len(layers) == 1:
        layers = layers * depth
    if len(layers) != depth:
        raise UsageError(f"got {len(layers)} per-layer activations for depth {depth}")
    return MonomialNetworkConfig(depth, input_dim, tuple(_exact_activation(a) for a in layers))


def _derivative_layers(text: str | None):
    """``"U,V"`` restricts every pairing; ``"V;W2;U"`` gives one set per pairing."""
    if text is None:
        return None

    def item(x):
        x = x.strip()
        return int(x) if x.isdigit() else x

    if ";" in text:
        return [[item(x) for x in group.split(",") if x.strip()] for group in text.split(";")]
    return [item(x) for x in text.split(",") if x.strip()]


def _specs(args, allow_all: bool = True) -> dict:
    """Specs chosen by ``--spec``/``--builtin``, or every builtin."""
    out = {}
    for text in args.spec or []:
        spec = resolve_spec(text)
        out[canonical_builtin_name(text) or render_spec(spec)] = spec
    for name in args.builtin or []:
        key = canonical_builtin_name(name)
        if key is None:
            raise UsageError(f"unknown builtin spec {name!r}; choose from {', '.join(builtin_specs())}")
        out[key] = builtin_specs()[key]
    if not out:
        if not allow_all:
            raise UsageError("give a correlation function with --spec or --builtin")
        out = builtin_specs()
    return out


def _write(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("experiment config must be a JSON object")
    unknown = sorted(set(cfg) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    version = cfg.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise UsageError(f"unsupported schema_version {version}; this build reads {SCHEMA_VERSION}")
    return cfg


def _experiment(args, default_activations) -> ExperimentConfig:
    """Merge the JSON config with command-line flags (flags win)."""
    cfg = _load_config(args.config)
    paper = bool(args.paper_scale or cfg.get("paper_scale", False))
    specs = {}
    cfg_specs = cfg.get("specs", [])
    if "spec" in cfg:
        cfg_specs = [cfg["spec"]] + list(cfg_specs)
    if args.spec or args.builtin:
        specs = _specs(args)
    elif cfg_specs:
        for text in cfg_specs:
            spec = resolve_spec(text)
            specs[canonical_builtin_name(text) or render_spec(spec)] = spec
    else:
        specs = builtin_specs()
    if args.activation:
        acts = args.activation
    elif "activations" in cfg or "activation" in cfg:
        acts = cfg.get("activations") or [cfg["activation"]]
    else:
        acts = list(default_activations)
    acts = [get_activation(a).name for a in acts]

    def pick(flag, key, desk, big):
        if flag is not None:
            return flag
        if key in cfg:
            return cfg[key]
        return big if paper else desk

    seeds = pick(args.seeds, "seeds", 200, 1000)
    if seeds < 2:
        raise UsageError("at least two seeds are needed for a variance")
    inputs = cfg.get("inputs")
    return ExperimentConfig(
        specs=specs,
        activations=tuple(acts),
        depth=pick(args.depth, "depth", 3, 3),
        input_dim=pick(args.input_dim, "input_dim", 16, 16),
        widths=tuple(pick(args.widths, "widths", DESK_WIDTHS, PAPER_WIDTHS)),
        seeds=seeds,
        master_seed=pick(args.master_seed, "master_seed", 0, 0),
        paper_scale=paper,
        variance_mode=bool(getattr(args, "variance_mode", False) or cfg.get("variance_mode", False)),
        tolerance=pick(getattr(args, "tolerance", None), "tolerance", None, None),
        noise_floor=pick(getattr(args, "noise_floor", None), "noise_floor", NOISE_FLOOR, NOISE_FLOOR),
        workers=pick(args.workers, "workers", 1, 1),
        inputs=inputs,
    )


# ---------------------------------------------------------------- subcommands


def run_predict(args) -> int:
    rows = []
    for name, spec in _specs(args).items():
        p = predict(spec)
        rows.append({
            "spec": name,
            "n_e": p.n_even,
            "n_o": p.n_odd,
            "m": p.m,
            "s_C": format_exponent(p.s_C),
            "s_V": format_exponent(p.s_V),
        })
    if args.format == "json":
        _write(args, _json_text(rows[0] if len(rows) == 1 else rows))
    else:
        lines = []
        for r in rows:
            text = f"({r['n_e']},{r['n_o']}), s_C={r['s_C']}, s_V={r['s_V']}"
            lines.append(text if len(rows) == 1 else f"{r['spec']}: {text}")
        _write(args, "\n".join(lines) + "\n")
    return EXIT_OK


def exact_json(value, input_dim: int) -> dict:
    """Exact result as JSON; ``terms`` lists every input monomial separately."""
    if input_dim == 1:
        groups = [(format_input_powers(k), p) for k, p in value.scalar_inputs().items()]
    else:
        groups = [(format_input_key(k), p) for k, p in value.terms.items()]
    terms = [{"input_monomial": k, "poly": p.to_json(), "leading_exponent": p.leading_exponent()} for k, p in groups]
    lead = [t["leading_exponent"] for t in terms]
    out = {
        "poly": terms[0]["poly"] if len(terms) == 1 else ([] if not terms else None),
        "input_monomial": terms[0]["input_monomial"] if len(terms) == 1 else ("1" if not terms else None),
        "leading_exponent": max(lead) if lead else None,
    }
    if len(terms) > 1:
        out["terms"] = terms
    return out


def run_exact(args) -> int:
    specs = _specs(args, allow_all=False)
    if len(specs) != 1:
        raise UsageError("exact evaluates one correlation function at a time")
    ((name, spec),) = specs.items()
    config = _monomial_config(args.activation or "linear", args.depth or 1, args.input_dim or 1)
    value = correlate(spec, config, budget=args.budget, layers=_derivative_layers(args.derivative_layers))
    out = exact_json(value, config.input_dim)
    if args.format == "json":
        _write(args, _json_text(out))
    else:
        _write(args, value.render(scalar_inputs=config.input_dim == 1) + "\n")
    return EXIT_OK


def run_estimate(args) -> int:
    exp = _experiment(args, ["tanh"])
    for spec in exp.specs.values():
        plan_contraction(spec)
    table = estimate_many(
        exp.specs, exp.activations, exp.depth, exp.input_dim, exp.widths, exp.seeds,
        exp.master_seed, exp.inputs, exp.workers,
    )
    if args.format == "json":
        _write(args, _json_text({
            "schema_version": SCHEMA_VERSION,
            "metadata": exp.metadata(),
            "rows": [r.__dict__ for r in table],
        }))
    else:
        _write(args, table.to_csv())
    return EXIT_OK


def run_fit(args) -> int:
    if args.input in (None, "-"):
        text = sys.stdin.read()
    else:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    try:
        table = EstimateTable.from_csv(text)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"not an estimate CSV: {exc}") from exc
    spec_filter = None
    if args.spec or args.builtin:
        spec_filter = set(_specs(args))
    act_filter = {get_activation(a).name for a in args.activation} if args.activation else None
    groups = {}
    for r in table:
        if spec_filter is not None and r.spec not in spec_filter:
            continue
        if act_filter is not None and r.activation not in act_filter:
            continue
        groups.setdefault((r.spec, r.activation), []).append(r)
    if not groups:
        raise UsageError("no estimate rows match the requested spec and activation")
    results = []
    for (spec, act), rows in groups.items():
        fit = fit_power_law(
            EstimateTable(rows).points(variance=args.variance_mode),
            noise_floor=args.noise_floor,
            weighted=args.weighted,
        )
        results.append({"spec": spec, "activation": act, **fit.to_json()})
    _write(args, _json_text(results[0] if len(results) == 1 else results))
    return EXIT_OK


def run_report_cmd(args) -> int:
    exp = _experiment(args, TABLE_ACTIVATIONS)
    report = run_report(exp)
    if args.estimates_out:
        with open(args.estimates_out, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.estimates.to_csv())
    if args.format == "json":
        _write(args, _json_text(report.to_json()))
    else:
        _write(args, report.to_csv())
    for failure in report.failures:
        print(f"widecorr: skipped {failure['spec']}: {failure['error']}", file=sys.stderr)
    return EXIT_TOPOLOGY if report.failures else EXIT_OK


# ---------------------------------------------------------------- argument parser


def _add_spec_flags(p):
    p.add_argument("--spec", action="append", help="spec DSL text or builtin name (repeatable)")
    p.add_argument("--builtin", action="append", help="builtin name such as C_{4,2} or C42 (repeatable)")


def _add_sweep_flags(p):
    p.add_argument("--config", help="experiment config JSON file")
    p.add_argument("--activation", action="append", help="activation (repeatable)")
    p.add_argument("--depth", type=int, help="hidden layers L")
    p.add_argument("--input-dim", type=int, help="input dimension d")
    p.add_argument("--widths", type=_widths, help="comma-separated widths, e.g. 128,256 or 2^7,2^8")
    p.add_argument("--seeds", type=int, help="initializations per width")
    p.add_argument("--master-seed", type=int, help="master seed for weights and inputs")
    p.add_argument("--paper-scale", action="store_true", help="widths 2^7..2^13 and 1000 seeds")
    p.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="widecorr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="cluster-graph census and predicted exponents")
    _add_spec_flags(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=run_predict)

    p = sub.add_parser("exact", help="exact Laurent polynomial for a polynomial-activation network")
    _add_spec_flags(p)
    p.add_argument("--activation", help="per-network or ';'-separated per-layer polynomial activation")
    p.add_argument("--depth", type=int, help="hidden layers L (default 1)")
    p.add_argument("--input-dim", type=int, help="input dimension d (default 1)")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="max weight factors per layer")
    p.add_argument(
        "--derivative-layers",
        help="restrict derivative layers: 'U,V' for all pairings or 'V;W2;U' one group per pairing",
    )
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=run_exact)

    p = sub.add_parser("estimate", help="Monte Carlo estimates across widths (CSV)")
    _add_spec_flags(p)
    _add_sweep_flags(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=run_estimate)

    p = sub.add_parser("fit", help="power-law exponent from an estimate CSV")
    _add_spec_flags(p)
    p.add_argument("--input", help="estimate CSV file (default stdin)")
    p.add_argument("--activation", action="append")
    p.add_argument("--variance-mode", action="store_true", help="fit the sample variance instead of the mean")
    p.add_argument("--noise-floor", type=float, default=NOISE_FLOOR)
    p.add_argument("--weighted", action="store_true", help="inverse-variance weighted fit")
    p.add_argument("--format", choices=("json",), default="json")
    p.add_argument("--out")
    p.set_defaults(func=run_fit)

    p = sub.add_parser("report", help="predicted vs measured exponents for specs x activations")
    _add_spec_flags(p)
    _add_sweep_flags(p)
    p.add_argument("--variance-mode", action="store_true", help="compare variance slopes with s_V")
    p.add_argument("--tolerance", type=float, help="agreement tolerance (0.2 desk, 0.1 paper scale)")
    p.add_argument("--noise-floor", type=float)
    p.add_argument("--estimates-out", help="also write the raw estimate CSV here")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=run_report_cmd)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, SpecError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"widecorr: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"widecorr: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except UnsupportedTopology as exc:
        print(f"widecorr: unsupported contraction topology: {exc}", file=sys.stderr)
        return EXIT_TOPOLOGY
    except FitError as exc:
        print(f"widecorr: fit failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (ValueError, OSError) as exc:
        print(f"widecorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
