"""Exact Laurent polynomials in the width ``n`` and their input-dependent sums."""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from typing import Iterable, Mapping

__all__ = ["LaurentPolynomial", "CorrelationValue", "leading_exponent", "format_input_key", "format_input_powers"]


class LaurentPolynomial:
    """Finite sum ``sum_k c_k n**k`` with rational coefficients; zeros are never stored."""

    __slots__ = ("_c",)

    def __init__(self, coefficients: Mapping[int, object] | None = None):
        c = {}
        for k, v in (coefficients or {}).items():
            v = Fraction(v)
            if v:
                c[int(k)] = v
        self._c = c

    @classmethod
    def monomial(cls, power: int, coefficient=1) -> "LaurentPolynomial":
        return cls({power: coefficient})

    @property
    def coefficients(self) -> dict[int, Fraction]:
        return dict(sorted(self._c.items(), reverse=True))

    def __getitem__(self, power: int) -> Fraction:
        return self._c.get(power, Fraction(0))

    def is_zero(self) -> bool:
        return not self._c

    def __bool__(self):
        return bool(self._c)

    def leading_exponent(self) -> int | None:
        return max(self._c) if self._c else None

    def __eq__(self, other):
        if isinstance(other, LaurentPolynomial):
            return self._c == other._c
        if isinstance(other, (int, Fraction)):
            return self._c == LaurentPolynomial({0: other})._c
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPolynomial({0: other})
        out = dict(self._c)
        for k, v in other._c.items():
            out[k] = out.get(k, 0) + v
        return LaurentPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPolynomial({k: -v for k, v in self._c.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return LaurentPolynomial({k: v * other for k, v in self._c.items()})
        out: dict[int, Fraction] = {}
        for k1, v1 in self._c.items():
            for k2, v2 in other._c.items():
                out[k1 + k2] = out.get(k1 + k2, 0) + v1 * v2
        return LaurentPolynomial(out)

    __rmul__ = __mul__

    def shift(self, power: int) -> "LaurentPolynomial":
        """Multiply by ``n**power``."""
        return LaurentPolynomial({k + power: v for k, v in self._c.items()})

    def __call__(self, n) -> Fraction:
        n = Fraction(n)
        return sum((v * n**k for k, v in self._c.items()), Fraction(0))

    def to_json(self) -> list[dict]:
        return [
            {"power": k, "numerator": str(v.numerator), "denominator": str(v.denominator)}
            for k, v in self.coefficients.items()
        ]

    @classmethod
    def from_json(cls, items) -> "LaurentPolynomial":
        return cls({d["power"]: Fraction(int(d["numerator"]), int(d["denominator"])) for d in items})

    def __repr__(self):
        return f"LaurentPolynomial({str(self)!r})"

    def __str__(self):
        if not self._c:
            return "0"
        parts = []
        for k, v in self.coefficients.items():
            if k == 0:
                term = str(v)
            elif k > 0:
                base = "n" if k == 1 else f"n^{k}"
                term = base if v == 1 else f"{v}*{base}"
            else:
                base = "n" if k == -1 else f"n^{-k}"
                if v.denominator == 1:
                    term = f"{v.numerator}/{base}"
                else:
                    term = f"({v})/{base}"
            parts.append(term)
        return " + ".join(parts).replace("+ -", "- ")


# An input key is a sorted tuple of label pairs; the pair (a, b) stands for the
# Gram entry <x_a, x_b> / d.  With d = 1 it is the plain product x_a * x_b.
InputKey = tuple[tuple[str, str], ...]


def format_input_key(key: InputKey) -> str:
    if not key:
        return "1"
    return "*".join(f"<{a},{b}>" for a, b in key)


def format_input_powers(powers: tuple[tuple[str, int], ...]) -> str:
    if not powers:
        return "1"
    return "*".join(lab if p == 1 else f"{lab}^{p}" for lab, p in powers)


class CorrelationValue:
    """Exact correlation as ``sum_key poly_key(n) * gram_monomial_key``."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[InputKey, LaurentPolynomial] | None = None):
        t = {}
        for k, p in (terms or {}).items():
            if p:
                t[tuple(sorted(tuple(sorted(pair)) for pair in k))] = p
        self._terms = t

    @classmethod
    def from_counts(cls, counts: Mapping[tuple[int, InputKey], object]) -> "CorrelationValue":
        """Build from ``{(power, key): coefficient}``."""
        acc: dict[InputKey, dict[int, Fraction]] = {}
        for (power, key), coef in counts.items():
            d = acc.setdefault(tuple(key), {})
            d[power] = d.get(power, 0) + Fraction(coef)
        return cls({k: LaurentPolynomial(v) for k, v in acc.items()})

    @property
    def terms(self) -> dict[InputKey, LaurentPolynomial]:
        return dict(sorted(self._terms.items()))

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        if isinstance(other, CorrelationValue):
            return self._terms == other._terms
        return NotImplemented

    def __add__(self, other: "CorrelationValue") -> "CorrelationValue":
        out = dict(self._terms)
        for k, p in other._terms.items():
            out[k] = out[k] + p if k in out else p
        return CorrelationValue(out)

    def __mul__(self, scalar):
        return CorrelationValue({k: p * Fraction(scalar) for k, p in self._terms.items()})

    __rmul__ = __mul__

    def scalar_inputs(self) -> dict[tuple[tuple[str, int], ...], LaurentPolynomial]:
        """Collapse Gram monomials to powers of scalar inputs (exact when d = 1)."""
        out: dict[tuple[tuple[str, int], ...], LaurentPolynomial] = {}
        for key, poly in self._terms.items():
            c = Counter()
            for a, b in key:
                c[a] += 1
                c[b] += 1
            powers = tuple(sorted(c.items()))
            out[powers] = out[powers] + poly if powers in out else poly
        return {k: v for k, v in sorted(out.items()) if v}

    def width_polynomial(self, scalar_inputs: bool = True) -> LaurentPolynomial:
        """The single Laurent polynomial multiplying the only input monomial.

        Raises ``ValueError`` if more than one input monomial survives.
        """
        groups = self.scalar_inputs() if scalar_inputs else self.terms
        if not groups:
            return LaurentPolynomial()
        if len(groups) > 1:
            raise ValueError("value depends on more than one input monomial")
        return next(iter(groups.values()))

    def leading_exponent(self, scalar_inputs: bool = False) -> int | None:
        groups = self.scalar_inputs() if scalar_inputs else self._terms
        exps = [p.leading_exponent() for p in groups.values()]
        return max(exps) if exps else None

    def evaluate(self, n, inputs: Mapping[str, Iterable] | None = None) -> Fraction:
        """Exact value at width ``n`` with rational input vectors keyed by label."""
        total = Fraction(0)
        gram_cache: dict[tuple[str, str], Fraction] = {}
        for key, poly in self._terms.items():
            g = Fraction(1)
            for a, b in key:
                if (a, b) not in gram_cache:
                    if inputs is None:
                        raise ValueError("inputs are required for input-dependent values")
                    xa = [Fraction(v) for v in inputs[a]]
                    xb = [Fraction(v) for v in inputs[b]]
                    gram_cache[(a, b)] = sum((p * q for p, q in zip(xa, xb)), Fraction(0)) / len(xa)
                g *= gram_cache[(a, b)]
            total += g * poly(n)
        return total

    def render(self, scalar_inputs: bool = False) -> str:
        if not self._terms:
            return "0"
        if scalar_inputs:
            items = [(format_input_powers(k), p) for k, p in self.scalar_inputs().items()]
        else:
            items = [(format_input_key(k), p) for k, p in self.terms.items()]
        return " + ".join(f"({p})*{k}" if k != "1" else f"({p})" for k, p in items)

    def __repr__(self):
        return f"CorrelationValue({self.render()!r})"

    def to_json(self, scalar_inputs: bool = False) -> dict:
        if scalar_inputs:
            groups = [(format_input_powers(k), p) for k, p in self.scalar_inputs().items()]
        else:
            groups = [(format_input_key(k), p) for k, p in self.terms.items()]
        out: dict = {
            "terms": [{"input_monomial": k, "poly": p.to_json()} for k, p in groups],
            "leading_exponent": self.leading_exponent(scalar_inputs=scalar_inputs),
        }
        if len(groups) == 1:
            out["input_monomial"] = groups[0][0]
            out["poly"] = groups[0][1].to_json()
        elif not groups:
            out["input_monomial"] = "1"
            out["poly"] = []
        return out


def leading_exponent(poly) -> int | None:
    """Highest power of ``n`` with a nonzero coefficient, or ``None`` for zero."""
    return poly.leading_exponent()
