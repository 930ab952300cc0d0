"""Correlation-function specifications and the small DSL that describes them.

A spec is a product of derivative tensors ``f(x)[a,b,...]`` whose bracketed
index identifiers are summed in pairs over all network parameters::

    f(x1)[a,b] * f(x2)[a] * f(x3)[b] * f(x4)

Every index must occur exactly twice in the whole spec.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "SpecSyntaxError",
    "SpecError",
    "DerivativeTensor",
    "CorrelationSpec",
    "parse_spec",
    "render_spec",
    "builtin_specs",
    "get_builtin",
    "resolve_spec",
]


class SpecError(ValueError):
    """Raised for structurally invalid specs (index arity violations)."""


class SpecSyntaxError(SpecError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        pointer = " " * pos + "^"
        super().__init__(f"{message} at position {pos}\n  {text}\n  {pointer}")


@dataclass(frozen=True)
class DerivativeTensor:
    """One factor ``d^k f(x)``; slot names are cosmetic and ignored by ``==``."""

    input_label: str
    rank: int = 0
    slots: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.input_label:
            raise SpecError("input label must be nonempty")
        if self.rank < 0:
            raise SpecError("rank must be non-negative")
        if self.slots and len(self.slots) != self.rank:
            raise SpecError("rank must equal the number of slots")


Slot = tuple[int, int]  # (tensor position, slot position), both 0-based


@dataclass(frozen=True)
class CorrelationSpec:
    """Ordered derivative tensors plus the pairing of their index slots.

    ``pairings`` holds each pair as a sorted tuple of two ``(tensor, slot)``
    positions; the tuple of pairs is sorted too, so equal specs compare equal.
    """

    tensors: tuple[DerivativeTensor, ...]
    pairings: tuple[tuple[Slot, Slot], ...]

    def __post_init__(self):
        seen: set[Slot] = set()
        for a, b in self.pairings:
            if a == b:
                raise SpecError(f"slot {a} is paired with itself")
            for s in (a, b):
                t, k = s
                if not (0 <= t < len(self.tensors)) or not (0 <= k < self.tensors[t].rank):
                    raise SpecError(f"pairing references missing slot {s}")
                if s in seen:
                    raise SpecError(f"slot {s} appears in more than one pairing")
                seen.add(s)
        total = sum(t.rank for t in self.tensors)
        if len(seen) != total:
            raise SpecError("every derivative slot must be paired exactly once")

    @property
    def m(self) -> int:
        return len(self.tensors)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(t.rank for t in self.tensors)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(t.input_label for t in self.tensors)

    def tensor_pairs(self) -> list[tuple[int, int]]:
        """Tensor positions joined by each pairing, in pairing order."""
        return [(a[0], b[0]) for a, b in self.pairings]

    def partner(self, slot: Slot) -> Slot:
        for a, b in self.pairings:
            if a == slot:
                return b
            if b == slot:
                return a
        raise KeyError(slot)

    @classmethod
    def from_tensors(cls, tensors) -> "CorrelationSpec":
        """Build from tensors whose slot names encode the pairing."""
        tensors = tuple(tensors)
        where: dict[str, list[Slot]] = {}
        for t, tensor in enumerate(tensors):
            for k, name in enumerate(tensor.slots):
                where.setdefault(name, []).append((t, k))
        pairs = []
        for name, places in where.items():
            if len(places) != 2:
                raise SpecError(
                    f"index {name!r} occurs {len(places)} time(s); every index must occur exactly twice"
                )
            pairs.append(tuple(sorted(places)))
        return cls(tensors, tuple(sorted(pairs)))

    def __str__(self) -> str:
        return render_spec(self)


def _is_ident_start(ch: str) -> bool:
    return ch.isascii() and ch.isalpha()


def _is_ident_char(ch: str) -> bool:
    return ch.isascii() and ch.isalnum()


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: int | None = None):
        raise SpecSyntaxError(message, self.text, self.pos if pos is None else pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = repr(self.peek()) if self.peek() else "end of input"
            self.error(f"expected {ch!r}, found {found}")
        self.pos += 1

    def ident(self, what: str) -> str:
        self.skip_ws()
        start = self.pos
        if self.pos >= len(self.text) or not _is_ident_start(self.text[self.pos]):
            self.error(f"expected {what} (a letter followed by letters or digits)")
        while self.pos < len(self.text) and _is_ident_char(self.text[self.pos]):
            self.pos += 1
        return self.text[start : self.pos]

    def factor(self) -> DerivativeTensor:
        self.expect("f")
        self.expect("(")
        label = self.ident("input label")
        self.expect(")")
        slots: list[str] = []
        if self.peek() == "[":
            self.pos += 1
            slots.append(self.ident("index"))
            while self.peek() == ",":
                self.pos += 1
                slots.append(self.ident("index"))
            self.expect("]")
        return DerivativeTensor(label, len(slots), tuple(slots))

    def spec(self) -> list[DerivativeTensor]:
        out = [self.factor()]
        while True:
            ch = self.peek()
            if ch == "":
                return out
            if ch == "*":
                self.pos += 1
                if self.peek() != "f":
                    self.error("expected a factor after '*'")
            elif ch != "f":
                self.error(f"unexpected character {ch!r}")
            out.append(self.factor())


def parse_spec(text: str) -> CorrelationSpec:
    """Parse the correlation DSL into a validated :class:`CorrelationSpec`.

    Raises :class:`SpecSyntaxError` with the failing position for malformed
    text and :class:`SpecError` when an index does not occur exactly twice.
    """
    parser = _Parser(text)
    if parser.peek() == "":
        parser.error("empty spec")
    return CorrelationSpec.from_tensors(parser.spec())


def _index_names(count: int) -> list[str]:
    names = []
    for i in range(count):
        s = ""
        j = i
        while True:
            s = chr(ord("a") + j % 26) + s
            j = j // 26 - 1
            if j < 0:
                break
        names.append(s)
    return names


def render_spec(spec: CorrelationSpec) -> str:
    """Render a spec back to DSL text, naming indices a, b, c, ... by pairing order."""
    names = _index_names(len(spec.pairings))
    slot_name: dict[Slot, str] = {}
    for name, (a, b) in zip(names, spec.pairings):
        slot_name[a] = name
        slot_name[b] = name
    parts = []
    for t, tensor in enumerate(spec.tensors):
        s = f"f({tensor.input_label})"
        if tensor.rank:
            s += "[" + ",".join(slot_name[(t, k)] for k in range(tensor.rank)) + "]"
        parts.append(s)
    return " ".join(parts)


_BUILTIN_TEXT = {
    "C_{2,0}": "f(x1) f(x2)",
    "C_{2,1}": "f(x1)[a] f(x2)[a]",
    "C_{4,0}": "f(x1) f(x2) f(x3) f(x4)",
    "C_{4,2}": "f(x1)[a,b] f(x2)[a] f(x3)[b] f(x4)",
    "C_{4,3}": "f(x1)[a,b,c] f(x2)[a] f(x3)[b] f(x4)[c]",
    "C_{6,4}": "f(x1)[a,b] f(x2)[a] f(x3)[b] f(x4)[c,d] f(x5)[c] f(x6)[d]",
}


def builtin_specs() -> dict[str, CorrelationSpec]:
    """The six correlation functions measured in the width-scaling experiments."""
    return {name: parse_spec(text) for name, text in _BUILTIN_TEXT.items()}


_ALIASES = {}
for _name in _BUILTIN_TEXT:
    _short = _name.replace("{", "").replace("}", "").replace(",", "")  # C_{4,2} -> C_42
    _ALIASES[_short.lower()] = _name
    _ALIASES[_name.lower()] = _name
    _ALIASES[_short.replace("_", "").lower()] = _name  # C42


def get_builtin(name: str) -> CorrelationSpec:
    key = _ALIASES.get(name.strip().lower())
    if key is None:
        raise KeyError(f"unknown builtin spec {name!r}; choose from {', '.join(_BUILTIN_TEXT)}")
    return parse_spec(_BUILTIN_TEXT[key])


def canonical_builtin_name(name: str) -> str | None:
    return _ALIASES.get(name.strip().lower())


def resolve_spec(text_or_name: str) -> CorrelationSpec:
    """Accept either a builtin name (``C_{4,2}``, ``C_42``, ``c42``) or DSL text."""
    if canonical_builtin_name(text_or_name):
        return get_builtin(text_or_name)
    return parse_spec(text_or_name)


def slots_of(spec: CorrelationSpec, tensor: int) -> list[Slot]:
    return [(tensor, k) for k in range(spec.tensors[tensor].rank)]


def self_pairings(spec: CorrelationSpec) -> list[tuple[Slot, Slot]]:
    """Pairings that join two slots of the same tensor."""
    return [(a, b) for a, b in spec.pairings if a[0] == b[0]]


def permute(spec: CorrelationSpec, order) -> CorrelationSpec:
    """Reorder tensors; ``order[i]`` is the old position placed at new position i."""
    order = list(order)
    new_pos = {old: new for new, old in enumerate(order)}
    tensors = tuple(spec.tensors[o] for o in order)
    pairs = []
    for a, b in spec.pairings:
        pa = (new_pos[a[0]], a[1])
        pb = (new_pos[b[0]], b[1])
        pairs.append(tuple(sorted((pa, pb))))
    return CorrelationSpec(tensors, tuple(sorted(pairs)))
