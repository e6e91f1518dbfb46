"""Runtime values and finite domains.

Values are the things variables range over: atoms (which double as finite
strings, with the empty atom playing the role of nil), booleans, unit,
pairs, tagged sums, and references to named distribution tables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class Value:
    """Base class for all values. Subclasses are frozen and hashable."""

    def key(self) -> str:
        """Canonical string form; doubles as a deterministic sort key."""
        raise NotImplementedError


@dataclass(frozen=True)
class Atom(Value):
    name: str

    def key(self) -> str:
        return self.name if self.name else "nil"


@dataclass(frozen=True)
class Bool(Value):
    value: bool

    def key(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Unit(Value):
    def key(self) -> str:
        return "unit"


@dataclass(frozen=True)
class Pair(Value):
    first: Value
    second: Value

    def key(self) -> str:
        return f"({self.first.key()},{self.second.key()})"


@dataclass(frozen=True)
class Inl(Value):
    value: Value

    def key(self) -> str:
        return f"inl {_wrap(self.value)}"


@dataclass(frozen=True)
class Inr(Value):
    value: Value

    def key(self) -> str:
        return f"inr {_wrap(self.value)}"


@dataclass(frozen=True)
class Dist(Value):
    """Reference to a named distribution table (e.g. "p[S]")."""

    name: str

    def key(self) -> str:
        return f"dist {self.name}"


def _wrap(v: Value) -> str:
    # inl/inr arguments need parens unless they are already atomic
    if isinstance(v, (Inl, Inr, Dist)):
        return f"({v.key()})"
    return v.key()


TRUE = Bool(True)
FALSE = Bool(False)
UNIT = Unit()
NIL = Atom("")


# ---------------------------------------------------------------------------
# Literal syntax: used for params-file keys/values and human-readable output.

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")


class ValueSyntaxError(ValueError):
    pass


def parse_value(text: str) -> Value:
    """Parse the canonical literal syntax produced by Value.key()."""
    v, rest = _parse(text.strip())
    if rest.strip():
        raise ValueSyntaxError(f"trailing text in value literal: {rest!r}")
    return v


def _parse(s: str) -> tuple[Value, str]:
    s = s.lstrip()
    if not s:
        raise ValueSyntaxError("empty value literal")
    if s.startswith("("):
        first, rest = _parse(s[1:])
        rest = rest.lstrip()
        if rest.startswith(","):
            second, rest = _parse(rest[1:])
            rest = rest.lstrip()
            if not rest.startswith(")"):
                raise ValueSyntaxError(f"expected ')' in pair: {s!r}")
            return Pair(first, second), rest[1:]
        if rest.startswith(")"):
            return first, rest[1:]
        raise ValueSyntaxError(f"expected ',' or ')': {s!r}")
    m = _IDENT.match(s)
    if not m:
        raise ValueSyntaxError(f"bad value literal: {s!r}")
    word, rest = m.group(0), s[m.end():]
    if word == "true":
        return TRUE, rest
    if word == "false":
        return FALSE, rest
    if word == "unit":
        return UNIT, rest
    if word == "nil":
        return NIL, rest
    if word == "inl":
        v, rest = _parse(rest)
        return Inl(v), rest
    if word == "inr":
        v, rest = _parse(rest)
        return Inr(v), rest
    if word == "dist":
        rest = rest.lstrip()
        m2 = re.match(r"[A-Za-z_][A-Za-z0-9_'\[\]]*", rest)
        if not m2:
            raise ValueSyntaxError(f"bad distribution name: {rest!r}")
        return Dist(m2.group(0)), rest[m2.end():]
    return Atom(word), rest


# ---------------------------------------------------------------------------
# JSON interchange encoding (tagged objects).

def value_to_json(v: Value):
    if isinstance(v, Atom):
        return {"atom": v.name}
    if isinstance(v, Bool):
        return {"bool": v.value}
    if isinstance(v, Unit):
        return "unit"
    if isinstance(v, Pair):
        return {"pair": [value_to_json(v.first), value_to_json(v.second)]}
    if isinstance(v, Inl):
        return {"inl": value_to_json(v.value)}
    if isinstance(v, Inr):
        return {"inr": value_to_json(v.value)}
    if isinstance(v, Dist):
        return {"dist": v.name}
    raise TypeError(f"not a value: {v!r}")


def value_from_json(obj) -> Value:
    if obj == "unit":
        return UNIT
    if isinstance(obj, str):
        # convenience: bare strings are parsed as literals
        return parse_value(obj)
    if isinstance(obj, bool):
        return Bool(obj)
    if isinstance(obj, dict) and len(obj) == 1:
        (tag, body), = obj.items()
        if tag == "atom":
            return Atom(body)
        if tag == "bool":
            return Bool(bool(body))
        if tag == "pair":
            return Pair(value_from_json(body[0]), value_from_json(body[1]))
        if tag == "inl":
            return Inl(value_from_json(body))
        if tag == "inr":
            return Inr(value_from_json(body))
        if tag == "dist":
            return Dist(body)
    raise ValueSyntaxError(f"bad value encoding: {obj!r}")


# ---------------------------------------------------------------------------


class Domain:
    """A named, ordered, finite, nonempty set of values."""

    def __init__(self, name: str, values):
        values = tuple(values)
        if not values:
            raise ValueError(f"domain {name!r} is empty")
        if len(set(values)) != len(values):
            raise ValueError(f"domain {name!r} has duplicate values")
        self.name = name
        self.values = values
        self._index = {v: i for i, v in enumerate(values)}

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, v) -> bool:
        return v in self._index

    def __iter__(self):
        return iter(self.values)

    def index(self, v: Value) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise KeyError(f"value {v.key()} not in domain {self.name}") from None

    def __eq__(self, other) -> bool:
        return isinstance(other, Domain) and self.values == other.values

    def __hash__(self):
        return hash(self.values)

    def __repr__(self):
        return f"Domain({self.name!r}, {[v.key() for v in self.values]})"


def sorted_values(values) -> tuple[Value, ...]:
    """Deterministic ordering of a set of values (by canonical key)."""
    return tuple(sorted(values, key=lambda v: v.key()))
