"""Exact multilinear polynomial arithmetic over arbitrary-precision rationals.

Everything lives in the ring of real multilinear polynomials: exponents are
reduced via x^2 = x, so a polynomial is a finite map from monomials (sets of
variables) to nonzero rationals, and two polynomials that agree as functions
on 0/1 assignments are syntactically equal.  Coefficients are `Fraction`s,
never floats; certificate checking elsewhere relies on this being exact.

Polynomials, variables, clauses and constraints are immutable values.  All
operations return fresh values and are safe to share between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence


def _elem_key(e):
    # ints sort before strings; mixed tags stay orderable
    if isinstance(e, int):
        return (0, e, "")
    return (1, 0, str(e))


@dataclass(frozen=True)
class VarId:
    """A propositional variable.

    `tag` is `(kind, *indices)`; for domain-indexed variables the element of
    the domain D that the variable mentions is `domain_index` (and by
    convention is also `tag[1]`).  Identity is by value, so equal variables
    created in different spaces compare equal.
    """

    tag: tuple
    domain_index: Optional[int] = None

    @property
    def kind(self) -> str:
        return self.tag[0]

    @property
    def name(self) -> str:
        if len(self.tag) == 1:
            return str(self.tag[0])
        return "%s(%s)" % (self.tag[0], ",".join(str(t) for t in self.tag[1:]))

    @property
    def sort_key(self):
        return tuple(_elem_key(e) for e in self.tag)

    def __lt__(self, other: "VarId"):
        return self.sort_key < other.sort_key

    def __repr__(self):
        return self.name


_NAME_RE = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*)(?:\(([^()]*)\))?$")


def parse_var_name(name: str) -> tuple:
    """Parse a canonical variable name back into its tag."""
    m = _NAME_RE.match(name)
    if m is None:
        raise ValueError("bad variable name: %r" % name)
    kind, args = m.group(1), m.group(2)
    if args is None or args == "":
        return (kind,)
    toks = []
    for tok in args.split(","):
        toks.append(int(tok) if re.fullmatch(r"-?\d+", tok) else tok)
    return (kind, *toks)


class VariableSpace:
    """Registry of variables; interns by tag and fixes an enumeration order.

    The enumeration order (insertion order) is what DIMACS serialization uses
    for numbering, so it is part of an instance's identity on disk.
    """

    def __init__(self):
        self._by_tag: dict[tuple, VarId] = {}
        self._order: list[VarId] = []

    def var(self, kind: str, *indices, domain: Optional[int] = None) -> VarId:
        tag = (kind, *indices)
        v = self._by_tag.get(tag)
        if v is not None:
            if v.domain_index != domain:
                raise ValueError(
                    "variable %s re-registered with domain %r != %r"
                    % (v.name, domain, v.domain_index)
                )
            return v
        v = VarId(tag, domain)
        self._by_tag[tag] = v
        self._order.append(v)
        return v

    def register(self, v: VarId) -> VarId:
        return self.var(v.tag[0], *v.tag[1:], domain=v.domain_index)

    def lookup(self, name: str) -> VarId:
        tag = parse_var_name(name)
        v = self._by_tag.get(tag)
        if v is None:
            raise KeyError("unknown variable %r" % name)
        return v

    def __iter__(self):
        return iter(self._order)

    def __len__(self):
        return len(self._order)

    def __contains__(self, v: VarId):
        return v.tag in self._by_tag


# A monomial is a tuple of distinct VarIds sorted by sort_key.
Monomial = tuple

_ONE: Monomial = ()


def _merge_monomials(a: Monomial, b: Monomial) -> Monomial:
    # union of two sorted tuples; multilinearity collapses repeats
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        ka, kb = a[i].sort_key, b[j].sort_key
        if ka < kb:
            out.append(a[i])
            i += 1
        elif kb < ka:
            out.append(b[j])
            j += 1
        else:
            out.append(a[i])
            i += 1
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out)


class Poly:
    """Immutable multilinear polynomial with rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[dict] = None):
        # terms must already be canonical: sorted monomials, nonzero Fractions
        object.__setattr__(self, "terms", terms or {})

    def __setattr__(self, *a):
        raise AttributeError("Poly is immutable")

    # -- constructors -----------------------------------------------------

    @staticmethod
    def zero() -> "Poly":
        return _ZERO

    @staticmethod
    def one() -> "Poly":
        return _ONE_POLY

    @staticmethod
    def const(c) -> "Poly":
        c = Fraction(c)
        return Poly({} if c == 0 else {_ONE: c})

    @staticmethod
    def variable(v: VarId) -> "Poly":
        return Poly({(v,): Fraction(1)})

    @staticmethod
    def from_terms(pairs: Iterable[tuple[Monomial, Fraction]]) -> "Poly":
        acc: dict = {}
        for mono, c in pairs:
            c = Fraction(c)
            if c == 0:
                continue
            cur = acc.get(mono)
            cur = c if cur is None else cur + c
            if cur == 0:
                acc.pop(mono, None)
            else:
                acc[mono] = cur
        return Poly(acc)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Poly):
            return other
        return Poly.const(other)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        if not self.terms:
            return other
        if not other.terms:
            return self
        acc = dict(self.terms)
        for mono, c in other.terms.items():
            cur = acc.get(mono)
            cur = c if cur is None else cur + c
            if cur == 0:
                acc.pop(mono, None)
            else:
                acc[mono] = cur
        return Poly(acc)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            c = Fraction(other)
            if c == 0:
                return _ZERO
            return Poly({m: co * c for m, co in self.terms.items()})
        if not self.terms or not other.terms:
            return _ZERO
        acc: dict = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                mono = _merge_monomials(ma, mb)
                c = ca * cb
                cur = acc.get(mono)
                cur = c if cur is None else cur + c
                if cur == 0:
                    acc.pop(mono, None)
                else:
                    acc[mono] = cur
        return Poly(acc)

    __rmul__ = __mul__

    def square(self) -> "Poly":
        return self * self

    # -- queries -----------------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    @property
    def domain_degree(self) -> int:
        best = 0
        for m in self.terms:
            d = len({v.domain_index for v in m if v.domain_index is not None})
            if d > best:
                best = d
        return best

    @property
    def monomial_count(self) -> int:
        return len(self.terms)

    def constant(self) -> Fraction:
        return self.terms.get(_ONE, Fraction(0))

    def variables(self) -> set:
        out = set()
        for m in self.terms:
            out.update(m)
        return out

    # -- restriction / evaluation -------------------------------------------

    def restrict(self, assignment: Mapping[VarId, int]) -> "Poly":
        """Substitute 0/1 values for assigned variables; result is canonical."""
        if not assignment:
            return self
        acc: dict = {}
        for mono, c in self.terms.items():
            keep = []
            dead = False
            for v in mono:
                b = assignment.get(v)
                if b is None:
                    keep.append(v)
                elif b == 0:
                    dead = True
                    break
                elif b != 1:
                    raise ValueError("non-boolean value %r for %s" % (b, v))
            if dead:
                continue
            mono2 = tuple(keep)
            cur = acc.get(mono2)
            cur = c if cur is None else cur + c
            if cur == 0:
                acc.pop(mono2, None)
            else:
                acc[mono2] = cur
        return Poly(acc)

    def evaluate(self, assignment: Mapping[VarId, int]) -> Fraction:
        """Exact value under a total 0/1 assignment of this poly's variables."""
        total = Fraction(0)
        for mono, c in self.terms.items():
            val = c
            for v in mono:
                b = assignment.get(v)
                if b is None:
                    raise ValueError("assignment does not cover %s" % v)
                if b == 0:
                    val = 0
                    break
            total += val
        return total

    # -- text form -----------------------------------------------------------

    def sorted_terms(self) -> list:
        return sorted(
            self.terms.items(),
            key=lambda kv: (len(kv[0]), tuple(v.sort_key for v in kv[0])),
        )

    def to_text(self) -> str:
        """Canonical text form: `coef * v1*v2*...` terms joined by ` + `."""
        if not self.terms:
            return "0"
        parts = []
        for mono, c in self.sorted_terms():
            cs = str(c)
            if mono:
                parts.append("%s * %s" % (cs, "*".join(v.name for v in mono)))
            else:
                parts.append(cs)
        return " + ".join(parts)

    def __repr__(self):
        return "Poly(%s)" % self.to_text()


_ZERO = Poly({})
_ONE_POLY = Poly({_ONE: Fraction(1)})


def parse_poly(text: str, space: VariableSpace) -> Poly:
    """Parse the canonical text form against a variable space."""
    text = text.strip()
    if text == "0":
        return Poly.zero()
    pairs = []
    for part in text.split(" + "):
        part = part.strip()
        if "*" in part:
            coef_s, _, rest = part.partition("*")
            names = [t for t in rest.strip().split("*") if t]
            if coef_s.strip() == part.strip():  # no coefficient separator
                raise ValueError("bad term %r" % part)
            coef = Fraction(coef_s.strip())
            mono = tuple(sorted((space.lookup(n.strip()) for n in names)))
        else:
            coef = Fraction(part)
            mono = _ONE
        pairs.append((mono, coef))
    return Poly.from_terms(pairs)


# -- multilinear reduction of raw (possibly non-multilinear) input ------------


def multilinear_reduce(raw_terms: Sequence[tuple[Sequence[VarId], Fraction]]) -> Poly:
    """Reduce a raw term list modulo the ideal generated by x^2 - x.

    Each raw term is (variable multiset, coefficient); repeated variables
    collapse to a single occurrence, equal monomials merge, zeros drop.
    """
    pairs = []
    for vars_, c in raw_terms:
        mono = tuple(sorted(set(vars_)))
        pairs.append((mono, Fraction(c)))
    return Poly.from_terms(pairs)


def raw_degree(raw_terms: Sequence[tuple[Sequence[VarId], Fraction]]) -> int:
    """Degree of a raw term list counting exponents with multiplicity."""
    return max((len(t[0]) for t in raw_terms if Fraction(t[1]) != 0), default=0)


def raw_monomial_count(raw_terms) -> int:
    return sum(1 for t in raw_terms if Fraction(t[1]) != 0)


# -- indicator polynomials -----------------------------------------------------


def literal_poly(v: VarId, bit: int) -> Poly:
    """chi(x, beta): x when beta = 1, (1 - x) when beta = 0."""
    if bit == 1:
        return Poly.variable(v)
    if bit == 0:
        return Poly.one() - Poly.variable(v)
    raise ValueError("bit must be 0 or 1, got %r" % bit)


def indicator_poly(vars_: Sequence[VarId], bits: Sequence[int]) -> Poly:
    """Expanded product of chi factors; 1 exactly on `bits`, 0 elsewhere."""
    if len(vars_) != len(bits):
        raise ValueError(
            "length mismatch: %d variables, %d bits" % (len(vars_), len(bits))
        )
    acc = Poly.one()
    for v, b in zip(vars_, bits):
        acc = acc * literal_poly(v, b)
    return acc


def indicator_of_assignment(assignment: Mapping[VarId, int]) -> Poly:
    """Indicator of a partial assignment, with a deterministic factor order."""
    items = sorted(assignment.items(), key=lambda kv: kv[0].sort_key)
    acc = Poly.one()
    for v, b in items:
        acc = acc * literal_poly(v, b)
    return acc


# -- clauses and their polynomial encoding ------------------------------------


@dataclass(frozen=True)
class Clause:
    """A disjunction of literals; a set, so no repetition and no order.

    Literals are (variable, polarity) with polarity True for the positive
    literal.  A variable may not occur with both polarities.
    """

    literals: frozenset

    def __post_init__(self):
        seen = {}
        for v, pol in self.literals:
            if seen.setdefault(v, pol) != pol:
                raise ValueError("variable %s occurs with both polarities" % v)

    @staticmethod
    def of(*lits: tuple[VarId, bool]) -> "Clause":
        return Clause(frozenset(lits))

    @property
    def width(self) -> int:
        return len(self.literals)

    @property
    def domain_indices(self) -> frozenset:
        return frozenset(
            v.domain_index for v, _ in self.literals if v.domain_index is not None
        )

    @property
    def domain_width(self) -> int:
        return len(self.domain_indices)

    def variables(self) -> set:
        return {v for v, _ in self.literals}

    def __le__(self, other: "Clause"):
        return self.literals <= other.literals

    def is_empty(self) -> bool:
        return not self.literals

    def falsifying_assignment(self) -> dict:
        """The unique assignment of this clause's variables falsifying it."""
        return {v: (0 if pol else 1) for v, pol in self.literals}

    def restrict(self, assignment: Mapping[VarId, int]):
        """Clause under a partial assignment: None if satisfied, else the
        clause with falsified literals removed."""
        kept = []
        for v, pol in self.literals:
            b = assignment.get(v)
            if b is None:
                kept.append((v, pol))
            elif (b == 1) == pol:
                return None
            # falsified literal: dropped
        return Clause(frozenset(kept))

    def sorted_literals(self) -> list:
        return sorted(self.literals, key=lambda lit: (lit[0].sort_key, lit[1]))

    def __repr__(self):
        if not self.literals:
            return "(empty)"
        return " | ".join(
            ("" if pol else "~") + v.name for v, pol in self.sorted_literals()
        )


class Relation(Enum):
    EQ0 = "eq0"
    GE0 = "ge0"


@dataclass(frozen=True)
class PolynomialConstraint:
    """`poly = 0` or `poly >= 0`, with poly in canonical multilinear form."""

    poly: Poly
    relation: Relation

    def holds(self, assignment: Mapping[VarId, int]) -> bool:
        val = self.poly.evaluate(assignment)
        return val == 0 if self.relation is Relation.EQ0 else val >= 0

    def __repr__(self):
        op = "= 0" if self.relation is Relation.EQ0 else ">= 0"
        return "%s %s" % (self.poly.to_text(), op)


def clause_sum(clause: Clause) -> Poly:
    """Sum over positive literals of x and negative literals of (1 - x)."""
    acc = Poly.zero()
    for v, pol in clause.sorted_literals():
        acc = acc + (Poly.variable(v) if pol else Poly.one() - Poly.variable(v))
    return acc


def encode_clause(clause: Clause) -> PolynomialConstraint:
    """Encode a clause as `clause_sum - 1 >= 0`; satisfied iff the clause is."""
    return PolynomialConstraint(clause_sum(clause) - Poly.one(), Relation.GE0)


def falsifying_indicator(clause: Clause) -> Poly:
    """Indicator of the unique assignment of the clause's variables that
    falsifies it (1 for the empty clause)."""
    return indicator_of_assignment(clause.falsifying_assignment())
