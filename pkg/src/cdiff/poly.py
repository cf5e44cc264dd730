"""Sparse multivariate polynomials over the rationals in canonical form.

A polynomial maps monomials to nonzero coefficients.  A monomial is a tuple of
``(variable_index, exponent)`` pairs sorted by index, with 1-based indices and
positive exponents; the constant monomial is ``()``.

    x1^2*x3 + 3  ->  {((1, 2), (3, 1)): 1, (): 3}

Zero coefficients are never stored, so two polynomials are equal exactly when
their term maps are equal.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Monomial = tuple[tuple[int, int], ...]
Coeff = Union[int, Fraction]

ONE_MONOMIAL: Monomial = ()


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for v, k in b:
        out[v] = out.get(v, 0) + k
    return tuple(sorted(out.items()))


class PolyNF:
    """Canonical polynomial normal form.

    Instances are immutable; arithmetic returns new objects.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Coeff] | None = None):
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for mono, c in terms.items():
                if c != 0:
                    clean[mono] = Fraction(c)
        self.terms = clean
        self._hash: int | None = None

    # constructors -----------------------------------------------------

    @classmethod
    def const(cls, c: Coeff) -> PolyNF:
        return cls({ONE_MONOMIAL: c})

    @classmethod
    def var(cls, index: int) -> PolyNF:
        if index < 1:
            raise ValueError(f"variable index must be >= 1, got {index}")
        return cls({((index, 1),): 1})

    @classmethod
    def _raw(cls, terms: dict[Monomial, Fraction]) -> PolyNF:
        # terms already free of zeros
        p = cls.__new__(cls)
        p.terms = terms
        p._hash = None
        return p

    # queries ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def variables(self) -> set[int]:
        return {v for mono in self.terms for v, _ in mono}

    def max_var(self) -> int:
        return max(self.variables(), default=0)

    def degree(self) -> int:
        return max((sum(k for _, k in mono) for mono in self.terms), default=0)

    def degree_in(self, indices: Iterable[int]) -> set[int]:
        """Set of total degrees of the monomials restricted to ``indices``."""
        idx = set(indices)
        return {sum(k for v, k in mono if v in idx) for mono in self.terms}

    def constant_term(self) -> Fraction:
        return self.terms.get(ONE_MONOMIAL, Fraction(0))

    # arithmetic -------------------------------------------------------

    def __add__(self, other: PolyNF) -> PolyNF:
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for mono, c in other.terms.items():
            s = out.get(mono, 0) + c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return PolyNF._raw(out)

    def __neg__(self) -> PolyNF:
        return PolyNF._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: PolyNF) -> PolyNF:
        return self + (-other)

    def __mul__(self, other: PolyNF) -> PolyNF:
        if not self.terms or not other.terms:
            return PolyNF._raw({})
        out: dict[Monomial, Fraction] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                m = _mono_mul(ma, mb)
                out[m] = out.get(m, 0) + ca * cb
        return PolyNF._raw({m: c for m, c in out.items() if c})

    def scale(self, c: Coeff) -> PolyNF:
        if c == 0:
            return PolyNF._raw({})
        return PolyNF._raw({m: v * c for m, v in self.terms.items()})

    def __pow__(self, k: int) -> PolyNF:
        if k < 0:
            raise ValueError("negative exponent")
        result = PolyNF.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def partial(self, i: int) -> PolyNF:
        out: dict[Monomial, Fraction] = {}
        for mono, c in self.terms.items():
            for pos, (v, k) in enumerate(mono):
                if v == i:
                    rest = mono[:pos] + (((v, k - 1),) if k > 1 else ()) + mono[pos + 1:]
                    out[rest] = out.get(rest, 0) + c * k
                    break
        return PolyNF._raw({m: c for m, c in out.items() if c})

    def substitute(self, repl: Sequence[PolyNF]) -> PolyNF:
        """Simultaneously replace variable ``x_i`` by ``repl[i-1]``."""
        powers: dict[tuple[int, int], PolyNF] = {}

        def power(v: int, k: int) -> PolyNF:
            key = (v, k)
            if key not in powers:
                powers[key] = repl[v - 1] ** k
            return powers[key]

        total = PolyNF._raw({})
        for mono, c in self.terms.items():
            term = PolyNF.const(c)
            for v, k in mono:
                term = term * power(v, k)
                if term.is_zero():
                    break
            total = total + term
        return total

    def evaluate(self, point: Sequence) -> object:
        total = 0
        for mono, c in self.terms.items():
            t = c
            for v, k in mono:
                t = t * point[v - 1] ** k
            total = total + t
        return total

    # comparison -------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolyNF):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in display order: higher total degree first, then by variables."""
        def key(item: tuple[Monomial, Fraction]):
            mono = item[0]
            deg = sum(k for _, k in mono)
            return (-deg, tuple((v, -k) for v, k in mono))

        return sorted(self.terms.items(), key=key)

    def __repr__(self) -> str:
        if not self.terms:
            return "PolyNF(0)"
        parts = []
        for mono, c in self.sorted_terms():
            vars_ = "*".join(f"x{v}" + (f"^{k}" if k > 1 else "") for v, k in mono)
            parts.append(f"{c}" + (f"*{vars_}" if vars_ else ""))
        return "PolyNF(" + " + ".join(parts) + ")"
