"""Small dense matrices of exact or float scalars (linear morphisms)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from cdiff.expr import Flavor, Scalar


def _exact(v) -> Scalar:
    if isinstance(v, float):
        return v
    q = Fraction(v)
    return q.numerator if q.denominator == 1 else q


def scalar_to_json(v: Scalar):
    if isinstance(v, float):
        return v
    q = Fraction(v)
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def scalar_from_json(v, flavor: Flavor = Flavor.EXACT) -> Scalar:
    if isinstance(v, str):
        q = Fraction(v)
    elif isinstance(v, float) and Flavor(flavor) is Flavor.EXACT:
        q = Fraction(str(v))
    else:
        q = v
    return float(q) if Flavor(flavor) is Flavor.FLOAT else _exact(q)


@dataclass(frozen=True)
class LinMorph:
    """An ``rows x cols`` matrix, i.e. a linear map from R^cols to R^rows."""

    rows: int
    cols: int
    entries: tuple[tuple[Scalar, ...], ...]

    def __post_init__(self):
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError(f"entries do not form a {self.rows}x{self.cols} matrix")

    @classmethod
    def from_rows(cls, data: Sequence[Sequence], cols: int | None = None) -> LinMorph:
        rows = tuple(tuple(_exact(v) for v in r) for r in data)
        if cols is None:
            cols = len(rows[0]) if rows else 0
        return cls(len(rows), cols, rows)

    @classmethod
    def identity(cls, n: int) -> LinMorph:
        return cls(n, n, tuple(tuple(int(i == j) for i in range(n)) for j in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> LinMorph:
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    @classmethod
    def from_vec(cls, rows: int, cols: int, vec: Sequence) -> LinMorph:
        """Inverse of :meth:`vec`: entry (j, i) sits at position j*cols + i."""
        if len(vec) != rows * cols:
            raise ValueError(f"vector of length {len(vec)} cannot fill {rows}x{cols}")
        return cls(rows, cols, tuple(tuple(vec[j * cols + i] for i in range(cols)) for j in range(rows)))

    def vec(self) -> tuple[Scalar, ...]:
        """Row-major layout."""
        return tuple(v for r in self.entries for v in r)

    @property
    def T(self) -> LinMorph:
        return LinMorph(self.cols, self.rows, tuple(
            tuple(self.entries[j][i] for j in range(self.rows)) for i in range(self.cols)))

    def __matmul__(self, other: LinMorph) -> LinMorph:
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        out = tuple(
            tuple(sum((self.entries[j][k] * other.entries[k][i] for k in range(self.cols)), 0)
                  for i in range(other.cols))
            for j in range(self.rows)
        )
        return LinMorph(self.rows, other.cols, out)

    def __add__(self, other: LinMorph) -> LinMorph:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return LinMorph(self.rows, self.cols, tuple(
            tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(self.entries, other.entries)))

    def apply(self, x: Sequence) -> tuple:
        return tuple(sum((a * b for a, b in zip(r, x)), 0) for r in self.entries)

    def as_float(self) -> LinMorph:
        return LinMorph(self.rows, self.cols, tuple(tuple(float(v) for v in r) for r in self.entries))

    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "data": [[scalar_to_json(v) for v in r] for r in self.entries],
        }

    @classmethod
    def from_json(cls, obj: dict, flavor: Flavor = Flavor.EXACT) -> LinMorph:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        if "vec" in obj:
            return cls.from_vec(rows, cols, [scalar_from_json(v, flavor) for v in obj["vec"]])
        data = tuple(tuple(scalar_from_json(v, flavor) for v in r) for r in obj["data"])
        return cls(rows, cols, data)


def block_diag(blocks: Iterable[LinMorph]) -> LinMorph:
    blocks = list(blocks)
    rows = sum(b.rows for b in blocks)
    cols = sum(b.cols for b in blocks)
    out = [[0] * cols for _ in range(rows)]
    r0 = c0 = 0
    for b in blocks:
        for j in range(b.rows):
            for i in range(b.cols):
                out[r0 + j][c0 + i] = b.entries[j][i]
        r0 += b.rows
        c0 += b.cols
    return LinMorph(rows, cols, tuple(tuple(r) for r in out))
