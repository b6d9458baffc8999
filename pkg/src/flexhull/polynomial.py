"""Sparse bivariate polynomials in (p, q) and monomial-basis services.

Everything downstream (domains, certificates, the conic compiler) works on
these two types.  Values are immutable after construction; all operations
return new objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

Exponent = tuple[int, int]


def _grlex_key(m: Exponent) -> tuple[int, int]:
    # graded-lex: total degree ascending, then p-power descending
    return (m[0] + m[1], -m[0])


class Polynomial2:
    """Polynomial sum of c_ij * p^i * q^j stored as {(i, j): c_ij}.

    Canonical form: no coefficient is stored as exactly zero.  The zero
    polynomial has an empty term map and degree -1.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Exponent, float] | None = None):
        clean: dict[Exponent, float] = {}
        if terms:
            for (i, j), c in terms.items():
                if i < 0 or j < 0:
                    raise ValueError(f"negative exponent in monomial ({i}, {j})")
                c = float(c)
                if c != 0.0:
                    clean[(int(i), int(j))] = c
        self._terms = clean

    @property
    def terms(self) -> dict[Exponent, float]:
        return dict(self._terms)

    @classmethod
    def zero(cls) -> Polynomial2:
        return cls()

    @classmethod
    def constant(cls, c: float) -> Polynomial2:
        return cls({(0, 0): c})

    @classmethod
    def variable(cls, name: str) -> Polynomial2:
        if name == "p":
            return cls({(1, 0): 1.0})
        if name == "q":
            return cls({(0, 1): 1.0})
        raise ValueError(f"unknown variable {name!r}, expected 'p' or 'q'")

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(i + j for i, j in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, m: Exponent) -> float:
        return self._terms.get(m, 0.0)

    def __add__(self, other: Polynomial2) -> Polynomial2:
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0.0) + c
        return Polynomial2(out)

    def __sub__(self, other: Polynomial2) -> Polynomial2:
        return self + (-other)

    def __neg__(self) -> Polynomial2:
        return Polynomial2({m: -c for m, c in self._terms.items()})

    def __mul__(self, other: Polynomial2) -> Polynomial2:
        out: dict[Exponent, float] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                m = (i1 + i2, j1 + j2)
                out[m] = out.get(m, 0.0) + c1 * c2
        return Polynomial2(out)

    def scale(self, factor: float) -> Polynomial2:
        return Polynomial2({m: c * factor for m, c in self._terms.items()})

    def substitute_scaled(self, h: float) -> Polynomial2:
        """Polynomial g~ with g~(x) = g(h * x): coefficient (i,j) picks up h^(i+j)."""
        return Polynomial2({(i, j): c * h ** (i + j) for (i, j), c in self._terms.items()})

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def evaluate(self, point: tuple[float, float]) -> float:
        p, q = point
        return sum(c * p**i * q**j for (i, j), c in self._terms.items())

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at an (n, 2) array of points; returns shape (n,)."""
        pts = np.asarray(points, dtype=float)
        p, q = pts[:, 0], pts[:, 1]
        out = np.zeros(len(pts))
        for (i, j), c in self._terms.items():
            out += c * p**i * q**j
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial2):
            return NotImplemented
        return self._terms == other._terms

    def __repr__(self) -> str:
        if not self._terms:
            return "Polynomial2(0)"
        parts = []
        for (i, j) in sorted(self._terms, key=_grlex_key):
            c = self._terms[(i, j)]
            mono = (f"p^{i}" if i > 1 else "p" if i == 1 else "") + (
                f"q^{j}" if j > 1 else "q" if j == 1 else ""
            )
            parts.append(f"{c:+g}{mono}")
        return "Polynomial2(" + " ".join(parts) + ")"

    def to_json(self) -> dict:
        terms = [[i, j, self._terms[(i, j)]] for (i, j) in sorted(self._terms, key=_grlex_key)]
        return {"terms": terms}

    @classmethod
    def from_json(cls, obj: Mapping) -> Polynomial2:
        out: dict[Exponent, float] = {}
        for entry in obj["terms"]:
            i, j, c = entry
            m = (int(i), int(j))
            out[m] = out.get(m, 0.0) + float(c)
        return cls(out)


def poly_add(a: Polynomial2, b: Polynomial2) -> Polynomial2:
    return a + b


def poly_mul(a: Polynomial2, b: Polynomial2) -> Polynomial2:
    return a * b


def evaluate(a: Polynomial2, point: tuple[float, float]) -> float:
    return a.evaluate(point)


@dataclass(frozen=True)
class MonomialBasis:
    """All monomials of total degree <= max_degree in graded-lex order."""

    entries: tuple[Exponent, ...]
    max_degree: int

    def __len__(self) -> int:
        return len(self.entries)

    def row_vector(self, point: tuple[float, float]) -> np.ndarray:
        p, q = point
        return np.array([p**i * q**j for (i, j) in self.entries])


def basis(max_degree: int) -> MonomialBasis:
    if max_degree < 0:
        raise ValueError("basis degree must be nonnegative")
    entries: list[Exponent] = []
    for total in range(max_degree + 1):
        for i in range(total, -1, -1):
            entries.append((i, total - i))
    # length (d+1)(d+2)/2 by construction
    return MonomialBasis(entries=tuple(entries), max_degree=max_degree)


def gram_expand(bas: MonomialBasis) -> dict[Exponent, list[tuple[int, int]]]:
    """Map each product monomial to the Gram positions (row <= col) producing it.

    With symmetric Xi over basis z, the coefficient of monomial m in z'
    Xi z equals sum of Xi[r][r] over diagonal hits plus 2*Xi[r][c] over
    off-diagonal hits.
    """
    out: dict[Exponent, list[tuple[int, int]]] = {}
    n = len(bas.entries)
    for r in range(n):
        ir, jr = bas.entries[r]
        for c in range(r, n):
            ic, jc = bas.entries[c]
            m = (ir + ic, jr + jc)
            out.setdefault(m, []).append((r, c))
    return out


def gram_polynomial(bas: MonomialBasis, xi: np.ndarray) -> Polynomial2:
    """Expand z(x)' Xi z(x) for a concrete symmetric matrix Xi."""
    terms: dict[Exponent, float] = {}
    for m, positions in gram_expand(bas).items():
        val = 0.0
        for r, c in positions:
            val += xi[r, c] if r == c else 2.0 * xi[r, c]
        if val != 0.0:
            terms[m] = terms.get(m, 0.0) + val
    return Polynomial2(terms)


def sorted_monomials(monomials: Iterable[Exponent]) -> list[Exponent]:
    return sorted(set(monomials), key=_grlex_key)
