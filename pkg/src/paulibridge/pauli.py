"""Pauli strings, weighted Pauli sums, and their algebra.

A Pauli string over ``n`` sites is a word in {I, X, Y, Z}. Strings are stored
bit-packed, two bits per site with I=0, X=1, Y=2, Z=3, and site 0 occupying
the highest bits. That packing makes integer comparison of the payload agree
with lexicographic comparison of the labels under the symbol order
I < X < Y < Z, which is the canonical ordering used everywhere downstream.

Dense conventions: site 0 is the most significant qubit, i.e. the dense
matrix of a string is ``kron(sigma[s_0], kron(sigma[s_1], ...))`` and bit j
of a computational basis index addresses site j from the left.

The text format for weighted sums is line oriented: one ``<coeff> <STRING>``
pair per line, ``#`` starts a comment, blank lines are skipped. Coefficients
are real (``-0.25``, ``1e-3``) or complex in ``a+bi`` form (``0.5-0.25i``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "DimensionMismatch",
    "EmptyInput",
    "InconsistentLength",
    "LengthMismatch",
    "MalformedLine",
    "NotNormalized",
    "PauliError",
    "PauliString",
    "PauliSum",
    "PauliTerm",
    "SYMBOLS",
    "TooLarge",
    "PAULI_MATRICES",
    "apply_string",
    "classify",
    "concat",
    "dense_string",
    "expectation",
    "multiply",
    "parse_pauli_sum",
    "pauli_product",
    "serialize_pauli_sum",
    "to_dense",
]

SYMBOLS = "IXYZ"

PAULI_MATRICES: tuple[np.ndarray, ...] = (
    np.eye(2, dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)

DENSE_LIMIT = 12


class PauliError(ValueError):
    """Base class for errors raised by this package's Pauli layer."""


class MalformedLine(PauliError):
    """A line of Pauli-sum text that does not parse.

    Carries the 1-based ``line`` and ``column`` of the offending token.
    """

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class InconsistentLength(PauliError):
    """Strings of different lengths in one Pauli-sum source."""


class EmptyInput(PauliError):
    """No terms found where at least one was required."""


class LengthMismatch(PauliError):
    """Binary operation on strings of different lengths."""


class TooLarge(PauliError):
    """A dense object would exceed the configured qubit limit."""


class DimensionMismatch(PauliError):
    """State vector dimension does not match the operator."""


class NotNormalized(PauliError):
    """State vector norm differs from 1 beyond tolerance."""


def _mask01(n: int) -> int:
    # 0b0101...01 over n two-bit slots
    return (4**n - 1) // 3


@dataclass(frozen=True, order=True)
class PauliString:
    """An n-site Pauli word, bit-packed two bits per site.

    Attributes
    ----------
    n_sites:
        Number of sites, at least 1.
    bits:
        Packed symbol codes; site j sits at bit offset ``2*(n_sites-1-j)``
        so that integer order equals lexicographic label order.
    """

    n_sites: int
    bits: int

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise PauliError(f"need at least one site, got {self.n_sites}")
        if not 0 <= self.bits < 4**self.n_sites:
            raise PauliError("packed bits out of range for site count")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Build from a label such as ``"XIZ"``."""
        if not label:
            raise PauliError("empty Pauli label")
        bits = 0
        for ch in label:
            code = SYMBOLS.find(ch)
            if code < 0:
                raise PauliError(f"invalid Pauli symbol {ch!r} in {label!r}")
            bits = (bits << 2) | code
        return cls(len(label), bits)

    @classmethod
    def from_codes(cls, codes: Iterable[int]) -> "PauliString":
        bits = 0
        n = 0
        for code in codes:
            bits = (bits << 2) | (code & 3)
            n += 1
        return cls(n, bits)

    @classmethod
    def identity(cls, n_sites: int) -> "PauliString":
        return cls(n_sites, 0)

    def code(self, site: int) -> int:
        """Symbol code (0..3) at ``site``."""
        if not 0 <= site < self.n_sites:
            raise IndexError(f"site {site} out of range")
        return (self.bits >> (2 * (self.n_sites - 1 - site))) & 3

    @property
    def codes(self) -> tuple[int, ...]:
        return tuple(self.code(j) for j in range(self.n_sites))

    @property
    def label(self) -> str:
        return "".join(SYMBOLS[c] for c in self.codes)

    def __str__(self) -> str:
        return self.label

    @property
    def weight(self) -> int:
        """Number of non-identity sites."""
        return ((self.bits | (self.bits >> 1)) & _mask01(self.n_sites)).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.bits == 0

    @property
    def is_diagonal(self) -> bool:
        """True when every site is I or Z."""
        return ((self.bits ^ (self.bits >> 1)) & _mask01(self.n_sites)) == 0

    def substring(self, start: int, stop: int) -> "PauliString":
        """Sites ``start:stop`` as a new string (non-empty slice required)."""
        if not 0 <= start < stop <= self.n_sites:
            raise PauliError(f"bad slice [{start}:{stop}] of {self.n_sites} sites")
        length = stop - start
        shifted = self.bits >> (2 * (self.n_sites - stop))
        return PauliString(length, shifted & (4**length - 1))

    def split(self, cut: int) -> tuple["PauliString", "PauliString"]:
        """Split into (sites < cut, sites >= cut); requires 1 <= cut < n."""
        return self.substring(0, cut), self.substring(cut, self.n_sites)

    @property
    def x_flip_mask(self) -> int:
        """Basis-index bits flipped by this string (X and Y sites)."""
        mask = 0
        for j, c in enumerate(self.codes):
            if c in (1, 2):
                mask |= 1 << (self.n_sites - 1 - j)
        return mask

    @property
    def phase_mask(self) -> int:
        """Basis-index bits contributing a (-1) phase (Y and Z sites)."""
        mask = 0
        for j, c in enumerate(self.codes):
            if c in (2, 3):
                mask |= 1 << (self.n_sites - 1 - j)
        return mask

    @property
    def y_count(self) -> int:
        return sum(1 for c in self.codes if c == 2)


def concat(left: PauliString, right: PauliString) -> PauliString:
    """Concatenate two strings into one over the combined sites."""
    return PauliString(
        left.n_sites + right.n_sites,
        (left.bits << (2 * right.n_sites)) | right.bits,
    )


@dataclass(frozen=True)
class PauliTerm:
    """A complex coefficient attached to a Pauli string."""

    coeff: complex
    string: PauliString


class PauliSum:
    """An ordered, duplicate-free weighted sum of Pauli strings.

    Terms passed to the constructor are merged by string (coefficients
    added), preserving first-occurrence order; exactly-zero coefficients
    are dropped after merging. All strings must share one site count.
    """

    __slots__ = ("n_sites", "terms")

    def __init__(self, n_sites: int, terms: Iterable[PauliTerm | tuple[complex, PauliString]]):
        merged: dict[PauliString, complex] = {}
        for item in terms:
            if isinstance(item, PauliTerm):
                coeff, string = item.coeff, item.string
            else:
                coeff, string = item
            if string.n_sites != n_sites:
                raise InconsistentLength(
                    f"string {string} has {string.n_sites} sites, expected {n_sites}"
                )
            merged[string] = merged.get(string, 0j) + complex(coeff)
        self.n_sites = n_sites
        self.terms: tuple[PauliTerm, ...] = tuple(
            PauliTerm(c, s) for s, c in merged.items() if c != 0
        )

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[PauliTerm]:
        return iter(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_sites == other.n_sites and self.terms == other.terms

    def __repr__(self) -> str:
        return f"PauliSum(n_sites={self.n_sites}, n_terms={self.n_terms})"

    def as_dict(self) -> dict[PauliString, complex]:
        return {t.string: t.coeff for t in self.terms}


# ---------------------------------------------------------------------------
# single-site product table, derived from the dense matrices at import time

def _build_product_tables() -> tuple[list[list[int]], list[list[complex]]]:
    codes = [[0] * 4 for _ in range(4)]
    phases: list[list[complex]] = [[1.0 + 0j] * 4 for _ in range(4)]
    for a in range(4):
        for b in range(4):
            m = PAULI_MATRICES[a] @ PAULI_MATRICES[b]
            for c in range(4):
                t = np.trace(m @ PAULI_MATRICES[c].conj().T) / 2
                if abs(t) > 0.5:
                    codes[a][b] = c
                    phases[a][b] = complex(round(t.real), round(t.imag))
                    break
    return codes, phases


_PROD_CODE, _PROD_PHASE = _build_product_tables()


def pauli_product(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Product of two strings as (phase, string) with phase in {1, -1, i, -i}."""
    if a.n_sites != b.n_sites:
        raise LengthMismatch(f"{a.n_sites} sites vs {b.n_sites} sites")
    phase: complex = 1.0 + 0j
    bits = 0
    for ca, cb in zip(a.codes, b.codes):
        phase *= _PROD_PHASE[ca][cb]
        bits = (bits << 2) | _PROD_CODE[ca][cb]
    return phase, PauliString(a.n_sites, bits)


def multiply(a: PauliSum, b: PauliSum) -> PauliSum:
    """Term-by-term product of two sums, merged."""
    if a.n_sites != b.n_sites:
        raise LengthMismatch(f"{a.n_sites} sites vs {b.n_sites} sites")
    out: list[tuple[complex, PauliString]] = []
    for ta in a.terms:
        for tb in b.terms:
            phase, s = pauli_product(ta.string, tb.string)
            out.append((ta.coeff * tb.coeff * phase, s))
    return PauliSum(a.n_sites, out)


def classify(p: PauliString) -> str:
    """Partition label: "diagonal" for strings over {I, Z}, else "offdiagonal"."""
    return "diagonal" if p.is_diagonal else "offdiagonal"


# ---------------------------------------------------------------------------
# dense forms and state-vector application

def dense_string(p: PauliString) -> np.ndarray:
    """Dense 2^n x 2^n matrix of a single string (site 0 most significant)."""
    return reduce(np.kron, (PAULI_MATRICES[c] for c in p.codes))


def to_dense(op: PauliSum, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense matrix of a sum; refuses more than ``dense_limit`` sites."""
    if op.n_sites > dense_limit:
        raise TooLarge(f"{op.n_sites} sites exceeds dense limit {dense_limit}")
    dim = 2**op.n_sites
    out = np.zeros((dim, dim), dtype=np.complex128)
    for term in op.terms:
        out += term.coeff * dense_string(term.string)
    return out


def apply_string(p: PauliString, vec: np.ndarray) -> np.ndarray:
    """Apply one Pauli string to a state vector without forming the matrix.

    Uses P|b> = i^{#Y} (-1)^{sum of b over Y,Z sites} |b xor flips>.
    """
    n = p.n_sites
    if vec.shape != (2**n,):
        raise DimensionMismatch(f"state has shape {vec.shape}, expected ({2**n},)")
    idx = np.arange(2**n)
    parity = np.bitwise_count(idx & p.phase_mask) & 1
    phases = (1j**p.y_count) * np.where(parity, -1.0, 1.0)
    out = np.empty_like(vec, dtype=np.complex128)
    out[idx ^ p.x_flip_mask] = phases * vec
    return out


def expectation(op: PauliSum, state: np.ndarray, atol: float = 1e-12) -> complex:
    """<state|op|state> evaluated term by term on the vector."""
    state = np.asarray(state, dtype=np.complex128)
    if state.shape != (2**op.n_sites,):
        raise DimensionMismatch(
            f"state has shape {state.shape}, operator needs ({2**op.n_sites},)"
        )
    norm = float(np.linalg.norm(state))
    if abs(norm - 1.0) > atol:
        raise NotNormalized(f"state norm {norm} deviates from 1 beyond {atol}")
    acc = 0j
    for term in op.terms:
        acc += term.coeff * np.vdot(state, apply_string(term.string, state))
    return acc


# ---------------------------------------------------------------------------
# text format

def _parse_coeff(token: str, line_no: int, column: int) -> complex:
    try:
        return complex(float(token))
    except ValueError:
        pass
    if token.endswith("i"):
        try:
            value = complex(token[:-1] + "j")
        except ValueError:
            raise MalformedLine(f"bad coefficient {token!r}", line_no, column) from None
        if math.isfinite(value.real) and math.isfinite(value.imag):
            return value
    raise MalformedLine(f"bad coefficient {token!r}", line_no, column)


def _format_coeff(c: complex) -> str:
    if c.imag == 0:
        return repr(c.real)
    sign = "+" if c.imag >= 0 else "-"
    return f"{c.real!r}{sign}{abs(c.imag)!r}i"


def parse_pauli_sum(text: str) -> PauliSum:
    """Parse the line-oriented ``<coeff> <STRING>`` format.

    Duplicate strings are merged, exactly-zero results dropped, term order
    is first occurrence. Raises MalformedLine / InconsistentLength /
    EmptyInput on bad input.
    """
    entries: list[tuple[complex, PauliString]] = []
    n_sites: int | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        tokens = line.split()
        first_col = line.index(tokens[0]) + 1
        if len(tokens) != 2:
            raise MalformedLine(
                f"expected '<coeff> <STRING>', got {len(tokens)} tokens", line_no, first_col
            )
        coeff = _parse_coeff(tokens[0], line_no, first_col)
        string_col = line.index(tokens[1], line.index(tokens[0]) + len(tokens[0])) + 1
        try:
            string = PauliString.from_label(tokens[1])
        except PauliError as exc:
            raise MalformedLine(str(exc), line_no, string_col) from None
        if n_sites is None:
            n_sites = string.n_sites
        elif string.n_sites != n_sites:
            raise InconsistentLength(
                f"line {line_no}: string length {string.n_sites} != {n_sites}"
            )
        entries.append((coeff, string))
    if n_sites is None:
        raise EmptyInput("no terms in input")
    return PauliSum(n_sites, entries)


def serialize_pauli_sum(op: PauliSum) -> str:
    """Inverse of parse_pauli_sum; exact round trip for every float."""
    lines = [f"{_format_coeff(t.coeff)} {t.string.label}" for t in op.terms]
    return "\n".join(lines) + "\n"
