from pathlib import Path

import numpy as np
import pytest

from paulibridge.pauli import PauliString, PauliSum, parse_pauli_sum

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def h2_text() -> str:
    return (FIXTURES / "h2_subset.pauli").read_text()


@pytest.fixture(scope="session")
def h2_subset(h2_text) -> PauliSum:
    return parse_pauli_sum(h2_text)


def random_pauli_sum(rng: np.random.Generator, n_sites: int, n_terms: int,
                     complex_coeffs: bool = False) -> PauliSum:
    """Distinct random strings with nonzero coefficients."""
    n_terms = min(n_terms, 4**n_sites)
    seen = set()
    entries = []
    while len(entries) < n_terms:
        codes = rng.integers(0, 4, size=n_sites)
        s = PauliString.from_codes(int(c) for c in codes)
        if s in seen:
            continue
        seen.add(s)
        c = rng.standard_normal()
        if complex_coeffs:
            c = c + 1j * rng.standard_normal()
        if c == 0:
            continue
        entries.append((c, s))
    return PauliSum(n_sites, entries)


def random_state(rng: np.random.Generator, n_sites: int) -> np.ndarray:
    v = rng.standard_normal(2**n_sites) + 1j * rng.standard_normal(2**n_sites)
    return v / np.linalg.norm(v)
