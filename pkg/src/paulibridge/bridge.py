"""Symbolic decomposition of a Pauli sum at a cut.

Splitting every string of a weighted Pauli sum at a fixed cut position
yields a pair of fragment dictionaries (the deduplicated left and right
half-strings) joined by a sparse coefficient matrix, the bridge: the
operator is the sum over active index pairs (a, b) of
``C[a, b] * left[a] (x) right[b]``.

The symbolic side (dictionaries plus the layered prefix/suffix graphs that
generate them) is decoupled from the numeric side (the bridge entries).
Coefficients can be swapped without touching the symbolic skeleton, which
is what ``set_bridge`` does and what the structural hash certifies.

Layout conventions fixed here and relied on downstream:

* fragment dictionaries are sorted lexicographically with I < X < Y < Z;
* the left graph is a prefix trie from the empty word down to the left
  fragments; the right graph starts from the full right fragments and
  strips one leading symbol per layer until the empty word;
* bridge entries that are set to zero stay listed (a cancelled pair is
  distinct from a pair that never occurred).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from paulibridge.pauli import PauliString, PauliSum, PauliTerm, concat

__all__ = [
    "Bridge",
    "BridgeDecomposition",
    "CutOutOfRange",
    "EmptyOperator",
    "FragmentDictionary",
    "IndexOutOfRange",
    "SymbolicGraph",
    "compile",
    "decomposition_from_json",
    "decomposition_to_json",
    "reconstruct",
    "set_bridge",
    "structural_hash",
]


class CutOutOfRange(ValueError):
    """Cut position outside 1..n_sites-1."""


class EmptyOperator(ValueError):
    """Compilation of a sum with no terms."""


class IndexOutOfRange(ValueError):
    """Bridge entry index outside the fragment dictionaries."""


@dataclass(frozen=True)
class FragmentDictionary:
    """Ordered, duplicate-free half-strings for one side of the cut.

    Attributes
    ----------
    side:
        "left" or "right".
    fragments:
        Lexicographically sorted Pauli strings, all of one length.
    """

    side: str
    fragments: tuple[PauliString, ...]

    def __post_init__(self) -> None:
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")
        if not self.fragments:
            raise ValueError("a fragment dictionary cannot be empty")
        lengths = {f.n_sites for f in self.fragments}
        if len(lengths) != 1:
            raise ValueError(f"mixed fragment lengths {sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.fragments)

    @property
    def width(self) -> int:
        return self.fragments[0].n_sites

    def index(self, fragment: PauliString) -> int:
        return self.fragments.index(fragment)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.fragments)


@dataclass(frozen=True)
class SymbolicGraph:
    """Layered labeled graph generating one fragment dictionary.

    ``layers[i]`` holds vertex labels (plain strings, the empty string is
    the root or sink), ``edges[i]`` the labeled transitions from layer i to
    layer i+1 as (from_vertex, symbol, to_vertex) triples. For the left
    side this is a prefix trie grown from the empty word; for the right
    side layer 0 holds the full fragments and each transition strips the
    leading symbol.
    """

    side: str
    layers: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[tuple[str, str, str], ...], ...]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return tuple(len(layer) for layer in self.layers)

    @property
    def edge_counts(self) -> tuple[int, ...]:
        return tuple(len(gap) for gap in self.edges)


def _left_graph(fragments: tuple[PauliString, ...]) -> SymbolicGraph:
    width = fragments[0].n_sites
    labels = [f.label for f in fragments]
    layers = []
    for i in range(width + 1):
        layers.append(tuple(sorted({lab[:i] for lab in labels})))
    edges = []
    for i in range(width):
        gap = {(lab[:i], lab[i], lab[: i + 1]) for lab in labels}
        edges.append(tuple(sorted(gap)))
    return SymbolicGraph("left", tuple(layers), tuple(edges))


def _right_graph(fragments: tuple[PauliString, ...]) -> SymbolicGraph:
    width = fragments[0].n_sites
    labels = [f.label for f in fragments]
    layers = []
    for i in range(width + 1):
        layers.append(tuple(sorted({lab[i:] for lab in labels})))
    edges = []
    for i in range(width):
        gap = {(lab[i:], lab[i], lab[i + 1 :]) for lab in labels}
        edges.append(tuple(sorted(gap)))
    return SymbolicGraph("right", tuple(layers), tuple(edges))


@dataclass
class Bridge:
    """Sparse coefficient matrix over fragment index pairs.

    ``entries`` maps (left index, right index) to a complex coefficient.
    Zero values are legitimate entries: they mark cancelled pairs that
    still belong to the active index set.
    """

    shape: tuple[int, int]
    entries: dict[tuple[int, int], complex] = field(default_factory=dict)

    @property
    def active_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(p for p, c in self.entries.items() if c != 0))

    @property
    def cancelled_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(p for p, c in self.entries.items() if c == 0))

    def to_matrix(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=np.complex128)
        for (a, b), c in self.entries.items():
            m[a, b] = c
        return m


@dataclass
class BridgeDecomposition:
    """A Pauli sum factored at one cut: dictionaries, graphs, bridge."""

    cut: int
    left: FragmentDictionary
    right: FragmentDictionary
    graph_left: SymbolicGraph
    graph_right: SymbolicGraph
    bridge: Bridge

    @property
    def n_sites(self) -> int:
        return self.left.width + self.right.width


def compile(op: PauliSum, cut: int) -> BridgeDecomposition:
    """Factor ``op`` at ``cut`` into dictionaries, graphs, and a bridge.

    The dictionaries are the deduplicated half-strings sorted
    lexicographically; the bridge accumulates each term's coefficient at
    its (left fragment, right fragment) index pair. Reconstruction is
    exact: ``reconstruct(compile(op, cut)) == op`` up to term order.
    """
    if op.n_terms == 0:
        raise EmptyOperator("cannot compile a sum with no terms")
    if not 1 <= cut <= op.n_sites - 1:
        raise CutOutOfRange(f"cut {cut} not in 1..{op.n_sites - 1}")
    split_terms = [(t.string.split(cut), t.coeff) for t in op.terms]
    left_sorted = sorted({l for (l, _), _ in split_terms})
    right_sorted = sorted({r for (_, r), _ in split_terms})
    left_index = {f: i for i, f in enumerate(left_sorted)}
    right_index = {f: i for i, f in enumerate(right_sorted)}
    entries: dict[tuple[int, int], complex] = {}
    for (l, r), coeff in split_terms:
        key = (left_index[l], right_index[r])
        entries[key] = entries.get(key, 0j) + coeff
    left = FragmentDictionary("left", tuple(left_sorted))
    right = FragmentDictionary("right", tuple(right_sorted))
    return BridgeDecomposition(
        cut=cut,
        left=left,
        right=right,
        graph_left=_left_graph(left.fragments),
        graph_right=_right_graph(right.fragments),
        bridge=Bridge((len(left_sorted), len(right_sorted)), entries),
    )


def reconstruct(d: BridgeDecomposition) -> PauliSum:
    """Expand the decomposition back into a flat Pauli sum.

    Terms come out in bridge index order; zero entries drop out of the
    sum (an all-cancelled bridge reconstructs to an empty sum).
    """
    terms = [
        PauliTerm(coeff, concat(d.left.fragments[a], d.right.fragments[b]))
        for (a, b), coeff in sorted(d.bridge.entries.items())
    ]
    return PauliSum(d.n_sites, terms)


def set_bridge(d: BridgeDecomposition, entries: dict[tuple[int, int], complex]) -> BridgeDecomposition:
    """Same symbolic skeleton, new coefficient mapping.

    The mapping replaces the old one wholesale; pairs outside the original
    active set may be introduced as long as the indices address existing
    fragments. Explicit zeros are kept as cancelled pairs.
    """
    n_l, n_r = d.bridge.shape
    checked: dict[tuple[int, int], complex] = {}
    for (a, b), coeff in entries.items():
        if not (0 <= a < n_l and 0 <= b < n_r):
            raise IndexOutOfRange(f"pair ({a}, {b}) outside {d.bridge.shape}")
        checked[(a, b)] = complex(coeff)
    return BridgeDecomposition(
        cut=d.cut,
        left=d.left,
        right=d.right,
        graph_left=d.graph_left,
        graph_right=d.graph_right,
        bridge=Bridge((n_l, n_r), checked),
    )


def structural_hash(d: BridgeDecomposition) -> str:
    """Digest of the symbolic skeleton only.

    Covers cut, fragment dictionaries, and graphs; ignores every
    coefficient, so swapping bridge values leaves the hash fixed.
    """
    h = hashlib.sha256()
    h.update(f"cut={d.cut}".encode())
    h.update(("|L:" + ",".join(d.left.labels)).encode())
    h.update(("|R:" + ",".join(d.right.labels)).encode())
    for graph in (d.graph_left, d.graph_right):
        for layer in graph.layers:
            h.update(("|l:" + ",".join(layer)).encode())
        for gap in graph.edges:
            h.update(("|e:" + ",".join("/".join(e) for e in gap)).encode())
    return h.hexdigest()


def decomposition_to_json(d: BridgeDecomposition) -> str:
    """Deterministic JSON form; exact float round trip."""
    doc = {
        "format": "bridge-v1",
        "n_sites": d.n_sites,
        "cut": d.cut,
        "left_fragments": list(d.left.labels),
        "right_fragments": list(d.right.labels),
        "bridge": [
            {"a": a, "b": b, "re": d.bridge.entries[(a, b)].real, "im": d.bridge.entries[(a, b)].imag}
            for a, b in sorted(d.bridge.entries)
        ],
        "graph_left": {
            "layer_sizes": list(d.graph_left.layer_sizes),
            "edge_counts": list(d.graph_left.edge_counts),
        },
        "graph_right": {
            "layer_sizes": list(d.graph_right.layer_sizes),
            "edge_counts": list(d.graph_right.edge_counts),
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def decomposition_from_json(text: str) -> BridgeDecomposition:
    """Rebuild a decomposition; graphs are rederived from the fragments."""
    doc = json.loads(text)
    if doc.get("format") != "bridge-v1":
        raise ValueError(f"unsupported format {doc.get('format')!r}")
    left = FragmentDictionary(
        "left", tuple(PauliString.from_label(s) for s in doc["left_fragments"])
    )
    right = FragmentDictionary(
        "right", tuple(PauliString.from_label(s) for s in doc["right_fragments"])
    )
    cut = int(doc["cut"])
    if cut != left.width:
        raise ValueError(f"cut {cut} does not match left fragment width {left.width}")
    entries = {
        (int(e["a"]), int(e["b"])): complex(e["re"], e["im"]) for e in doc["bridge"]
    }
    for a, b in entries:
        if not (0 <= a < len(left) and 0 <= b < len(right)):
            raise IndexOutOfRange(f"pair ({a}, {b}) outside ({len(left)}, {len(right)})")
    return BridgeDecomposition(
        cut=cut,
        left=left,
        right=right,
        graph_left=_left_graph(left.fragments),
        graph_right=_right_graph(right.fragments),
        bridge=Bridge((len(left), len(right)), entries),
    )
