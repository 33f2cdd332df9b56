"""Dense adjacency-matrix networks with missing-dyad support.

Dyad states are stored in an ``int8`` matrix: 1 for an edge, 0 for a
non-edge and :data:`MISSING` for an unobserved dyad.  Undirected networks
keep the matrix symmetric; the diagonal is always :data:`MISSING` and is
never part of the dyad universe.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

MISSING = -1


class ParseError(ValueError):
    """Malformed edge-list input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NetworkDomainError(ValueError):
    """A statistic or operation is undefined for the given network."""


@dataclass(frozen=True)
class Network:
    """An immutable network on ``node_count`` nodes.

    Build instances with :func:`from_adjacency` or :func:`parse_edge_list`
    rather than calling the constructor directly.
    """

    adjacency: np.ndarray
    directed: bool
    node_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        adj = self.adjacency
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if adj.dtype != np.int8:
            raise ValueError("adjacency must have dtype int8")
        if adj.flags.writeable:
            raise ValueError("adjacency must be read-only; use from_adjacency")
        if self.node_labels is not None and len(self.node_labels) != adj.shape[0]:
            raise ValueError("node_labels length does not match node count")

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def labels(self) -> list[str]:
        if self.node_labels is None:
            return [str(i + 1) for i in range(self.n)]
        return list(self.node_labels)

    def dyad_values(self) -> np.ndarray:
        """States of the dyad universe, in :func:`dyad_universe` order."""
        rows, cols = universe_indices(self.n, self.directed)
        return self.adjacency[rows, cols]

    def edge_count(self) -> int:
        return int(np.count_nonzero(self.dyad_values() == 1))

    def observed_mask(self) -> np.ndarray:
        """Boolean n x n matrix, True where the dyad is observed."""
        obs = self.adjacency != MISSING
        np.fill_diagonal(obs, False)
        return obs

    def has_missing(self) -> bool:
        return bool(np.any(self.dyad_values() == MISSING))

    def edges(self) -> list[tuple[int, int]]:
        """Observed edges as 0-based index pairs (i < j when undirected)."""
        rows, cols = universe_indices(self.n, self.directed)
        hit = self.adjacency[rows, cols] == 1
        return list(zip(rows[hit].tolist(), cols[hit].tolist()))

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.directed == other.directed
            and self.node_labels == other.node_labels
            and np.array_equal(self.adjacency, other.adjacency)
        )

    def __hash__(self):
        return hash((self.directed, self.node_labels, self.adjacency.tobytes()))


@dataclass(frozen=True, eq=False)
class DyadSet:
    """Held-out dyads with their true labels.

    Dyads are 0-based index pairs; for undirected networks ``rows < cols``.
    """

    rows: np.ndarray
    cols: np.ndarray
    labels: np.ndarray
    _index: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        labels = np.asarray(self.labels, dtype=np.int8)
        if not (rows.shape == cols.shape == labels.shape) or rows.ndim != 1:
            raise ValueError("rows, cols and labels must be equal-length vectors")
        if np.any((labels != 0) & (labels != 1)):
            raise ValueError("labels must be 0 or 1")
        pairs = frozenset(zip(rows.tolist(), cols.tolist()))
        if len(pairs) != rows.size:
            raise ValueError("duplicate dyads in DyadSet")
        for arr in (rows, cols, labels):
            arr.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", pairs)

    @classmethod
    def from_pairs(cls, net: Network, pairs: Iterable[tuple[int, int]]) -> "DyadSet":
        """Collect true labels for ``pairs`` from a fully observed ``net``."""
        pairs = [canonical_pair(net, i, j) for i, j in pairs]
        if not pairs:
            return cls(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.int8))
        rows, cols = (np.array(x, dtype=np.int64) for x in zip(*pairs))
        labels = net.adjacency[rows, cols]
        if np.any(labels == MISSING):
            raise NetworkDomainError("cannot take labels of MISSING dyads")
        return cls(rows, cols, labels)

    def __len__(self) -> int:
        return int(self.rows.size)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self._index

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    @property
    def nonedge_count(self) -> int:
        return int(np.count_nonzero(self.labels == 0))

    def dyads(self) -> list[tuple[int, int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.labels.tolist()))


def from_adjacency(
    matrix,
    directed: bool,
    node_labels: Sequence[str] | None = None,
) -> Network:
    """Build a :class:`Network` from a square 0/1/MISSING matrix.

    The diagonal is ignored. For undirected networks the upper triangle is
    authoritative and mirrored to the lower one.
    """
    adj = np.array(matrix, dtype=np.int8, copy=True)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError("adjacency must be square")
    if np.any((adj != 0) & (adj != 1) & (adj != MISSING)):
        raise ValueError("dyad states must be 0, 1 or MISSING")
    if not directed:
        upper = np.triu(adj, 1)
        adj = upper + upper.T
    np.fill_diagonal(adj, MISSING)
    adj.flags.writeable = False
    labels = tuple(str(x) for x in node_labels) if node_labels is not None else None
    return Network(adj, bool(directed), labels)


def _label_sort_key(labels: Iterable[str]):
    labels = list(labels)
    try:
        ints = [int(x) for x in labels]
    except ValueError:
        return None
    return dict(zip(labels, ints))


def parse_edge_list(
    text: str,
    directed: bool,
    weight_filter: Callable[[float], bool] | None = None,
    node_count_hint: int | None = None,
    nodes: Sequence[str] | None = None,
) -> Network:
    """Parse ``source,target[,weight]`` lines into a :class:`Network`.

    Lines starting with ``#`` and blank lines are skipped.  When
    ``weight_filter`` is given only lines whose weight passes it become
    edges; weights are then discarded.  Node order comes from ``nodes`` when
    supplied, otherwise integer labels are sorted numerically and other
    labels keep first-appearance order.  ``node_count_hint`` pads integer
    labels up to that many nodes, so isolated nodes survive.
    """
    edges: list[tuple[str, str]] = []
    seen: dict[str, None] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) not in (2, 3) or not fields[0] or not fields[1]:
            raise ParseError(f"expected 'source,target[,weight]', got {raw!r}", lineno)
        src, dst = fields[0], fields[1]
        if src == dst:
            raise ParseError(f"self-loop on node {src!r}", lineno)
        if weight_filter is not None:
            if len(fields) < 3:
                raise ParseError("weight filter requires a weight column", lineno)
            try:
                weight = float(fields[2])
            except ValueError:
                raise ParseError(f"bad weight {fields[2]!r}", lineno) from None
            if not weight_filter(weight):
                continue
        elif len(fields) == 3:
            try:
                float(fields[2])
            except ValueError:
                raise ParseError(f"bad weight {fields[2]!r}", lineno) from None
        edges.append((src, dst))
        seen.setdefault(src)
        seen.setdefault(dst)

    if nodes is not None:
        order = [str(x) for x in nodes]
        if len(set(order)) != len(order):
            raise ParseError("duplicate labels in node list")
        unknown = set(seen) - set(order)
        if unknown:
            raise ParseError(f"edge endpoints missing from node list: {sorted(unknown)[:5]}")
    else:
        keys = _label_sort_key(seen)
        if keys is not None:
            order = sorted(seen, key=keys.__getitem__)
            if node_count_hint is not None and node_count_hint > len(order):
                ints = set(keys.values())
                start = 0 if 0 in ints else 1
                full = range(start, start + node_count_hint)
                if not ints <= set(full):
                    raise ParseError("integer labels exceed node_count_hint")
                order = [str(i) for i in full]
        else:
            order = list(seen)
            if node_count_hint is not None and node_count_hint > len(order):
                raise ParseError("node_count_hint needs integer labels or an explicit node list")
    if node_count_hint is not None and len(order) > node_count_hint:
        raise ParseError(f"found {len(order)} nodes, more than node_count_hint={node_count_hint}")

    index = {label: i for i, label in enumerate(order)}
    n = len(order)
    adj = np.zeros((n, n), dtype=np.int8)
    for src, dst in edges:
        i, j = index[src], index[dst]
        adj[i, j] = 1
        if not directed:
            adj[j, i] = 1
    return from_adjacency(adj, directed, order)


def read_edge_list(path, directed: bool, nodes_path=None, **kwargs) -> Network:
    """Read an edge-list file plus an optional one-label-per-line node file."""
    from pathlib import Path

    text = Path(path).read_text(encoding="utf-8")
    nodes = None
    if nodes_path is not None:
        nodes = [
            ln.strip()
            for ln in Path(nodes_path).read_text(encoding="utf-8").splitlines()
            if ln.strip() and not ln.startswith("#")
        ]
    return parse_edge_list(text, directed, nodes=nodes, **kwargs)


def format_edge_list(net: Network) -> str:
    """Inverse of :func:`parse_edge_list` for fully observed networks."""
    labels = net.labels()
    return "".join(f"{labels[i]},{labels[j]}\n" for i, j in net.edges())


def universe_indices(n: int, directed: bool) -> tuple[np.ndarray, np.ndarray]:
    """Row and column index vectors of the dyad universe, lexicographic."""
    if directed:
        rows, cols = np.nonzero(~np.eye(n, dtype=bool))
    else:
        rows, cols = np.triu_indices(n, 1)
    return rows.astype(np.int64), cols.astype(np.int64)


def dyad_universe(net: Network) -> list[tuple[int, int]]:
    rows, cols = universe_indices(net.n, net.directed)
    return list(zip(rows.tolist(), cols.tolist()))


def canonical_pair(net: Network, i: int, j: int) -> tuple[int, int]:
    i, j = int(i), int(j)
    if i == j:
        raise NetworkDomainError(f"self-dyad ({i}, {i}) is not part of the universe")
    if not (0 <= i < net.n and 0 <= j < net.n):
        raise NetworkDomainError(f"dyad ({i}, {j}) outside a {net.n}-node network")
    if not net.directed and i > j:
        i, j = j, i
    return i, j


def _require_observed(net: Network, what: str):
    if net.has_missing():
        raise NetworkDomainError(f"{what} is defined only for fully observed networks")


def density(net: Network) -> float:
    if net.n < 2:
        raise NetworkDomainError("density needs at least two nodes")
    _require_observed(net, "density")
    n = net.n
    e = net.edge_count()
    if net.directed:
        return e / (n * (n - 1))
    return 2 * e / (n * (n - 1))


def reciprocity(net: Network) -> float:
    _require_observed(net, "reciprocity")
    a = (net.adjacency == 1).astype(np.int64)
    total = a.sum()
    if total == 0:
        raise NetworkDomainError("reciprocity is undefined for a network without edges")
    return float((a * a.T).sum() / total)


def degrees(net: Network) -> tuple[np.ndarray, np.ndarray]:
    """(in_degree, out_degree) per node."""
    _require_observed(net, "degrees")
    a = (net.adjacency == 1).astype(np.int64)
    return a.sum(axis=0), a.sum(axis=1)


def apply_mask(net: Network, mask: DyadSet) -> Network:
    """Return a copy of ``net`` with the dyads of ``mask`` set to MISSING."""
    if len(mask) == 0:
        return net
    rows, cols = mask.rows, mask.cols
    if np.any(rows == cols) or rows.min() < 0 or cols.min() < 0 or max(rows.max(), cols.max()) >= net.n:
        raise NetworkDomainError("mask contains dyads outside the universe")
    if not net.directed and np.any(rows > cols):
        raise NetworkDomainError("undirected masks must use i < j")
    if np.any(net.adjacency[rows, cols] == MISSING):
        raise NetworkDomainError("mask contains dyads that are already MISSING")
    adj = net.adjacency.copy()
    adj[rows, cols] = MISSING
    if not net.directed:
        adj[cols, rows] = MISSING
    adj.flags.writeable = False
    return Network(adj, net.directed, net.node_labels)


def restore_mask(net: Network, mask: DyadSet) -> Network:
    """Undo :func:`apply_mask` using the true labels stored in ``mask``."""
    if len(mask) == 0:
        return net
    if np.any(net.adjacency[mask.rows, mask.cols] != MISSING):
        raise NetworkDomainError("can only restore dyads that are MISSING")
    adj = net.adjacency.copy()
    adj[mask.rows, mask.cols] = mask.labels
    if not net.directed:
        adj[mask.cols, mask.rows] = mask.labels
    adj.flags.writeable = False
    return Network(adj, net.directed, net.node_labels)
