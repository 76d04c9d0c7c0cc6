"""Graph container, Laplacian and density matrix, synthetic generators, edge noise."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import (
    EmptyGraph,
    InvalidGraph,
    InvalidProbability,
    NotEnoughNonEdges,
)
from .spectral import EigenDecomposition, eig_symmetric

SYMMETRY_TOL = 1e-9


def _frozen(a, dtype=float):
    if a is None:
        return None
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted graph with dense adjacency.

    ``features`` defaults to the identity when omitted. Labels are integer
    class indices; the three masks are optional boolean vectors and must be
    pairwise disjoint when given.
    """

    adjacency: np.ndarray
    features: np.ndarray | None = None
    labels: np.ndarray | None = None
    train_mask: np.ndarray | None = None
    val_mask: np.ndarray | None = None
    test_mask: np.ndarray | None = None
    self_loops: bool = field(default=False)

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise InvalidGraph(f"adjacency must be square, got shape {adj.shape}")
        if not np.all(np.isfinite(adj)):
            raise InvalidGraph("adjacency contains non-finite entries")
        if np.any(adj < 0):
            raise InvalidGraph("adjacency entries must be nonnegative")
        if adj.size and np.max(np.abs(adj - adj.T)) > SYMMETRY_TOL:
            raise InvalidGraph("adjacency is not symmetric")
        if not self.self_loops and np.any(np.diag(adj) != 0):
            raise InvalidGraph("adjacency has self-loops but self_loops=False")
        n = adj.shape[0]
        object.__setattr__(self, "adjacency", _frozen(adj))

        x = np.eye(n) if self.features is None else np.asarray(self.features, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[0] != n:
            raise InvalidGraph(f"features have {x.shape[0]} rows, graph has {n} nodes")
        object.__setattr__(self, "features", _frozen(x))

        if self.labels is not None:
            y = np.asarray(self.labels)
            if y.shape != (n,):
                raise InvalidGraph(f"labels must have shape ({n},)")
            object.__setattr__(self, "labels", _frozen(y, dtype=np.int64))

        masks = []
        for name in ("train_mask", "val_mask", "test_mask"):
            m = getattr(self, name)
            if m is None:
                continue
            m = np.asarray(m, dtype=bool)
            if m.shape != (n,):
                raise InvalidGraph(f"{name} must have shape ({n},)")
            object.__setattr__(self, name, _frozen(m, dtype=bool))
            masks.append(m)
        if len(masks) == 3 and np.any(np.sum(masks, axis=0) > 1):
            raise InvalidGraph("train/val/test masks overlap")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency, k=1)))

    @property
    def n_classes(self) -> int:
        if self.labels is None:
            return 0
        return int(self.labels.max()) + 1

    @property
    def has_splits(self) -> bool:
        return all(
            getattr(self, k) is not None for k in ("train_mask", "val_mask", "test_mask")
        )

    def edges(self):
        """Return ``(u, v, w)`` arrays of the upper-triangle edges, ``u < v``."""
        u, v = np.nonzero(np.triu(self.adjacency, k=1))
        return u, v, self.adjacency[u, v]

    def with_adjacency(self, adjacency) -> Graph:
        return replace(self, adjacency=adjacency)

    def with_masks(self, train, val, test) -> Graph:
        return replace(self, train_mask=train, val_mask=val, test_mask=test)

    def permute(self, perm) -> Graph:
        """Relabel nodes so that new node ``i`` is old node ``perm[i]``."""
        perm = np.asarray(perm)
        sub = lambda a: None if a is None else a[perm]  # noqa: E731
        return Graph(
            self.adjacency[np.ix_(perm, perm)],
            features=self.features[perm],
            labels=sub(self.labels),
            train_mask=sub(self.train_mask),
            val_mask=sub(self.val_mask),
            test_mask=sub(self.test_mask),
            self_loops=self.self_loops,
        )


def _as_adjacency(g) -> np.ndarray:
    return g.adjacency if isinstance(g, Graph) else np.asarray(g, dtype=float)


def laplacian(g) -> np.ndarray:
    """Combinatorial Laplacian ``D - A``; accepts a Graph or a raw adjacency."""
    adj = _as_adjacency(g)
    lap = -adj.copy()
    # self-loops cancel in D - A
    np.fill_diagonal(lap, adj.sum(axis=1) - np.diag(adj))
    return lap


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Unit-trace PSD matrix with its eigendecomposition.

    ``eigvals`` are sorted nonincreasingly and clamped at zero.
    ``trace_scale`` records the trace of the matrix ``rho`` was normalized
    from (1 for matrices built directly).
    """

    rho: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    trace_scale: float = 1.0

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def from_matrix(cls, rho, trace_scale=1.0, method="lapack") -> DensityMatrix:
        rho = np.asarray(rho, dtype=float)
        ed = eig_symmetric(rho, method=method)
        vals = np.clip(ed.eigvals[::-1], 0.0, None)
        vecs = ed.eigvecs[:, ::-1]
        return cls(_frozen(rho), _frozen(vals), _frozen(vecs), float(trace_scale))

    def laplacian_eigen(self) -> EigenDecomposition:
        """Eigendecomposition of the unnormalized Laplacian, ascending."""
        return EigenDecomposition(
            self.eigvals[::-1] * self.trace_scale, self.eigvecs[:, ::-1]
        )


def density_matrix(g, method="lapack") -> DensityMatrix:
    """``L / tr(L)`` for a Graph or a symmetric nonnegative adjacency."""
    lap = laplacian(g)
    tr = float(np.trace(lap))
    if not tr > 0:
        raise EmptyGraph("graph has no edges; density matrix undefined")
    rho = lap / tr
    rho = 0.5 * (rho + rho.T)
    return DensityMatrix.from_matrix(rho, trace_scale=tr, method=method)


# ---------------------------------------------------------------------------
# generators


def from_edges(n, edges, weights=None, **kwargs) -> Graph:
    adj = np.zeros((n, n))
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    w = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=float)
    adj[edges[:, 0], edges[:, 1]] = w
    adj[edges[:, 1], edges[:, 0]] = w
    return Graph(adj, **kwargs)


def complete_graph(n, **kwargs) -> Graph:
    return Graph(np.ones((n, n)) - np.eye(n), **kwargs)


def path_graph(n, **kwargs) -> Graph:
    return from_edges(n, [(i, i + 1) for i in range(n - 1)], **kwargs)


def cycle_graph(n, **kwargs) -> Graph:
    return from_edges(n, [(i, (i + 1) % n) for i in range(n)], **kwargs)


def star_graph(n_leaves, **kwargs) -> Graph:
    return from_edges(n_leaves + 1, [(0, i) for i in range(1, n_leaves + 1)], **kwargs)


def barbell_graph(clique, path, **kwargs) -> Graph:
    """Two ``clique``-cliques joined by a path of ``path`` extra nodes.

    Node layout: ``0..clique-1`` first clique (hub ``clique-1``), then the
    path nodes, then the second clique (hub is its first node).
    """
    n = 2 * clique + path
    edges = []
    for offset in (0, clique + path):
        edges += [(offset + i, offset + j) for i in range(clique) for j in range(i + 1, clique)]
    chain = [clique - 1] + list(range(clique, clique + path)) + [clique + path]
    edges += list(zip(chain[:-1], chain[1:]))
    return from_edges(n, edges, **kwargs)


def random_graph(n, p, seed=0, weighted=False) -> Graph:
    """Erdős–Rényi graph, optionally with uniform(0.5, 1.5) weights."""
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, k=1).astype(float)
    if weighted:
        upper *= rng.uniform(0.5, 1.5, size=(n, n))
    return Graph(upper + upper.T)


def split_masks(labels, train_per_class=20, val_per_class=30, seed=0):
    """Per-class random train/val split; everything else is test.

    Classes too small for the requested counts get at most 20% train and 30%
    validation nodes so the test split never empties.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    n = len(labels)
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        n_tr = max(1, min(train_per_class, len(idx) // 5))
        n_va = max(1, min(val_per_class, (3 * len(idx)) // 10))
        train[idx[:n_tr]] = True
        val[idx[n_tr:n_tr + n_va]] = True
    return train, val, ~(train | val)


def sbm_generate(blocks, p_in, p_out, feature_dim=16, seed=0, signal=1.0,
                 train_per_class=20, val_per_class=30) -> Graph:
    """Stochastic block model with Gaussian class-mean features.

    Node features are ``signal * e_c + N(0, I)`` where ``e_c`` is the one-hot
    direction of the node's block, so ``feature_dim`` must be at least the
    number of blocks.
    """
    if not (0.0 <= p_out <= p_in <= 1.0):
        raise InvalidProbability(f"need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}")
    blocks = [int(b) for b in blocks]
    if feature_dim < len(blocks):
        raise InvalidGraph("feature_dim must be >= number of blocks")
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(len(blocks)), blocks)
    n = len(labels)
    prob = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, k=1).astype(float)
    adj = upper + upper.T

    means = np.zeros((len(blocks), feature_dim))
    means[np.arange(len(blocks)), np.arange(len(blocks))] = signal
    features = means[labels] + rng.standard_normal((n, feature_dim))

    train, val, test = split_masks(labels, train_per_class, val_per_class,
                                   seed=int(rng.integers(2**31)))
    return Graph(adj, features=features, labels=labels,
                 train_mask=train, val_mask=val, test_mask=test)


# ---------------------------------------------------------------------------
# edge noise


def perturb_edges(g: Graph, mode, fraction, seed=0, return_edits=False):
    """Randomly add or delete ``round(fraction * |E|)`` edges.

    Added edges get weight 1. With ``return_edits`` the list of
    ``(u, v, old_weight, new_weight)`` changes is returned as well; pass it
    to :func:`revert_edits` to undo the perturbation.
    """
    if fraction < 0:
        raise ValueError("fraction must be nonnegative")
    if mode not in ("add", "delete"):
        raise ValueError(f"mode must be 'add' or 'delete', got {mode!r}")
    if mode == "delete" and fraction > 1:
        raise ValueError("cannot delete more than all edges")
    rng = np.random.default_rng(seed)
    adj = np.array(g.adjacency)
    k = int(round(fraction * g.n_edges))
    iu, ju = np.triu_indices(g.n, k=1)
    present = adj[iu, ju] != 0
    if mode == "add":
        pool = np.flatnonzero(~present)
        if k > len(pool):
            raise NotEnoughNonEdges(f"requested {k} new edges, only {len(pool)} non-edges")
    else:
        pool = np.flatnonzero(present)
    chosen = np.sort(rng.choice(pool, size=k, replace=False)) if k else np.array([], dtype=int)
    edits = []
    for idx in chosen:
        u, v = int(iu[idx]), int(ju[idx])
        old = float(adj[u, v])
        new = 1.0 if mode == "add" else 0.0
        adj[u, v] = adj[v, u] = new
        edits.append((u, v, old, new))
    out = g.with_adjacency(adj)
    return (out, edits) if return_edits else out


def revert_edits(g: Graph, edits) -> Graph:
    adj = np.array(g.adjacency)
    for u, v, old, _ in reversed(edits):
        adj[u, v] = adj[v, u] = old
    return g.with_adjacency(adj)
