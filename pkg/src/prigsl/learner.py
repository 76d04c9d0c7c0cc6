"""Multi-head cosine structure learner and dynamic fusion with the input graph."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import MissingCache, ZeroNormRow
from .graph import Graph

NORM_EPS = 1e-12


@dataclass
class LearnerParams:
    heads: list = field(default_factory=list)
    epsilon: float = 0.0
    gamma0: float = 0.9
    gamma_min: float = 0.1
    gamma_decay: float = 0.99
    center: bool = False

    def __post_init__(self):
        if not self.heads:
            raise ValueError("need at least one head")
        if not all(np.all(np.isfinite(w)) for w in self.heads):
            raise ValueError("head weights must be finite")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if not 0.0 <= self.gamma_min <= self.gamma0 <= 1.0:
            raise ValueError("need 0 <= gamma_min <= gamma0 <= 1")
        if not 0.0 < self.gamma_decay <= 1.0:
            raise ValueError("gamma_decay must lie in (0, 1]")

    @classmethod
    def init(cls, in_dim, proj_dim, n_heads=4, rng=None, **schedule) -> LearnerParams:
        rng = np.random.default_rng(rng)
        bound = 1.0 / np.sqrt(in_dim)
        heads = [rng.uniform(-bound, bound, size=(in_dim, proj_dim)) for _ in range(n_heads)]
        return cls(heads=heads, **schedule)


def gamma_schedule(epoch, params: LearnerParams) -> float:
    """``max(gamma_min, gamma0 * gamma_decay ** (epoch - 1))`` for ``epoch >= 1``."""
    if epoch < 1:
        raise ValueError("epochs are numbered from 1")
    return max(params.gamma_min, params.gamma0 * params.gamma_decay ** (epoch - 1))


def normalized_adjacency(g) -> np.ndarray:
    """``D^-1/2 A D^-1/2`` with zero rows for isolated nodes."""
    adj = g.adjacency if isinstance(g, Graph) else np.asarray(g, dtype=float)
    deg = adj.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    return inv_sqrt[:, None] * adj * inv_sqrt[None, :]


def row_normalize(m) -> np.ndarray:
    sums = m.sum(axis=1)
    out = np.zeros_like(m)
    nz = sums > 0
    out[nz] = m[nz] / sums[nz, None]
    return out


def role_aware_adjacency(z, h, params: LearnerParams, return_cache=False):
    """Head-averaged cosine similarity of projected ``[z | h]`` rows.

    Negative similarities are rectified to zero, values below ``epsilon`` are
    dropped and the diagonal is cleared. With ``params.center`` the
    concatenated rows are centred across nodes before projection, so that a
    component shared by every node does not push all cosines towards one.
    """
    z = np.asarray(z, dtype=float)
    h = np.asarray(h, dtype=float)
    if z.shape[0] != h.shape[0]:
        raise ValueError(f"z has {z.shape[0]} rows but h has {h.shape[0]}")
    x = np.hstack([z, h])
    if params.center:
        x = x - x.mean(axis=0)
    n = x.shape[0]
    normed, norms = [], []
    cos = np.zeros((n, n))
    for w in params.heads:
        proj = x @ w
        r = np.linalg.norm(proj, axis=1)
        if np.any(r < NORM_EPS):
            raise ZeroNormRow(f"projected row {int(np.argmin(r))} has zero norm")
        u = proj / r[:, None]
        cos += u @ u.T
        normed.append(u)
        norms.append(r)
    cos /= len(params.heads)
    keep = (cos > 0) & (cos >= params.epsilon)
    np.fill_diagonal(keep, False)
    a_r = np.where(keep, cos, 0.0)
    if np.max(np.abs(a_r - a_r.T), initial=0.0) > 1e-9:
        raise AssertionError("learned adjacency lost symmetry")
    if not return_cache:
        return a_r
    cache = {"x": x, "z_dim": z.shape[1], "center": params.center, "normed": normed, "norms": norms,
             "keep": keep, "a_r": a_r, "heads": params.heads}
    return a_r, cache


def fuse(a_learned, g_orig, gamma, normalized_orig=None):
    """``gamma * D^-1/2 A D^-1/2 + (1 - gamma) * RowNorm(a_learned)``, symmetrized,
    zero diagonal. ``a_learned=None`` stands for an all-zero learned matrix."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    s = normalized_adjacency(g_orig) if normalized_orig is None else normalized_orig
    q = np.zeros_like(s) if a_learned is None else row_normalize(np.asarray(a_learned, dtype=float))
    blend = gamma * s + (1.0 - gamma) * q
    fused = 0.5 * (blend + blend.T)
    np.fill_diagonal(fused, 0.0)
    return fused


def structure_forward(z, h, params: LearnerParams, normalized_orig, gamma):
    """Learner plus fusion; returns the fused matrix and the backward cache."""
    a_r, cache = role_aware_adjacency(z, h, params, return_cache=True)
    fused = fuse(a_r, None, gamma, normalized_orig=normalized_orig)
    cache.update(gamma=gamma, row_sums=a_r.sum(axis=1), rownorm=row_normalize(a_r))
    return fused, cache


def learner_backward(grad_fused, cache):
    """Reverse-mode pass from ``d loss / d fused`` to the head weights and ``z``.

    Returns ``(head_grads, z_grad)``. Masked (rectified, thresholded,
    diagonal) entries pass no gradient.
    """
    required = ("x", "normed", "norms", "keep", "a_r", "heads", "gamma", "row_sums", "rownorm")
    if cache is None or any(k not in cache for k in required):
        raise MissingCache("learner_backward needs the cache from structure_forward")
    g = np.asarray(grad_fused, dtype=float)
    # fused = sym(blend) with cleared diagonal
    g_blend = 0.5 * (g + g.T)
    np.fill_diagonal(g_blend, 0.0)
    g_q = (1.0 - cache["gamma"]) * g_blend
    # RowNorm quotient rule; zero rows carry no gradient
    sums, q = cache["row_sums"], cache["rownorm"]
    nz = sums > 0
    g_a = np.zeros_like(g_q)
    g_a[nz] = (g_q[nz] - np.sum(g_q[nz] * q[nz], axis=1, keepdims=True)) / sums[nz, None]
    g_cos = np.where(cache["keep"], g_a, 0.0)
    heads = cache["heads"]
    g_cos_sym = (g_cos + g_cos.T) / len(heads)
    x = cache["x"]
    head_grads = []
    g_x = np.zeros_like(x)
    for w, u, r in zip(heads, cache["normed"], cache["norms"]):
        g_u = g_cos_sym @ u
        g_proj = (g_u - u * np.sum(u * g_u, axis=1, keepdims=True)) / r[:, None]
        head_grads.append(x.T @ g_proj)
        g_x += g_proj @ w.T
    if cache.get("center"):
        g_x -= g_x.mean(axis=0)
    return head_grads, g_x[:, : cache["z_dim"]]
