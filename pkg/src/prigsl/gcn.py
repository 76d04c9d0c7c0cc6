"""Two-layer GCN with a hand-written reverse pass, cross-entropy and Adam."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyMask, MissingCache, NonFiniteGradient, ShapeMismatch

PROB_FLOOR = 1e-12


@dataclass
class GcnParams:
    w0: np.ndarray
    w1: np.ndarray

    @classmethod
    def init(cls, n_features, hidden, n_classes, rng=None) -> GcnParams:
        rng = np.random.default_rng(rng)
        b0 = 1.0 / np.sqrt(n_features)
        b1 = 1.0 / np.sqrt(hidden)
        return cls(rng.uniform(-b0, b0, size=(n_features, hidden)),
                   rng.uniform(-b1, b1, size=(hidden, n_classes)))

    def copy(self) -> GcnParams:
        return GcnParams(self.w0.copy(), self.w1.copy())


def propagation_matrix(a_fused):
    """Self-loops plus symmetric degree normalization: ``D~^-1/2 (A + I) D~^-1/2``."""
    a = np.asarray(a_fused, dtype=float)
    b = a + np.eye(a.shape[0])
    deg = b.sum(axis=1)
    q = 1.0 / np.sqrt(deg)
    return q[:, None] * b * q[None, :], {"b": b, "q": q}


def softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class GcnOutput:
    logits: np.ndarray
    hidden: np.ndarray
    probs: np.ndarray
    cache: dict


def gcn_forward(a_fused, x, p: GcnParams) -> GcnOutput:
    a_fused = np.asarray(a_fused, dtype=float)
    x = np.asarray(x, dtype=float)
    n = a_fused.shape[0]
    if a_fused.shape != (n, n) or x.shape[0] != n:
        raise ShapeMismatch(f"adjacency {a_fused.shape} does not match features {x.shape}")
    if x.shape[1] != p.w0.shape[0] or p.w0.shape[1] != p.w1.shape[0]:
        raise ShapeMismatch("weight shapes do not chain with the feature dimension")
    a_hat, norm_cache = propagation_matrix(a_fused)
    xw = x @ p.w0
    pre = a_hat @ xw
    hidden = np.maximum(pre, 0.0)
    hw = hidden @ p.w1
    logits = a_hat @ hw
    probs = softmax(logits)
    cache = dict(norm_cache, a_hat=a_hat, x=x, xw=xw, pre=pre, hidden=hidden, hw=hw,
                 w0=p.w0, w1=p.w1)
    return GcnOutput(logits, hidden, probs, cache)


def _check_mask(mask, n):
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (n,) or not mask.any():
        raise EmptyMask("mask selects no nodes")
    return mask


def cross_entropy(probs, labels, mask) -> float:
    mask = _check_mask(mask, probs.shape[0])
    idx = np.flatnonzero(mask)
    picked = probs[idx, np.asarray(labels)[idx]]
    return float(np.mean(-np.log(np.maximum(picked, PROB_FLOOR))))


def cross_entropy_grad(probs, labels, mask):
    """Gradient of the masked mean cross-entropy with respect to the logits."""
    mask = _check_mask(mask, probs.shape[0])
    idx = np.flatnonzero(mask)
    g = np.zeros_like(probs)
    g[idx] = probs[idx]
    g[idx, np.asarray(labels)[idx]] -= 1.0
    return g / len(idx)


def gcn_backward(grad_logits, cache):
    """Returns ``(grad_w0, grad_w1, grad_a_fused)``."""
    if not cache or "a_hat" not in cache:
        raise MissingCache("gcn_backward needs the cache from gcn_forward")
    a_hat = cache["a_hat"]
    g_w1 = (a_hat @ cache["hidden"]).T @ grad_logits
    g_hw = a_hat.T @ grad_logits
    g_ahat = grad_logits @ cache["hw"].T
    g_pre = (g_hw @ cache["w1"].T) * (cache["pre"] > 0)
    g_w0 = (a_hat @ cache["x"]).T @ g_pre
    g_ahat += g_pre @ cache["xw"].T

    b, q = cache["b"], cache["q"]
    g_b = g_ahat * q[:, None] * q[None, :]
    gbq = g_ahat * b
    g_q = gbq @ q + gbq.T @ q
    g_deg = g_q * (-0.5) * q**3
    g_b += g_deg[:, None]
    return g_w0, g_w1, g_b


def accuracy(probs, labels, mask) -> float:
    mask = _check_mask(mask, probs.shape[0])
    pred = np.argmax(probs, axis=1)
    return float(np.mean(pred[mask] == np.asarray(labels)[mask]))


class Adam:
    """Adam with bias correction and decoupled weight decay.

    Parameters are updated in place; moments are keyed by parameter name.
    """

    def __init__(self, lr=0.01, betas=(0.9, 0.999), eps=1e-8, weight_decay=5e-4):
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params: dict, grads: dict):
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradient(f"non-finite gradient for {name}")
        self.t += 1
        b1, b2 = self.betas
        for name, g in grads.items():
            p = params[name]
            m = self.m.get(name)
            if m is None:
                m = self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            m_hat = m / (1.0 - b1**self.t)
            v_hat = v / (1.0 - b2**self.t)
            p -= self.lr * self.weight_decay * p
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return params
