"""Von Neumann entropy, quantum Jensen-Shannon divergence and the PRI loss.

All logarithms are natural. The redundancy/distortion objective optimized
here is the constant-free form

    beta * H((rho_new + rho_orig) / 2) + (2 - beta) / 2 * H(rho_new)

which differs from ``H(rho_new) + beta * QJS(rho_new, rho_orig)`` only by
``beta / 2 * H(rho_orig)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, EmptyGraph
from .graph import DensityMatrix, density_matrix, laplacian

LOG2 = float(np.log(2.0))


@dataclass(frozen=True)
class PriConfig:
    alpha: float = 1.0
    beta: float = 1.0
    eig_floor: float = 1e-12

    def __post_init__(self):
        for key in ("alpha", "beta"):
            if not getattr(self, key) >= 0:
                raise ValueError(f"{key}: must be nonnegative")
        if not (0 < self.eig_floor < 1e-6):
            raise ValueError("eig_floor: must lie in (0, 1e-6)")


def entropy_from_eigvals(eigvals, eig_floor=1e-12) -> float:
    lam = np.asarray(eigvals, dtype=float)
    lam = lam[lam >= eig_floor]
    return float(-np.sum(lam * np.log(lam)))


def vne(dm: DensityMatrix, eig_floor=1e-12) -> float:
    """``-sum(lam * log(lam))`` over eigenvalues at or above ``eig_floor``."""
    h = entropy_from_eigvals(dm.eigvals, eig_floor)
    return min(max(h, 0.0), float(np.log(dm.n)))


def mixture(dm_a: DensityMatrix, dm_b: DensityMatrix) -> DensityMatrix:
    if dm_a.n != dm_b.n:
        raise DimensionMismatch(f"density matrices have sizes {dm_a.n} and {dm_b.n}")
    return DensityMatrix.from_matrix(0.5 * (dm_a.rho + dm_b.rho))


def qjs_divergence(dm_a: DensityMatrix, dm_b: DensityMatrix, eig_floor=1e-12,
                   bits=False) -> float:
    """Quantum Jensen-Shannon divergence, clamped to ``[0, log 2]``.

    With ``bits=True`` the value is reported in base 2, i.e. in ``[0, 1]``.
    """
    mix = mixture(dm_a, dm_b)
    d = (vne(mix, eig_floor)
         - 0.5 * vne(dm_a, eig_floor)
         - 0.5 * vne(dm_b, eig_floor))
    d = min(max(d, 0.0), LOG2)
    return d / LOG2 if bits else d


def centrality(dm: DensityMatrix, eig_floor=1e-12) -> float:
    """Quantum relative entropy to the maximally mixed state, ``log N - H``."""
    return float(np.log(dm.n)) - vne(dm, eig_floor)


def pri_loss(dm_new: DensityMatrix, dm_orig: DensityMatrix, cfg: PriConfig) -> float:
    mix = mixture(dm_new, dm_orig)
    return (cfg.beta * vne(mix, cfg.eig_floor)
            + 0.5 * (2.0 - cfg.beta) * vne(dm_new, cfg.eig_floor))


def _entropy_grad_rho(dm: DensityMatrix, eig_floor) -> np.ndarray:
    # dH/drho = -(log rho + I); trace-function identity, eigenvalue derivatives only
    logs = np.log(np.maximum(dm.eigvals, eig_floor))
    return -(dm.eigvecs * (logs + 1.0)) @ dm.eigvecs.T


def pri_loss_grad_adjacency(adj_new, dm_orig: DensityMatrix, cfg: PriConfig,
                            dm_new: DensityMatrix | None = None,
                            mix: DensityMatrix | None = None):
    """Gradient of :func:`pri_loss` with respect to the learned adjacency.

    The returned matrix ``G`` is symmetric with zero diagonal and satisfies
    ``d/dt loss(A + t V) = sum(G * V)`` for every symmetric direction ``V``.
    Perturbing the pair ``(i, j), (j, i)`` by ``h`` therefore changes the loss
    by ``2 * h * G[i, j]`` to first order.

    Returns ``(loss, gradient)``. Precomputed ``dm_new`` and ``mix`` (the
    mixture state) may be passed to skip their eigendecompositions.
    """
    adj_new = np.asarray(adj_new, dtype=float)
    if dm_new is None:
        dm_new = density_matrix(adj_new)
    if dm_new.n != dm_orig.n:
        raise DimensionMismatch(f"graphs have {dm_new.n} and {dm_orig.n} nodes")
    lap = laplacian(adj_new)
    tau = float(np.trace(lap))
    if not tau > 0:
        raise EmptyGraph("learned adjacency has no positive weight")

    if mix is None:
        mix = mixture(dm_new, dm_orig)
    loss = (cfg.beta * vne(mix, cfg.eig_floor)
            + 0.5 * (2.0 - cfg.beta) * vne(dm_new, cfg.eig_floor))
    # mixture depends on rho_new with factor 1/2
    g_rho = (0.5 * cfg.beta * _entropy_grad_rho(mix, cfg.eig_floor)
             + 0.5 * (2.0 - cfg.beta) * _entropy_grad_rho(dm_new, cfg.eig_floor))

    # rho = L / tr(L), L = diag(A 1) - A, tr(L) = sum of off-diagonal A
    g_lap = g_rho / tau
    g_tau = -float(np.sum(g_rho * lap)) / tau**2
    diag = np.diag(g_lap)
    grad = diag[:, None] - g_lap + g_tau
    grad = 0.5 * (grad + grad.T)
    np.fill_diagonal(grad, 0.0)
    return loss, grad
