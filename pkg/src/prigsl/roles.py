"""Structural role encodings from heat-wavelet characteristic functions.

For each scale ``s`` the heat wavelet matrix ``Psi_s = exp(-s L)`` is built
(exactly or by Chebyshev expansion). Column ``a`` holds the diffusion
pattern centred at node ``a``; the empirical characteristic function
``mean_b exp(-i * Psi_s[b, a] * t)`` is sampled at ``T`` times and its real
and imaginary parts are concatenated across scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyGraph
from .graph import Graph, laplacian
from .spectral import (
    EigenDecomposition,
    apply_spectral_function,
    chebyshev_heat_filter,
    eig_symmetric,
    lambda_max_estimate,
)

FALLBACK_SCALES = (0.5, 1.0)


@dataclass(frozen=True)
class RoleConfig:
    """Wavelet scales and sampling times.

    ``scales=None`` picks ``n_scales`` spectrum-adaptive scales per graph
    (:func:`default_scales`); ``timepoints=None`` uses
    ``t_j = j * t_max / n_timepoints`` for ``j = 1..n_timepoints``.
    """

    scales: tuple | None = None
    n_scales: int = 2
    timepoints: tuple | None = None
    n_timepoints: int = 4
    t_max: float = 25.0
    chebyshev_order: int = 10
    use_exact: bool = False

    def __post_init__(self):
        if self.scales is not None:
            sc = tuple(float(s) for s in self.scales)
            if not sc or any(s < 0 for s in sc) or list(sc) != sorted(sc):
                raise ValueError("scales: must be a nonempty ascending list of nonnegative reals")
            object.__setattr__(self, "scales", sc)
        elif self.n_scales < 1:
            raise ValueError("n_scales: must be >= 1")
        if self.timepoints is not None:
            tp = tuple(float(t) for t in self.timepoints)
            if not tp or any(t <= 0 for t in tp) or list(tp) != sorted(tp):
                raise ValueError("timepoints: must be a nonempty ascending list of positive reals")
            object.__setattr__(self, "timepoints", tp)
        elif self.n_timepoints < 1 or self.t_max <= 0:
            raise ValueError("n_timepoints: must be >= 1 and t_max > 0")
        if self.chebyshev_order < 1:
            raise ValueError("chebyshev_order: must be >= 1")

    def resolved_timepoints(self) -> np.ndarray:
        if self.timepoints is not None:
            return np.array(self.timepoints)
        T = self.n_timepoints
        return np.arange(1, T + 1) * (self.t_max / T)

    @property
    def width(self) -> int:
        """Encoding width ``2 * T * M``."""
        m = len(self.scales) if self.scales is not None else self.n_scales
        return 2 * len(self.resolved_timepoints()) * m


@dataclass(frozen=True, eq=False)
class RoleEncoding:
    """Encoding matrix plus the scales and times it was sampled at.

    Columns are ordered scale-major, then timepoint, then ``(Re, Im)``.
    """

    matrix: np.ndarray
    scales: tuple
    timepoints: tuple


def _adjacency(g):
    return g.adjacency if isinstance(g, Graph) else np.asarray(g, dtype=float)


def _laplacian_eigen(g, eig):
    if eig is not None:
        return eig
    ed = eig_symmetric(laplacian(_adjacency(g)))
    return EigenDecomposition(np.clip(ed.eigvals, 0.0, None), ed.eigvecs)


def default_scales(g, M=2, eig: EigenDecomposition | None = None):
    """Geometric scales between ``-log(0.95)`` and ``-log(0.85)`` over ``sqrt(l2 * lN)``.

    Falls back to ``0.5`` (M=1) or ``geomspace(0.5, 1.0, M)`` when the
    Fiedler value is ``<= 1e-9``.
    """
    eig = _laplacian_eigen(g, eig)
    lam = np.sort(eig.eigvals)
    if len(lam) < 2 or lam[1] <= 1e-9:
        if M == 1:
            return [FALLBACK_SCALES[0]]
        return list(np.geomspace(*FALLBACK_SCALES, M))
    root = np.sqrt(lam[1] * lam[-1])
    s_min = -np.log(0.95) / root
    s_max = -np.log(0.85) / root
    if M == 1:
        return [float(np.sqrt(s_min * s_max))]
    return [float(s) for s in np.geomspace(s_min, s_max, M)]


def wavelet_basis(g, s, cfg: RoleConfig = RoleConfig(), eig=None, lambda_max=None):
    """Heat wavelet matrix ``exp(-s L)``; column ``a`` is centred at node ``a``.

    ``eig`` (the Laplacian eigendecomposition) is used for the exact path and
    to bound the spectrum for the Chebyshev path when given.
    """
    adj = _adjacency(g)
    lap = laplacian(adj)
    if not np.trace(lap) > 0:
        raise EmptyGraph("wavelets need at least one edge")
    if cfg.use_exact:
        eig = _laplacian_eigen(adj, eig)
        return apply_spectral_function(eig, lambda lam: np.exp(-s * np.clip(lam, 0.0, None)))
    if lambda_max is None:
        if eig is not None:
            lambda_max = 1.01 * float(np.max(eig.eigvals))
        else:
            lambda_max = lambda_max_estimate(lap)
    return chebyshev_heat_filter(lap, s, cfg.chebyshev_order, lambda_max)


def characteristic_samples(wavelet_column, timepoints) -> np.ndarray:
    """``[Re(phi(t1)), Im(phi(t1)), ...]`` with ``phi(t) = mean(exp(-i * x * t))``."""
    x = np.asarray(wavelet_column, dtype=float)
    t = np.asarray(timepoints, dtype=float)
    arg = np.outer(t, x)
    out = np.empty(2 * len(t))
    out[0::2] = np.cos(arg).mean(axis=1)
    out[1::2] = -np.sin(arg).mean(axis=1)
    return out


def _characteristic_matrix(psi, timepoints):
    # all columns at once: (n_coeff, n_nodes, T) -> (n_nodes, 2T)
    arg = psi[:, :, None] * timepoints[None, None, :]
    n, T = psi.shape[1], len(timepoints)
    out = np.empty((n, 2 * T))
    out[:, 0::2] = np.cos(arg).mean(axis=0)
    out[:, 1::2] = -np.sin(arg).mean(axis=0)
    return out


def role_encode(g, cfg: RoleConfig = RoleConfig(), eig=None) -> RoleEncoding:
    """Multi-scale role encodings, one row per node (width ``2 * T * M``)."""
    adj = _adjacency(g)
    if not np.any(np.triu(adj, k=1) > 0):
        raise EmptyGraph("role encodings need at least one edge")
    if cfg.scales is None or cfg.use_exact:
        eig = _laplacian_eigen(adj, eig)
    scales = cfg.scales if cfg.scales is not None else tuple(default_scales(adj, cfg.n_scales, eig))
    times = cfg.resolved_timepoints()
    lambda_max = None
    if not cfg.use_exact:
        lambda_max = (1.01 * float(np.max(eig.eigvals)) if eig is not None
                      else lambda_max_estimate(laplacian(adj)))
        if lambda_max <= 0:
            raise EmptyGraph("Laplacian has no positive spectrum")
    blocks = [
        _characteristic_matrix(wavelet_basis(adj, s, cfg, eig=eig, lambda_max=lambda_max), times)
        for s in scales
    ]
    return RoleEncoding(np.hstack(blocks), tuple(scales), tuple(times))
