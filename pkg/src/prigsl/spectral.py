"""Dense symmetric eigensolvers, matrix functions and Chebyshev heat filters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import InvalidScale, NonConvergence, NonFiniteValue


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """``m = eigvecs @ diag(eigvals) @ eigvecs.T`` with ascending eigvals."""

    eigvals: np.ndarray
    eigvecs: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigvals)

    def reconstruct(self) -> np.ndarray:
        return (self.eigvecs * self.eigvals) @ self.eigvecs.T


def _round_robin(n):
    """Yield n-1 (or n) rounds of disjoint index pairs covering all pairs once."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a >= 0 and b >= 0]
        if pairs:
            p, q = np.array(pairs).T
            yield p, q
        players = [players[0], players[-1]] + players[1:-1]


def jacobi_eigh(m, tol=None, max_sweeps=60):
    """Cyclic Jacobi eigenvalue iteration with round-robin pair ordering.

    Each round applies n/2 disjoint plane rotations at once. Iterates until
    the off-diagonal Frobenius norm drops below ``tol * ||m||_F``; ``tol``
    defaults to ``n`` machine epsilons.
    """
    a = np.array(m, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    if n < 2:
        return np.diag(a).copy(), v
    scale = np.linalg.norm(a)
    if scale == 0:
        return np.zeros(n), v
    if tol is None:
        tol = n * np.finfo(float).eps
    rounds = list(_round_robin(n))
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            return np.diag(a).copy(), v
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            safe = np.where(big, 1.0, theta)
            t = np.sign(safe) / (np.abs(safe) + np.sqrt(safe * safe + 1.0))
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            ap, aq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            ap, aq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            a[p, q] = a[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
    raise NonConvergence(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def eig_symmetric(m, method="lapack") -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix, eigenvalues ascending.

    The input is symmetrized as ``(m + m.T) / 2`` first. ``method`` selects
    LAPACK (``numpy.linalg.eigh``) or the in-package Jacobi solver.
    """
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise NonFiniteValue("matrix has non-finite entries")
    m = 0.5 * (m + m.T)
    if method == "lapack":
        try:
            vals, vecs = np.linalg.eigh(m)
        except np.linalg.LinAlgError as exc:
            raise NonConvergence(str(exc)) from exc
    elif method == "jacobi":
        vals, vecs = jacobi_eigh(m)
        order = np.argsort(vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return EigenDecomposition(vals, vecs)


def apply_spectral_function(ed: EigenDecomposition, f: Callable) -> np.ndarray:
    """``U diag(f(lambda)) U^T``; ``f`` is applied elementwise to the eigenvalues."""
    vals = np.asarray(f(ed.eigvals), dtype=float)
    if vals.shape == ():
        vals = np.full(ed.n, float(vals))
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("spectral function produced non-finite values")
    out = (ed.eigvecs * vals) @ ed.eigvecs.T
    return 0.5 * (out + out.T)


def lambda_max_estimate(m, iters=5000, tol=1e-6, seed=0) -> float:
    """Power-iteration upper bound on the spectral radius of a PSD matrix.

    Stops once ``||m x - theta x|| <= tol * theta`` and returns ``1.01 * theta``.
    The zero matrix returns 0.
    """
    m = np.asarray(m, dtype=float)
    if not np.any(m):
        return 0.0
    x = np.random.default_rng(seed).standard_normal(m.shape[0])
    x /= np.linalg.norm(x)
    for _ in range(iters):
        y = m @ x
        theta = float(x @ y)
        if theta > 0 and np.linalg.norm(y - theta * x) <= tol * theta:
            return 1.01 * theta
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        x = y / norm
    raise NonConvergence(f"power iteration did not converge in {iters} iterations")


@dataclass(frozen=True, eq=False)
class ChebyshevFilter:
    """Truncated Chebyshev expansion of a spectral filter on ``[0, lambda_max]``."""

    coefficients: np.ndarray
    lambda_max: float

    def __post_init__(self):
        if len(self.coefficients) < 2:
            raise ValueError("Chebyshev order K must be >= 1")
        if not self.lambda_max > 0:
            raise ValueError("lambda_max must be positive")

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @classmethod
    def fit(cls, f, order, lambda_max, n_points=2048) -> ChebyshevFilter:
        """Coefficients ``c_k = 2/pi * int_0^pi f(lam(cos t)) cos(k t) dt`` by the
        trapezoid rule on ``n_points + 1`` nodes."""
        theta = np.linspace(0.0, np.pi, n_points + 1)
        samples = f(0.5 * lambda_max * (np.cos(theta) + 1.0))
        w = np.full(n_points + 1, np.pi / n_points)
        w[[0, -1]] *= 0.5
        k = np.arange(order + 1)
        coeffs = (2.0 / np.pi) * (np.cos(np.outer(k, theta)) @ (w * samples))
        return cls(coeffs, float(lambda_max))

    def evaluate(self, lam):
        """Scalar evaluation of the truncated series (for diagnostics)."""
        x = 2.0 * np.asarray(lam, dtype=float) / self.lambda_max - 1.0
        return np.polynomial.chebyshev.chebval(x, self.coefficients) - 0.5 * self.coefficients[0]

    def apply(self, lap, signal=None):
        """Filter ``signal`` (identity when omitted) with the three-term recurrence."""
        lap = np.asarray(lap, dtype=float)
        n = lap.shape[0]
        x = np.eye(n) if signal is None else np.asarray(signal, dtype=float)
        shifted = (2.0 / self.lambda_max) * lap - np.eye(n)
        c = self.coefficients
        t_prev, t_cur = x, shifted @ x
        out = 0.5 * c[0] * t_prev + c[1] * t_cur
        for k in range(2, len(c)):
            t_prev, t_cur = t_cur, 2.0 * (shifted @ t_cur) - t_prev
            out = out + c[k] * t_cur
        return out


def chebyshev_heat_filter(lap, s, order=10, lambda_max=None) -> np.ndarray:
    """Chebyshev approximation of the heat kernel ``exp(-s L)``."""
    if not (np.isfinite(s) and s >= 0):
        raise InvalidScale(f"scale must be finite and >= 0, got {s}")
    if lambda_max is None:
        lambda_max = lambda_max_estimate(lap)
    filt = ChebyshevFilter.fit(lambda lam: np.exp(-s * lam), order, lambda_max)
    out = filt.apply(lap)
    return 0.5 * (out + out.T)
