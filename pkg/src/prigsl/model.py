"""Composite objective: structure learner -> fusion -> GCN, plus PRI regularizer.

``forward_total`` evaluates ``L = L_cls + alpha * L_PRI`` for one training
step and keeps every intermediate needed by ``backward_total``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import MissingCache
from .gcn import GcnParams, cross_entropy, cross_entropy_grad, gcn_backward, gcn_forward
from .graph import DensityMatrix, density_matrix
from .learner import LearnerParams, learner_backward, structure_forward
from .measures import (
    PriConfig,
    mixture,
    pri_loss_grad_adjacency,
    vne,
)


@dataclass
class ModelParams:
    gcn: GcnParams
    learner: LearnerParams

    def as_dict(self) -> dict:
        """Name -> array views shared with this object (for in-place updates)."""
        out = {"w0": self.gcn.w0, "w1": self.gcn.w1}
        out.update({f"head{i}": w for i, w in enumerate(self.learner.heads)})
        return out

    def copy(self) -> ModelParams:
        lp = self.learner
        return ModelParams(
            self.gcn.copy(),
            LearnerParams([w.copy() for w in lp.heads], lp.epsilon, lp.gamma0,
                          lp.gamma_min, lp.gamma_decay, lp.center),
        )


@dataclass
class StepState:
    loss: float
    cls_loss: float
    pri_objective: float          # constant-free form that is optimized
    vne: float                    # H_vN of the fused graph
    qjs: float                    # D_QJS(fused || original)
    fused: np.ndarray
    dm_fused: DensityMatrix
    probs: np.ndarray
    hidden: np.ndarray
    caches: dict = field(default_factory=dict)

    @property
    def pri_loss(self) -> float:
        """``H_vN(fused) + beta * D_QJS`` as reported in training logs."""
        return self.caches["pri_report"]


def forward_total(params: ModelParams, z, h, gamma, features, labels, train_mask,
                  normalized_orig, dm_orig: DensityMatrix, pri: PriConfig) -> StepState:
    fused, lcache = structure_forward(z, h, params.learner, normalized_orig, gamma)
    out = gcn_forward(fused, features, params.gcn)
    cls_loss = cross_entropy(out.probs, labels, train_mask)

    dm_fused = density_matrix(fused)
    mix = mixture(dm_fused, dm_orig)
    h_fused = vne(dm_fused, pri.eig_floor)
    h_orig = vne(dm_orig, pri.eig_floor)
    h_mix = vne(mix, pri.eig_floor)
    qjs = min(max(h_mix - 0.5 * h_fused - 0.5 * h_orig, 0.0), float(np.log(2.0)))
    pri_objective = pri.beta * h_mix + 0.5 * (2.0 - pri.beta) * h_fused
    pri_report = h_fused + pri.beta * qjs
    loss = cls_loss + pri.alpha * pri_report

    caches = {"learner": lcache, "gcn": out.cache, "mix": mix, "pri_report": pri_report,
              "labels": labels, "train_mask": train_mask, "dm_orig": dm_orig}
    return StepState(loss, cls_loss, pri_objective, h_fused, qjs, fused, dm_fused,
                     out.probs, out.hidden, caches)


def backward_total(state: StepState, pri: PriConfig) -> dict:
    """Gradients of ``L_cls + alpha * L_PRI`` keyed like :meth:`ModelParams.as_dict`."""
    caches = state.caches
    if not caches or "learner" not in caches or "gcn" not in caches:
        raise MissingCache("backward_total needs the state returned by forward_total")
    g_logits = cross_entropy_grad(state.probs, caches["labels"], caches["train_mask"])
    g_w0, g_w1, g_fused = gcn_backward(g_logits, caches["gcn"])
    if pri.alpha > 0:
        _, g_pri = pri_loss_grad_adjacency(state.fused, caches["dm_orig"], pri,
                                           dm_new=state.dm_fused, mix=caches["mix"])
        g_fused = g_fused + pri.alpha * g_pri
    head_grads, _ = learner_backward(g_fused, caches["learner"])
    grads = {"w0": g_w0, "w1": g_w1}
    grads.update({f"head{i}": g for i, g in enumerate(head_grads)})
    return grads
