"""scikit-learn style wrappers around the trainer and the role encoder."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import LabelEncoder
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DimensionMismatch, EmptyMask
from .gcn import GcnParams, gcn_forward
from .graph import Graph
from .learner import fuse, normalized_adjacency, structure_forward
from .roles import RoleConfig, default_scales, role_encode
from .trainer import TrainConfig, run_method

UNLABELED = -1


def check_adjacency(adjacency, n=None) -> np.ndarray:
    """Finite square float matrix, optionally with ``n`` rows."""
    adj = check_array(adjacency, dtype=float, ensure_2d=True)
    if adj.shape[0] != adj.shape[1]:
        raise DimensionMismatch(f"adjacency must be square, got {adj.shape}")
    if n is not None and adj.shape[0] != n:
        raise DimensionMismatch(f"adjacency has {adj.shape[0]} nodes, features have {n} rows")
    return adj


def predict_proba_graph(params, g: Graph, gamma: float, role_cfg: RoleConfig) -> np.ndarray:
    """Class probabilities for every node of ``g`` under trained ``params``.

    A plain :class:`GcnParams` runs on the normalized input graph. For the full
    model, ``z`` is the hidden layer of a GCN pass on the input graph, role
    encodings come from the input graph, and the learned structure is fused
    with weight ``gamma``.
    """
    base = fuse(None, g, 1.0)
    if isinstance(params, GcnParams):
        return gcn_forward(base, g.features, params).probs
    z = gcn_forward(base, g.features, params.gcn).hidden
    h = role_encode(g, role_cfg).matrix
    fused, _ = structure_forward(z, h, params.learner, normalized_adjacency(g), gamma)
    return gcn_forward(fused, g.features, params.gcn).probs


class PRIGSLClassifier(ClassifierMixin, BaseEstimator):
    """Transductive node classifier with entropy-regularized structure learning.

    ``fit`` takes node features ``X``, labels ``y`` (``-1`` marks unlabelled
    nodes) and the adjacency matrix. Labelled nodes are split into training
    and validation sets unless ``val_mask`` is given. ``method="gcn-baseline"``
    trains the plain GCN with the same loop.
    """

    def __init__(self, method="pri-gsl", epochs=200, patience=50, alpha=0.1, beta=2.0,
                 hidden=32, heads=4, proj_dim=None, epsilon=0.0, center_inputs=False,
                 gamma0=0.9, gamma_min=0.1, gamma_decay=0.99, freeze_gamma=None,
                 lr=0.01, weight_decay=5e-4, scales=None, n_scales=2, timepoints=None,
                 n_timepoints=4, t_max=25.0, chebyshev_order=10, use_exact=False,
                 role_refresh_interval=1, roles_from_original=False,
                 validation_fraction=0.2, random_state=0):
        self.method = method
        self.epochs = epochs
        self.patience = patience
        self.alpha = alpha
        self.beta = beta
        self.hidden = hidden
        self.heads = heads
        self.proj_dim = proj_dim
        self.epsilon = epsilon
        self.center_inputs = center_inputs
        self.gamma0 = gamma0
        self.gamma_min = gamma_min
        self.gamma_decay = gamma_decay
        self.freeze_gamma = freeze_gamma
        self.lr = lr
        self.weight_decay = weight_decay
        self.scales = scales
        self.n_scales = n_scales
        self.timepoints = timepoints
        self.n_timepoints = n_timepoints
        self.t_max = t_max
        self.chebyshev_order = chebyshev_order
        self.use_exact = use_exact
        self.role_refresh_interval = role_refresh_interval
        self.roles_from_original = roles_from_original
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        params = self.get_params()
        for key in ("method", "validation_fraction", "random_state"):
            params.pop(key)
        for key in ("scales", "timepoints"):
            if params[key] is not None:
                params[key] = tuple(params[key])
        return TrainConfig(seed=int(self.random_state or 0), **params)

    def _masks(self, labelled, y_enc, train_mask, val_mask):
        n = len(labelled)
        if train_mask is not None or val_mask is not None:
            if train_mask is None or val_mask is None:
                raise ValueError("pass both train_mask and val_mask or neither")
            train = np.asarray(train_mask, dtype=bool)
            val = np.asarray(val_mask, dtype=bool)
            if np.any((train | val) & ~labelled):
                raise ValueError("train/val masks select unlabelled nodes")
            return train, val
        idx = np.flatnonzero(labelled)
        if len(idx) < 2:
            raise EmptyMask("need at least two labelled nodes")
        strat = y_enc[idx] if np.min(np.bincount(y_enc[idx])) >= 2 else None
        tr, va = train_test_split(idx, test_size=self.validation_fraction,
                                  random_state=self.random_state, stratify=strat)
        train = np.zeros(n, dtype=bool)
        val = np.zeros(n, dtype=bool)
        train[tr] = True
        val[va] = True
        return train, val

    def fit(self, X, y, adjacency, train_mask=None, val_mask=None):
        X = check_array(X, dtype=float)
        adj = check_adjacency(adjacency, X.shape[0])
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise DimensionMismatch(f"y must have shape ({X.shape[0]},)")
        labelled = y != UNLABELED
        self._encoder = LabelEncoder().fit(y[labelled])
        self.classes_ = self._encoder.classes_
        y_enc = np.zeros(len(y), dtype=int)
        y_enc[labelled] = self._encoder.transform(y[labelled])
        train, val = self._masks(labelled, y_enc, train_mask, val_mask)
        test = ~(train | val) & labelled
        self.graph_ = Graph(adj, features=X, labels=y_enc, train_mask=train, val_mask=val,
                            test_mask=test)
        cfg = self._config()
        result = run_method(self.method, self.graph_, cfg)
        self.result_ = result
        self.history_ = result.records
        self.best_epoch_ = result.best_epoch
        self.gamma_ = result.records[result.best_epoch - 1].gamma
        self.fused_adjacency_ = result.refined.adjacency
        self.transduction_ = self.classes_[result.predictions]
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X=None, adjacency=None):
        """Probabilities on the training graph, or on a new ``(X, adjacency)`` pair."""
        check_is_fitted(self, "result_")
        if X is None and adjacency is None:
            return self.result_.probs
        if X is None or adjacency is None:
            raise ValueError("pass both X and adjacency for a new graph")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        g = Graph(check_adjacency(adjacency, X.shape[0]), features=X)
        return predict_proba_graph(self.result_.params, g, self.gamma_, self._config().role)

    def predict(self, X=None, adjacency=None):
        proba = self.predict_proba(X, adjacency)
        return self.classes_[np.argmax(proba, axis=1)]

    def score(self, X, y, adjacency=None, mask=None):
        """Accuracy of transductive predictions on the nodes selected by ``mask``.

        ``X`` is ignored unless ``adjacency`` is given; ``mask`` defaults to the
        labelled nodes of ``y``.
        """
        y = np.asarray(y)
        pred = self.predict(X, adjacency) if adjacency is not None else self.predict()
        sel = (y != UNLABELED) if mask is None else np.asarray(mask, dtype=bool)
        return float(np.mean(pred[sel] == y[sel]))


class RoleEncoder(TransformerMixin, BaseEstimator):
    """Heat-wavelet role encodings of an adjacency matrix.

    ``fit`` fixes the scales (spectrum-adaptive when ``scales`` is None) so that
    ``transform`` applies the same scales to any graph.
    """

    def __init__(self, scales=None, n_scales=2, timepoints=None, n_timepoints=4,
                 t_max=25.0, chebyshev_order=10, use_exact=False):
        self.scales = scales
        self.n_scales = n_scales
        self.timepoints = timepoints
        self.n_timepoints = n_timepoints
        self.t_max = t_max
        self.chebyshev_order = chebyshev_order
        self.use_exact = use_exact

    def _cfg(self, scales) -> RoleConfig:
        tp = None if self.timepoints is None else tuple(self.timepoints)
        return RoleConfig(tuple(scales), self.n_scales, tp, self.n_timepoints, self.t_max,
                          self.chebyshev_order, self.use_exact)

    def fit(self, adjacency, y=None):
        g = Graph(check_adjacency(adjacency))
        scales = self.scales if self.scales is not None else default_scales(g, self.n_scales)
        self.scales_ = tuple(float(s) for s in scales)
        self.timepoints_ = tuple(self._cfg(self.scales_).resolved_timepoints())
        self.n_features_in_ = g.n
        return self

    def transform(self, adjacency):
        check_is_fitted(self, "scales_")
        g = Graph(check_adjacency(adjacency))
        return role_encode(g, self._cfg(self.scales_)).matrix

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "scales_")
        return np.array([f"s{i}_t{j}_{part}" for i in range(len(self.scales_))
                         for j in range(len(self.timepoints_)) for part in ("re", "im")])
