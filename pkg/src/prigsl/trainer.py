"""Training loop, evaluation, random-split and edge-noise experiment drivers."""

from __future__ import annotations

import dataclasses
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DivergedTraining, EmptyMask, InvalidGraph
from .gcn import Adam, GcnParams, accuracy, cross_entropy, gcn_backward, cross_entropy_grad, gcn_forward
from .graph import Graph, density_matrix, perturb_edges, split_masks
from .learner import LearnerParams, fuse, gamma_schedule, normalized_adjacency
from .measures import PriConfig, qjs_divergence, vne
from .model import ModelParams, backward_total, forward_total
from .roles import RoleConfig, role_encode

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Flat hyperparameter set; ``pri`` and ``role`` build the nested configs.

    ``freeze_gamma`` pins the fusion weight for every epoch (``None`` follows
    the decay schedule). ``proj_dim=None`` uses ``hidden``.
    """

    epochs: int = 200
    patience: int = 50
    alpha: float = 0.1
    beta: float = 2.0
    eig_floor: float = 1e-12
    hidden: int = 32
    heads: int = 4
    proj_dim: int | None = None
    epsilon: float = 0.0
    center_inputs: bool = False
    gamma0: float = 0.9
    gamma_min: float = 0.1
    gamma_decay: float = 0.99
    freeze_gamma: float | None = None
    lr: float = 0.01
    weight_decay: float = 5e-4
    scales: tuple | None = None
    n_scales: int = 2
    timepoints: tuple | None = None
    n_timepoints: int = 4
    t_max: float = 25.0
    chebyshev_order: int = 10
    use_exact: bool = False
    role_refresh_interval: int = 1
    roles_from_original: bool = False
    seed: int = 0

    def __post_init__(self):
        for key in ("epochs", "patience", "role_refresh_interval", "hidden", "heads"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key}: must be >= 1")
        if self.freeze_gamma is not None and not 0.0 <= self.freeze_gamma <= 1.0:
            raise ConfigError("freeze_gamma: must lie in [0, 1]")
        if self.proj_dim is not None and self.proj_dim < 1:
            raise ConfigError("proj_dim: must be >= 1")
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError("epsilon: must lie in [0, 1)")
        if not 0.0 <= self.gamma0 <= 1.0:
            raise ConfigError("gamma0: must lie in [0, 1]")
        if not 0.0 <= self.gamma_min <= self.gamma0:
            raise ConfigError("gamma_min: must lie in [0, gamma0]")
        if not 0.0 < self.gamma_decay <= 1.0:
            raise ConfigError("gamma_decay: must lie in (0, 1]")
        if not self.lr > 0:
            raise ConfigError("lr: must be positive")
        if not self.weight_decay >= 0:
            raise ConfigError("weight_decay: must be nonnegative")
        try:
            self.pri
            self.role
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def pri(self) -> PriConfig:
        return PriConfig(self.alpha, self.beta, self.eig_floor)

    @property
    def role(self) -> RoleConfig:
        return RoleConfig(self.scales, self.n_scales, self.timepoints, self.n_timepoints,
                          self.t_max, self.chebyshev_order, self.use_exact)

    def replace(self, **changes) -> TrainConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in ("scales", "timepoints"):
            if out[key] is not None:
                out[key] = list(out[key])
        return out

    @classmethod
    def from_dict(cls, values: dict) -> TrainConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config key: {unknown[0]}")
        vals = dict(values)
        for key in ("scales", "timepoints"):
            if vals.get(key) is not None:
                vals[key] = tuple(vals[key])
        return cls(**vals)


@dataclass
class EpochRecord:
    epoch: int
    train_acc: float
    val_acc: float
    test_acc: float
    loss_cls: float
    loss_pri: float
    vne: float
    qjs: float
    gamma: float
    wall_time: float

    # wall_time is excluded from determinism comparisons
    def key(self) -> tuple:
        return dataclasses.astuple(self)[:-1]


@dataclass
class TrainResult:
    params: ModelParams | GcnParams
    refined: Graph
    records: list
    predictions: np.ndarray
    best_epoch: int
    probs: np.ndarray
    accuracies: dict = field(default_factory=dict)


def _check_graph(g: Graph):
    if g.labels is None:
        raise InvalidGraph("training needs node labels")
    if g.train_mask is None or g.val_mask is None:
        raise InvalidGraph("training needs train and validation masks")
    for name in ("train_mask", "val_mask"):
        if not getattr(g, name).any():
            raise EmptyMask(f"{name} selects no nodes")
    if g.n_edges == 0:
        raise InvalidGraph("training needs a graph with at least one edge")


def _split_acc(probs, g: Graph, mask):
    if mask is None or not mask.any():
        return float("nan")
    return accuracy(probs, g.labels, mask)


def evaluate(params, g: Graph, fused) -> dict:
    """Argmax accuracy on each nonempty split for a trained GCN on ``fused``."""
    masks = [m for m in (g.train_mask, g.val_mask, g.test_mask) if m is not None]
    if len(masks) > 1 and np.any(np.sum(masks, axis=0) > 1):
        raise InvalidGraph("evaluation masks overlap")
    gcn = params.gcn if isinstance(params, ModelParams) else params
    probs = gcn_forward(fused, g.features, gcn).probs
    out = {}
    for name in ("train", "val", "test"):
        mask = getattr(g, f"{name}_mask")
        if mask is None:
            continue
        if not mask.any():
            raise EmptyMask(f"{name} mask selects no nodes")
        out[name] = accuracy(probs, g.labels, mask)
    return out


def _init_gcn(g: Graph, cfg: TrainConfig) -> GcnParams:
    return GcnParams.init(g.features.shape[1], cfg.hidden, g.n_classes,
                          rng=np.random.default_rng(cfg.seed))


def _refined(g: Graph, fused) -> Graph:
    return g.with_adjacency(fused)


def train(g: Graph, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Joint structure learning and node classification.

    Each epoch re-encodes structural roles from the previous fused structure
    (every ``role_refresh_interval`` epochs), builds the learned and fused
    adjacencies, runs the GCN, and takes one Adam step on
    ``L_cls + alpha * L_PRI``. Early stopping tracks validation accuracy; the
    returned graph and predictions come from the best validation epoch.
    """
    _check_graph(g)
    pri = cfg.pri
    role_cfg = cfg.role
    gcn = _init_gcn(g, cfg)
    x = g.features
    z = x @ gcn.w0
    h_width = role_cfg.width
    learner = LearnerParams.init(
        z.shape[1] + h_width, cfg.proj_dim or cfg.hidden, cfg.heads,
        rng=np.random.default_rng([cfg.seed, 1]),
        epsilon=cfg.epsilon, gamma0=cfg.gamma0, gamma_min=cfg.gamma_min,
        gamma_decay=cfg.gamma_decay, center=cfg.center_inputs,
    )
    params = ModelParams(gcn, learner)
    opt = Adam(lr=cfg.lr, weight_decay=cfg.weight_decay)
    named = params.as_dict()

    s_orig = normalized_adjacency(g)
    dm_orig = density_matrix(g)
    prev_adj, prev_eig = g.adjacency, dm_orig.laplacian_eigen()
    h = None

    records = []
    best = None
    best_val = -np.inf
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        if h is None or (epoch - 1) % cfg.role_refresh_interval == 0:
            if cfg.roles_from_original:
                if h is None:
                    h = role_encode(g.adjacency, role_cfg, eig=dm_orig.laplacian_eigen()).matrix
            else:
                h = role_encode(prev_adj, role_cfg, eig=prev_eig).matrix
        gamma = cfg.freeze_gamma if cfg.freeze_gamma is not None else gamma_schedule(epoch, learner)

        state = forward_total(params, z, h, gamma, x, g.labels, g.train_mask,
                              s_orig, dm_orig, pri)
        if not np.isfinite(state.loss):
            raise DivergedTraining(f"non-finite loss at epoch {epoch}")
        rec = EpochRecord(
            epoch, _split_acc(state.probs, g, g.train_mask), _split_acc(state.probs, g, g.val_mask),
            _split_acc(state.probs, g, g.test_mask), state.cls_loss, state.pri_loss,
            state.vne, state.qjs, float(gamma), 0.0,
        )
        if rec.val_acc > best_val:
            best_val = rec.val_acc
            best = (epoch, params.copy(), state.fused, state.probs)

        grads = backward_total(state, pri)
        opt.step(named, grads)
        z = state.hidden
        prev_adj, prev_eig = state.fused, state.dm_fused.laplacian_eigen()
        rec.wall_time = time.perf_counter() - t0
        records.append(rec)
        log.debug("epoch %d loss %.4f val %.3f", epoch, state.loss, rec.val_acc)
        if epoch - best[0] >= cfg.patience:
            break

    best_epoch, best_params, fused, probs = best
    return _result(g, best_params, fused, probs, records, best_epoch)


def _result(g, params, fused, probs, records, best_epoch):
    acc = {name: _split_acc(probs, g, getattr(g, f"{name}_mask")) for name in ("train", "val", "test")}
    return TrainResult(params, _refined(g, fused), records, np.argmax(probs, axis=1),
                       best_epoch, probs, acc)


def train_gcn_baseline(g: Graph, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Plain two-layer GCN on the normalized input graph, same loop and seed."""
    _check_graph(g)
    gcn = _init_gcn(g, cfg)
    opt = Adam(lr=cfg.lr, weight_decay=cfg.weight_decay)
    named = {"w0": gcn.w0, "w1": gcn.w1}
    fused = fuse(None, g, 1.0)
    dm_orig = density_matrix(g)
    dm_fused = density_matrix(fused)
    h_fused = vne(dm_fused, cfg.eig_floor)
    qjs = qjs_divergence(dm_fused, dm_orig, cfg.eig_floor)
    pri_report = h_fused + cfg.beta * qjs

    records = []
    best = None
    best_val = -np.inf
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        out = gcn_forward(fused, g.features, gcn)
        cls_loss = cross_entropy(out.probs, g.labels, g.train_mask)
        if not np.isfinite(cls_loss):
            raise DivergedTraining(f"non-finite loss at epoch {epoch}")
        rec = EpochRecord(
            epoch, _split_acc(out.probs, g, g.train_mask), _split_acc(out.probs, g, g.val_mask),
            _split_acc(out.probs, g, g.test_mask), cls_loss, pri_report, h_fused, qjs, 1.0, 0.0,
        )
        if rec.val_acc > best_val:
            best_val = rec.val_acc
            best = (epoch, gcn.copy(), out.probs)
        g_w0, g_w1, _ = gcn_backward(cross_entropy_grad(out.probs, g.labels, g.train_mask), out.cache)
        opt.step(named, {"w0": g_w0, "w1": g_w1})
        rec.wall_time = time.perf_counter() - t0
        records.append(rec)
        if epoch - best[0] >= cfg.patience:
            break
    best_epoch, best_params, probs = best
    return _result(g, best_params, fused, probs, records, best_epoch)


METHODS = {"pri-gsl": train, "gcn-baseline": train_gcn_baseline}


def run_method(method, g, cfg) -> TrainResult:
    try:
        fn = METHODS[method]
    except KeyError:
        raise ConfigError(f"unknown method {method!r}") from None
    return fn(g, cfg)


def run_random_splits(g: Graph, cfg: TrainConfig, n_splits=10, method="pri-gsl",
                      train_per_class=20, val_per_class=30) -> dict:
    """Re-roll per-class train/val splits with seeds ``0..n_splits-1``."""
    accs = []
    for split_seed in range(n_splits):
        masks = split_masks(g.labels, train_per_class, val_per_class, seed=split_seed)
        res = run_method(method, g.with_masks(*masks), cfg)
        accs.append(res.accuracies["test"])
    return {"method": method, "accuracies": accs,
            "mean": float(np.mean(accs)), "std": float(np.std(accs))}


def _denoise_job(args):
    g, method, mode, fraction, noise_seed, cfg = args
    noisy = perturb_edges(g, mode, fraction, seed=noise_seed) if fraction > 0 else g
    return run_method(method, noisy, cfg).accuracies["test"]


def denoise_experiment(g: Graph, fractions=(0.25, 0.5, 0.75), modes=("add", "delete"),
                       repeats=5, cfg: TrainConfig = TrainConfig(),
                       methods=("gcn-baseline", "pri-gsl"), jobs=1) -> list:
    """Train every method on randomly perturbed copies of ``g``.

    Repeat ``r`` perturbs with noise seed ``cfg.seed + r``; the training seed
    stays fixed so a zero fraction reproduces the clean run. Returns one row
    per (mode, fraction, method) with mean and standard deviation of test
    accuracy over repeats.
    """
    jobs_list = []
    keys = []
    for mode in modes:
        for fraction in fractions:
            for method in methods:
                reps = 1 if fraction == 0 else repeats
                for r in range(reps):
                    keys.append((mode, fraction, method))
                    jobs_list.append((g, method, mode, fraction, cfg.seed + r, cfg))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            accs = list(pool.map(_denoise_job, jobs_list))
    else:
        accs = [_denoise_job(j) for j in jobs_list]

    grouped = {}
    for key, acc in zip(keys, accs):
        grouped.setdefault(key, []).append(acc)
    rows = []
    for (mode, fraction, method), vals in grouped.items():
        if fraction == 0:
            vals = vals * repeats
        rows.append({"mode": mode, "fraction": fraction, "method": method,
                     "mean_acc": float(np.mean(vals)), "std_acc": float(np.std(vals)),
                     "repeats": len(vals)})
    return rows
