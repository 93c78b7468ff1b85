"""Full-batch training with Adam, early stopping, and experiment drivers.

A run is fully determined by (dataset, configs, seed): weight init and
dropout draw from labeled substreams of the seed, so replaying a seed
reproduces the report bit for bit. Multi-run helpers derive run seeds as
base seed + run index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, subsample_split
from .evalstats import accuracy
from .graph import NormalizedGraph, normalize, smoothness_trace
from .linalg import Matrix, spmm
from .model import DiffusionMode, ModelConfig, ModelState, backward, cross_entropy, forward, init_model
from .rng import Rng


class TrainingError(RuntimeError):
    """Training could not proceed (numerical failure)."""


class DivergenceError(TrainingError):
    """Loss became non-finite at a recorded epoch."""

    def __init__(self, epoch: int, value: float):
        super().__init__(f"non-finite training loss ({value}) at epoch {epoch}")
        self.epoch = epoch


def default_beta_grid() -> tuple[float, ...]:
    """The 51-point search grid 0.0, 0.1, ..., 5.0."""
    return tuple(round(0.1 * i, 10) for i in range(51))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    max_epochs: int = 200
    patience: int = 10
    runs: int = 10
    seed: int = 0
    beta_grid: tuple[float, ...] = field(default_factory=default_beta_grid)
    resample_splits: bool = False
    train_fraction: float | None = None
    resample_val_size: int = 500
    resample_test_size: int = 1000

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if len(self.beta_grid) == 0 or any(b < 0 for b in self.beta_grid):
            raise ValueError("beta_grid must be nonempty and nonnegative")


@dataclass
class AdamState:
    """First/second moment estimates and the step counter."""

    m: list[Matrix]
    v: list[Matrix]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_weights(cls, weights: list[Matrix]) -> "AdamState":
        return cls(m=[np.zeros_like(w) for w in weights], v=[np.zeros_like(w) for w in weights])


def adam_step(
    adam: AdamState, weights: list[Matrix], grads: list[Matrix], lr: float
) -> tuple[list[Matrix], AdamState]:
    """One Adam update with bias correction; returns new weights and state."""
    if len(weights) != len(grads) or len(weights) != len(adam.m):
        raise ValueError("weights, grads, and moments must align")
    for w, g in zip(weights, grads):
        if w.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match weight shape {w.shape}")
    step = adam.step + 1
    bc1 = 1.0 - adam.beta1**step
    bc2 = 1.0 - adam.beta2**step
    new_w: list[Matrix] = []
    new_m: list[Matrix] = []
    new_v: list[Matrix] = []
    for w, g, m, v in zip(weights, grads, adam.m, adam.v):
        m = adam.beta1 * m + (1.0 - adam.beta1) * g
        v = adam.beta2 * v + (1.0 - adam.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        new_w.append(w - lr * m_hat / (np.sqrt(v_hat) + adam.eps))
        new_m.append(m)
        new_v.append(v)
    return new_w, AdamState(new_m, new_v, step, adam.beta1, adam.beta2, adam.eps)


@dataclass
class RunReport:
    """Everything recorded about one training run."""

    seed: int
    beta: float
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    phi_log: list[list[float]] = field(default_factory=list)
    trace_log: list[list[float]] = field(default_factory=list)
    stop_epoch: int = 0
    best_epoch: int | None = None
    best_val_loss: float = math.inf
    best_val_accuracy: float = 0.0
    test_accuracy: float = 0.0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "beta": self.beta,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "val_accuracy": self.val_accuracy,
            "phi_log": self.phi_log,
            "trace_log": self.trace_log,
            "stop_epoch": self.stop_epoch,
            "best_epoch": self.best_epoch,
            "best_val_loss": None if math.isinf(self.best_val_loss) else self.best_val_loss,
            "best_val_accuracy": self.best_val_accuracy,
            "test_accuracy": self.test_accuracy,
        }


def train(
    data: Dataset,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    seed: int,
    ng: NormalizedGraph | None = None,
) -> tuple[ModelState, RunReport]:
    """Train one model; returns the best-validation-loss checkpoint.

    Per epoch: one full-batch forward/backward/Adam step, then an
    evaluation pass that records losses, accuracies, and the diffusion
    gate values. Training stops once the validation loss has gone
    `patience` consecutive epochs without a new strict minimum.
    """
    _check_splits(data)
    if ng is None:
        ng = normalize(data.graph)
    features = data.features

    base_rng = Rng(seed)
    state = init_model(model_cfg, base_rng.spawn("init"))
    dropout_rng = base_rng.spawn("dropout")
    adam = AdamState.for_weights(state.weights)

    # the first diffusion consumes the fixed input features, so its trace
    # and spread are constants of the run in both modes
    input_diffusion = (smoothness_trace(ng, features), spmm(ng.sym_norm, features))

    report = RunReport(seed=seed, beta=model_cfg.beta)
    best_state = state.copy()
    epochs_since_best = 0

    for epoch in range(1, train_cfg.max_epochs + 1):
        yhat, cache = forward(
            state, ng, features, rng=dropout_rng, training=True, input_diffusion=input_diffusion
        )
        loss = cross_entropy(yhat, data.labels, data.train)
        if not math.isfinite(loss):
            raise DivergenceError(epoch, loss)
        grads = backward(state, ng, features, cache, data.labels, data.train)
        state.weights, adam = adam_step(adam, state.weights, grads, train_cfg.learning_rate)
        if not all(np.all(np.isfinite(w)) for w in state.weights):
            raise DivergenceError(epoch, math.nan)

        eval_yhat, eval_cache = forward(state, ng, features, training=False, input_diffusion=input_diffusion)
        val_loss = cross_entropy(eval_yhat, data.labels, data.val)
        if not math.isfinite(val_loss):
            raise DivergenceError(epoch, val_loss)
        val_acc = accuracy(eval_yhat, data.labels, data.val)

        report.train_loss.append(loss)
        report.val_loss.append(val_loss)
        report.val_accuracy.append(val_acc)
        report.phi_log.append(list(eval_cache.phis))
        report.trace_log.append(list(eval_cache.traces))
        report.stop_epoch = epoch

        if val_loss < report.best_val_loss:
            report.best_val_loss = val_loss
            report.best_val_accuracy = val_acc
            report.best_epoch = epoch
            best_state = state.copy()
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= train_cfg.patience:
                break

    final_yhat, _ = forward(best_state, ng, features, training=False, input_diffusion=input_diffusion)
    if len(data.test) > 0:
        report.test_accuracy = accuracy(final_yhat, data.labels, data.test)
    return best_state, report


def train_runs(
    data: Dataset,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    ng: NormalizedGraph | None = None,
) -> list[RunReport]:
    """`runs` independent trainings with seeds base, base+1, ...

    With `resample_splits` set, each run draws a fresh stratified split at
    `train_fraction` from its own substream; otherwise only the
    initialization varies.
    """
    if ng is None:
        ng = normalize(data.graph)
    reports = []
    for run in range(train_cfg.runs):
        seed = train_cfg.seed + run
        run_data = data
        if train_cfg.resample_splits:
            if train_cfg.train_fraction is None:
                raise ValueError("resample_splits requires train_fraction")
            run_data = subsample_split(
                data, train_cfg.train_fraction, Rng(seed).spawn("split"),
                val_size=train_cfg.resample_val_size,
                test_size=train_cfg.resample_test_size,
            )
        _, report = train(run_data, model_cfg, train_cfg, seed, ng=ng)
        reports.append(report)
    return reports


@dataclass
class BetaRow:
    beta: float
    mean_val_accuracy: float
    std_val_accuracy: float
    mean_test_accuracy: float
    std_test_accuracy: float
    saturated: bool

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "mean_val_accuracy": self.mean_val_accuracy,
            "std_val_accuracy": self.std_val_accuracy,
            "mean_test_accuracy": self.mean_test_accuracy,
            "std_test_accuracy": self.std_test_accuracy,
            "saturated": self.saturated,
        }


@dataclass
class GridSearchResult:
    best_beta: float
    rows: list[BetaRow]
    best_reports: list[RunReport]

    def to_dict(self) -> dict:
        return {
            "best_beta": self.best_beta,
            "rows": [r.to_dict() for r in self.rows],
            "best_runs": [r.to_dict() for r in self.best_reports],
        }


def grid_search_beta(
    data: Dataset, model_cfg: ModelConfig, train_cfg: TrainConfig
) -> GridSearchResult:
    """Select beta by highest mean validation accuracy over the grid.

    Ties go to the smaller beta. In input-once mode beta enters training
    only through the constant input gate, so grid points whose gate value
    coincides (e.g. the saturated regime where phi == 1 for every nonzero
    beta) reuse the first equivalent point's runs instead of retraining.
    """
    ng = normalize(data.graph)

    input_gate: dict[float, float] | None = None
    if model_cfg.diffusion_mode is DiffusionMode.INPUT_ONCE and not train_cfg.resample_splits:
        t = smoothness_trace(ng, data.features)
        if model_cfg.normalize_trace and data.features.size > 0:
            t /= data.features.shape[0] * data.features.shape[1]
        input_gate = {}
        for beta in train_cfg.beta_grid:
            input_gate[beta] = 1.0 if not model_cfg.anisotropic else -math.expm1(-beta * t * t)

    rows: list[BetaRow] = []
    reports_by_beta: dict[float, list[RunReport]] = {}
    runs_by_gate: dict[float, float] = {}

    for beta in train_cfg.beta_grid:
        cfg = _with_beta(model_cfg, beta)
        source_beta = None
        if input_gate is not None:
            gate = input_gate[beta]
            source_beta = runs_by_gate.get(gate)
            if source_beta is None:
                runs_by_gate[gate] = beta
        if source_beta is not None:
            reports = [_clone_with_beta(r, beta) for r in reports_by_beta[source_beta]]
        else:
            try:
                reports = train_runs(data, cfg, train_cfg, ng=ng)
            except TrainingError as exc:
                raise TrainingError(f"beta={beta}: {exc}") from exc
        reports_by_beta[beta] = reports
        val = np.array([r.best_val_accuracy for r in reports])
        test = np.array([r.test_accuracy for r in reports])
        saturated = all(all(p == 1.0 for p in epoch) for r in reports for epoch in r.phi_log)
        rows.append(
            BetaRow(beta, float(val.mean()), float(val.std()), float(test.mean()), float(test.std()), saturated)
        )

    best = max(rows, key=lambda r: r.mean_val_accuracy)
    best_beta = min(r.beta for r in rows if r.mean_val_accuracy == best.mean_val_accuracy)
    return GridSearchResult(best_beta, rows, reports_by_beta[best_beta])


@dataclass
class DepthRow:
    depth: int
    model: str
    mean_test_accuracy: float
    std_test_accuracy: float

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "model": self.model,
            "mean_test_accuracy": self.mean_test_accuracy,
            "std_test_accuracy": self.std_test_accuracy,
        }


def depth_study(
    data: Dataset,
    depths: list[int],
    train_cfg: TrainConfig,
    beta: float,
    hidden: int = 16,
    dropout_rate: float = 0.5,
    weight_decay: float = 5e-4,
) -> list[DepthRow]:
    """Accuracy vs depth for per-layer anisotropic diffusion and plain GCN.

    Depth L means L weight matrices: input, L-1 hidden blocks of width
    `hidden`, output.
    """
    if any(d < 2 for d in depths):
        raise ValueError("depths must be at least 2")
    _check_splits(data)
    num_features = data.features.shape[1]
    ng = normalize(data.graph)
    rows: list[DepthRow] = []
    for depth in depths:
        dims = (num_features,) + (hidden,) * (depth - 1) + (data.num_classes,)
        for name, anisotropic in (("agcn", True), ("gcn", False)):
            cfg = ModelConfig(
                layer_dims=dims,
                beta=beta if anisotropic else 0.0,
                diffusion_mode=DiffusionMode.PER_LAYER,
                dropout_rate=dropout_rate,
                weight_decay=weight_decay,
                anisotropic=anisotropic,
            )
            reports = train_runs(data, cfg, train_cfg, ng=ng)
            accs = np.array([r.test_accuracy for r in reports])
            rows.append(DepthRow(depth, name, float(accs.mean()), float(accs.std())))
    return rows


def _with_beta(cfg: ModelConfig, beta: float) -> ModelConfig:
    return ModelConfig(
        layer_dims=cfg.layer_dims,
        beta=beta,
        diffusion_mode=cfg.diffusion_mode,
        dropout_rate=cfg.dropout_rate,
        weight_decay=cfg.weight_decay,
        anisotropic=cfg.anisotropic,
        normalize_trace=cfg.normalize_trace,
    )


def _clone_with_beta(report: RunReport, beta: float) -> RunReport:
    clone = RunReport(
        seed=report.seed,
        beta=beta,
        train_loss=list(report.train_loss),
        val_loss=list(report.val_loss),
        val_accuracy=list(report.val_accuracy),
        phi_log=[list(p) for p in report.phi_log],
        trace_log=[list(t) for t in report.trace_log],
        stop_epoch=report.stop_epoch,
        best_epoch=report.best_epoch,
        best_val_loss=report.best_val_loss,
        best_val_accuracy=report.best_val_accuracy,
        test_accuracy=report.test_accuracy,
    )
    return clone


def _check_splits(data: Dataset) -> None:
    if len(data.train) == 0 or len(data.val) == 0:
        raise ValueError("training requires nonempty train and val splits")
