"""
Feedforward tansig network trained by Levenberg-Marquardt.

Every layer, the output layer included, applies tansig(W a + b). Targets are
(1, -1) for OBJECT and (-1, 1) for BACKGROUND; a window is OBJECT iff
O1 > O2.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from cwseg.errors import ConvergenceError, FormatError, PreconditionError
from cwseg.image_io import PathLike
from cwseg.sampler import as_arrays
from cwseg.schemas import Label, LayerSpec, TrainConfig

logger = logging.getLogger(__name__)

OBJECT_TARGET = np.array([1.0, -1.0])
BACKGROUND_TARGET = np.array([-1.0, 1.0])

STATUS_GOAL_MET = "goal_met"
STATUS_MAX_EPOCHS = "max_epochs"
STATUS_LAMBDA_EXHAUSTED = "lambda_exhausted"


def tansig(x):
    """2 / (1 + exp(-2x)) - 1, evaluated as tanh so it never overflows."""
    return np.tanh(x)


def targets_for(labels: np.ndarray) -> np.ndarray:
    """(N,) bool (True = OBJECT) -> (N, 2) targets."""
    labels = np.asarray(labels, dtype=bool)
    return np.where(labels[:, None], OBJECT_TARGET, BACKGROUND_TARGET)


@dataclass
class MLPModel:
    spec: LayerSpec
    weights: List[np.ndarray]  # W_l has shape (n_out, n_in)
    biases: List[np.ndarray]  # b_l has shape (n_out,)

    def __post_init__(self):
        sizes = self.spec.sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise PreconditionError("expected one weight matrix and bias per layer")
        for l, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            if self.weights[l].shape != (n_out, n_in):
                raise PreconditionError(
                    f"W{l + 1} has shape {self.weights[l].shape}, expected {(n_out, n_in)}"
                )
            if self.biases[l].shape != (n_out,):
                raise PreconditionError(
                    f"b{l + 1} has shape {self.biases[l].shape}, expected {(n_out,)}"
                )

    W1 = property(lambda self: self.weights[0])
    W2 = property(lambda self: self.weights[1])
    W3 = property(lambda self: self.weights[2])
    b1 = property(lambda self: self.biases[0])
    b2 = property(lambda self: self.biases[1])
    b3 = property(lambda self: self.biases[2])

    @property
    def input_width(self) -> int:
        return self.spec.n_in

    def predict(self, features: np.ndarray) -> np.ndarray:
        return classify_batch(self, features)

    def copy(self) -> "MLPModel":
        return MLPModel(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class ForwardResult:
    outputs: np.ndarray
    activations: List[np.ndarray]  # input first, network output last

    @property
    def O1(self) -> float:
        return float(self.outputs[0])

    @property
    def O2(self) -> float:
        return float(self.outputs[1])


@dataclass
class TrainResult:
    model: MLPModel
    history: List[float]  # MSE before training, then after each accepted epoch
    log: List[Tuple[int, float, float, bool]] = field(default_factory=list)  # epoch, mse, lambda, accepted
    status: str = STATUS_MAX_EPOCHS

    @property
    def final_mse(self) -> float:
        return self.history[-1]


# ===== Parameters =====

def pack_params(model: MLPModel) -> np.ndarray:
    parts = []
    for W, b in zip(model.weights, model.biases):
        parts.append(W.ravel())
        parts.append(b)
    return np.concatenate(parts)


def unpack_params(spec: LayerSpec, theta: np.ndarray) -> MLPModel:
    if theta.shape != (spec.n_params,):
        raise PreconditionError(f"expected {spec.n_params} parameters, got {theta.shape}")
    weights, biases = [], []
    pos = 0
    for n_in, n_out in zip(spec.sizes[:-1], spec.sizes[1:]):
        weights.append(theta[pos:pos + n_out * n_in].reshape(n_out, n_in).copy())
        pos += n_out * n_in
        biases.append(theta[pos:pos + n_out].copy())
        pos += n_out
    return MLPModel(spec, weights, biases)


def init_weights(spec: LayerSpec, seed: int) -> MLPModel:
    """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(spec.sizes[:-1], spec.sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(rng.uniform(-bound, bound, size=n_out))
    return MLPModel(spec, weights, biases)


# ===== Evaluation =====

def _check_width(model: MLPModel, width: int) -> None:
    if width != model.spec.n_in:
        raise PreconditionError(
            f"feature width {width} does not match network input {model.spec.n_in}"
        )


def forward(model: MLPModel, features: np.ndarray) -> ForwardResult:
    x = np.asarray(features, dtype=np.float64).reshape(-1)
    _check_width(model, x.shape[0])
    activations = [x]
    a = x
    for W, b in zip(model.weights, model.biases):
        a = tansig(W @ a + b)
        activations.append(a)
    return ForwardResult(outputs=a, activations=activations)


def forward_batch(model: MLPModel, X: np.ndarray) -> List[np.ndarray]:
    """Activations for every layer, each of shape (N, n_l); input first."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    _check_width(model, X.shape[1])
    activations = [X]
    a = X
    for W, b in zip(model.weights, model.biases):
        a = tansig(a @ W.T + b)
        activations.append(a)
    return activations


def classify(model: MLPModel, features: np.ndarray) -> Label:
    out = forward(model, features).outputs
    return Label.OBJECT if out[0] > out[1] else Label.BACKGROUND


def classify_batch(model: MLPModel, X: np.ndarray) -> np.ndarray:
    out = forward_batch(model, X)[-1]
    return out[:, 0] > out[:, 1]


def mse(predictions, targets) -> float:
    """mean((desired - actual)^2) over every scalar component."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.size == 0 or t.size == 0:
        raise PreconditionError("mse of an empty batch")
    if p.shape != t.shape:
        raise PreconditionError(f"prediction shape {p.shape} != target shape {t.shape}")
    return float(np.mean((t - p) ** 2))


# ===== Derivatives =====

def backprop_gradient(model: MLPModel, features: np.ndarray, target: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Exact gradient of the single-sample MSE; returns (dW per layer, db per layer)."""
    fr = forward(model, features)
    acts = fr.activations
    t = np.asarray(target, dtype=np.float64)
    out = acts[-1]
    delta = (-2.0 / out.shape[0]) * (t - out) * (1.0 - out ** 2)
    grad_W: List[np.ndarray] = [None] * len(model.weights)
    grad_b: List[np.ndarray] = [None] * len(model.biases)
    for l in range(len(model.weights) - 1, -1, -1):
        grad_W[l] = np.outer(delta, acts[l])
        grad_b[l] = delta.copy()
        if l:
            delta = (model.weights[l].T @ delta) * (1.0 - acts[l] ** 2)
    return grad_W, grad_b


def batch_gradient(model: MLPModel, X: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Gradient of the batch MSE as a flat parameter vector."""
    acts = forward_batch(model, X)
    out = acts[-1]
    delta = (-2.0 / out.size) * (T - out) * (1.0 - out ** 2)
    grads: List[np.ndarray] = []
    for l in range(len(model.weights) - 1, -1, -1):
        grads.append(delta.sum(axis=0))
        grads.append((delta.T @ acts[l]).ravel())
        if l:
            delta = (delta @ model.weights[l]) * (1.0 - acts[l] ** 2)
    return np.concatenate(grads[::-1])


def jacobian(model: MLPModel, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(outputs (N, n_out), J) with J[n * n_out + k, p] = d out[n, k] / d theta[p]."""
    acts = forward_batch(model, X)
    out = acts[-1]
    n, n_out = out.shape
    J = np.empty((n, n_out, model.spec.n_params))
    for k in range(n_out):
        delta = np.zeros_like(out)
        delta[:, k] = 1.0 - out[:, k] ** 2
        cols: List[np.ndarray] = []
        for l in range(len(model.weights) - 1, -1, -1):
            cols.append(delta)  # d/db_l
            cols.append(np.einsum("ni,nj->nij", delta, acts[l]).reshape(n, -1))  # d/dW_l
            if l:
                delta = (delta @ model.weights[l]) * (1.0 - acts[l] ** 2)
        J[:, k, :] = np.concatenate(cols[::-1], axis=1)
    return out, J.reshape(n * n_out, -1)


# ===== Training =====

def _training_arrays(model: MLPModel, samples) -> Tuple[np.ndarray, np.ndarray]:
    if not samples:
        raise PreconditionError("training set is empty")
    X, y = as_arrays(samples)
    _check_width(model, X.shape[1])
    return X, targets_for(y)


def lm_step(JtJ: np.ndarray, g: np.ndarray, lam: float) -> np.ndarray:
    """Solve (J^T J + lam I) delta = J^T r by Cholesky factorization.

    Takes the precomputed J^T J and g = J^T r; raises LinAlgError when the
    damped matrix is not positive definite.
    """
    A = np.array(JtJ, dtype=np.float64, copy=True)
    A[np.diag_indices_from(A)] += lam
    return cho_solve(cho_factor(A), g)


def train_lm(model: MLPModel, dataset, config: Optional[TrainConfig] = None) -> TrainResult:
    """Full-batch Levenberg-Marquardt on the dataset's training split."""
    config = config or TrainConfig()
    samples = dataset.train if hasattr(dataset, "train") else dataset
    X, T = _training_arrays(model, samples)

    spec = model.spec
    theta = pack_params(model)
    out = forward_batch(model, X)[-1]
    current = mse(out, T)
    history = [current]
    log: List[Tuple[int, float, float, bool]] = [(0, current, config.lambda0, True)]
    lam = config.lambda0
    logger.info(f"[train] LM start: net={spec}, samples={len(X)}, params={spec.n_params}, mse={current:.6g}")

    status = STATUS_MAX_EPOCHS
    for epoch in range(1, config.max_epochs + 1):
        if current <= config.mse_goal:
            status = STATUS_GOAL_MET
            break
        out, J = jacobian(unpack_params(spec, theta), X)
        r = (T - out).ravel()
        JtJ = J.T @ J
        g = J.T @ r
        while True:
            if lam > config.lambda_max:
                best = unpack_params(spec, theta)
                result = TrainResult(best, history, log, STATUS_LAMBDA_EXHAUSTED)
                logger.info(f"[train] lambda exceeded {config.lambda_max:g} at epoch {epoch}, mse={current:.6g}")
                raise ConvergenceError(
                    f"Levenberg-Marquardt damping exceeded {config.lambda_max:g} at epoch {epoch}",
                    result=result,
                )
            try:
                delta = lm_step(JtJ, g, lam)
            except LinAlgError:
                logger.warning(f"[train] normal equations not positive definite at lambda={lam:g}, escalating")
                lam *= config.lambda_up
                continue
            candidate = theta + delta
            trial = mse(forward_batch(unpack_params(spec, candidate), X)[-1], T)
            if trial < current:
                theta, current = candidate, trial
                lam /= config.lambda_down
                history.append(current)
                log.append((epoch, current, lam, True))
                logger.debug(f"[train] epoch {epoch}: mse={current:.6g} lambda={lam:g}")
                break
            log.append((epoch, trial, lam, False))
            lam *= config.lambda_up
    else:
        if current <= config.mse_goal:
            status = STATUS_GOAL_MET

    trained = unpack_params(spec, theta)
    logger.info(f"[train] LM done: status={status}, epochs={len(history) - 1}, mse={current:.6g}")
    return TrainResult(trained, history, log, status)


def train_gd(model: MLPModel, dataset, config: Optional[TrainConfig] = None) -> TrainResult:
    """Fixed-step full-batch gradient descent; a cross-check for the LM trainer."""
    config = config or TrainConfig()
    samples = dataset.train if hasattr(dataset, "train") else dataset
    X, T = _training_arrays(model, samples)

    spec = model.spec
    theta = pack_params(model)
    current = mse(forward_batch(model, X)[-1], T)
    history = [current]
    log: List[Tuple[int, float, float, bool]] = [(0, current, 0.0, True)]
    status = STATUS_MAX_EPOCHS
    for epoch in range(1, config.max_epochs + 1):
        if current <= config.mse_goal:
            status = STATUS_GOAL_MET
            break
        theta = theta - config.gd_step * batch_gradient(unpack_params(spec, theta), X, T)
        current = mse(forward_batch(unpack_params(spec, theta), X)[-1], T)
        history.append(current)
        log.append((epoch, current, 0.0, True))
    else:
        if current <= config.mse_goal:
            status = STATUS_GOAL_MET
    logger.info(f"[train] GD done: status={status}, epochs={len(history) - 1}, mse={current:.6g}")
    return TrainResult(unpack_params(spec, theta), history, log, status)


# ===== Persistence =====

def _format_row(values: np.ndarray) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


def save_model(model: MLPModel, path: PathLike) -> None:
    lines = [" ".join(str(n) for n in model.spec.sizes)]
    for W, b in zip(model.weights, model.biases):
        lines.extend(_format_row(row) for row in W)
        lines.append(_format_row(b))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_model(path: PathLike) -> MLPModel:
    lines = [ln for ln in Path(path).read_text(encoding="ascii").splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty model file")
    try:
        spec = LayerSpec(sizes=[int(t) for t in lines[0].split()])
    except ValueError as e:
        raise FormatError(f"{path}: bad layer header {lines[0]!r}: {e}")

    sizes = spec.sizes
    expected_rows = 1 + sum(n_out + 1 for n_out in sizes[1:])
    if len(lines) != expected_rows:
        raise FormatError(
            f"{path}: expected {expected_rows} rows for a {spec} network, found {len(lines)}"
        )
    pos = 1
    weights, biases = [], []
    for l, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
        W = np.array([_parse_row(lines[pos + i], n_in, path, f"W{l} row {i + 1}") for i in range(n_out)])
        pos += n_out
        b = _parse_row(lines[pos], n_out, path, f"b{l}")
        pos += 1
        weights.append(W)
        biases.append(b)
    return MLPModel(spec, weights, biases)


def _parse_row(line: str, n: int, path: PathLike, what: str) -> np.ndarray:
    tokens = line.split()
    if len(tokens) != n:
        raise FormatError(f"{path}: {what} expected {n} values, found {len(tokens)}")
    try:
        return np.array([float(t) for t in tokens])
    except ValueError:
        raise FormatError(f"{path}: {what} has non-numeric values")


def write_training_log(result: TrainResult, path: PathLike) -> None:
    lines = ["epoch,mse,lambda,accepted"]
    for epoch, value, lam, accepted in result.log:
        lines.append(f"{epoch},{value:.17g},{lam:.17g},{int(accepted)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def make_model(sizes: Sequence[int], seed: int = 0) -> MLPModel:
    return init_weights(LayerSpec(sizes=list(sizes)), seed)
