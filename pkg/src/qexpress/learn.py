"""Teacher/student experiments on a 2-D grid and the prediction-map difference."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from qexpress.circuits import CircuitTemplate
from qexpress.haar import child_rng

SHIFT = np.pi / 2


class TrainingError(RuntimeError):
    def __init__(self, epoch: int, message: str = "loss became non-finite"):
        super().__init__(f"{message} at epoch {epoch}")
        self.epoch = epoch


def grid_shape(p: int) -> tuple[int, int]:
    """Factor p as rows x cols (rows >= cols) with the smallest gap."""
    if p < 4:
        raise ValueError(f"dataset needs at least 4 points, got {p}")
    cols = max(c for c in range(1, math.isqrt(p) + 1) if p % c == 0)
    if cols < 2:
        raise ValueError(f"{p} points cannot be arranged on a 2-D grid")
    return p // cols, cols


def make_grid_dataset(p: int = 500) -> np.ndarray:
    """Regular grid of ``p`` points over [-pi, pi]^2 (endpoints included), shape (p, 2)."""
    rows, cols = grid_shape(p)
    x1, x2 = np.meshgrid(np.linspace(-np.pi, np.pi, rows), np.linspace(-np.pi, np.pi, cols), indexing="ij")
    return np.column_stack([x1.ravel(), x2.ravel()])


def predict(template: CircuitTemplate, params, x) -> float:
    return float(template.predict_batch(params, np.atleast_2d(x))[0])


def _shifted(params: np.ndarray, j: int, delta: float) -> np.ndarray:
    out = params.copy()
    out[j] += delta
    return out


def prediction_jacobian(template: CircuitTemplate, params, xs) -> tuple[np.ndarray, np.ndarray]:
    """Predictions (p,) and their parameter-shift derivatives (p, n_params).

    Every Rot angle sits in a single RZ or RY with generator of eigenvalues +-1/2,
    so [f(t + pi/2) - f(t - pi/2)] / 2 is the exact derivative.
    """
    params = np.asarray(params, dtype=float)
    states = template.encoded_states(xs)
    # f(x) = sum_ij conj(psi_i) O_ij psi_j is linear in O
    outer = (states.conj()[:, :, None] * states[:, None, :]).reshape(len(states), -1)

    def f(p):
        return (outer @ template.heisenberg_observable(p).ravel()).real

    jac = np.empty((len(states), params.size))
    for j in range(params.size):
        jac[:, j] = (f(_shifted(params, j, SHIFT)) - f(_shifted(params, j, -SHIFT))) / 2
    return f(params), jac


def gradient(template: CircuitTemplate, params, x, y_target: float) -> np.ndarray:
    """Gradient of (f(x) - y_target)^2 with respect to the Rot angles."""
    y, jac = prediction_jacobian(template, params, np.atleast_2d(x))
    return 2 * (y[0] - y_target) * jac[0]


def mse_and_grad(template: CircuitTemplate, params, xs, ys) -> tuple[float, np.ndarray]:
    y, jac = prediction_jacobian(template, params, xs)
    r = y - np.asarray(ys)
    return float(np.mean(r**2)), 2 * (r @ jac) / len(r)


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    max_epochs: int = 300
    convergence_tol: float = 1e-6
    optimizer: str = "adam"
    init_seed: int = 0
    patience: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.optimizer.lower() not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be adam or sgd, got {self.optimizer!r}")


def train_student(student: CircuitTemplate, xs, ys, cfg: TrainConfig | None = None,
                  init_params=None) -> tuple[np.ndarray, list[float]]:
    """Full-batch training on mean squared error.

    Returns the final parameters and the loss recorded before each update
    (plus the final loss). Stops at ``max_epochs`` or after ``patience``
    consecutive epochs whose improvement is below ``convergence_tol``.
    """
    cfg = cfg or TrainConfig()
    if init_params is None:
        init_params = child_rng(cfg.init_seed, 0).uniform(0, 2 * np.pi, student.n_params)
    params = np.array(init_params, dtype=float)
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    losses: list[float] = []
    stall = 0
    for epoch in range(1, cfg.max_epochs + 1):
        loss, g = mse_and_grad(student, params, xs, ys)
        if not np.isfinite(loss) or not np.all(np.isfinite(g)):
            raise TrainingError(epoch)
        if losses:
            stall = stall + 1 if losses[-1] - loss < cfg.convergence_tol else 0
        losses.append(loss)
        if stall >= cfg.patience:
            return params, losses
        if cfg.optimizer.lower() == "sgd":
            params = params - cfg.learning_rate * g
        else:
            m = cfg.beta1 * m + (1 - cfg.beta1) * g
            v = cfg.beta2 * v + (1 - cfg.beta2) * g**2
            m_hat = m / (1 - cfg.beta1**epoch)
            v_hat = v / (1 - cfg.beta2**epoch)
            params = params - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
    final = float(np.mean((student.predict_batch(params, xs) - ys) ** 2))
    if not np.isfinite(final):
        raise TrainingError(cfg.max_epochs)
    losses.append(final)
    return params, losses


def map_difference(y_teacher, y_student) -> float:
    """Mean |y_T - y_S| after rescaling labels from [-1, 1] to [0, 1]."""
    yt = np.asarray(y_teacher, dtype=float)
    ys = np.asarray(y_student, dtype=float)
    if yt.shape != ys.shape:
        raise ValueError(f"label sets differ in length: {yt.shape} vs {ys.shape}")
    return float(np.mean(np.abs((yt + 1) / 2 - (ys + 1) / 2)))


@dataclass
class ReplicateRecord:
    replicate: int
    teacher_seed: int
    student_seed: int
    delta_y: float | None
    final_loss: float | None
    epochs: int
    error: str | None = None


@dataclass
class TSRunResult:
    records: list[ReplicateRecord]
    mean_delta_y: float
    std_delta_y: float
    n_failed: int
    maps: dict | None = field(default=None, repr=False)
    loss_curves: list[list[float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "mean_delta_y": self.mean_delta_y,
            "std_delta_y": self.std_delta_y,
            "n_failed": self.n_failed,
            "records": [asdict(r) for r in self.records],
            "loss_curves": self.loss_curves,
        }

    def maps_csv(self) -> str:
        if self.maps is None:
            raise ValueError("no prediction maps were kept for this run")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x1", "x2", "y_teacher", "y_student"])
        for row in zip(self.maps["x1"], self.maps["x2"], self.maps["y_teacher"], self.maps["y_student"]):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _replicate_seed(seed: int, replicate: int, role: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=(int(replicate), role)).generate_state(1, np.uint64)[0])


def ts_experiment(teacher: CircuitTemplate, student: CircuitTemplate, n_replicates: int = 20,
                  dataset_size: int = 500, cfg: TrainConfig | None = None, seed: int = 0,
                  workers: int = 1, keep_maps: bool = True, share_init: bool = False) -> TSRunResult:
    """Label a grid with random teachers, train students on each labelling, report Delta-y.

    With ``share_init`` the student starts from the teacher's angles (requires
    identical parameter counts). Maps are kept for replicate 0.
    """
    if n_replicates < 1:
        raise ValueError("n_replicates must be >= 1")
    if share_init and teacher.n_params != student.n_params:
        raise ValueError("share_init needs matching parameter counts")
    cfg = cfg or TrainConfig()
    xs = make_grid_dataset(dataset_size)

    def run(r):
        t_seed, s_seed = _replicate_seed(seed, r, 0), _replicate_seed(seed, r, 1)
        theta_t = np.random.default_rng(t_seed).uniform(0, 2 * np.pi, teacher.n_params)
        init = theta_t.copy() if share_init else np.random.default_rng(s_seed).uniform(0, 2 * np.pi, student.n_params)
        y_t = teacher.predict_batch(theta_t, xs)
        try:
            theta_s, losses = train_student(student, xs, y_t, cfg, init)
        except TrainingError as exc:
            return ReplicateRecord(r, t_seed, s_seed, None, None, exc.epoch, str(exc)), [], None
        y_s = student.predict_batch(theta_s, xs)
        rec = ReplicateRecord(r, t_seed, s_seed, map_difference(y_t, y_s), losses[-1], len(losses) - 1)
        return rec, losses, (y_t, y_s)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            out = list(pool.map(run, range(n_replicates)))
    else:
        out = [run(r) for r in range(n_replicates)]
    records = [o[0] for o in out]
    ok = np.array([r.delta_y for r in records if r.delta_y is not None])
    maps = None
    if keep_maps and out[0][2] is not None:
        y_t, y_s = out[0][2]
        maps = {"x1": xs[:, 0], "x2": xs[:, 1], "y_teacher": y_t, "y_student": y_s}
    return TSRunResult(
        records=records,
        mean_delta_y=float(ok.mean()) if ok.size else float("nan"),
        std_delta_y=float(ok.std()) if ok.size else float("nan"),
        n_failed=int(sum(r.delta_y is None for r in records)),
        maps=maps,
        loss_curves=[o[1] for o in out],
    )
