"""Single-layer LSTM with a linear readout, trained by full-batch BPTT.

Gate weights act on the concatenation ``[h_{t-1}, x_t]``. The four gate
matrices are stored stacked (forget, input, candidate, output) so one
matrix product serves all gates; ``W_f`` etc. are views into the stack.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateError, NumericError, ShapeError, StateError, TrainingError

PARAM_NAMES = ("W_f", "W_i", "W_c", "W_o", "b_f", "b_i", "b_c", "b_o", "W_y", "b_y")
_GATES = ("f", "i", "c", "o")


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class LstmParams:
    W: np.ndarray  # (4H, H + D)
    b: np.ndarray  # (4H,)
    W_y: np.ndarray  # (O, H)
    b_y: np.ndarray  # (O,)
    trained: bool = False

    @property
    def hidden_dim(self) -> int:
        return self.W_y.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1] - self.hidden_dim

    @property
    def output_dim(self) -> int:
        return self.W_y.shape[0]

    def _gate(self, arr, name):
        H = self.hidden_dim
        k = _GATES.index(name)
        return arr[k * H : (k + 1) * H]

    W_f = property(lambda self: self._gate(self.W, "f"))
    W_i = property(lambda self: self._gate(self.W, "i"))
    W_c = property(lambda self: self._gate(self.W, "c"))
    W_o = property(lambda self: self._gate(self.W, "o"))
    b_f = property(lambda self: self._gate(self.b, "f"))
    b_i = property(lambda self: self._gate(self.b, "i"))
    b_c = property(lambda self: self._gate(self.b, "c"))
    b_o = property(lambda self: self._gate(self.b, "o"))

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, output_dim: int, rng,
             init_scale: float = 0.08, forget_bias: float = 1.0) -> "LstmParams":
        H, D, O = hidden_dim, input_dim, output_dim
        W = rng.uniform(-init_scale, init_scale, size=(4 * H, H + D))
        b = np.zeros(4 * H)
        b[:H] = forget_bias
        W_y = rng.uniform(-init_scale, init_scale, size=(O, H))
        return cls(W=W, b=b, W_y=W_y, b_y=np.zeros(O))

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int, output_dim: int) -> "LstmParams":
        H = hidden_dim
        return cls(W=np.zeros((4 * H, H + input_dim)), b=np.zeros(4 * H),
                   W_y=np.zeros((output_dim, H)), b_y=np.zeros(output_dim))

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "b": self.b, "W_y": self.W_y, "b_y": self.b_y}

    def copy(self) -> "LstmParams":
        return LstmParams(self.W.copy(), self.b.copy(), self.W_y.copy(), self.b_y.copy(), self.trained)

    def to_json(self) -> dict:
        doc = {
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "output_dim": self.output_dim,
            "trained": self.trained,
        }
        for name in PARAM_NAMES:
            doc[name] = getattr(self, name).ravel().tolist()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "LstmParams":
        D, H, O = doc["input_dim"], doc["hidden_dim"], doc["output_dim"]
        W = np.vstack([np.array(doc[f"W_{g}"]).reshape(H, H + D) for g in _GATES])
        b = np.concatenate([np.array(doc[f"b_{g}"]) for g in _GATES])
        return cls(W=W, b=b, W_y=np.array(doc["W_y"]).reshape(O, H), b_y=np.array(doc["b_y"]),
                   trained=doc.get("trained", False))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "LstmParams":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_dim: int) -> "LstmState":
        return cls(np.zeros(hidden_dim), np.zeros(hidden_dim))


@dataclass
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 0.5
    grad_clip: float = 5.0
    seed: int = 42
    init_scale: float = 0.08
    hidden_dim: int = 32
    forget_bias: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")


def _step(params: LstmParams, h, c, x):
    z = np.concatenate([h, x])
    h_new, c_new, (f, i, g, o, tc) = _cell(params.W @ z + params.b, c, params.hidden_dim)
    y = params.W_y @ h_new + params.b_y
    return h_new, c_new, y, (z, f, i, g, o, c, tc)


def _cell(a, c, H):
    f = sigmoid(a[:H])
    i = sigmoid(a[H : 2 * H])
    g = np.tanh(a[2 * H : 3 * H])
    o = sigmoid(a[3 * H :])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    return o * tc, c_new, (f, i, g, o, tc)


def _check_input(params, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.input_dim,):
        raise ShapeError(f"input has shape {x.shape}, expected ({params.input_dim},)")
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite LSTM input")
    return x


def forward_step(params: LstmParams, state: LstmState, x):
    """One LSTM step. Returns ``(new_state, output)``."""
    x = _check_input(params, x)
    h, c, y, _ = _step(params, state.h, state.c, x)
    return LstmState(h, c), y


def gates(params: LstmParams, state: LstmState, x) -> dict[str, np.ndarray]:
    """Gate activations of one step, for inspection."""
    x = _check_input(params, x)
    _, c_new, _, (_, f, i, g, o, _, _) = _step(params, state.h, state.c, x)
    return {"f": f, "i": i, "c_tilde": g, "o": o, "c": c_new}


def forward_sequence(params: LstmParams, inputs) -> np.ndarray:
    """Outputs for every step, starting from the zero state. Shape (T, O)."""
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ShapeError("forward_sequence needs a non-empty (T, D) input")
    if X.shape[1] != params.input_dim:
        raise ShapeError(f"inputs have {X.shape[1]} features, expected {params.input_dim}")
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite LSTM input")
    H = params.hidden_dim
    Wh = params.W[:, :H]
    AX = X @ params.W[:, H:].T + params.b
    h, c = np.zeros(H), np.zeros(H)
    hs = np.empty((len(X), H))
    for t in range(len(X)):
        h, c, _ = _cell(AX[t] + Wh @ h, c, H)
        hs[t] = h
    return hs @ params.W_y.T + params.b_y


def _metric_inputs(A, A_hat):
    A = np.asarray(A, dtype=np.float64)
    A_hat = np.asarray(A_hat, dtype=np.float64)
    if A.shape != A_hat.shape:
        raise ShapeError(f"shape mismatch {A.shape} vs {A_hat.shape}")
    if A.size == 0:
        raise DegenerateError("empty matrices")
    return A, A_hat


def loss_mae(A, A_hat) -> float:
    A, A_hat = _metric_inputs(A, A_hat)
    return float(np.mean(np.abs(A - A_hat)))


def loss_mse(A, A_hat) -> float:
    A, A_hat = _metric_inputs(A, A_hat)
    return float(np.mean((A - A_hat) ** 2))


def loss_rmse(A, A_hat) -> float:
    return math.sqrt(loss_mse(A, A_hat))


@dataclass
class Gradients:
    W: np.ndarray
    b: np.ndarray
    W_y: np.ndarray
    b_y: np.ndarray
    loss: float = 0.0

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "b": self.b, "W_y": self.W_y, "b_y": self.b_y}

    def norm(self) -> float:
        return math.sqrt(sum(float(np.sum(g * g)) for g in self.arrays().values()))


def backward(params: LstmParams, inputs, targets, loss_scale: float = 1.0) -> Gradients:
    """Exact gradients of ``loss_scale * MSE(outputs, targets)`` over the sequence.

    The MSE averages over every (step, output) entry.
    """
    X = np.asarray(inputs, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    T = len(X)
    if Y.shape != (T, params.output_dim):
        raise ShapeError(f"targets have shape {Y.shape}, expected {(T, params.output_dim)}")
    H = params.hidden_dim
    Wh = params.W[:, :H]
    AX = X @ params.W[:, H:].T + params.b
    hs = np.zeros((T + 1, H))  # hs[t] is the state entering step t
    cs = np.zeros((T + 1, H))
    caches = []
    for t in range(T):
        hs[t + 1], cs[t + 1], cache = _cell(AX[t] + Wh @ hs[t], cs[t], H)
        caches.append(cache)
    outs = hs[1:] @ params.W_y.T + params.b_y
    err = outs - Y
    with np.errstate(over="ignore"):  # overflow is reported as NumericError below
        loss = loss_scale * float(np.mean(err * err))
    if not math.isfinite(loss):
        raise NumericError("non-finite loss")

    dY = err * (2.0 * loss_scale / err.size)
    gWy = dY.T @ hs[1:]
    gby = dY.sum(axis=0)
    dH = dY @ params.W_y  # loss gradient reaching each h_t through the readout
    DA = np.empty((T, 4 * H))
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    for t in range(T - 1, -1, -1):
        f, i, g, o, tc = caches[t]
        dh = dH[t] + dh_next
        dc = dh * o * (1.0 - tc * tc) + dc_next
        da = DA[t]
        da[:H] = dc * cs[t] * f * (1.0 - f)
        da[H : 2 * H] = dc * g * i * (1.0 - i)
        da[2 * H : 3 * H] = dc * i * (1.0 - g * g)
        da[3 * H :] = dh * tc * o * (1.0 - o)
        dh_next = Wh.T @ da
        dc_next = dc * f
    gW = np.hstack([DA.T @ hs[:-1], DA.T @ X])
    gb = DA.sum(axis=0)
    return Gradients(W=gW, b=gb, W_y=gWy, b_y=gby, loss=loss)


@dataclass
class TrainResult:
    params: LstmParams
    losses: list[float] = field(default_factory=list)


def train(dataset, cfg: TrainConfig, input_dim: int | None = None, output_dim: int | None = None,
          init: LstmParams | None = None) -> TrainResult:
    """Full-batch gradient descent over a list of ``(inputs, targets)`` sequences.

    Sequences are visited in the given order and their gradients averaged;
    the global gradient norm is clipped at ``cfg.grad_clip``. ``losses[e]``
    is the mean sequence MSE before the update of epoch ``e``.
    """
    dataset = [(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)) for x, y in dataset]
    if not dataset:
        raise ValueError("empty training set")
    D = input_dim or dataset[0][0].shape[1]
    O = output_dim or dataset[0][1].shape[1]
    if init is None:
        rng = np.random.default_rng(cfg.seed)
        params = LstmParams.init(D, cfg.hidden_dim, O, rng, cfg.init_scale, 1.0 if cfg.forget_bias else 0.0)
    else:
        params = init.copy()
    n = len(dataset)
    losses = []
    for epoch in range(cfg.epochs):
        total = None
        loss = 0.0
        for x, y in dataset:
            try:
                g = backward(params, x, y, loss_scale=1.0 / n)
            except NumericError as exc:
                raise TrainingError(f"training diverged at epoch {epoch}: {exc}", epoch=epoch) from exc
            loss += g.loss
            if total is None:
                total = g
            else:
                for k, v in g.arrays().items():
                    total.arrays()[k] += v
        losses.append(loss)
        norm = total.norm()
        if not math.isfinite(norm):
            raise TrainingError(f"non-finite gradient at epoch {epoch}", epoch=epoch)
        step = cfg.learning_rate
        if norm > cfg.grad_clip:
            step *= cfg.grad_clip / norm
        params.W -= step * total.W
        params.b -= step * total.b
        params.W_y -= step * total.W_y
        params.b_y -= step * total.b_y
    params.trained = True
    return TrainResult(params=params, losses=losses)


def predict_next(params: LstmParams, states) -> np.ndarray:
    """Run a history of state matrices (flattened row-major) and return the last output."""
    if not params.trained:
        raise StateError("LSTM parameters have not been trained")
    X = np.asarray([np.asarray(s, dtype=np.float64).ravel() for s in states])
    if len(X) == 0:
        raise ShapeError("need at least one state matrix")
    return forward_sequence(params, X)[-1]


def save_trace(losses, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("epoch,mse\n")
        for e, v in enumerate(losses):
            fh.write(f"{e},{v!r}\n")
