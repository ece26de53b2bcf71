"""Two-hidden-layer tanh networks trained by full-batch gradient descent.

Three output heads share the body:

``homoscedastic``
    one output, the mean; the noise variance is fixed at
    ``TrainConfig.homoscedastic_sigma2``.
``heteroscedastic``
    two outputs, mean and log-variance.
``softmax``
    K logits.

Training minimises the mean negative log-likelihood with heavy-ball momentum
and a global gradient-norm clip.
"""

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import DimensionMismatch, DivergedTraining
from ..rng import CounterRng

HEADS = ("homoscedastic", "heteroscedastic", "softmax")
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TrainConfig:
    hidden_widths: tuple = (50, 50)
    activation: str = "tanh"
    learning_rate: float = 0.05
    epochs: int = 5000
    seed: int = 0
    homoscedastic_sigma2: float = 0.01
    momentum: float = 0.9
    clip_norm: float | None = 0.1

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if len(self.hidden_widths) != 2 or min(self.hidden_widths) < 1:
            raise ValueError("hidden_widths must be two positive integers")
        if self.activation != "tanh":
            raise ValueError("only the tanh activation is implemented")
        if not self.learning_rate > 0 or self.epochs < 1 or not self.homoscedastic_sigma2 > 0:
            raise ValueError("learning_rate, epochs and homoscedastic_sigma2 must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ValueError("clip_norm must be positive or None")


@dataclass(eq=False)
class MlpParameters:
    weights: list
    biases: list
    head: str
    config: TrainConfig = field(default_factory=TrainConfig)
    final_loss: float | None = None

    @property
    def input_dim(self):
        return self.weights[0].shape[0]

    @property
    def output_dim(self):
        return self.weights[-1].shape[1]

    def arrays(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def flat(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_flat(self, vector):
        vector = np.asarray(vector, dtype=np.float64)
        arrays, pos = [], 0
        for a in self.arrays():
            arrays.append(vector[pos:pos + a.size].reshape(a.shape).copy())
            pos += a.size
        return MlpParameters(arrays[0::2], arrays[1::2], self.head, self.config)

    def copy(self):
        return self.with_flat(self.flat())

    # -- serialisation ---------------------------------------------------------

    def to_dict(self):
        cfg = asdict(self.config)
        cfg["hidden_widths"] = list(cfg["hidden_widths"])
        return {
            "schema": 1,
            "kind": "mlp",
            "head": self.head,
            "architecture": [self.input_dim, *self.config.hidden_widths, self.output_dim],
            "config": cfg,
            "layers": [{"weight": w.tolist(), "bias": b.tolist()}
                       for w, b in zip(self.weights, self.biases)],
        }

    @classmethod
    def from_dict(cls, obj):
        cfg = TrainConfig(**obj["config"])
        weights = [np.array(layer["weight"], dtype=np.float64) for layer in obj["layers"]]
        biases = [np.array(layer["bias"], dtype=np.float64) for layer in obj["layers"]]
        return cls(weights, biases, obj["head"], cfg)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def output_dim_for(head, n_classes=None):
    if head == "homoscedastic":
        return 1
    if head == "heteroscedastic":
        return 2
    if head == "softmax":
        if not n_classes or n_classes < 2:
            raise ValueError("softmax head needs n_classes >= 2")
        return n_classes
    raise ValueError(f"unknown head {head!r}; expected one of {HEADS}")


def init_parameters(input_dim, output_dim, config, head):
    """Glorot-uniform weights drawn from ``CounterRng(config.seed)``, zero biases."""
    rng = CounterRng(config.seed)
    sizes = [input_dim, *config.hidden_widths, output_dim]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        r = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform((fan_in, fan_out), low=-r, high=r))
        biases.append(np.zeros(fan_out))
    return MlpParameters(weights, biases, head, config)


def _check_input(params, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None] if params.input_dim == 1 else x[None, :]
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise DimensionMismatch(f"expected inputs with {params.input_dim} features, got shape {x.shape}")
    return x


def forward(params, x, masks=None):
    """Raw head outputs, plus hidden activations for backprop.

    ``masks`` optionally scales each hidden layer elementwise (dropout).
    """
    w1, w2, w3 = params.weights
    b1, b2, b3 = params.biases
    h1 = np.tanh(x @ w1 + b1)
    a1 = h1 if masks is None else h1 * masks[0]
    h2 = np.tanh(a1 @ w2 + b2)
    a2 = h2 if masks is None else h2 * masks[1]
    return a2 @ w3 + b3, (h1, a1, h2, a2)


def _head_loss(out, target, head, sigma2):
    """Mean NLL and its gradient with respect to the raw head outputs."""
    n = out.shape[0]
    if head == "homoscedastic":
        r = out[:, 0] - target
        loss = 0.5 * (_LOG_2PI + math.log(sigma2)) + np.mean(r * r) / (2.0 * sigma2)
        return loss, (r / (sigma2 * n))[:, None]
    if head == "heteroscedastic":
        r = out[:, 0] - target
        s = out[:, 1]
        inv = np.exp(-s)
        loss = 0.5 * np.mean(_LOG_2PI + s + r * r * inv)
        return loss, np.stack([r * inv, 0.5 * (1.0 - r * r * inv)], axis=1) / n
    shifted = out - out.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_p = shifted - log_z[:, None]
    rows = np.arange(n)
    loss = -np.mean(log_p[rows, target])
    d = np.exp(log_p)
    d[rows, target] -= 1.0
    return loss, d / n


def loss_and_grad(params, x, target, masks=None):
    """Mean NLL over the batch and its gradient as ``[dW1, db1, dW2, db2, dW3, db3]``."""
    out, (h1, a1, h2, a2) = forward(params, x, masks)
    loss, d_out = _head_loss(out, target, params.head, params.config.homoscedastic_sigma2)
    w2, w3 = params.weights[1], params.weights[2]
    g_w3 = a2.T @ d_out
    g_b3 = d_out.sum(axis=0)
    d_a2 = d_out @ w3.T
    d_h2 = d_a2 if masks is None else d_a2 * masks[1]
    d_z2 = d_h2 * (1.0 - h2 * h2)
    g_w2 = a1.T @ d_z2
    g_b2 = d_z2.sum(axis=0)
    d_a1 = d_z2 @ w2.T
    d_h1 = d_a1 if masks is None else d_a1 * masks[0]
    d_z1 = d_h1 * (1.0 - h1 * h1)
    g_w1 = x.T @ d_z1
    g_b1 = d_z1.sum(axis=0)
    return float(loss), [g_w1, g_b1, g_w2, g_b2, g_w3, g_b3]


def loss_value(params, x, target):
    out, _ = forward(params, x)
    return float(_head_loss(out, target, params.head, params.config.homoscedastic_sigma2)[0])


def _prepare(x, y, head):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y)
    if x.shape[0] == 0 or y.shape != (x.shape[0],):
        raise ValueError("need a non-empty (n, d) input array and n targets")
    target = y.astype(np.int64) if head == "softmax" else y.astype(np.float64)
    return x, target


def train_mlp(x, y, config=None, head="heteroscedastic", n_classes=None):
    """Fit one network by ``config.epochs`` full-batch momentum steps on the mean NLL.

    Deterministic given ``config.seed``. Raises :class:`DivergedTraining` if
    the loss or the gradient stops being finite.
    """
    config = config or TrainConfig()
    x, target = _prepare(x, y, head)
    if head == "softmax" and n_classes is None:
        n_classes = int(target.max()) + 1
    params = init_parameters(x.shape[1], output_dim_for(head, n_classes), config, head)
    arrays = params.arrays()
    velocity = [np.zeros_like(a) for a in arrays]
    lr, mom, clip = config.learning_rate, config.momentum, config.clip_norm
    for epoch in range(config.epochs):
        loss, grads = loss_and_grad(params, x, target)
        sq = sum(float(np.vdot(g, g)) for g in grads)
        if not (math.isfinite(loss) and math.isfinite(sq)):
            raise DivergedTraining(f"non-finite loss at epoch {epoch} (seed {config.seed})")
        scale = 1.0
        if clip is not None and sq > clip * clip:
            scale = clip / math.sqrt(sq)
        for a, v, g in zip(arrays, velocity, grads):
            v *= mom
            v += scale * g
            a -= lr * v
    params.final_loss = loss_value(params, x, target)
    if not math.isfinite(params.final_loss):
        raise DivergedTraining(f"non-finite final loss (seed {config.seed})")
    return params


def softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def head_distribution(params, out):
    """Map raw outputs to (means, variances) or class probabilities."""
    if params.head == "homoscedastic":
        return out[:, 0], np.full(out.shape[0], params.config.homoscedastic_sigma2)
    if params.head == "heteroscedastic":
        return out[:, 0], np.exp(out[:, 1])
    return softmax(out)


def predict_one(params, x):
    x = _check_input(params, x)
    return head_distribution(params, forward(params, x)[0])


def with_seed(config, seed):
    return replace(config, seed=int(seed))
