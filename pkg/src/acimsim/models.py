"""Tiny MLP with closed-form backprop, QAT (straight-through) and NAT.

The trainer never differentiates through the simulation engine; noise-aware
training uses the multiplicative surrogate O * (1 + eta) on each matmul output
and quantization uses the straight-through estimator.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng
from .engine import EngineMode, simulate_matmul, softmax
from .errors import TrainingError
from .macro import MacroConfig, NoiseSpec
from .quant import QuantParams, Signedness, dequantize, quantize


@dataclass
class LinearLayer:
    w: np.ndarray   # [in, out], matching the engine's stationary layout
    b: np.ndarray   # [out]


class Relu:
    def __repr__(self):
        return "Relu()"


@dataclass
class TinyModel:
    layers: list
    w_bits: int = 8
    x_bits: int = 8
    nat_sigma: float = 0.0
    baseline_acc: Optional[float] = None

    def linear_layers(self) -> list:
        return [l for l in self.layers if isinstance(l, LinearLayer)]


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.05
    epochs: int = 40
    batch: int = 32
    seed: int = 0
    w_bits: int = 8
    x_bits: int = 8
    nat_sigma: float = 0.0

    def __post_init__(self):
        if self.lr <= 0:
            raise TrainingError(f"lr must be > 0, got {self.lr}")
        if self.epochs < 1:
            raise TrainingError(f"epochs must be >= 1, got {self.epochs}")
        if self.nat_sigma < 0:
            raise TrainingError(f"nat_sigma must be >= 0, got {self.nat_sigma}")


def init_mlp(dims: list, seed: int) -> TinyModel:
    """He-initialized MLP with ReLU between consecutive linear layers."""
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    layers = []
    for i, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
        if i:
            layers.append(Relu())
        layers.append(LinearLayer(
            w=gen.normal(0.0, np.sqrt(2.0 / d_in), size=(d_in, d_out)),
            b=np.zeros(d_out)))
    return TinyModel(layers)


def _signedness_for(t: np.ndarray) -> Signedness:
    return Signedness.UNSIGNED if t.size == 0 or t.min() >= 0 \
        else Signedness.TWOS_COMPLEMENT


def _ste_mask(t: np.ndarray, params: QuantParams) -> np.ndarray:
    lo, hi = params.value_range
    return ((t >= lo) & (t <= hi)).astype(np.float64)


def _forward(model: TinyModel, x: np.ndarray, quantized: bool,
             nat_sigma: float, seed: int, nat_ctx: Optional[rng.RngContext]):
    """Shared forward pass; returns (output, caches) for the backward pass."""
    caches = []
    a = np.asarray(x, dtype=np.float64)
    linear_index = 0
    for layer in model.layers:
        if isinstance(layer, Relu):
            mask = (a > 0).astype(np.float64)
            caches.append(("relu", mask))
            a = a * mask
            continue
        if quantized:
            aq_t = quantize(a, model.x_bits, _signedness_for(a))
            wq_t = quantize(layer.w, model.w_bits, Signedness.TWOS_COMPLEMENT)
            aq, wq = dequantize(aq_t), dequantize(wq_t)
            a_mask = _ste_mask(a, aq_t.params)
            w_mask = _ste_mask(layer.w, wq_t.params)
        else:
            aq, wq = a, layer.w
            a_mask = w_mask = None
        z = aq @ wq
        gain = None
        if nat_sigma > 0:
            ctx = (nat_ctx or rng.RngContext()).replace(layer=linear_index)
            gain = 1.0 + nat_sigma * rng.normal(seed, ctx, rng.TAG_NAT, z.shape)
            z = z * gain
        caches.append(("linear", layer, aq, wq, a_mask, w_mask, gain))
        a = z + layer.b
        linear_index += 1
    return a, caches


def forward_float(model: TinyModel, batch) -> np.ndarray:
    """Plain floating-point forward pass (the ideal reference output)."""
    out, _ = _forward(model, batch, quantized=False, nat_sigma=0.0,
                      seed=0, nat_ctx=None)
    return out


def forward_qat(model: TinyModel, batch, cfg: TrainConfig) -> np.ndarray:
    """Forward pass with fake-quantized weights and activations."""
    out, _ = _forward(model, batch, quantized=True, nat_sigma=0.0,
                      seed=cfg.seed, nat_ctx=None)
    return out


def forward_nat(model: TinyModel, batch, cfg: TrainConfig,
                ctx: rng.RngContext) -> np.ndarray:
    """QAT forward with multiplicative Gaussian noise on each matmul output.

    eta is drawn per element, fresh for every (ctx, layer) combination; vary
    ctx.sample across passes to resample.
    """
    out, _ = _forward(model, batch, quantized=True, nat_sigma=cfg.nat_sigma,
                      seed=cfg.seed, nat_ctx=ctx)
    return out


def cross_entropy(logits: np.ndarray, labels: np.ndarray):
    p = softmax(logits, axis=1)
    n = logits.shape[0]
    loss = float(-np.mean(np.log(p[np.arange(n), labels] + 1e-300)))
    dlogits = p.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def loss_and_grads(model: TinyModel, x, labels, cfg: TrainConfig,
                   quantized: bool = True,
                   nat_ctx: Optional[rng.RngContext] = None):
    """Cross-entropy loss and closed-form gradients for every linear layer.

    Quantizer gradients use the straight-through estimator: unit passthrough
    inside the representable range, zero in the clipped region. Returns
    (loss, grads) with grads[i] = (dw, db) aligned to model.layers.
    """
    sigma = cfg.nat_sigma if nat_ctx is not None else 0.0
    logits, caches = _forward(model, x, quantized, sigma, cfg.seed, nat_ctx)
    loss, delta = cross_entropy(logits, np.asarray(labels))
    grads = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        cache = caches[i]
        if cache[0] == "relu":
            delta = delta * cache[1]
            continue
        _, layer, aq, wq, a_mask, w_mask, gain = cache
        db = delta.sum(axis=0)
        dz = delta if gain is None else delta * gain
        dw = aq.T @ dz
        da = dz @ wq.T
        if quantized:
            dw = dw * w_mask
            da = da * a_mask
        grads[i] = (dw, db)
        delta = da
    return loss, grads


def train(model: TinyModel, dataset, cfg: TrainConfig):
    """Plain SGD; deterministic given cfg.seed. Returns (model, loss_curve)."""
    x, y = dataset
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    model.w_bits, model.x_bits = cfg.w_bits, cfg.x_bits
    model.nat_sigma = cfg.nat_sigma
    shuffler = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(rng.TAG_DATA,))))
    losses = []
    step = 0
    for epoch in range(cfg.epochs):
        perm = shuffler.permutation(len(x))
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(x), cfg.batch):
            idx = perm[start:start + cfg.batch]
            nat_ctx = rng.RngContext(sample=step) if cfg.nat_sigma > 0 else None
            loss, grads = loss_and_grads(model, x[idx], y[idx], cfg,
                                         quantized=True, nat_ctx=nat_ctx)
            if not np.isfinite(loss):
                raise TrainingError(f"loss diverged at epoch {epoch}")
            for layer, grad in zip(model.layers, grads):
                if grad is None:
                    continue
                dw, db = grad
                layer.w = layer.w - cfg.lr * dw
                layer.b = layer.b - cfg.lr * db
            epoch_loss += loss
            n_batches += 1
            step += 1
        losses.append(epoch_loss / n_batches)
    return model, losses


def evaluate_digital(model: TinyModel, dataset, cfg: TrainConfig) -> float:
    """Top-1 accuracy of the fake-quantized (digital) forward pass."""
    x, y = dataset
    logits = forward_qat(model, x, cfg)
    return float(np.mean(np.argmax(logits, axis=1) == np.asarray(y)))


def engine_forward(model: TinyModel, x, cfg: MacroConfig, spec: NoiseSpec,
                   mode: EngineMode):
    """Run every linear layer on the simulation engine.

    ReLU and bias stay in floating point; activations are re-quantized before
    each layer with signedness inferred from the data (post-ReLU tensors are
    unsigned). Returns (logits, total_cycles, analog_ratio).
    """
    a = np.asarray(x, dtype=np.float64)
    total_cycles = 0
    ratio = 1.0
    linear_index = 0
    for layer in model.layers:
        if isinstance(layer, Relu):
            a = np.maximum(a, 0.0)
            continue
        act_q = quantize(a, model.x_bits, _signedness_for(a))
        w_q = quantize(layer.w, model.w_bits, Signedness.TWOS_COMPLEMENT)
        res = simulate_matmul(act_q, w_q, cfg, spec, mode, layer=linear_index)
        a = res.output + layer.b
        total_cycles += res.total_cycles
        ratio = res.analog_ratio
        linear_index += 1
    return a, total_cycles, ratio


def evaluate_on_engine(model: TinyModel, dataset, cfg: MacroConfig,
                       spec: NoiseSpec, mode: EngineMode) -> float:
    """Top-1 accuracy with all linear layers executed by the engine."""
    x, y = dataset
    logits, _, _ = engine_forward(model, x, cfg, spec, mode)
    return float(np.mean(np.argmax(logits, axis=1) == np.asarray(y)))
