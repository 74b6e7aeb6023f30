"""Analytics: CSNR/SQNR estimators, MAC distributions, linearity sweeps.

Infinite-dB cases (no error at all, or no signal) are reported as explicit
float('inf') / float('-inf') markers, never as sentinel numbers.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .engine import EngineMode, simulate_matmul
from .errors import DomainError, ShapeError
from .macro import (NOISELESS, MacroConfig, NoiseSpec, adc_readout,
                    apply_noise, majority_vote_readout)
from .quant import QuantizedTensor


def _to_db(ratio: float) -> float:
    if math.isinf(ratio):
        return math.inf
    if ratio <= 0:
        return -math.inf
    return 10.0 * math.log10(ratio)


@dataclass(frozen=True)
class CsnrReport:
    db: float
    signal_power: float
    noise_power: float
    trials: int


def csnr_measure(ideal, simulated) -> CsnrReport:
    """Power-ratio CSNR/SQNR: 10 log10(sum y^2 / sum (y - y_hat)^2)."""
    y = np.asarray(ideal, dtype=np.float64)
    y_hat = np.asarray(simulated, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ShapeError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    signal = float(np.sum(y * y))
    noise = float(np.sum((y - y_hat) ** 2))
    if noise == 0:
        db = math.inf
    elif signal == 0:
        db = -math.inf
    else:
        db = _to_db(signal / noise)
    return CsnrReport(db, signal, noise, y.size)


@dataclass(frozen=True)
class VarianceCsnr:
    """Variance-ratio SQNR/CSNR sums plus combined total-error forms.

    `terms` holds the linear per-source ratios var(y)/var(error source) for
    input quantization, output quantization, and analog noise; absent sources
    appear as inf and are skipped in the sums (so noisy == quantized collapses
    CSNR onto SQNR). The *_total_db fields divide by the summed error
    variances instead and are directly comparable to csnr_measure.
    """

    terms: dict
    sqnr_db: float
    csnr_db: float
    sqnr_total_db: float
    csnr_total_db: float


def csnr_variance_form(ideal, quant_in, quant_out, noisy) -> VarianceCsnr:
    arrays = [np.asarray(a, dtype=np.float64)
              for a in (ideal, quant_in, quant_out, noisy)]
    if len({a.shape for a in arrays}) != 1:
        raise ShapeError("all four outputs must share a shape")
    y, q_in, q_out, noisy = arrays
    var_y = float(np.var(y))
    errors = {
        "input_quant": float(np.var(q_in - y)),
        "output_quant": float(np.var(q_out - q_in)),
        "analog": float(np.var(noisy - q_out)),
    }
    terms = {k: (math.inf if v == 0 else var_y / v) for k, v in errors.items()}

    def vsum(keys):
        finite = [terms[k] for k in keys if math.isfinite(terms[k])]
        return sum(finite) if finite else math.inf

    def total(keys):
        denom = sum(errors[k] for k in keys)
        return math.inf if denom == 0 else var_y / denom

    quant_keys = ("input_quant", "output_quant")
    all_keys = quant_keys + ("analog",)
    return VarianceCsnr(
        terms=terms,
        sqnr_db=_to_db(vsum(quant_keys)),
        csnr_db=_to_db(vsum(all_keys)),
        sqnr_total_db=_to_db(total(quant_keys)),
        csnr_total_db=_to_db(total(all_keys)))


@dataclass(frozen=True)
class MacHistogram:
    """Per-cycle counts over ADC-input levels, keyed by (w_bit, act_group)."""

    counts: dict
    config: MacroConfig

    @property
    def total_mass(self) -> int:
        return int(sum(int(c.sum()) for c in self.counts.values()))

    def cycle_mean(self, key) -> float:
        c = self.counts[key]
        levels = np.arange(c.size)
        return float((levels * c).sum() / c.sum())

    def to_rows(self) -> list:
        rows = []
        for (w_bit, act_group) in sorted(self.counts):
            c = self.counts[(w_bit, act_group)]
            for level in np.flatnonzero(c):
                rows.append((w_bit, act_group, int(level), int(c[level])))
        return rows


def mac_distribution(act: QuantizedTensor, w: QuantizedTensor,
                     cfg: MacroConfig, mode: EngineMode) -> MacHistogram:
    """Record every noiseless ideal level the engine would convert."""
    res = simulate_matmul(act, w, cfg, NOISELESS, mode, record_levels=True)
    return MacHistogram(res.level_counts, cfg)


def expected_mac(p_w: float, p_x: float, rows: int) -> float:
    """Expected per-cycle MAC level from bit-level sparsities: rows*p_w*p_x."""
    for name, p in (("p_w", p_w), ("p_x", p_x)):
        if not (0.0 <= p <= 1.0):
            raise DomainError(f"{name} must lie in [0, 1], got {p}")
    return rows * p_w * p_x


@dataclass(frozen=True)
class LinearitySweep:
    levels: np.ndarray
    mean: np.ndarray
    sigma: np.ndarray

    def to_rows(self) -> list:
        return [(int(l), float(m), float(s))
                for l, m, s in zip(self.levels, self.mean, self.sigma)]


def linearity_sweep(cfg: MacroConfig, spec: NoiseSpec, trials: int,
                    levels=None, samples: int = 1) -> LinearitySweep:
    """Mean and sigma of readout codes per ideal level, in LSB units.

    With samples > 1 each trial is a majority vote and the statistics are
    taken on the vote before final rounding, which is what accumulation sees.
    """
    if trials < 100:
        raise DomainError(f"linearity_sweep needs trials >= 100, got {trials}")
    n_fs = cfg.full_scale_counts
    if levels is None:
        if n_fs <= 256:
            levels = np.arange(n_fs + 1)
        else:
            levels = np.unique(np.linspace(0, n_fs, 257).round().astype(np.int64))
    levels = np.asarray(levels, dtype=np.int64)
    mean = np.empty(levels.size)
    sigma = np.empty(levels.size)
    for i, v in enumerate(levels):
        ctx = rng.RngContext(column=int(v))
        batch = np.full(trials, v, dtype=np.float64)
        if samples == 1:
            code, _ = adc_readout(apply_noise(batch, spec, cfg, ctx), cfg)
            est = code.astype(np.float64)
        else:
            _, mac = majority_vote_readout(batch, samples, spec, cfg, ctx)
            est = mac / cfg.lsb_counts
        mean[i] = est.mean()
        sigma[i] = est.std()
    return LinearitySweep(levels, mean, sigma)


@dataclass(frozen=True)
class ErrorHistogram:
    offsets: np.ndarray   # signed code errors
    counts: np.ndarray
    mean: float
    trials: int

    def to_rows(self) -> list:
        return [(int(o), int(c)) for o, c in zip(self.offsets, self.counts)]


def error_histogram(cfg: MacroConfig, spec: NoiseSpec,
                    trials: int) -> ErrorHistogram:
    """Signed code-error histogram over random operand vectors.

    Operands are Bernoulli(0.5) weight bits against uniform activation groups,
    drawn from the spec seed; the error is noisy code minus noiseless code.
    """
    if trials < 1000:
        raise DomainError(f"error_histogram needs trials >= 1000, got {trials}")
    batch = 4096
    tallies = {}
    done = 0
    index = 0
    while done < trials:
        n = min(batch, trials - done)
        ctx = rng.RngContext(sample=index)
        gen = rng.stream(spec.seed, ctx, rng.TAG_DATA)
        w = gen.integers(0, 2, size=(n, cfg.rows))
        a = gen.integers(0, 1 << cfg.enc_bits, size=(n, cfg.rows))
        levels = (w * a).sum(axis=1)
        ideal_code, _ = adc_readout(levels, cfg)
        noisy_code, _ = adc_readout(apply_noise(levels, spec, cfg, ctx), cfg)
        offs, cnts = np.unique(noisy_code - ideal_code, return_counts=True)
        for o, c in zip(offs, cnts):
            tallies[int(o)] = tallies.get(int(o), 0) + int(c)
        done += n
        index += 1
    offsets = np.array(sorted(tallies), dtype=np.int64)
    counts = np.array([tallies[int(o)] for o in offsets], dtype=np.int64)
    mean = float((offsets * counts).sum() / counts.sum())
    return ErrorHistogram(offsets, counts, mean, trials)
