"""Bit-wise simulation engine: cycle planning, tiling, shift-accumulate.

A matmul is executed as nested loops over row tiles, weight bits, and
activation groups. Each (tile, cycle, column) produces one analog level that
passes through the macro model before being accumulated with its signed
power-of-two shift weight. Accumulation is exact integer arithmetic on counts;
floating point enters only at the final rescale.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from .errors import ConfigError, ShapeError
from .macro import (MacroConfig, NoiseSpec, adc_readout, apply_noise,
                    majority_vote_readout)
from .quant import (QuantizedTensor, Signedness, decompose_bits,
                    encode_activation_groups, group_layout, quantize)
from .rng import RngContext
from .tensor import Shape2D, conv_output_shape, im2col, round_half_away


class Domain(Enum):
    ANALOG = "analog"
    DIGITAL = "digital"


@dataclass(frozen=True)
class CycleEntry:
    w_bit: int
    w_sign: int
    act_group: int
    act_sign: int
    shift: int
    domain: Domain = Domain.ANALOG
    oversample: int = 1

    @property
    def sign(self) -> int:
        return self.w_sign * self.act_sign


@dataclass(frozen=True)
class VotingSpec:
    boundary: int
    samples: int

    def __post_init__(self):
        if self.boundary < 1 or self.samples < 1:
            raise ConfigError("voting boundary and samples must be >= 1")


@dataclass(frozen=True)
class EngineMode:
    """Scheme selection: enc_bits = 1 is bit-serial, > 1 is bit-parallel.

    hybrid_boundary L moves the top L shift levels to the digital domain;
    voting oversamples the top `boundary` analog shift levels `samples` times.
    """

    enc_bits: int = 1
    hybrid_boundary: Optional[int] = None
    voting: Optional[VotingSpec] = None

    def __post_init__(self):
        if self.enc_bits < 1:
            raise ConfigError(f"enc_bits must be >= 1, got {self.enc_bits}")

    @property
    def scheme(self) -> str:
        return "bit-serial" if self.enc_bits == 1 else "bit-parallel"

    @classmethod
    def bit_serial(cls, **kw) -> "EngineMode":
        return cls(enc_bits=1, **kw)

    @classmethod
    def bit_parallel(cls, enc_bits: int, **kw) -> "EngineMode":
        if enc_bits < 2:
            raise ConfigError("bit-parallel needs enc_bits >= 2")
        return cls(enc_bits=enc_bits, **kw)


@dataclass(frozen=True)
class CyclePlan:
    entries: tuple

    @property
    def cycles_per_tile(self) -> int:
        return sum(e.oversample for e in self.entries)

    @property
    def analog_ratio(self) -> float:
        analog = sum(1 for e in self.entries if e.domain is Domain.ANALOG)
        return analog / len(self.entries)

    @property
    def max_shift(self) -> int:
        return max(e.shift for e in self.entries)


def plan_cycles(w_bits: int, x_bits: int, x_signedness: Signedness,
                w_signedness: Signedness, mode: EngineMode) -> CyclePlan:
    """Expand bit widths and mode into the ordered per-tile cycle schedule.

    Weights are always bit-serial; activations follow the mode's y-bit group
    layout with a bit-serial sign group for signed tensors. Sign factors land
    on 2's-complement MSB planes/groups, and shift = weight bit + group shift.
    """
    for val, name in ((w_bits, "w_bits"), (x_bits, "x_bits")):
        if not (2 <= val <= 16):
            raise ConfigError(f"{name} must be in [2, 16], got {val}")
    layout = group_layout(x_bits, x_signedness, mode.enc_bits)
    entries = []
    for q in range(w_bits):
        w_sign = -1 if (w_signedness is Signedness.TWOS_COMPLEMENT
                        and q == w_bits - 1) else 1
        for gi, (_width, gshift, sign_group) in enumerate(layout):
            entries.append(CycleEntry(
                w_bit=q, w_sign=w_sign, act_group=gi,
                act_sign=-1 if sign_group else 1, shift=q + gshift))
    shifts = sorted({e.shift for e in entries}, reverse=True)
    if mode.hybrid_boundary is not None:
        lvl = mode.hybrid_boundary
        if not (1 <= lvl <= len(shifts)):
            raise ConfigError(
                f"hybrid boundary {lvl} outside the {len(shifts)} shift levels")
        digital = set(shifts[:lvl])
        entries = [replace(e, domain=Domain.DIGITAL) if e.shift in digital else e
                   for e in entries]
    if mode.voting is not None:
        analog_shifts = sorted({e.shift for e in entries
                                if e.domain is Domain.ANALOG}, reverse=True)
        lvl = mode.voting.boundary
        if not (1 <= lvl <= len(analog_shifts)):
            raise ConfigError(
                f"voting boundary {lvl} outside the {len(analog_shifts)} "
                "analog shift levels")
        voted = set(analog_shifts[:lvl])
        entries = [replace(e, oversample=mode.voting.samples)
                   if e.domain is Domain.ANALOG and e.shift in voted else e
                   for e in entries]
    return CyclePlan(tuple(entries))


@dataclass
class SimLayerResult:
    output: np.ndarray
    cycle_count: int          # per tile, counting oversample repeats
    analog_ratio: float
    tiles: int
    level_counts: Optional[dict] = None   # (w_bit, act_group) -> histogram

    def __post_init__(self):
        if not (0.0 <= self.analog_ratio <= 1.0):
            raise ConfigError("analog_ratio must lie in [0, 1]")

    @property
    def total_cycles(self) -> int:
        return self.tiles * self.cycle_count


def _auto_signedness(t: np.ndarray) -> Signedness:
    return Signedness.UNSIGNED if t.size == 0 or t.min() >= 0 \
        else Signedness.TWOS_COMPLEMENT


def _bit_pair(bits) -> tuple:
    if isinstance(bits, tuple):
        w_bits, x_bits = bits
        return int(w_bits), int(x_bits)
    return int(bits), int(bits)


def simulate_matmul(act: QuantizedTensor, w: QuantizedTensor,
                    cfg: MacroConfig, spec: NoiseSpec, mode: EngineMode,
                    layer: int = 0, record_levels: bool = False) -> SimLayerResult:
    """Simulate act[B,D] @ w[D,M] with w stationary in the macro.

    D is tiled into ceil(D/rows) mappings; every (tile, cycle) level goes
    through noise and ADC readout (digital cycles compute the exact MAC; voted
    cycles use majority_vote_readout). Readouts are snapped back to integer
    counts before the signed shift-accumulate, and the final counts are scaled
    by both quantization scales.
    """
    if act.codes.ndim != 2 or w.codes.ndim != 2:
        raise ShapeError("simulate_matmul expects 2-D operands")
    b, d = act.shape
    d_w, m = w.shape
    if d != d_w:
        raise ShapeError(f"inner dimensions differ: {d} vs {d_w}")
    if mode.enc_bits != cfg.enc_bits:
        raise ConfigError(
            f"mode enc_bits {mode.enc_bits} != macro enc_bits {cfg.enc_bits}")
    plan = plan_cycles(w.params.bits, act.params.bits, act.params.signedness,
                       w.params.signedness, mode)
    w_planes = decompose_bits(w).planes
    groups = encode_activation_groups(decompose_bits(act), cfg.enc_bits).groups
    n_fs = cfg.full_scale_counts
    tile_slices = [slice(i, min(i + cfg.rows, d)) for i in range(0, d, cfg.rows)]
    accum = np.zeros((b, m), dtype=np.int64)
    hist = {} if record_levels else None
    for t, sl in enumerate(tile_slices):
        for e in plan.entries:
            levels = groups[e.act_group].values[:, sl] @ w_planes[e.w_bit][sl, :]
            if record_levels:
                key = (e.w_bit, e.act_group)
                counts = np.bincount(levels.ravel(), minlength=n_fs + 1)
                hist[key] = hist.get(key, 0) + counts
            if e.domain is Domain.DIGITAL:
                counts_int = levels
            else:
                ctx = RngContext(layer=layer, tile=t, w_bit=e.w_bit,
                                 act_group=e.act_group)
                if e.oversample > 1:
                    _, mac = majority_vote_readout(levels, e.oversample,
                                                   spec, cfg, ctx)
                elif spec.silent:
                    _, mac = adc_readout(levels, cfg)
                else:
                    _, mac = adc_readout(apply_noise(levels, spec, cfg, ctx), cfg)
                counts_int = round_half_away(mac).astype(np.int64)
            accum += (e.sign << e.shift) * counts_int
    return SimLayerResult(
        output=accum * (act.params.scale * w.params.scale),
        cycle_count=plan.cycles_per_tile,
        analog_ratio=plan.analog_ratio,
        tiles=len(tile_slices),
        level_counts=hist)


def simulate_linear(act: QuantizedTensor, w: QuantizedTensor,
                    bias, cfg: MacroConfig, spec: NoiseSpec,
                    mode: EngineMode, layer: int = 0) -> SimLayerResult:
    """simulate_matmul plus a floating-point bias add (bias is not ACiM work)."""
    res = simulate_matmul(act, w, cfg, spec, mode, layer=layer)
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (w.shape[1],):
            raise ShapeError(
                f"bias shape {bias.shape} does not match {w.shape[1]} outputs")
        res.output = res.output + bias
    return res


def simulate_conv2d(act, w, stride: int, padding: int, bits,
                    cfg: MacroConfig, spec: NoiseSpec, mode: EngineMode,
                    layer: int = 0) -> SimLayerResult:
    """Quantize, lower [C,H,W] x [F,C,kh,kw] to im2col matmul, reshape back.

    `bits` is an int or a (w_bits, x_bits) pair. Activation signedness is
    chosen from the data (unsigned when everything is non-negative); padding
    zeros map to code 0 exactly under symmetric quantization.
    """
    w_bits, x_bits = _bit_pair(bits)
    act = np.asarray(act, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if act.ndim != 3 or w.ndim != 4:
        raise ShapeError("simulate_conv2d expects act[C,H,W] and w[F,C,kh,kw]")
    if act.shape[0] != w.shape[1]:
        raise ShapeError(f"channel mismatch: {act.shape[0]} vs {w.shape[1]}")
    f, _c, kh, kw = w.shape
    act_q = quantize(act, x_bits, _auto_signedness(act))
    w_q = quantize(w, w_bits, Signedness.TWOS_COMPLEMENT)
    patches = im2col(act_q.codes, Shape2D(kh, kw), stride, padding)
    res = simulate_matmul(
        QuantizedTensor(patches, act_q.params),
        QuantizedTensor(w_q.codes.reshape(f, -1).T, w_q.params),
        cfg, spec, mode, layer=layer)
    out_h, out_w = conv_output_shape(act.shape[1], act.shape[2],
                                     Shape2D(kh, kw), stride, padding)
    res.output = res.output.T.reshape(f, out_h, out_w)
    return res


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def simulate_attention(q, k, v, bits, cfg: MacroConfig, spec: NoiseSpec,
                       mode: EngineMode, layer: int = 0) -> SimLayerResult:
    """Single-head attention with both matmuls on the macro.

    QK^T runs with Q stationary and K broadcast; scaling and softmax stay in
    floating point; A V runs with V stationary and the unsigned post-softmax
    scores broadcast. The two matmuls use stream ids `layer` and `layer + 1`
    so their noise draws are independent; reported cycles/tiles are summed
    over both.
    """
    w_bits, x_bits = _bit_pair(bits)
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ShapeError("simulate_attention expects 2-D q, k, v")
    if q.shape[1] != k.shape[1] or k.shape[0] != v.shape[0]:
        raise ShapeError(
            f"incompatible attention shapes {q.shape}, {k.shape}, {v.shape}")
    head_dim = q.shape[1]
    q_q = quantize(q, w_bits, Signedness.TWOS_COMPLEMENT)
    k_q = quantize(k, x_bits, Signedness.TWOS_COMPLEMENT)
    qk = simulate_matmul(k_q, QuantizedTensor(q_q.codes.T, q_q.params),
                         cfg, spec, mode, layer=layer)
    scores = softmax(qk.output.T / np.sqrt(head_dim), axis=-1)
    a_q = quantize(scores, x_bits, Signedness.UNSIGNED)
    v_q = quantize(v, w_bits, Signedness.TWOS_COMPLEMENT)
    av = simulate_matmul(a_q, v_q, cfg, spec, mode, layer=layer + 1)
    cycles = qk.cycle_count + av.cycle_count
    ratio = (qk.analog_ratio * qk.cycle_count
             + av.analog_ratio * av.cycle_count) / cycles
    return SimLayerResult(output=av.output, cycle_count=cycles,
                          analog_ratio=ratio, tiles=qk.tiles + av.tiles)


@dataclass(frozen=True)
class EnergyCoeffs:
    """User-supplied energy coefficients, one ADC entry per precision k."""

    analog_cycle: float = 0.0
    digital_cycle: float = 0.0
    adc: dict = None

    def __post_init__(self):
        object.__setattr__(self, "adc", dict(self.adc or {}))
        values = [self.analog_cycle, self.digital_cycle, *self.adc.values()]
        if any(c < 0 for c in values):
            raise ConfigError("energy coefficients must be >= 0")


def estimate_cycles_energy(plan: CyclePlan, tiles: int, coeffs: EnergyCoeffs,
                           adc_bits: int) -> dict:
    """Cycle count (with oversample repeats) and parametric energy estimate."""
    if tiles < 1:
        raise ConfigError(f"tiles must be >= 1, got {tiles}")
    energy = 0.0
    for e in plan.entries:
        if e.domain is Domain.DIGITAL:
            energy += coeffs.digital_cycle
        else:
            if adc_bits not in coeffs.adc:
                raise ConfigError(f"no ADC energy coefficient for k={adc_bits}")
            energy += e.oversample * (coeffs.analog_cycle + coeffs.adc[adc_bits])
    return {"cycles": tiles * plan.cycles_per_tile, "energy": tiles * energy}
