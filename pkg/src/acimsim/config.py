"""Experiment configuration: flat-sectioned INI files -> typed dataclasses.

Every run is a pure function of (config, seed); the [noise] seed key is
therefore mandatory and wall-clock seeding does not exist.
"""

import configparser
import os
from dataclasses import dataclass
from typing import Optional

from .engine import EngineMode, VotingSpec
from .errors import AcimError, ConfigError
from .macro import MacroConfig, NoiseSpec, NoiseUnit, Sigma
from .models import TrainConfig

_UNITS = {"lsb_rms": NoiseUnit.LSB_RMS, "vpp_pct": NoiseUnit.VPP_PCT}


def _build(path, section, ctor, **kw):
    """Construct a config dataclass, rewrapping validation errors."""
    try:
        return ctor(**kw)
    except ConfigError:
        raise
    except AcimError as exc:
        raise ConfigError(f"{path}: [{section}] {exc}") from exc


@dataclass(frozen=True)
class DataSpec:
    kind: str = "blobs"                 # "blobs" or "idx"
    samples: int = 512
    features: int = 16
    classes: int = 3
    spread: float = 1.0
    seed: int = 7
    images: Optional[str] = None
    labels: Optional[str] = None


@dataclass(frozen=True)
class ModelSpec:
    checkpoint: Optional[str] = None
    builtin: Optional[str] = None


@dataclass(frozen=True)
class AnalysisSpec:
    """Operand sizes and trial counts for the metrics subcommands."""
    batch: int = 8
    in_dim: int = 256
    out_dim: int = 16
    trials: int = 10000


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    formats: tuple = ("csv", "json")


@dataclass
class ExperimentConfig:
    macro: MacroConfig
    noise: NoiseSpec
    mode: EngineMode
    w_bits: int
    x_bits: int
    model: ModelSpec
    data: DataSpec
    analysis: AnalysisSpec
    output: OutputSpec
    sweep: Optional[dict] = None        # axis name -> list of values
    train: Optional[TrainConfig] = None
    path: str = ""

    def echo(self) -> dict:
        """Config summary embedded in JSON reports."""
        return {
            "config_path": os.path.basename(self.path),
            "macro": {"rows": self.macro.rows, "adc_bits": self.macro.adc_bits,
                      "enc_bits": self.macro.enc_bits},
            "noise": {
                "random": self.noise.random_sigma.value,
                "random_unit": self.noise.random_sigma.unit.value,
                "nonlin": self.noise.nonlin_sigma.value,
                "nonlin_unit": self.noise.nonlin_sigma.unit.value,
                "seed": self.noise.seed,
            },
            "mode": {"scheme": self.mode.scheme,
                     "hybrid_boundary": self.mode.hybrid_boundary,
                     "voting": None if self.mode.voting is None else
                     {"boundary": self.mode.voting.boundary,
                      "samples": self.mode.voting.samples}},
            "quant": {"w_bits": self.w_bits, "x_bits": self.x_bits},
            "sweep": self.sweep,
        }


class _Section:
    """Typed key access with file/section/key diagnostics on every failure."""

    def __init__(self, parser, path, name):
        self.parser, self.path, self.name = parser, path, name

    def _fail(self, key, message):
        raise ConfigError(f"{self.path}: [{self.name}] {key}: {message}")

    def has(self, key):
        return self.parser.has_option(self.name, key) \
            and self.parser.get(self.name, key).strip() != ""

    def raw(self, key, default=None, required=False):
        if not self.has(key):
            if required:
                self._fail(key, "required key is missing")
            return default
        return self.parser.get(self.name, key).strip()

    def _typed(self, key, cast, kind, default, required):
        value = self.raw(key, required=required)
        if value is None:
            return default
        try:
            return cast(value)
        except ValueError:
            self._fail(key, f"expected {kind}, got {value!r}")

    def get_int(self, key, default=None, required=False):
        return self._typed(key, int, "an integer", default, required)

    def get_float(self, key, default=None, required=False):
        return self._typed(key, float, "a number", default, required)

    def get_list(self, key, cast):
        value = self.raw(key)
        if value is None:
            return None
        try:
            return [cast(v.strip()) for v in value.split(",") if v.strip()]
        except ValueError:
            self._fail(key, f"expected a comma-separated list, got {value!r}")

    def get_unit(self, key, default=NoiseUnit.LSB_RMS):
        value = self.raw(key)
        if value is None:
            return default
        if value not in _UNITS:
            self._fail(key, f"unknown unit {value!r}; use lsb_rms or vpp_pct")
        return _UNITS[value]


def _section(parser, path, name):
    return _Section(parser, path, name)


def load_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (configparser.Error, OSError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    macro_s = _section(parser, path, "macro")
    macro = MacroConfig(
        rows=macro_s.get_int("rows", required=True),
        adc_bits=macro_s.get_int("adc_bits", required=True),
        enc_bits=macro_s.get_int("enc_bits", default=1))

    noise_s = _section(parser, path, "noise")
    noise = _build(
        path, "noise", NoiseSpec,
        random_sigma=_build(path, "noise", Sigma,
                            value=noise_s.get_float("random", default=0.0),
                            unit=noise_s.get_unit("random_unit")),
        nonlin_sigma=_build(path, "noise", Sigma,
                            value=noise_s.get_float("nonlin", default=0.0),
                            unit=noise_s.get_unit("nonlin_unit")),
        seed=noise_s.get_int("seed", required=True))

    mode_s = _section(parser, path, "mode")
    voting = None
    if mode_s.has("voting_boundary") or mode_s.has("voting_samples"):
        voting = VotingSpec(
            boundary=mode_s.get_int("voting_boundary", required=True),
            samples=mode_s.get_int("voting_samples", required=True))
    mode = EngineMode(enc_bits=macro.enc_bits,
                      hybrid_boundary=mode_s.get_int("hybrid_boundary"),
                      voting=voting)
    scheme = mode_s.raw("scheme")
    if scheme is not None and scheme != mode.scheme:
        mode_s._fail("scheme", f"{scheme!r} conflicts with macro enc_bits "
                               f"{macro.enc_bits} ({mode.scheme})")

    quant_s = _section(parser, path, "quant")
    w_bits = quant_s.get_int("w_bits", default=8)
    x_bits = quant_s.get_int("x_bits", default=8)

    model_s = _section(parser, path, "model")
    model = ModelSpec(checkpoint=model_s.raw("checkpoint"),
                      builtin=model_s.raw("builtin"))
    if model.checkpoint and model.builtin:
        model_s._fail("builtin", "give either checkpoint or builtin, not both")

    data_s = _section(parser, path, "data")
    kind = data_s.raw("kind", default="blobs")
    if kind not in ("blobs", "idx"):
        data_s._fail("kind", f"unknown dataset kind {kind!r}")
    data = DataSpec(
        kind=kind,
        samples=data_s.get_int("samples", default=512),
        features=data_s.get_int("features", default=16),
        classes=data_s.get_int("classes", default=3),
        spread=data_s.get_float("spread", default=1.0),
        seed=data_s.get_int("seed", default=7),
        images=data_s.raw("images"),
        labels=data_s.raw("labels"))
    if kind == "idx" and (data.images is None or data.labels is None):
        data_s._fail("images", "idx datasets need both images and labels")

    analysis_s = _section(parser, path, "analysis")
    analysis = AnalysisSpec(
        batch=analysis_s.get_int("batch", default=8),
        in_dim=analysis_s.get_int("in_dim", default=256),
        out_dim=analysis_s.get_int("out_dim", default=16),
        trials=analysis_s.get_int("trials", default=10000))

    output_s = _section(parser, path, "output")
    formats = output_s.get_list("formats", str) or ["csv", "json"]
    for fmt in formats:
        if fmt not in ("csv", "json"):
            output_s._fail("formats", f"unknown format {fmt!r}")
    output = OutputSpec(dir=output_s.raw("dir", default="out"),
                        formats=tuple(formats))

    sweep_s = _section(parser, path, "sweep")
    sweep = None
    if parser.has_section("sweep"):
        sweep = {}
        for key, cast in (("adc_bits", int), ("enc_bits", int), ("noise", float)):
            values = sweep_s.get_list(key, cast)
            if values is not None:
                if not values:
                    sweep_s._fail(key, "sweep axis must be non-empty")
                sweep[key] = values
        if not sweep:
            sweep_s._fail("adc_bits", "sweep section has no axes")

    train = None
    if parser.has_section("train"):
        train_s = _section(parser, path, "train")
        train = _build(
            path, "train", TrainConfig,
            lr=train_s.get_float("lr", default=0.05),
            epochs=train_s.get_int("epochs", default=40),
            batch=train_s.get_int("batch", default=32),
            seed=train_s.get_int("seed", default=noise.seed),
            w_bits=train_s.get_int("w_bits", default=w_bits),
            x_bits=train_s.get_int("x_bits", default=x_bits),
            nat_sigma=train_s.get_float("nat_sigma", default=0.0))

    return ExperimentConfig(macro=macro, noise=noise, mode=mode,
                            w_bits=w_bits, x_bits=x_bits, model=model,
                            data=data, analysis=analysis, output=output,
                            sweep=sweep, train=train, path=path)
