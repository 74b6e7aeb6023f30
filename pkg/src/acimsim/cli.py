"""acim-sim: batch experiment driver over the simulation library.

Subcommands: simulate, sweep, train, csnr, linearity, distribution, sparsity.
Each is a pure function of (config file, seed); reports land as CSV plus a
JSON mirror with the config echo and run metadata.
"""

import argparse
import dataclasses
import itertools
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, rng
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, load_config
from .data import load_idx, make_blobs, train_test_split
from .engine import EngineMode, simulate_matmul
from .errors import AcimError, ConfigError
from .macro import NOISELESS, MacroConfig, Sigma
from .metrics import csnr_measure, csnr_variance_form, linearity_sweep, \
    mac_distribution
from .models import (TinyModel, TrainConfig, engine_forward, evaluate_digital,
                     forward_float, init_mlp, train)
from .quant import Signedness, bit_sparsity, decompose_bits, dequantize, \
    quantize
from .report import emit

BUILTIN_HIDDEN = 64


def _dataset(cfg: ExperimentConfig):
    d = cfg.data
    if d.kind == "idx":
        for key, p in (("images", d.images), ("labels", d.labels)):
            if not os.path.exists(p):
                raise ConfigError(f"{cfg.path}: [data] {key}: no such file {p}")
        x = load_idx(d.images)
        y = load_idx(d.labels).astype(np.int64)
        x = x.reshape(x.shape[0], -1)
        return train_test_split(x, y)
    x, y = make_blobs(d.samples, d.features, d.classes, d.seed, d.spread)
    return train_test_split(x, y)


def _train_model(cfg: ExperimentConfig, train_set, test_set):
    tc = cfg.train or TrainConfig(seed=cfg.noise.seed, w_bits=cfg.w_bits,
                                  x_bits=cfg.x_bits)
    dims = [train_set[0].shape[1], BUILTIN_HIDDEN,
            int(np.asarray(train_set[1]).max()) + 1]
    model = init_mlp(dims, tc.seed)
    model, losses = train(model, train_set, tc)
    model.baseline_acc = evaluate_digital(model, test_set, tc)
    return model, tc, losses


def _model(cfg: ExperimentConfig, train_set, test_set) -> TinyModel:
    if cfg.model.checkpoint:
        if not os.path.exists(cfg.model.checkpoint):
            raise ConfigError(f"{cfg.path}: [model] checkpoint: "
                              f"no such file {cfg.model.checkpoint}")
        return load_checkpoint(cfg.model.checkpoint)
    builtin = cfg.model.builtin or "blob-mlp"
    if builtin != "blob-mlp":
        raise ConfigError(f"{cfg.path}: [model] builtin: unknown model "
                          f"{builtin!r} (available: blob-mlp)")
    model, _, _ = _train_model(cfg, train_set, test_set)
    return model


def _point_metrics(model, test_set, macro, noise, mode):
    """Evaluate one grid point: accuracy, CSNR vs the float forward, cycles."""
    x, y = test_set
    ideal = forward_float(model, x)
    logits, cycles, ratio = engine_forward(model, x, macro, noise, mode)
    acc = float(np.mean(np.argmax(logits, axis=1) == np.asarray(y)))
    return acc, csnr_measure(ideal, logits).db, cycles, ratio


def cmd_simulate(cfg: ExperimentConfig, out_dir, threads, meta):
    train_set, test_set = _dataset(cfg)
    model = _model(cfg, train_set, test_set)
    acc, csnr_db, cycles, ratio = _point_metrics(
        model, test_set, cfg.macro, cfg.noise, cfg.mode)
    meta["baseline_acc"] = model.baseline_acc
    header = ("accuracy", "csnr_db", "cycles", "analog_ratio")
    return header, [(acc, csnr_db, cycles, ratio)]


def cmd_sweep(cfg: ExperimentConfig, out_dir, threads, meta):
    if not cfg.sweep:
        raise ConfigError(f"{cfg.path}: sweep needs a [sweep] section with "
                          "at least one axis")
    train_set, test_set = _dataset(cfg)
    model = _model(cfg, train_set, test_set)
    axes = [(name, cfg.sweep[name])
            for name in ("adc_bits", "enc_bits", "noise") if name in cfg.sweep]

    def run_point(values):
        point = dict(zip([a[0] for a in axes], values))
        macro = MacroConfig(rows=cfg.macro.rows,
                            adc_bits=point.get("adc_bits", cfg.macro.adc_bits),
                            enc_bits=point.get("enc_bits", cfg.macro.enc_bits))
        noise = cfg.noise
        if "noise" in point:
            noise = dataclasses.replace(
                noise, random_sigma=Sigma(point["noise"],
                                          cfg.noise.random_sigma.unit))
        mode = EngineMode(enc_bits=macro.enc_bits,
                          hybrid_boundary=cfg.mode.hybrid_boundary,
                          voting=cfg.mode.voting)
        return (*values, *_point_metrics(model, test_set, macro, noise, mode))

    grid = list(itertools.product(*[v for _, v in axes]))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_point, grid))
    else:
        rows = [run_point(g) for g in grid]
    meta["baseline_acc"] = model.baseline_acc
    header = (*[a[0] for a in axes], "accuracy", "csnr_db", "cycles",
              "analog_ratio")
    return header, rows


def cmd_train(cfg: ExperimentConfig, out_dir, threads, meta):
    train_set, test_set = _dataset(cfg)
    model, tc, losses = _train_model(cfg, train_set, test_set)
    os.makedirs(out_dir, exist_ok=True)
    ckpt_path = os.path.join(out_dir, "model.ackpt")
    save_checkpoint(model, ckpt_path)
    meta["checkpoint"] = ckpt_path
    meta["baseline_acc"] = model.baseline_acc
    return ("epoch", "loss"), list(enumerate(losses))


def _analysis_operands(cfg: ExperimentConfig):
    a = cfg.analysis
    gen = rng.stream(cfg.noise.seed, rng.RngContext(), rng.TAG_DATA)
    act = gen.normal(size=(a.batch, a.in_dim))
    w = gen.normal(size=(a.in_dim, a.out_dim))
    return act, w


def cmd_csnr(cfg: ExperimentConfig, out_dir, threads, meta):
    act, w = _analysis_operands(cfg)
    act_q = quantize(act, cfg.x_bits, Signedness.TWOS_COMPLEMENT)
    w_q = quantize(w, cfg.w_bits, Signedness.TWOS_COMPLEMENT)
    ideal = act @ w
    quant_in = dequantize(act_q) @ dequantize(w_q)
    quant_out = simulate_matmul(act_q, w_q, cfg.macro, NOISELESS,
                                cfg.mode).output
    noisy = simulate_matmul(act_q, w_q, cfg.macro, cfg.noise, cfg.mode).output
    direct = csnr_measure(ideal, noisy)
    vf = csnr_variance_form(ideal, quant_in, quant_out, noisy)
    header = ("csnr_db", "sqnr_sum_db", "csnr_sum_db", "sqnr_total_db",
              "csnr_total_db", "term_input_quant", "term_output_quant",
              "term_analog", "samples")
    row = (direct.db, vf.sqnr_db, vf.csnr_db, vf.sqnr_total_db,
           vf.csnr_total_db, vf.terms["input_quant"],
           vf.terms["output_quant"], vf.terms["analog"], direct.trials)
    return header, [row]


def cmd_linearity(cfg: ExperimentConfig, out_dir, threads, meta):
    samples = cfg.mode.voting.samples if cfg.mode.voting else 1
    sweep = linearity_sweep(cfg.macro, cfg.noise, cfg.analysis.trials,
                            samples=samples)
    return ("level", "mean_code", "sigma_code"), sweep.to_rows()


def cmd_distribution(cfg: ExperimentConfig, out_dir, threads, meta):
    act, w = _analysis_operands(cfg)
    hist = mac_distribution(
        quantize(act, cfg.x_bits, Signedness.TWOS_COMPLEMENT),
        quantize(w, cfg.w_bits, Signedness.TWOS_COMPLEMENT),
        cfg.macro, cfg.mode)
    return ("w_bit", "act_group", "level", "count"), hist.to_rows()


def cmd_sparsity(cfg: ExperimentConfig, out_dir, threads, meta):
    a = cfg.analysis
    gen = rng.stream(cfg.noise.seed, rng.RngContext(), rng.TAG_DATA)
    t = gen.uniform(-1.0, 1.0, size=(a.batch, a.in_dim))
    sparsity = bit_sparsity(decompose_bits(
        quantize(t, cfg.x_bits, Signedness.TWOS_COMPLEMENT)))
    return ("bit", "sparsity"), list(enumerate(sparsity))


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "train": cmd_train,
    "csnr": cmd_csnr,
    "linearity": cmd_linearity,
    "distribution": cmd_distribution,
    "sparsity": cmd_sparsity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acim-sim",
        description="Bit-wise inference simulator for SRAM-based analog "
                    "compute-in-memory macros")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment INI file")
        p.add_argument("--out", help="output directory (default: [output] dir)")
        p.add_argument("--threads", type=int,
                       help="worker threads (default: $ACIM_SIM_THREADS or 1)")
        p.add_argument("--seed", type=int, help="override the [noise] seed")
    return parser


def _resolve_threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("ACIM_SIM_THREADS", "1")
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(
                f"ACIM_SIM_THREADS must be an integer, got {env!r}")
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    return n


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.monotonic()
    try:
        threads = _resolve_threads(args)
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"--seed must be >= 0, got {args.seed}")
            cfg.noise = dataclasses.replace(cfg.noise, seed=args.seed)
        out_dir = args.out or cfg.output.dir
        meta = {"tool_version": __version__, "command": args.command,
                "seed": cfg.noise.seed, "threads": threads,
                "started_unix": time.time()}
        header, rows = COMMANDS[args.command](cfg, out_dir, threads, meta)
        meta["wall_clock_s"] = time.monotonic() - start
        emit(out_dir, args.command, header, rows, cfg.echo(), meta,
             cfg.output.formats)
        return 0
    except ConfigError as exc:
        print(f"acim-sim: config error: {exc}", file=sys.stderr)
        return 2
    except (AcimError, OSError) as exc:
        print(f"acim-sim: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
