"""Command-line entry point: simulate | estimate | sweep | kernel-dump.

Configuration files are JSON key-value documents (schemas in the README);
command-line flags override config values. Environment variables honored:
CHANNEL_CNTK_OUTDIR prefixes relative output paths, CHANNEL_CNTK_THREADS
caps the sweep worker count. Every command is deterministic given its
config; exit code 0 iff no error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import container
from .chansim import (
    DEFAULT_DOPPLER_HZ,
    DEFAULT_TAPS,
    NoiseSpec,
    TdlProfile,
    derive_seed,
    generate_channel,
    make_qpsk_grid,
    transmit,
)
from .cntk import CntkConfig, compute_cntk, build_prior
from .evaluate import METHOD_TAGS, make_method, run_sweep
from .grid import (
    DEFAULT_SUBCARRIER_SPACING_HZ,
    DEFAULT_SYMBOL_DURATION_S,
    PATTERN_PRESETS,
    PilotPattern,
    SparseChannelEstimate,
    ls_estimate,
    make_pilot_pattern,
    preset_pattern,
)
from .imputer import split_blocks


class CliError(Exception):
    """User-facing command error; message printed to stderr, exit code 1."""


def _load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"config parse error in {path} at line {exc.lineno}, "
                       f"column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise CliError(f"config {path} must be a JSON object")
    return cfg


def _parse_snr(value) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "+inf", "infinity"):
            return math.inf
        try:
            return float(value)
        except ValueError:
            raise CliError(f"invalid snr_db value {value!r}") from None
    return float(value)


def _resolve_out(path: str) -> Path:
    out = Path(path)
    outdir = os.environ.get("CHANNEL_CNTK_OUTDIR")
    if outdir and not out.is_absolute():
        out = Path(outdir) / out
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _thread_cap(requested: int) -> int:
    cap = os.environ.get("CHANNEL_CNTK_THREADS")
    if cap:
        try:
            return max(1, min(requested, int(cap)))
        except ValueError:
            raise CliError(f"CHANNEL_CNTK_THREADS must be an integer, got {cap!r}") from None
    return max(1, requested)


def _pattern_from_config(spec, rows: int, cols: int) -> tuple[PilotPattern, dict]:
    """Resolve a preset name or a spacing object into a pattern + manifest entry."""
    if isinstance(spec, str):
        pattern = preset_pattern(spec, rows, cols)
        desc = {"preset": spec}
    elif isinstance(spec, dict):
        pattern = make_pilot_pattern(rows, cols,
                                     int(spec["sc_spacing"]), int(spec["sym_spacing"]),
                                     int(spec.get("sc_offset", 0)),
                                     int(spec.get("sym_offset", 0)))
        desc = {}
    else:
        raise CliError(f"pattern must be a preset name or spacing object, got {spec!r}")
    desc.update(sc_spacing=pattern.sc_spacing, sym_spacing=pattern.sym_spacing,
                sc_offset=pattern.sc_offset, sym_offset=pattern.sym_offset)
    return pattern, desc


def _cntk_cfg_from(cfg: dict) -> CntkConfig:
    return CntkConfig(depth=int(cfg.get("depth", 8)),
                      filter_size=int(cfg.get("filter_size", 3)),
                      neg_slope=float(cfg.get("neg_slope", 0.05)),
                      pos_slope=float(cfg.get("pos_slope", 1.0)),
                      padding=cfg.get("padding", "extrapolate"))


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    if "seed" not in cfg:
        raise CliError("missing required config field: seed")
    seed = int(cfg["seed"])
    realizations = int(cfg.get("realizations", 1))
    if realizations < 1:
        raise CliError("realizations must be >= 1")
    snr_db = _parse_snr(cfg.get("snr_db", 20.0))
    rows = int(cfg.get("rows", 360))
    cols = int(cfg.get("cols", 14))
    scs = float(cfg.get("subcarrier_spacing_hz", DEFAULT_SUBCARRIER_SPACING_HZ))
    tsym = float(cfg.get("symbol_duration_s", DEFAULT_SYMBOL_DURATION_S))
    taps = [tuple(t) for t in cfg.get("taps", DEFAULT_TAPS)]
    doppler = float(cfg.get("doppler_hz", DEFAULT_DOPPLER_HZ))
    pattern, pattern_desc = _pattern_from_config(cfg.get("pattern", "dense"), rows, cols)
    out = args.out or cfg.get("out")
    if not out:
        raise CliError("missing output path: give --out or config field 'out'")

    records = []
    for r in range(realizations):
        profile = TdlProfile(taps, doppler, derive_seed(seed, r, 0))
        channel = generate_channel(profile, rows, cols, scs, tsym)
        x = make_qpsk_grid(rows, cols, derive_seed(seed, r, 1), scs, tsym)
        y = transmit(channel, x, NoiseSpec(snr_db, derive_seed(seed, r, 2)))
        records.append(container.DatasetRecord(channel.h, x.data, y.data,
                                               pattern.mask))
    manifest = {
        "seed": seed, "realizations": realizations, "snr_db": snr_db,
        "rows": rows, "cols": cols,
        "subcarrier_spacing_hz": scs, "symbol_duration_s": tsym,
        "taps": [[d, p] for d, p in TdlProfile(taps, doppler, 0).taps],
        "doppler_hz": doppler, "pattern": pattern_desc,
    }
    out_path = _resolve_out(out)
    container.save_dataset(out_path, manifest, records)
    print(f"wrote {out_path}: {realizations} realization(s), {rows}x{cols} grids, "
          f"snr {snr_db} dB, pattern {pattern_desc}, "
          f"{pattern.n_pilots} pilots/grid, seed {seed}")
    return 0


def _sparse_from_record(rec: container.DatasetRecord,
                        manifest: dict) -> SparseChannelEstimate:
    pd = manifest["pattern"]
    pattern = PilotPattern(pd["sc_spacing"], pd["sym_spacing"],
                           pd["sc_offset"], pd["sym_offset"], rec.mask)
    from .grid import ResourceGrid
    scs = manifest["subcarrier_spacing_hz"]
    tsym = manifest["symbol_duration_s"]
    return ls_estimate(ResourceGrid(rec.rx, scs, tsym),
                       ResourceGrid(rec.tx, scs, tsym), pattern)


def cmd_estimate(args) -> int:
    manifest, records = container.load_dataset(args.dataset)
    if args.method not in METHOD_TAGS:
        raise CliError(f"unknown method {args.method!r}; "
                       f"valid methods: {', '.join(METHOD_TAGS)}")
    cntk_cfg = CntkConfig(depth=args.depth, filter_size=args.filter_size,
                          neg_slope=args.neg_slope, pos_slope=args.pos_slope,
                          padding=args.padding)
    ridge = args.ridge
    if ridge is None and args.method == "cntk":
        # noise-matched default against the dataset's recorded SNR
        from .imputer import auto_ridge
        ridge = auto_ridge(_parse_snr(manifest.get("snr_db", math.inf)))
        print(f"ridge: auto (snr {manifest.get('snr_db')} dB -> {ridge:g})")
    fn = make_method(args.method, cntk_cfg=cntk_cfg, cntk_ridge=ridge, knn_k=args.knn_k)
    estimates = []
    ratio_sum = 0.0
    max_pilot_residual = 0.0
    for i, rec in enumerate(records):
        sparse = _sparse_from_record(rec, manifest)
        h_hat = fn(sparse)
        estimates.append(h_hat)
        err = float(np.sum(np.abs(rec.h_true - h_hat) ** 2))
        ref = float(np.sum(np.abs(rec.h_true) ** 2))
        ratio_sum += err / ref
        resid = np.abs(h_hat[sparse.mask] - sparse.values[sparse.mask])
        scale = max(float(np.abs(sparse.values[sparse.mask]).max()), 1e-300)
        max_pilot_residual = max(max_pilot_residual, float(resid.max()) / scale)
        rec_nmse = "-inf" if err == 0.0 else f"{10.0 * math.log10(err / ref):.3f}"
        print(f"record {i}: nmse {rec_nmse} dB")
    mean_ratio = ratio_sum / len(records)
    agg = "-inf" if mean_ratio == 0.0 else f"{10.0 * math.log10(mean_ratio):.3f}"
    print(f"aggregate nmse ({len(records)} records): {agg} dB")
    print(f"max pilot residual (relative): {max_pilot_residual:.3e}")
    out_path = _resolve_out(args.out)
    est_manifest = {
        "method": args.method, "source": Path(args.dataset).name,
        "ridge": ridge, "cntk_cfg": cntk_cfg.fingerprint(), "knn_k": args.knn_k,
    }
    container.save_estimates(out_path, est_manifest, estimates)
    print(f"wrote {out_path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    if "seed" not in cfg:
        raise CliError("missing required config field: seed")
    methods = args.methods.split(",") if args.methods else cfg.get("methods", ["cntk"])
    for m in methods:
        if m not in METHOD_TAGS:
            raise CliError(f"unknown method {m!r}; valid methods: {', '.join(METHOD_TAGS)}")
    snrs = ([_parse_snr(s) for s in args.snrs.split(",")] if args.snrs
            else [_parse_snr(s) for s in cfg.get("snr_dbs", [0.0, 10.0, 20.0, 30.0])])
    pattern_specs = (args.patterns.split(",") if args.patterns
                     else cfg.get("patterns", ["dense"]))
    realizations = args.realizations if args.realizations is not None \
        else int(cfg.get("realizations", 1))
    seed = args.seed if args.seed is not None else int(cfg["seed"])
    rows = int(cfg.get("rows", 360))
    cols = int(cfg.get("cols", 14))
    measure_time = cfg.get("measure_time", True) and not args.no_timing
    cntk_block = cfg.get("cntk", {})
    ridge = cntk_block.get("ridge", "auto")
    patterns = [_pattern_from_config(p, rows, cols)[0] for p in pattern_specs]
    threads = _thread_cap(args.threads)
    result = run_sweep(
        methods, snrs, patterns, realizations, seed,
        rows=rows, cols=cols,
        subcarrier_spacing_hz=float(cfg.get("subcarrier_spacing_hz",
                                            DEFAULT_SUBCARRIER_SPACING_HZ)),
        symbol_duration_s=float(cfg.get("symbol_duration_s", DEFAULT_SYMBOL_DURATION_S)),
        taps=[tuple(t) for t in cfg.get("taps", DEFAULT_TAPS)],
        doppler_hz=float(cfg.get("doppler_hz", DEFAULT_DOPPLER_HZ)),
        cntk_cfg=_cntk_cfg_from(cntk_block),
        cntk_ridge="auto" if ridge in (None, "auto") else float(ridge),
        knn_k=int(cfg.get("knn_k", 4)),
        measure_time=measure_time, n_threads=threads)
    out = args.out or cfg.get("out")
    if not out:
        raise CliError("missing output path: give --out or config field 'out'")
    out_path = _resolve_out(out)
    result.write_csv(out_path)
    print(f"wrote {out_path}: {len(result.rows)} rows "
          f"({len(methods)} methods x {len(snrs)} SNRs x {len(patterns)} patterns)")
    if args.plot_series:
        series_path = _resolve_out(args.plot_series)
        series_path.write_text(result.plot_series(), encoding="utf-8")
        print(f"wrote {series_path}")
    return 0


def cmd_kernel_dump(args) -> int:
    manifest, records = container.load_dataset(args.dataset)
    if not (0 <= args.record < len(records)):
        raise CliError(f"record index {args.record} out of range "
                       f"[0, {len(records)})")
    sparse = _sparse_from_record(records[args.record], manifest)
    blocks = split_blocks(sparse)
    if not (0 <= args.block < len(blocks)):
        raise CliError(f"block index {args.block} out of range [0, {len(blocks)})")
    cfg = CntkConfig(depth=args.depth, filter_size=args.filter_size,
                     neg_slope=args.neg_slope, pos_slope=args.pos_slope,
                     padding=args.padding)
    kernel = compute_cntk(build_prior(blocks[args.block]), cfg)
    out_path = _resolve_out(args.out)
    np.savetxt(out_path, kernel.gram, fmt="%.17g", delimiter=",")
    P = kernel.gram.shape[0]
    print(f"wrote {out_path}: {P}x{P} gram matrix (block {args.block})")
    if args.check_symmetric:
        asym = float(np.abs(kernel.gram - kernel.gram.T).max())
        scale = float(np.abs(kernel.gram).max())
        ok = asym <= 1e-10 * max(scale, 1e-300)
        print(f"symmetry check: max |G - G^T| = {asym:.3e} "
              f"({'OK' if ok else 'FAILED'})")
        if not ok:
            return 1
    return 0


def _add_cntk_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--depth", type=int, default=8, help="kernel recursion depth")
    p.add_argument("--filter-size", type=int, default=3, help="conv filter size (odd)")
    p.add_argument("--neg-slope", type=float, default=0.05, help="leaky-ReLU negative slope")
    p.add_argument("--pos-slope", type=float, default=1.0, help="leaky-ReLU positive slope")
    p.add_argument("--padding", choices=["extrapolate", "zero"], default="extrapolate",
                   help="patch aggregation boundary handling")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="channel-cntk",
        description="OFDM channel estimation via a closed-form convolutional "
                    "neural tangent kernel, with classical baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic dataset file")
    p_sim.add_argument("--config", required=True, help="JSON config path")
    p_sim.add_argument("--out", help="dataset output path (overrides config)")
    p_sim.set_defaults(fn=cmd_simulate)

    p_est = sub.add_parser("estimate", help="run one estimator over a dataset")
    p_est.add_argument("--dataset", required=True)
    p_est.add_argument("--method", required=True,
                       help="one of: " + ", ".join(METHOD_TAGS))
    p_est.add_argument("--out", required=True, help="estimates output path")
    p_est.add_argument("--lambda", dest="ridge", type=float, default=None,
                       help="ridge; 0 = strict interpolation "
                            "(default: noise-matched to the dataset SNR)")
    p_est.add_argument("--knn-k", type=int, default=4)
    _add_cntk_flags(p_est)
    p_est.set_defaults(fn=cmd_estimate)

    p_sweep = sub.add_parser("sweep", help="NMSE sweep over methods/SNRs/densities")
    p_sweep.add_argument("--config", required=True, help="JSON config path")
    p_sweep.add_argument("--out", help="CSV output path (overrides config)")
    p_sweep.add_argument("--methods", help="comma list, overrides config")
    p_sweep.add_argument("--snrs", help="comma list of SNR dB, overrides config")
    p_sweep.add_argument("--patterns",
                         help="comma list of presets (%s), overrides config"
                              % "/".join(sorted(PATTERN_PRESETS)))
    p_sweep.add_argument("--realizations", type=int, default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--threads", type=int, default=1,
                         help="sweep worker threads (results identical for any count)")
    p_sweep.add_argument("--no-timing", action="store_true",
                         help="pin the timing column to 0.0 for byte-reproducible CSVs")
    p_sweep.add_argument("--plot-series", help="also write x/y series text file")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_dump = sub.add_parser("kernel-dump", help="export one block's gram matrix as CSV")
    p_dump.add_argument("--dataset", required=True)
    p_dump.add_argument("--record", type=int, default=0)
    p_dump.add_argument("--block", type=int, required=True)
    p_dump.add_argument("--out", required=True)
    p_dump.add_argument("--check-symmetric", action="store_true")
    _add_cntk_flags(p_dump)
    p_dump.set_defaults(fn=cmd_kernel_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
