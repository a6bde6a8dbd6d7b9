"""End-to-end runs: shard replications over workers, aggregate, fit, write outputs."""

import json
import logging
import math
import platform
from dataclasses import asdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, rng
from .errors import DegenerateInputError
from .estimator import LINEAR, NONLINEAR, aggregate, fit_linear, fit_nonlinear, with_fit_column
from .propagator import GFK, initial_walkers, run_batch

log = logging.getLogger(__name__)

# Replications are always simulated in blocks aligned to multiples of
# CHUNK_SIZE in the global index, whatever the worker count.
CHUNK_SIZE = 2048

TABLE_FILE = "table.txt"
PLOT_FILE = "plot.dat"
SUMMARY_FILE = "summary.json"
MANIFEST_FILE = "manifest.json"


def simulate_range(config, start, stop, chunk_size=CHUNK_SIZE):
    """Z_m(t) for replication indices ``start..stop-1`` as an array."""
    atom = config.atom()
    cfg = config.path_config()
    trial = config.build_trial() if config.mode == GFK else None
    out = np.empty((stop - start, len(cfg.checkpoint_times)))
    for lo in range(start, stop, chunk_size):
        hi = min(lo + chunk_size, stop)
        states = rng.substreams(config.master_seed, lo, hi)
        walkers, states = initial_walkers(states, atom.n_electrons)
        out[lo - start:hi - start], _, _ = run_batch(atom, cfg, states, walkers, trial, config.lambda0)
        log.info("replications %d-%d done", lo, hi - 1)
    return out


def shard_ranges(n_paths, workers, chunk_size=CHUNK_SIZE):
    """Contiguous, chunk-aligned index ranges, one per worker (some may be empty)."""
    n_chunks = math.ceil(n_paths / chunk_size)
    per = [n_chunks // workers + (1 if k < n_chunks % workers else 0) for k in range(workers)]
    ranges = []
    chunk = 0
    for count in per:
        lo = min(chunk * chunk_size, n_paths)
        hi = min((chunk + count) * chunk_size, n_paths)
        if hi > lo:
            ranges.append((lo, hi))
        chunk += count
    return ranges


def simulate(config, chunk_size=CHUNK_SIZE):
    """Index-addressed buffer of all Z_m(t), shape ``(n_paths, n_checkpoints)``."""
    ranges = shard_ranges(config.n_paths, config.workers, chunk_size)
    z = np.empty((config.n_paths, len(config.checkpoint_times)))
    if config.workers == 1 or len(ranges) == 1:
        for lo, hi in ranges:
            z[lo:hi] = simulate_range(config, lo, hi, chunk_size)
        return z
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        futures = {pool.submit(simulate_range, config, lo, hi, chunk_size): (lo, hi) for lo, hi in ranges}
        for fut, (lo, hi) in futures.items():
            z[lo:hi] = fut.result()
    return z


def fit_all(stats, config):
    fits = {}
    linear = fit_linear(stats, config.lambda0, config.weighted)
    if LINEAR in config.fits:
        fits[LINEAR] = linear
    if NONLINEAR in config.fits:
        fits[NONLINEAR] = fit_nonlinear(stats, config.lambda0, config.weighted, linear=linear)
    return fits


def format_with_error(value, error):
    """Value with its uncertainty in the last printed digit, e.g. -2.1752508(1)."""
    if not (error > 0 and math.isfinite(error)):
        return f"{value:.10f}"
    decimals = max(0, -math.floor(math.log10(error)))
    digit = round(error * 10**decimals)
    if digit >= 10:
        decimals = max(0, decimals - 1)
        digit = round(error * 10**decimals)
    return f"{value:.{decimals}f}({digit})"


def emit_table(path, stats, fits, config=None):
    """Write the six-column table with a header and a lambda footer."""
    if not stats:
        raise DegenerateInputError("no checkpoint statistics to write")
    primary = next(iter(fits.values()))
    rows = with_fit_column(stats, primary)
    lines = []
    if config is not None:
        name = config.trial_name or config.trial.get("family", "")
        lines.append(f"# Z = {config.nuclear_charge:g}, N = {config.n_electrons}, trial = {name}, mode = {config.mode}")
        lines.append(f"# Scale = {config.scale}, # of paths = {config.n_paths}, seed = {config.master_seed}")
    lines.append("t\tzt\tln(zt)\tln(zt)/t\tσ\tln(zt)/t (ls fit)")
    for s in rows:
        lines.append(f"{s.t:g}\t{s.z_mean:.6f}\t{s.ln_z:.6f}\t{s.ln_z_over_t:.6f}\t{s.sigma:.6f}\t{s.ls_fit:.6f}")
    lam0 = config.lambda0 if config is not None else primary.lambda1 + primary.params["A"]
    footer = f"λ0 = {lam0:.10g}"
    for model, fit in fits.items():
        label = "λ1" if len(fits) == 1 else f"λ1({model})"
        footer += f"  {label} = {format_with_error(fit.lambda1, fit.extrapolation_error)}"
    lines.append(footer)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return rows


def emit_plot_data(path, stats, fit):
    """Rows ``t  ln(zt)/t  sigma  fitted``, t ascending; sigma is the error bar."""
    if not stats:
        raise DegenerateInputError("no checkpoint statistics to write")
    rows = sorted(with_fit_column(stats, fit), key=lambda s: s.t)
    lines = ["# t\tln(zt)/t\tsigma\tfit"]
    lines += [f"{s.t:g}\t{s.ln_z_over_t:.10e}\t{s.sigma:.10e}\t{s.ls_fit:.10e}" for s in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return rows


# Scheduling and file placement never change the numbers, so they are kept
# out of the written artifacts; outputs stay byte-identical across worker counts.
_NON_NUMERIC = ("workers", "output_dir")


def numeric_config(config):
    d = config.to_dict()
    for key in _NON_NUMERIC:
        d.pop(key)
    return d


def manifest(config, chunk_size=CHUNK_SIZE):
    return {
        "engine": "gfkmc",
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "chunk_size": chunk_size,
        "rng": {"multiplier": rng.MULTIPLIER, "increment": rng.INCREMENT, "modulus": rng.MODULUS,
                "substream_stride": rng.SUBSTREAM_STRIDE},
        "config": numeric_config(config),
    }


def run(config, output_dir=None, chunk_size=CHUNK_SIZE):
    """Execute a full run and write table, plot data, summary and manifest.

    Returns a dict with the stats, fits and output paths.
    """
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / MANIFEST_FILE).write_text(json.dumps(manifest(config, chunk_size), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    z = simulate(config, chunk_size)
    stats = aggregate(z, config.checkpoint_times)
    fits = fit_all(stats, config)
    rows = emit_table(out / TABLE_FILE, stats, fits, config)
    emit_plot_data(out / PLOT_FILE, stats, next(iter(fits.values())))
    summary = {
        "config": numeric_config(config),
        "stats": [asdict(s) for s in rows],
        "fits": {
            k: {"model": f.model, "lambda1": f.lambda1, "extrapolation_error": f.extrapolation_error, "params": f.params}
            for k, f in fits.items()
        },
    }
    (out / SUMMARY_FILE).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"stats": rows, "fits": fits, "z": z, "output_dir": out}
