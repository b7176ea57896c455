"""Command-line front door: simulate, estimate, bench, transform, signals.

All commands read a YAML config (strictly validated, unknown keys are
rejected) and write plain-text data files plus JSON sidecars so results
diff cleanly and round-trip exactly.  Exit codes: 0 success, 1 validation
failure, 2 runtime failure, 3 trend-assertion failure.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import meyer
from .bench import (
    ExperimentGrid,
    check_trends,
    run_cell,
    test_signal,
    write_cells_csv,
    write_markdown,
    write_reps_csv,
)
from .estimator import (
    EstimatorConfig,
    hard_threshold_estimate,
    linear_estimate,
)
from .model import ChannelSpec, MultichannelObservation, simulate

OUT_ENV_VAR = "LRDECONV_OUT"

EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_ASSERTION = 3


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


class TrendAssertionError(RuntimeError):
    """A requested monotonicity assertion failed."""


# ----------------------------------------------------------------- config


def _load_config(path) -> dict:
    try:
        with open(path) as handle:
            data = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return data


def _check_keys(section: dict, allowed, required, where: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = set(required) - set(section)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


def _out_dir(out) -> Path:
    base = out or os.environ.get(OUT_ENV_VAR) or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _channels_from_config(raw, where="channels") -> list:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{where} must be a nonempty list")
    channels = []
    for i, entry in enumerate(raw):
        _check_keys(entry, {"kernel", "lrd"}, {"kernel", "lrd"}, f"{where}[{i}]")
        try:
            channels.append(ChannelSpec.from_dict(entry))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid {where}[{i}]: {exc}") from exc
    return channels


# ------------------------------------------------------------ file formats


def write_signal_file(path, values: np.ndarray):
    values = np.asarray(values, dtype=float)
    idx = np.arange(values.shape[0])
    np.savetxt(
        path,
        np.column_stack([idx, values]),
        fmt=["%d", "%.17e"],
        header="index value",
    )


def read_signal_file(path) -> np.ndarray:
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] != 2:
        raise ConfigError(f"signal file {path} must have two columns (index value)")
    return data[:, 1]


def write_observation_file(path, samples: np.ndarray):
    m, n = samples.shape
    cols = " ".join(f"channel{ell + 1}" for ell in range(m))
    np.savetxt(
        path,
        np.column_stack([np.arange(n), samples.T]),
        fmt=["%d"] + ["%.17e"] * m,
        header=f"index {cols}",
    )


def read_observation_file(path) -> np.ndarray:
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] < 2:
        raise ConfigError(f"observation file {path} needs index plus channel columns")
    return data[:, 1:].T.copy()


def write_coeff_file(path, coeffs: meyer.WaveletCoeffs, n: int):
    """Rows of (level, position, value); scaling rows carry level -1."""
    rows = [(-1, k, v) for k, v in enumerate(coeffs.scaling)]
    for j in range(coeffs.j0, coeffs.j1 + 1):
        rows.extend((j, k, v) for k, v in enumerate(coeffs.level(j)))
    arr = np.array([[float(a), float(b), float(c)] for a, b, c in rows])
    np.savetxt(
        path,
        arr,
        fmt=["%d", "%d", "%.17e"],
        header=f"n={n} j0={coeffs.j0} j1={coeffs.j1}\nlevel position value",
    )


def read_coeff_file(path):
    header = {}
    with open(path) as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            for token in line[1:].split():
                if "=" in token:
                    key, val = token.split("=", 1)
                    header[key] = int(val)
    for key in ("n", "j0", "j1"):
        if key not in header:
            raise ConfigError(f"coefficient file {path} lacks '{key}=' in its header")
    data = np.loadtxt(path, ndmin=2)
    j0, j1 = header["j0"], header["j1"]
    scaling = data[data[:, 0] == -1]
    scaling = scaling[np.argsort(scaling[:, 1])][:, 2]
    details = []
    for j in range(j0, j1 + 1):
        level = data[data[:, 0] == j]
        details.append(level[np.argsort(level[:, 1])][:, 2])
    return meyer.WaveletCoeffs(j0, j1, scaling, details), header["n"]


# -------------------------------------------------------------- commands


@click.group()
def cli():
    """Multichannel wavelet deconvolution with long-memory noise."""


def _common(fn):
    fn = click.option("--config", "config_path", required=True, type=click.Path())(fn)
    fn = click.option("--seed", type=int, default=None, help="override config seed")(fn)
    fn = click.option("--out", type=click.Path(), default=None, help="output directory")(fn)
    fn = click.option("--threads", type=int, default=1, show_default=True)(fn)
    return fn


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    try:
        fn()
    except (ConfigError, ValueError, meyer.AliasingError) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except TrendAssertionError as exc:
        _fail(EXIT_ASSERTION, str(exc))
    except OSError as exc:
        _fail(EXIT_RUNTIME, str(exc))


SIMULATE_KEYS = {"n", "signal", "signal_file", "snr_db", "seed", "channels", "out_prefix"}


@cli.command("simulate")
@_common
def simulate_cmd(config_path, seed, out, threads):
    """Simulate multichannel observations from a config."""

    def run():
        cfg = _load_config(config_path)
        _check_keys(cfg, SIMULATE_KEYS, {"channels"}, "simulate config")
        out_dir = _out_dir(out)
        prefix = cfg.get("out_prefix", "sim")
        if ("signal" in cfg) == ("signal_file" in cfg):
            raise ConfigError("give exactly one of 'signal' or 'signal_file'")
        if "signal" in cfg:
            n = cfg.get("n")
            if n is None:
                raise ConfigError("'n' is required with a named signal")
            truth = test_signal(cfg["signal"], int(n))
        else:
            truth = read_signal_file(cfg["signal_file"])
            if "n" in cfg and int(cfg["n"]) != truth.shape[0]:
                raise ConfigError("'n' disagrees with the signal file length")
        channels = _channels_from_config(cfg["channels"])
        the_seed = seed if seed is not None else int(cfg.get("seed", 0))
        snr_db = cfg.get("snr_db")
        snr_db = None if snr_db is None else float(snr_db)
        obs = simulate(truth, channels, snr_db, the_seed)
        write_signal_file(out_dir / f"{prefix}_truth.txt", truth)
        write_observation_file(out_dir / f"{prefix}_observations.txt", obs.samples)
        meta = {
            "n": obs.n,
            "snr_db": obs.snr_db,
            "seed": obs.seed,
            "channels": [ch.to_dict() for ch in obs.channels],
        }
        with open(out_dir / f"{prefix}_meta.json", "w") as handle:
            json.dump(meta, handle, indent=2, sort_keys=True)
        click.echo(f"wrote {prefix}_truth.txt, {prefix}_observations.txt, {prefix}_meta.json")

    _guarded(run)


ESTIMATE_KEYS = {"observations", "metadata", "estimator", "out_prefix"}


def _observation_from_files(obs_path, meta_path) -> MultichannelObservation:
    try:
        with open(meta_path) as handle:
            meta = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read metadata {meta_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"metadata {meta_path} is not valid JSON: {exc}") from exc
    _check_keys(meta, {"n", "snr_db", "seed", "channels"}, {"n", "channels"}, "metadata")
    samples = read_observation_file(obs_path)
    if samples.shape[1] != int(meta["n"]):
        raise ConfigError("observation length disagrees with metadata n")
    channels = _channels_from_config(meta["channels"], where="metadata channels")
    if samples.shape[0] != len(channels):
        raise ConfigError("observation column count disagrees with metadata channels")
    return MultichannelObservation(
        n=int(meta["n"]),
        channels=channels,
        samples=samples,
        snr_db=meta.get("snr_db"),
        seed=meta.get("seed"),
    )


@cli.command()
@_common
def estimate(config_path, seed, out, threads):
    """Reconstruct a signal from stored observations."""

    def run():
        cfg = _load_config(config_path)
        _check_keys(cfg, ESTIMATE_KEYS, {"observations", "metadata"}, "estimate config")
        out_dir = _out_dir(out)
        prefix = cfg.get("out_prefix", "est")
        est_cfg = cfg.get("estimator", {})
        try:
            config = EstimatorConfig.from_dict(est_cfg)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid estimator section: {exc}") from exc
        obs = _observation_from_files(cfg["observations"], cfg["metadata"])
        if seed is not None:
            obs.seed = seed
        if config.mode == "super_smooth":
            result = linear_estimate(obs, config)
        else:
            result = hard_threshold_estimate(obs, config)
        d = result.diagnostics
        if d.get("zeta_meets_theoretical_bound") is False:
            click.echo(
                "note: zeta {:.4g} is below the theoretical bound {:.4g}".format(
                    d["zeta"], d["zeta_theoretical_bound"]
                )
            )
        write_signal_file(out_dir / f"{prefix}_reconstruction.txt", result.signal)
        d["estimator_config"] = config.to_dict()
        with open(out_dir / f"{prefix}_diagnostics.json", "w") as handle:
            json.dump(d, handle, indent=2, sort_keys=True)
        click.echo(f"wrote {prefix}_reconstruction.txt, {prefix}_diagnostics.json")

    _guarded(run)


BENCH_KEYS = {
    "signals",
    "nus",
    "alphas",
    "Ms",
    "snr_dbs",
    "zeta_rules",
    "reps",
    "n",
    "master_seed",
    "kernel_family",
    "generator",
    "sigma_source",
    "selection",
    "out_prefix",
}


def _bench_cell(args):
    grid, key = args
    from .bench import build_channels, _pair_seed

    signal, nu, alpha, m_channels, snr_db, zeta = key
    channels = build_channels(grid.kernel_family, nu, alpha, m_channels, grid.generator)
    config = EstimatorConfig(
        mode="boxcar" if grid.kernel_family == "boxcar" else "regular_smooth",
        zeta=zeta,
        sigma_source=grid.sigma_source,
        selection=grid.selection,
    )
    cell_seed = _pair_seed(grid.master_seed, signal, nu, snr_db, str(zeta), grid.n)
    return key, run_cell(
        signal, channels, config, grid.reps, cell_seed, snr_db=snr_db, n=grid.n
    )


@cli.command()
@_common
@click.option("--assert-trends", is_flag=True, help="exit 3 on monotonicity violations")
def bench(config_path, seed, out, threads, assert_trends):
    """Run a replicated benchmark grid and emit result tables."""

    def run():
        cfg = _load_config(config_path)
        _check_keys(
            cfg, BENCH_KEYS, {"signals", "nus", "alphas", "Ms", "snr_dbs", "zeta_rules"},
            "bench config",
        )
        out_dir = _out_dir(out)
        prefix = cfg.pop("out_prefix", "bench")
        if seed is not None:
            cfg["master_seed"] = seed
        try:
            grid = ExperimentGrid(
                signals=tuple(cfg["signals"]),
                nus=tuple(cfg["nus"]),
                alphas=tuple(cfg["alphas"]),
                Ms=tuple(cfg["Ms"]),
                snr_dbs=tuple(cfg["snr_dbs"]),
                zeta_rules=tuple(cfg["zeta_rules"]),
                **{
                    k: cfg[k]
                    for k in (
                        "reps",
                        "n",
                        "master_seed",
                        "kernel_family",
                        "generator",
                        "sigma_source",
                        "selection",
                    )
                    if k in cfg
                },
            )
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid bench grid: {exc}") from exc
        from .bench import ExperimentResult

        result = ExperimentResult(grid=grid)
        keys = grid.cell_keys()
        if threads and threads > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
                for key, cell in pool.map(_bench_cell, [(grid, k) for k in keys]):
                    result.cells[key] = cell
        else:
            for key in keys:
                result.cells[key] = _bench_cell((grid, key))[1]
        write_cells_csv(result, out_dir / f"{prefix}_cells.csv")
        write_markdown(result, out_dir / f"{prefix}_table.md")
        write_reps_csv(result, out_dir / f"{prefix}_reps.csv")
        click.echo(
            f"wrote {prefix}_cells.csv, {prefix}_table.md, {prefix}_reps.csv "
            f"({len(keys)} cells)"
        )
        if assert_trends:
            violations = check_trends(result)
            if violations:
                for v in violations:
                    click.echo(f"trend violation: {v}", err=True)
                raise TrendAssertionError(f"{len(violations)} trend assertion(s) failed")

    _guarded(run)


TRANSFORM_KEYS = {"signal_file", "coeffs_file", "j0", "j1", "n", "direction", "out_prefix"}


@cli.command()
@_common
def transform(config_path, seed, out, threads):
    """Apply the wavelet transform (or its inverse) to stored data."""

    def run():
        cfg = _load_config(config_path)
        _check_keys(cfg, TRANSFORM_KEYS, set(), "transform config")
        out_dir = _out_dir(out)
        prefix = cfg.get("out_prefix", "transform")
        direction = cfg.get("direction", "forward")
        if direction == "forward":
            if "signal_file" not in cfg:
                raise ConfigError("forward transform needs 'signal_file'")
            signal = read_signal_file(cfg["signal_file"])
            n = signal.shape[0]
            J = n.bit_length() - 1
            j0 = int(cfg.get("j0", 0))
            j1 = int(cfg.get("j1", J - 2))
            if j1 >= J - 1:
                raise meyer.AliasingError(
                    f"j1={j1} would alias on an n={n} grid; the finest "
                    f"reconstructible level is {J - 2}"
                )
            coeffs = meyer.forward_transform(signal, j0, j1)
            write_coeff_file(out_dir / f"{prefix}_coeffs.txt", coeffs, n)
            click.echo(f"wrote {prefix}_coeffs.txt")
        elif direction == "inverse":
            if "coeffs_file" not in cfg:
                raise ConfigError("inverse transform needs 'coeffs_file'")
            coeffs, n = read_coeff_file(cfg["coeffs_file"])
            if "n" in cfg:
                n = int(cfg["n"])
            signal = meyer.inverse_transform(coeffs, n)
            write_signal_file(out_dir / f"{prefix}_signal.txt", signal)
            click.echo(f"wrote {prefix}_signal.txt")
        else:
            raise ConfigError("direction must be 'forward' or 'inverse'")

    _guarded(run)


@cli.command()
@click.option("--name", required=True, help="lidar | doppler | bumps | blocks")
@click.option("--n", "n", required=True, type=int, help="grid size, a power of two")
@click.option("--out", type=click.Path(), default=None, help="output directory")
@click.option("--out-prefix", default=None, help="file name prefix (default: the name)")
def signals(name, n, out, out_prefix):
    """Write a named benchmark signal to a two-column text file."""

    def run():
        out_dir = _out_dir(out)
        prefix = out_prefix or name.lower()
        write_signal_file(out_dir / f"{prefix}_signal.txt", test_signal(name, n))
        click.echo(f"wrote {prefix}_signal.txt")

    _guarded(run)


def main():
    cli(prog_name="lrdeconv")


if __name__ == "__main__":
    main()
