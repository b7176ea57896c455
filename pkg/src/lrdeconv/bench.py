"""Experiment harness: test signals, RMSE, replicated grids, and trends.

Cells of an experiment grid are replicated simulate-estimate cycles over
(signal, nu, alpha, M, SNR, zeta rule).  Seeding is fully deterministic:
the stream of a cell depends on the master seed and on the cell's
(signal, nu, snr, zeta) block only, so cells that differ in alpha or in
the channel count share replicate noise and can be compared pairwise.
"""

from __future__ import annotations

import csv
import itertools
import math
import zlib
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats

from .estimator import EstimatorConfig, hard_threshold_estimate
from .kernels import KernelSpec
from .model import ChannelSpec, REPLICATE_TAG, derive_seed, simulate
from .noise import LrdSpec

__all__ = [
    "SIGNALS",
    "test_signal",
    "rmse",
    "grid_norm",
    "build_channels",
    "ExperimentGrid",
    "CellResult",
    "ExperimentResult",
    "run_cell",
    "run_grid",
    "check_trends",
    "paired_one_sided_pvalue",
    "rate_slope",
    "RateSlope",
    "write_cells_csv",
    "write_reps_csv",
    "write_markdown",
]

SIGNALS = ("lidar", "doppler", "bumps", "blocks")

# piecewise-constant return profile: (start, stop, height) on [0, 1)
LIDAR_STEPS = (
    (0.15, 0.40, 0.9),
    (0.40, 0.46, 1.2),
    (0.46, 0.62, 0.65),
    (0.72, 0.85, 0.32),
)

_DJ_POSITIONS = (0.1, 0.13, 0.15, 0.23, 0.25, 0.4, 0.44, 0.65, 0.76, 0.78, 0.81)
_BLOCKS_HEIGHTS = (4, -5, 3, -4, 5, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2)
_BUMPS_HEIGHTS = (4, 5, 3, 4, 5, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2)
_BUMPS_WIDTHS = (0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005)


def test_signal(name: str, n: int) -> np.ndarray:
    """Deterministic benchmark signal on the n-point grid of [0, 1).

    doppler, bumps, and blocks follow the classical amplitude conventions
    used throughout the wavelet-denoising literature; lidar is the pinned
    step profile in ``LIDAR_STEPS``.
    """
    if n < 2 or n & (n - 1):
        raise ValueError(f"grid size must be a power of two, got {n}")
    t = np.arange(n) / n
    key = name.lower()
    if key == "doppler":
        return np.sqrt(t * (1.0 - t)) * np.sin(2.0 * np.pi * 1.05 / (t + 0.05))
    if key == "blocks":
        f = np.zeros(n)
        for t0, h in zip(_DJ_POSITIONS, _BLOCKS_HEIGHTS):
            f += h * (1.0 + np.sign(t - t0)) / 2.0
        return f
    if key == "bumps":
        f = np.zeros(n)
        for t0, h, w in zip(_DJ_POSITIONS, _BUMPS_HEIGHTS, _BUMPS_WIDTHS):
            f += h / (1.0 + np.abs((t - t0) / w)) ** 4
        return f
    if key == "lidar":
        f = np.zeros(n)
        for lo, hi, h in LIDAR_STEPS:
            f[(t >= lo) & (t < hi)] += h
        return f
    raise ValueError(f"unknown signal {name!r}; choose from {SIGNALS}")


def grid_norm(x: np.ndarray) -> float:
    """Discrete L2([0,1)) norm, sqrt of the mean square."""
    with np.errstate(over="ignore"):
        return float(np.sqrt(np.mean(np.square(x, dtype=float))))


def rmse(estimates, truth: np.ndarray) -> float:
    """Mean over replicates of the grid-norm reconstruction error."""
    estimates = list(estimates)
    if not estimates:
        raise ValueError("need at least one estimate")
    truth = np.asarray(truth, dtype=float)
    errs = []
    for est in estimates:
        est = np.asarray(est, dtype=float)
        if est.shape != truth.shape:
            raise ValueError("estimate and truth grids differ")
        errs.append(grid_norm(est - truth))
    return float(np.mean(errs))


def build_channels(
    family: str,
    nu: float,
    alpha: float,
    m_channels: int,
    generator: str = "farima",
    boxcar_widths=None,
) -> list:
    """Homogeneous channel bank: shared decay, independent noise streams.

    Box-car banks draw their widths from quadratic irrationals with bounded
    continued fractions so no multiplier resonates to zero on dyadic grids.
    """
    default_widths = ((math.sqrt(5) - 1) / 2, math.sqrt(2) - 1, math.sqrt(3) - 1)
    channels = []
    for ell in range(m_channels):
        if family == "boxcar":
            widths = boxcar_widths or default_widths
            kernel = KernelSpec("boxcar", c=widths[ell % len(widths)])
        elif family == "direct" or (family == "regular_smooth" and nu == 0.0):
            kernel = KernelSpec("direct")
        else:
            kernel = KernelSpec(family, nu=nu)
        channels.append(ChannelSpec(kernel, LrdSpec(alpha=alpha, generator=generator)))
    return channels


@dataclass(frozen=True)
class ExperimentGrid:
    """Cartesian benchmark layout plus shared run settings."""

    signals: tuple
    nus: tuple
    alphas: tuple
    Ms: tuple
    snr_dbs: tuple
    zeta_rules: tuple
    reps: int = 200
    n: int = 4096
    master_seed: int = 0
    kernel_family: str = "regular_smooth"
    generator: str = "farima"
    sigma_source: str = "mad_estimated"
    selection: str = "data_driven"

    def __post_init__(self):
        for name in ("signals", "nus", "alphas", "Ms", "snr_dbs", "zeta_rules"):
            vals = tuple(getattr(self, name))
            object.__setattr__(self, name, vals)
            if not vals:
                raise ValueError(f"{name} must be nonempty")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two")
        for s in self.signals:
            if s.lower() not in SIGNALS:
                raise ValueError(f"unknown signal {s!r}")

    def cell_keys(self):
        return list(
            itertools.product(
                self.signals, self.nus, self.alphas, self.Ms, self.snr_dbs, self.zeta_rules
            )
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CellResult:
    """Replicated statistics of one grid cell."""

    rmse: float
    se: float
    mean_j1: float
    best_channel_mode: int | None
    kept_fraction: float
    errors: np.ndarray
    j1_values: np.ndarray


def _pair_seed(master_seed: int, signal: str, nu, snr_db, zeta_rule, n: int) -> int:
    """Cell stream id shared by all (alpha, M) variants of a block."""
    tag = f"{signal.lower()}|{float(nu):.6g}|{float(snr_db):.6g}|{zeta_rule}|{n}"
    return int(np.uint32(master_seed) ^ np.uint32(zlib.crc32(tag.encode())))


def _rep_seed(cell_seed: int, rep: int) -> int:
    return int(derive_seed(cell_seed, REPLICATE_TAG, rep).generate_state(1)[0])


def run_cell(
    signal,
    channels,
    config: EstimatorConfig,
    reps: int,
    seed: int,
    snr_db: float = 20.0,
    n: int | None = None,
) -> CellResult:
    """Replicated simulate-estimate cycles against one truth signal."""
    if isinstance(signal, str):
        if n is None:
            raise ValueError("pass n when the signal is given by name")
        truth = test_signal(signal, n)
    else:
        truth = np.asarray(signal, dtype=float)
        n = truth.shape[0]
    errors = np.empty(reps)
    j1s = np.empty(reps)
    best = []
    kept = np.empty(reps)
    for r in range(reps):
        obs = simulate(truth, channels, snr_db, _rep_seed(seed, r))
        est = hard_threshold_estimate(obs, config)
        errors[r] = grid_norm(est.signal - truth)
        d = est.diagnostics
        j1s[r] = d["j1"]
        if d["best_channel_estimated"] is not None:
            best.append(d["best_channel_estimated"])
        levels = d["levels"]
        total = sum(l["total"] for l in levels)
        kept[r] = sum(l["kept"] for l in levels) / total if total else 0.0
    mode_channel = None
    if best:
        vals, counts = np.unique(best, return_counts=True)
        mode_channel = int(vals[np.argmax(counts)])
    return CellResult(
        rmse=float(errors.mean()),
        se=float(errors.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
        mean_j1=float(j1s.mean()),
        best_channel_mode=mode_channel,
        kept_fraction=float(kept.mean()),
        errors=errors,
        j1_values=j1s,
    )


@dataclass
class ExperimentResult:
    """All cell results of a grid run, keyed by the cell tuple."""

    grid: ExperimentGrid
    cells: dict = field(default_factory=dict)

    def cell(self, signal, nu, alpha, m_channels, snr_db, zeta_rule) -> CellResult:
        return self.cells[(signal, nu, alpha, m_channels, snr_db, zeta_rule)]

    def rows(self):
        out = []
        for key in self.grid.cell_keys():
            signal, nu, alpha, m_channels, snr_db, zeta = key
            cell = self.cells[key]
            out.append(
                {
                    "signal": signal,
                    "nu": nu,
                    "alpha": alpha,
                    "M": m_channels,
                    "snr_db": snr_db,
                    "zeta_rule": zeta,
                    "rmse": cell.rmse,
                    "se": cell.se,
                    "mean_j1": round(cell.mean_j1, 1),
                    "best_channel_mode": cell.best_channel_mode,
                    "kept_fraction": cell.kept_fraction,
                    "reps": self.grid.reps,
                    "n": self.grid.n,
                }
            )
        return out


def run_grid(grid: ExperimentGrid) -> ExperimentResult:
    """Evaluate every cell; deterministic for a fixed grid and master seed."""
    result = ExperimentResult(grid=grid)
    for key in grid.cell_keys():
        signal, nu, alpha, m_channels, snr_db, zeta = key
        channels = build_channels(grid.kernel_family, nu, alpha, m_channels, grid.generator)
        config = EstimatorConfig(
            mode="boxcar" if grid.kernel_family == "boxcar" else "regular_smooth",
            zeta=zeta,
            sigma_source=grid.sigma_source,
            selection=grid.selection,
        )
        seed = _pair_seed(grid.master_seed, signal, nu, snr_db, str(zeta), grid.n)
        result.cells[key] = run_cell(
            signal, channels, config, grid.reps, seed, snr_db=snr_db, n=grid.n
        )
    return result


def paired_one_sided_pvalue(errors_a: np.ndarray, errors_b: np.ndarray) -> float:
    """p-value for mean(errors_a - errors_b) > 0 from paired replicates."""
    diff = np.asarray(errors_a, dtype=float) - np.asarray(errors_b, dtype=float)
    m = diff.size
    if m < 2:
        raise ValueError("need at least two paired replicates")
    sd = diff.std(ddof=1)
    if sd == 0.0:
        return 0.0 if diff.mean() > 0 else 1.0
    t = diff.mean() / (sd / math.sqrt(m))
    return float(stats.t.sf(t, df=m - 1))


def check_trends(result: ExperimentResult) -> list:
    """Point-estimate monotonicity violations, one message per failure.

    Checks, wherever a grid axis has at least two values: RMSE must not
    increase with the channel count, must not decrease as alpha drops, and
    must not decrease as nu grows.
    """
    grid = result.grid
    violations = []

    def fmt(key):
        return "signal={} nu={} alpha={} M={} snr={} zeta={}".format(*key)

    for signal, nu, alpha, snr, zeta in itertools.product(
        grid.signals, grid.nus, grid.alphas, grid.snr_dbs, grid.zeta_rules
    ):
        ms = sorted(grid.Ms)
        for m_lo, m_hi in zip(ms, ms[1:]):
            a = result.cell(signal, nu, alpha, m_lo, snr, zeta)
            b = result.cell(signal, nu, alpha, m_hi, snr, zeta)
            if b.rmse > a.rmse:
                violations.append(
                    f"rmse increased with channels at "
                    f"{fmt((signal, nu, alpha, f'{m_lo}->{m_hi}', snr, zeta))}"
                )
    for signal, nu, m_channels, snr, zeta in itertools.product(
        grid.signals, grid.nus, grid.Ms, grid.snr_dbs, grid.zeta_rules
    ):
        alphas = sorted(grid.alphas, reverse=True)
        for a_hi, a_lo in zip(alphas, alphas[1:]):
            a = result.cell(signal, nu, a_hi, m_channels, snr, zeta)
            b = result.cell(signal, nu, a_lo, m_channels, snr, zeta)
            if b.rmse < a.rmse:
                violations.append(
                    f"rmse dropped under stronger memory at "
                    f"{fmt((signal, nu, f'{a_hi}->{a_lo}', m_channels, snr, zeta))}"
                )
    for signal, alpha, m_channels, snr, zeta in itertools.product(
        grid.signals, grid.alphas, grid.Ms, grid.snr_dbs, grid.zeta_rules
    ):
        nus = sorted(grid.nus)
        for n_lo, n_hi in zip(nus, nus[1:]):
            a = result.cell(signal, n_lo, alpha, m_channels, snr, zeta)
            b = result.cell(signal, n_hi, alpha, m_channels, snr, zeta)
            if b.rmse < a.rmse:
                violations.append(
                    f"rmse dropped under heavier blur at "
                    f"{fmt((signal, f'{n_lo}->{n_hi}', alpha, m_channels, snr, zeta))}"
                )
    return violations


@dataclass
class RateSlope:
    """Per-seed least-squares slope of log error against log n."""

    slope: float
    stderr: float
    per_seed: np.ndarray
    log_errors: np.ndarray


def rate_slope(
    signal_name: str,
    channels,
    config: EstimatorConfig,
    n_list,
    reps: int,
    snr_db: float = 20.0,
    master_seed: int = 0,
) -> RateSlope:
    """Empirical convergence slope over a ladder of sample sizes.

    Each seed contributes one replicate per n; pairing across estimator
    variants is achieved by sharing the master seed.
    """
    n_list = sorted(int(v) for v in n_list)
    if len(n_list) < 3:
        raise ValueError("need at least three sample sizes")
    log_errs = np.empty((reps, len(n_list)))
    logn = np.log(np.asarray(n_list, dtype=float))
    for s in range(reps):
        for i, n in enumerate(n_list):
            truth = test_signal(signal_name, n)
            obs = simulate(truth, channels, snr_db, _rep_seed(master_seed + n, s))
            est = hard_threshold_estimate(obs, config)
            log_errs[s, i] = math.log(grid_norm(est.signal - truth))
    per_seed = np.array([np.polyfit(logn, log_errs[s], 1)[0] for s in range(reps)])
    return RateSlope(
        slope=float(per_seed.mean()),
        stderr=float(per_seed.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
        per_seed=per_seed,
        log_errors=log_errs,
    )


CSV_COLUMNS = [
    "signal",
    "nu",
    "alpha",
    "M",
    "snr_db",
    "zeta_rule",
    "rmse",
    "se",
    "mean_j1",
    "best_channel_mode",
    "kept_fraction",
    "reps",
    "n",
]


def write_cells_csv(result: ExperimentResult, path):
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in result.rows():
            writer.writerow(row)


def write_reps_csv(result: ExperimentResult, path):
    """Long-format replicate errors for external plotting."""
    cols = ["signal", "nu", "alpha", "M", "snr_db", "zeta_rule", "rep", "error", "j1"]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(cols)
        for key in result.grid.cell_keys():
            cell = result.cells[key]
            for r, (err, j1) in enumerate(zip(cell.errors, cell.j1_values)):
                writer.writerow([*key, r, repr(float(err)), int(j1)])


def write_markdown(result: ExperimentResult, path):
    """Grouped table: one block per (signal, nu, snr), rows by zeta rule."""
    grid = result.grid
    lines = []
    for signal, nu, snr in itertools.product(grid.signals, grid.nus, grid.snr_dbs):
        lines.append(f"## {signal}, nu = {nu}, SNR {snr} dB")
        lines.append("")
        header = ["zeta"]
        for alpha, m_channels in itertools.product(grid.alphas, grid.Ms):
            header.append(f"alpha={alpha} M={m_channels}")
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "---|" * len(header))
        for zeta in grid.zeta_rules:
            row = [str(zeta)]
            for alpha, m_channels in itertools.product(grid.alphas, grid.Ms):
                cell = result.cell(signal, nu, alpha, m_channels, snr, zeta)
                row.append(f"{cell.rmse:.3f} ({cell.mean_j1:.1f})")
            lines.append("| " + " | ".join(row) + " |")
        lines.append("")
    with open(path, "w") as handle:
        handle.write("\n".join(lines))
