"""Channel fusion, coefficient estimation, thresholds, and scale selection.

The estimator works in the Fourier domain: every channel contributes its
observed coefficients through weights proportional to its local signal to
noise ratio, the fused coefficients are folded into wavelet coefficients,
and detail coefficients below a level-dependent threshold are zeroed
before synthesis.  Scale levels and the working channel can be chosen
from theory (decay exponents) or from data (noisy probe spectra and their
stopping frequencies).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import NamedTuple

import numpy as np

from . import meyer
from .kernels import fourier_multiplier
from .model import MultichannelObservation, PROBE_TAG, derive_seed
from .noise import estimate_sigma_mad, generate_noise

__all__ = [
    "EstimatorConfig",
    "ChannelRates",
    "EstimateResult",
    "StoppingResult",
    "optimal_channel",
    "optimal_weights",
    "estimate_wavelet_coeffs",
    "coeff_variance",
    "tau_j",
    "c_n",
    "threshold",
    "zeta_lower_bound",
    "resolve_zeta",
    "theoretical_j0",
    "theoretical_j1",
    "probe_channel",
    "stopping_time",
    "data_driven_j1",
    "data_driven_best_channel",
    "hard_threshold_estimate",
    "linear_estimate",
]

MODES = ("regular_smooth", "super_smooth", "boxcar")
ZETA_RULES = ("sqrt_alpha", "four_sqrt_alpha", "theoretical")

# fused denominators at or below this are treated as vanished (box-car
# resonances, severe super-smooth decay) and the frequency is dropped
DENOMINATOR_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimation choices: thresholding, scales, and noise-level source."""

    mode: str = "regular_smooth"
    zeta: float | str = "sqrt_alpha"
    p: float = 2.0
    j0: int | str = "auto"
    j1: int | str = "auto"
    selection: str = "data_driven"
    sigma_source: str = "known"
    epsilon: float = 0.1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if isinstance(self.zeta, str):
            if self.zeta not in ZETA_RULES:
                raise ValueError(f"unknown zeta rule {self.zeta!r}")
        elif self.zeta < 0.0:
            raise ValueError("zeta must be nonnegative")
        if self.p < 1.0:
            raise ValueError("risk exponent p must be at least 1")
        for name in ("j0", "j1"):
            val = getattr(self, name)
            if isinstance(val, str):
                if val != "auto":
                    raise ValueError(f"{name} must be an integer or 'auto'")
            elif val < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.selection not in ("data_driven", "theoretical"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.sigma_source not in ("known", "mad_estimated"):
            raise ValueError(f"unknown sigma source {self.sigma_source!r}")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EstimatorConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown estimator fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class ChannelRates:
    """Per-channel decay parameters and the derived selection quantities."""

    n: int
    mode: str
    alphas: tuple
    nus: tuple
    thetas: tuple
    betas: tuple
    sigmas: tuple | None
    ell_star: int
    alpha_min: float
    alpha_max: float
    nu_star: float
    nu_tilde_star: float
    xi: float

    @classmethod
    def from_channels(cls, channels, n: int, mode: str, sigmas=None) -> "ChannelRates":
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        alphas = tuple(ch.lrd.alpha for ch in channels)
        nus = tuple(ch.kernel.nu for ch in channels)
        thetas = tuple(ch.kernel.theta for ch in channels)
        betas = tuple(ch.kernel.beta for ch in channels)
        if sigmas is None and all(ch.lrd.sigma is not None for ch in channels):
            sigmas = tuple(ch.lrd.sigma for ch in channels)
        elif sigmas is not None:
            sigmas = tuple(float(s) for s in sigmas)
        ell = optimal_channel(channels, n)
        m_count = len(channels)
        alpha_min = min(alphas)
        alpha_max = max(alphas)
        nu_star = nus[ell] + alphas[ell] / 2.0 - 0.5
        nu_tilde_star = (2 * m_count + 1) / (2 * m_count) + alpha_max / 2.0 - 0.5
        xi = alpha_min if mode == "boxcar" else alphas[ell]
        return cls(
            n=n,
            mode=mode,
            alphas=alphas,
            nus=nus,
            thetas=thetas,
            betas=betas,
            sigmas=sigmas,
            ell_star=ell,
            alpha_min=alpha_min,
            alpha_max=alpha_max,
            nu_star=nu_star,
            nu_tilde_star=nu_tilde_star,
            xi=xi,
        )


def optimal_channel(channels, n: int) -> int:
    """Index of the channel with the most favorable variance criterion.

    Minimizes n**(-alpha) 2**(alpha + 2 nu) exp(2 theta 2**beta); computed
    in logs, ties broken by the smallest index.
    """
    if not channels:
        raise ValueError("need at least one channel")
    crit = [
        -ch.lrd.alpha * math.log(n)
        + (ch.lrd.alpha + 2.0 * ch.kernel.nu) * math.log(2.0)
        + 2.0 * ch.kernel.theta * 2.0**ch.kernel.beta
        for ch in channels
    ]
    return int(np.argmin(crit))


def _resolved_sigmas(channels, sigmas) -> np.ndarray:
    if sigmas is None:
        sigmas = [ch.lrd.sigma for ch in channels]
        if any(s is None for s in sigmas):
            raise ValueError("channel sigma not set; pass sigmas explicitly")
    sigmas = np.asarray(sigmas, dtype=float)
    if np.any(sigmas < 0.0):
        raise ValueError("sigmas must be nonnegative")
    if np.all(sigmas == 0.0):
        # noiseless channels: weights are immaterial, use a common scale
        return np.ones_like(sigmas)
    if np.any(sigmas == 0.0):
        raise ValueError("mixing zero and positive sigmas is not supported")
    return sigmas


def optimal_weights(m, channels, n: int, sigmas=None) -> np.ndarray:
    """Variance-minimizing fusion weights, one row per channel.

    gamma_{m, ell} = n**alpha_ell sigma_ell**-2 max(|m|, 1)**(2 H_ell - 1);
    the max guards the zero frequency, which only the scaling band uses.
    """
    sig = _resolved_sigmas(channels, sigmas)
    m = np.atleast_1d(np.asarray(m, dtype=float))
    base = np.maximum(np.abs(m), 1.0)
    out = np.empty((len(channels), m.size))
    for ell, ch in enumerate(channels):
        expo = 2.0 * (1.0 - ch.lrd.alpha / 2.0) - 1.0  # 2 H - 1
        out[ell] = float(n) ** ch.lrd.alpha * sig[ell] ** -2.0 * base**expo
    return out


def _fusion_sums(obs: MultichannelObservation, ms: np.ndarray, sigmas):
    """Numerator and denominator of the fused spectrum at frequencies ms."""
    weights = optimal_weights(ms, obs.channels, obs.n, sigmas)
    num = np.zeros(ms.size, dtype=complex)
    den = np.zeros(ms.size, dtype=float)
    for ell, ch in enumerate(obs.channels):
        g = fourier_multiplier(ch.kernel, ms)
        y = obs.coeff(ell, ms)
        num += weights[ell] * np.conj(g) * y
        den += weights[ell] * np.abs(g) ** 2
    return num, den


def _fusion_denominator(channels, n: int, ms: np.ndarray, sigmas) -> np.ndarray:
    weights = optimal_weights(ms, channels, n, sigmas)
    den = np.zeros(ms.size, dtype=float)
    for ell, ch in enumerate(channels):
        g = fourier_multiplier(ch.kernel, ms)
        den += weights[ell] * np.abs(g) ** 2
    return den


def _fused_spectrum(obs: MultichannelObservation, j0: int, j1: int, sigmas):
    """Fused Fourier coefficients over the basis support, FFT bin order.

    Frequencies whose fused denominator vanishes are dropped and reported.
    """
    n = obs.n
    needed = [meyer.phi_domain(j0)]
    for j in range(j0, j1 + 1):
        ms = meyer.cj_domain(j)
        needed.append(ms[(ms >= -n // 2) & (ms <= n // 2 - 1)])
    ms = np.unique(np.concatenate(needed))
    num, den = _fusion_sums(obs, ms, sigmas)
    good = den > DENOMINATOR_FLOOR
    spectrum = np.zeros(n, dtype=complex)
    spectrum[ms[good] % n] = num[good] / den[good]
    return spectrum, [int(v) for v in ms[~good]]


def estimate_wavelet_coeffs(
    obs: MultichannelObservation, j0: int, j1: int, sigmas=None
):
    """Unthresholded wavelet coefficients of the fused estimate.

    Returns (coefficients, dropped_frequencies); the estimates are
    unbiased wherever no frequency was dropped.
    """
    sigmas = _resolved_sigmas(obs.channels, sigmas)
    spectrum, dropped = _fused_spectrum(obs, j0, j1, sigmas)
    for j in range(j0, j1 + 1):
        ms = meyer.cj_domain(j)
        in_grid = ms[(ms >= -obs.n // 2) & (ms <= obs.n // 2 - 1)]
        if in_grid.size and np.isin(in_grid, dropped).all():
            raise ValueError(
                f"all frequencies of level {j} have vanishing fused response"
            )
    return meyer.analyze_spectrum(spectrum, j0, j1), dropped


def coeff_variance(j: int, k: int, channels, n: int, sigmas=None) -> float:
    """Exact variance of an estimated detail coefficient at level j.

    Independent of the position k because the squared table values are;
    k is accepted for interface symmetry and validated only.
    """
    if not 0 <= k < 2**j:
        raise ValueError(f"position k={k} outside [0, {2**j})")
    ms, vals = meyer.cj_domain(j), None
    if ms.max() > n // 2 - 1:
        raise ValueError(f"level {j} is too fine for an n={n} grid")
    sig = _resolved_sigmas(channels, sigmas)
    vals = meyer.psi_hat(ms / 2**j)
    den = _fusion_denominator(channels, n, ms, sig)
    if np.any(den <= DENOMINATOR_FLOOR):
        bad = ms[den <= DENOMINATOR_FLOOR]
        raise ValueError(f"vanishing fused response at frequencies {bad.tolist()}")
    return float(np.sum(np.abs(vals) ** 2 / 2**j / den))


def c_n(n, xi: float) -> float:
    """Sample-size scaling factor sqrt(log n / n**xi), natural log."""
    if n < 2:
        raise ValueError("need n >= 2")
    return math.sqrt(math.log(n) / float(n) ** xi)


def tau_j(j: int, channels, n: int, xi: float, sigmas=None) -> float:
    """Level-dependent threshold scale: n**xi times the coefficient variance."""
    return math.sqrt(float(n) ** xi * coeff_variance(j, 0, channels, n, sigmas))


def zeta_lower_bound(p: float, xi: float) -> float:
    """Smoothing multiplier the risk bounds ask for: 2 sqrt((p v 2) 2 xi)."""
    return 2.0 * math.sqrt(max(p, 2.0) * 2.0 * xi)


def resolve_zeta(zeta, p: float, xi: float) -> float:
    """Numeric threshold multiplier from a rule name or a number."""
    if isinstance(zeta, str):
        if zeta == "sqrt_alpha":
            return math.sqrt(xi)
        if zeta == "four_sqrt_alpha":
            return 4.0 * math.sqrt(xi)
        if zeta == "theoretical":
            return zeta_lower_bound(p, xi)
        raise ValueError(f"unknown zeta rule {zeta!r}")
    return float(zeta)


def threshold(j: int, channels, n: int, xi: float, zeta: float, sigmas=None) -> float:
    """Hard threshold for level j: zeta tau_j c_n."""
    return zeta * tau_j(j, channels, n, xi, sigmas) * c_n(n, xi)


class StoppingResult(NamedTuple):
    stop: int
    crossed: bool


def stopping_time(probe: np.ndarray, alpha: float, epsilon_l: float) -> StoppingResult:
    """First frequency where a probe falls under the noise envelope.

    The envelope is omega**(alpha/2) epsilon log(epsilon**-2); if the
    probe never crosses, the last available frequency is returned with
    ``crossed=False``.
    """
    probe = np.asarray(probe)
    if probe.ndim != 1 or probe.size < 2:
        raise ValueError("probe must cover frequencies 0 .. n/2 - 1")
    omegas = np.arange(1, probe.size)
    envelope = epsilon_l * np.log(epsilon_l**-2.0) * omegas ** (alpha / 2.0)
    hits = np.abs(probe[1:]) <= envelope
    if hits.any():
        return StoppingResult(int(omegas[np.argmax(hits)]), True)
    return StoppingResult(int(omegas[-1]), False)


def probe_channel(kernel, lrd, n: int, seed, noiseless: bool = False) -> np.ndarray:
    """Fourier response of one channel to a unit probe, frequencies 0..n/2-1.

    The noise draw is an independent stream with the same law as the
    channel's observation noise.
    """
    omegas = np.arange(n // 2)
    g = fourier_multiplier(kernel, omegas).astype(complex)
    if noiseless:
        return g
    if lrd.sigma is None:
        raise ValueError("probe needs the channel noise scale sigma")
    series = generate_noise(lrd, n, seed)
    eps = np.fft.fft(series)[: n // 2] / n
    return g + lrd.sigma * eps


def data_driven_j1(probes, channels, n: int, sigmas=None):
    """Fine-scale estimate: max over channels of floor(log2 stop) - 1.

    Returns (overall level, per-channel levels), clamped to [0, J - 2].
    """
    sig = _resolved_sigmas(channels, sigmas)
    J = n.bit_length() - 1
    per_channel = []
    stops = []
    for ell, ch in enumerate(channels):
        eps = sig[ell] * float(n) ** (-ch.lrd.alpha / 2.0)
        stop = stopping_time(probes[ell], ch.lrd.alpha, eps).stop
        stops.append(stop)
        level = int(math.floor(math.log2(stop))) - 1 if stop >= 1 else 0
        per_channel.append(int(np.clip(level, 0, J - 2)))
    return max(per_channel), per_channel, stops


def data_driven_best_channel(probes, channels, n: int, sigmas=None) -> int:
    """Channel with the largest stopping frequency, first index on ties."""
    sig = _resolved_sigmas(channels, sigmas)
    stops = []
    for ell, ch in enumerate(channels):
        eps = sig[ell] * float(n) ** (-ch.lrd.alpha / 2.0)
        stops.append(stopping_time(probes[ell], ch.lrd.alpha, eps).stop)
    return int(np.argmax(stops))


def theoretical_j0(channels, n: int, epsilon: float = 0.1) -> int:
    """Coarse level for the projection estimator under super-smooth blur."""
    rates = ChannelRates.from_channels(channels, n, "super_smooth")
    ell = rates.ell_star
    theta, beta, alpha = rates.thetas[ell], rates.betas[ell], rates.alphas[ell]
    if theta <= 0.0:
        raise ValueError("projection level needs theta > 0 on the working channel")
    if not 0.0 < epsilon < alpha:
        raise ValueError(f"epsilon must lie in (0, alpha={alpha})")
    J = n.bit_length() - 1
    value = ((alpha - epsilon) * math.log(n) / (2.0 * theta)) ** (1.0 / beta)
    return int(np.clip(round(math.log2(value)), 0, J - 2))


def theoretical_j1(mode: str, channels, n: int) -> int:
    """Fine truncation level from the decay exponents, clamped to [0, J-2]."""
    if mode not in ("regular_smooth", "boxcar"):
        raise ValueError("fine-level rule applies to thresholding modes only")
    rates = ChannelRates.from_channels(channels, n, mode)
    logn = math.log(n)
    if mode == "boxcar":
        value = (float(n) ** rates.alpha_min / logn) ** (
            1.0 / (2.0 * rates.nu_tilde_star + 1.0)
        )
    else:
        value = (float(n) ** rates.alphas[rates.ell_star] / logn) ** (
            1.0 / (2.0 * rates.nu_star + 1.0)
        )
    J = n.bit_length() - 1
    return int(np.clip(math.floor(math.log2(value)), 0, J - 2))


@dataclass
class EstimateResult:
    """Reconstruction, the (thresholded) coefficients, and diagnostics."""

    signal: np.ndarray
    coeffs: meyer.WaveletCoeffs
    diagnostics: dict = field(default_factory=dict)


def _resolve_sigma_source(obs: MultichannelObservation, config: EstimatorConfig):
    known = [ch.lrd.sigma for ch in obs.channels]
    mad = [estimate_sigma_mad(obs.samples[ell]) for ell in range(obs.n_channels)]
    if config.sigma_source == "known":
        if any(s is None for s in known):
            raise ValueError("sigma_source='known' but channel sigmas are unset")
        used = _resolved_sigmas(obs.channels, known)
    else:
        used = _resolved_sigmas(obs.channels, mad) if any(mad) else np.ones(len(mad))
    return used, known, mad


def _make_probes(obs: MultichannelObservation, sigmas) -> list:
    seed = obs.seed if obs.seed is not None else 0
    probes = []
    for ell, ch in enumerate(obs.channels):
        lrd = ch.lrd.with_sigma(float(sigmas[ell]))
        noiseless = obs.snr_db is None
        stream = derive_seed(seed, PROBE_TAG, ell)
        probes.append(probe_channel(ch.kernel, lrd, obs.n, stream, noiseless))
    return probes


def hard_threshold_estimate(
    obs: MultichannelObservation,
    config: EstimatorConfig,
    probes=None,
) -> EstimateResult:
    """Fused hard-thresholding reconstruction for polynomial-decay blurs.

    When scale selection is data driven and no probes are passed, probe
    spectra are synthesized from the channel specs on an independent
    stream derived from the observation seed.
    """
    if config.mode not in ("regular_smooth", "boxcar"):
        raise ValueError(
            f"hard thresholding applies to regular_smooth or boxcar modes, "
            f"got {config.mode!r}"
        )
    n = obs.n
    J = n.bit_length() - 1
    sigmas, sigma_known, sigma_mad = _resolve_sigma_source(obs, config)
    rates = ChannelRates.from_channels(obs.channels, n, config.mode, sigmas)
    j0 = 0 if config.j0 == "auto" else int(config.j0)

    per_channel_j1 = stops = None
    if config.j1 != "auto":
        j1 = int(config.j1)
        j1_source = "fixed"
    elif config.selection == "theoretical":
        j1 = theoretical_j1(config.mode, obs.channels, n)
        j1_source = "theoretical"
    else:
        if probes is None:
            probes = _make_probes(obs, sigmas)
        j1, per_channel_j1, stops = data_driven_j1(probes, obs.channels, n, sigmas)
        j1_source = "data_driven"
    j1 = int(np.clip(j1, j0, J - 2))

    ell_hat = (
        data_driven_best_channel(probes, obs.channels, n, sigmas)
        if probes is not None
        else None
    )

    coeffs, dropped = estimate_wavelet_coeffs(obs, j0, j1, sigmas)
    zeta = resolve_zeta(config.zeta, config.p, rates.xi)
    bound = zeta_lower_bound(config.p, rates.xi)
    cn = c_n(n, rates.xi)
    levels = []
    for j in range(j0, j1 + 1):
        tau = tau_j(j, obs.channels, n, rates.xi, sigmas)
        lam = zeta * tau * cn
        detail = coeffs.level(j)
        keep = np.abs(detail) >= lam
        detail[~keep] = 0.0
        levels.append(
            {
                "j": j,
                "tau": float(tau),
                "lambda": float(lam),
                "total": int(detail.size),
                "kept": int(keep.sum()),
            }
        )
    signal = meyer.inverse_transform(coeffs, n)
    diagnostics = {
        "method": "hard_threshold",
        "mode": config.mode,
        "n": n,
        "j0": j0,
        "j1": j1,
        "j1_source": j1_source,
        "per_channel_j1": per_channel_j1,
        "stopping_frequencies": stops,
        "best_channel_theoretical": rates.ell_star + 1,
        "best_channel_estimated": None if ell_hat is None else ell_hat + 1,
        "xi": float(rates.xi),
        "zeta": float(zeta),
        "zeta_rule": config.zeta if isinstance(config.zeta, str) else None,
        "zeta_theoretical_bound": float(bound),
        "zeta_meets_theoretical_bound": bool(zeta > bound),
        "c_n": float(cn),
        "levels": levels,
        "sigma_known": None
        if any(s is None for s in sigma_known)
        else [float(s) for s in sigma_known],
        "sigma_mad": None if sigma_mad is None else [float(s) for s in sigma_mad],
        "sigma_used": [float(s) for s in sigmas],
        "degenerate_frequencies": dropped,
    }
    return EstimateResult(signal=signal, coeffs=coeffs, diagnostics=diagnostics)


def linear_estimate(
    obs: MultichannelObservation, config: EstimatorConfig
) -> EstimateResult:
    """Scaling-space projection reconstruction for exponential-decay blurs."""
    if config.mode != "super_smooth":
        raise ValueError(f"projection estimator needs mode='super_smooth', "
                         f"got {config.mode!r}")
    n = obs.n
    sigmas, sigma_known, sigma_mad = _resolve_sigma_source(obs, config)
    rates = ChannelRates.from_channels(obs.channels, n, config.mode, sigmas)
    if rates.thetas[rates.ell_star] <= 0.0:
        raise ValueError("super_smooth mode needs theta > 0 on the working channel")
    if config.j0 == "auto":
        j0 = theoretical_j0(obs.channels, n, config.epsilon)
    else:
        j0 = int(config.j0)
    spectrum, dropped = _fused_spectrum(obs, j0, j0 - 1, sigmas)
    coeffs = meyer.analyze_spectrum(spectrum, j0, j0 - 1)
    signal = meyer.inverse_transform(coeffs, n)
    diagnostics = {
        "method": "linear",
        "mode": config.mode,
        "n": n,
        "j0": j0,
        "j1": None,
        "best_channel_theoretical": rates.ell_star + 1,
        "xi": float(rates.xi),
        "sigma_known": None
        if any(s is None for s in sigma_known)
        else [float(s) for s in sigma_known],
        "sigma_mad": None if sigma_mad is None else [float(s) for s in sigma_mad],
        "sigma_used": [float(s) for s in sigmas],
        "degenerate_frequencies": dropped,
    }
    return EstimateResult(signal=signal, coeffs=coeffs, diagnostics=diagnostics)
