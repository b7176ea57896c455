"""Multichannel observation simulator and sequence-space accessors.

Each channel observes the blurred signal plus scaled long-memory noise on
the common n-point grid.  The rate factor n**(-alpha/2) of the continuous
model is carried analytically inside the estimator weights; here the noise
enters as sigma times a unit-scale series, which keeps the time-domain and
sequence-space pictures consistent without double counting.

Seeding is splittable and documented: every random stream is derived as
``np.random.SeedSequence([seed, tag, index, ...])`` with the tags below,
so replicates and channels can run in parallel with disjoint streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec, convolve
from .noise import LrdSpec, calibrate_sigma, generate_noise

__all__ = [
    "ChannelSpec",
    "MultichannelObservation",
    "simulate",
    "sequence_coeffs",
    "derive_seed",
    "NOISE_TAG",
    "PROBE_TAG",
    "REPLICATE_TAG",
]

NOISE_TAG = 1
PROBE_TAG = 2
REPLICATE_TAG = 3


def derive_seed(seed: int, *keys: int) -> np.random.SeedSequence:
    """Deterministic child stream for (seed, keys...)."""
    return np.random.SeedSequence([int(seed), *[int(k) for k in keys]])


@dataclass(frozen=True)
class ChannelSpec:
    """Blur kernel plus noise law for one observation channel."""

    kernel: KernelSpec
    lrd: LrdSpec

    def to_dict(self) -> dict:
        return {"kernel": self.kernel.to_dict(), "lrd": self.lrd.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelSpec":
        unknown = set(data) - {"kernel", "lrd"}
        if unknown:
            raise ValueError(f"unknown channel fields: {sorted(unknown)}")
        return cls(
            kernel=KernelSpec.from_dict(data["kernel"]),
            lrd=LrdSpec.from_dict(data["lrd"]),
        )


@dataclass
class MultichannelObservation:
    """Per-channel time samples and their Fourier coefficients.

    ``fourier[ell]`` holds np.fft.fft(samples[ell]) / n in FFT bin order;
    channels carry the calibrated sigma values used during simulation.
    """

    n: int
    channels: list
    samples: np.ndarray
    fourier: np.ndarray = field(default=None)
    snr_db: float | None = None
    seed: int | None = None

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        m, n = self.samples.shape
        if n != self.n:
            raise ValueError(f"samples have length {n}, expected {self.n}")
        if m != len(self.channels) or m < 1:
            raise ValueError("need one sample row per channel")
        if self.fourier is None:
            self.fourier = np.fft.fft(self.samples, axis=1) / self.n

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def coeff(self, ell: int, m) -> np.ndarray:
        """Fourier coefficient(s) of channel ell at signed frequencies m."""
        return self.fourier[ell][np.asarray(m) % self.n]


def _is_noiseless(snr_db) -> bool:
    return snr_db is None or (isinstance(snr_db, float) and math.isinf(snr_db))


def simulate(
    signal: np.ndarray,
    channels: list,
    snr_db: float | None,
    seed: int,
) -> MultichannelObservation:
    """Blur, calibrate, and contaminate the signal on every channel.

    Each channel's sigma is calibrated against its own blurred signal so
    all channels share the requested SNR; pass ``snr_db=None`` (or inf)
    to disable noise.  Channel noise streams are independent substreams
    of the seed.
    """
    signal = np.asarray(signal, dtype=float)
    n = signal.shape[0]
    if n < 16 or n & (n - 1):
        raise ValueError(f"need a power-of-two grid with at least 16 points, got {n}")
    if not channels:
        raise ValueError("need at least one channel")
    out_specs = []
    samples = np.empty((len(channels), n))
    for ell, spec in enumerate(channels):
        blurred = convolve(signal, spec.kernel)
        if _is_noiseless(snr_db):
            sigma = 0.0
            samples[ell] = blurred
        else:
            sigma = calibrate_sigma(blurred, snr_db)
            stream = derive_seed(seed, NOISE_TAG, ell)
            samples[ell] = blurred + sigma * generate_noise(spec.lrd, n, stream)
        out_specs.append(ChannelSpec(spec.kernel, spec.lrd.with_sigma(sigma)))
    return MultichannelObservation(
        n=n,
        channels=out_specs,
        samples=samples,
        snr_db=None if _is_noiseless(snr_db) else float(snr_db),
        seed=int(seed),
    )


def sequence_coeffs(obs: MultichannelObservation) -> np.ndarray:
    """Per-channel Fourier coefficients y_{m, ell}, FFT bin order."""
    return obs.fourier
