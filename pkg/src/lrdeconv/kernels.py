"""Blur kernel families with exact Fourier multipliers.

Every kernel acts by circular convolution on [0, 1); the action on the
Fourier side is a pointwise real symmetric multiplier, so blurred signals
stay real.  Smooth families use (1 + |m|)**(-nu) * exp(-theta |m|**beta),
which has the required decay order and a well-defined unit DC response.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .meyer import signed_frequencies

__all__ = ["KernelSpec", "fourier_multiplier", "convolve", "boxcar_coeff_bounds"]

FAMILIES = ("regular_smooth", "super_smooth", "boxcar", "direct")


@dataclass(frozen=True)
class KernelSpec:
    """One channel's blur family and its parameters.

    nu is the polynomial decay exponent (degree of ill-posedness), theta
    and beta shape the exponential factor of super-smooth blurs, and c is
    the box-car window width.
    """

    family: str
    nu: float = 0.0
    theta: float = 0.0
    beta: float = 1.0
    c: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "regular_smooth":
            if self.theta != 0.0:
                raise ValueError("regular_smooth requires theta = 0")
            if self.nu <= 0.0:
                raise ValueError("regular_smooth requires nu > 0")
        elif self.family == "super_smooth":
            if self.theta <= 0.0 or self.beta <= 0.0:
                raise ValueError("super_smooth requires theta > 0 and beta > 0")
        elif self.family == "boxcar":
            if self.c <= 0.0:
                raise ValueError("boxcar requires window width c > 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        known = {"family", "nu", "theta", "beta", "c"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown kernel fields: {sorted(unknown)}")
        return cls(**data)


def fourier_multiplier(kernel: KernelSpec, m) -> np.ndarray:
    """Real symmetric multiplier g_m at integer frequencies m."""
    m = np.asarray(m, dtype=float)
    a = np.abs(m)
    if kernel.family == "direct":
        out = np.ones_like(a)
    elif kernel.family == "regular_smooth":
        out = (1.0 + a) ** (-kernel.nu)
    elif kernel.family == "super_smooth":
        out = (1.0 + a) ** (-kernel.nu) * np.exp(-kernel.theta * a**kernel.beta)
    else:  # boxcar; np.sinc(x) = sin(pi x) / (pi x) with sinc(0) = 1
        out = np.sinc(m * kernel.c)
    return out if out.ndim else float(out)


def convolve(signal: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    """Circular convolution via pointwise Fourier multiplication."""
    signal = np.asarray(signal, dtype=float)
    n = signal.shape[0]
    if n < 2 or n & (n - 1):
        raise ValueError(f"grid size must be a power of two, got {n}")
    g = fourier_multiplier(kernel, signed_frequencies(n))
    return np.fft.ifft(np.fft.fft(signal) * g).real


def boxcar_coeff_bounds(m: int, c: float) -> tuple[float, float]:
    """Sandwich bounds for |sinc(m c)| from the nearest-integer distance.

    Test oracle only: 2 ||mc|| / |pi m c| <= |g_m| <= ||mc|| / |m c|.
    """
    if m == 0:
        raise ValueError("bounds are defined for m != 0")
    x = m * c
    dist = abs(x - round(x))
    return 2.0 * dist / (np.pi * abs(x)), dist / abs(x)
