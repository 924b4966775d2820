"""Uniform time/frequency grids, photon envelopes and their transforms.

A single photon in a temporal mode is represented entirely by its classical
complex envelope ``f(t)`` sampled on a uniform midpoint grid.  Integrals are
midpoint Riemann sums, so ``sum(|f|**2) * dt`` is the photon norm.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .errors import GridMismatchError, GridResolutionError

DEFAULT_MAX_SAMPLES = 2**22
DEFAULT_N_REF = 100.0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid.

    Sample ``i`` sits at the cell midpoint ``t_start + (i + 1/2) * dt``, so a
    grid built by :func:`make_grid` is exactly symmetric about ``t = 0``.
    """

    t_start: float
    dt: float
    n_samples: int

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples}")

    @property
    def times(self) -> npt.NDArray[np.float64]:
        return self.t_start + (np.arange(self.n_samples) + 0.5) * self.dt

    @property
    def duration(self) -> float:
        return self.n_samples * self.dt

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    @property
    def dnu(self) -> float:
        """Frequency-grid spacing (Hz)."""
        return 1.0 / self.duration

    @property
    def frequencies(self) -> npt.NDArray[np.float64]:
        """Ascending frequency axis (Hz) of the companion spectral grid."""
        return np.fft.fftshift(np.fft.fftfreq(self.n_samples, self.dt))


class ShapeKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    ONE_SIDED_EXPONENTIAL = "one_sided_exponential"
    TWO_SIDED_EXPONENTIAL = "two_sided_exponential"


@dataclass(frozen=True)
class PulseShape:
    """Analytic photon envelope.

    ``coherence_time`` is the full width at half maximum of ``|f(t)|**2``.
    """

    kind: ShapeKind = ShapeKind.TWO_SIDED_EXPONENTIAL
    coherence_time: float = 100e-9

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ShapeKind(self.kind))
        if not self.coherence_time > 0:
            raise ValueError("coherence_time must be positive")

    @property
    def bandwidth(self) -> float:
        """FWHM of the power spectrum ``|f~(nu)|**2`` in Hz (the photon linewidth)."""
        tau = self.coherence_time
        if self.kind is ShapeKind.GAUSSIAN:
            return 4 * math.log(2) / (2 * math.pi * tau)
        if self.kind is ShapeKind.TWO_SIDED_EXPONENTIAL:
            # |f~|^2 ~ 1/(1 + (2 pi nu tau0)^2)^2 with tau0 = tau/ln2
            tau0 = tau / math.log(2)
            return 2 * math.sqrt(math.sqrt(2) - 1) / (2 * math.pi * tau0)
        # Lorentzian power spectrum, field decay constant 2 tau/ln2
        return math.log(2) / (2 * math.pi * tau)

    @property
    def onset(self) -> float:
        """Start time of the one-sided exponential; unused for symmetric shapes."""
        return -self.coherence_time

    def envelope(self, t: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """Unnormalized real envelope with unit peak."""
        t = np.asarray(t, dtype=float)
        tau = self.coherence_time
        ln2 = math.log(2)
        if self.kind is ShapeKind.GAUSSIAN:
            return np.exp(-2 * ln2 * (t / tau) ** 2)
        if self.kind is ShapeKind.TWO_SIDED_EXPONENTIAL:
            return np.exp(-ln2 * np.abs(t) / tau)
        x = t - self.onset
        return np.where(x >= 0, np.exp(-ln2 * np.clip(x, 0, None) / (2 * tau)), 0.0)

    def energy_outside(self, a: float, b: float) -> float:
        """Fraction of the continuous pulse energy lying outside ``[a, b]``."""
        tau = self.coherence_time
        ln2 = math.log(2)
        if self.kind is ShapeKind.GAUSSIAN:
            s = tau / math.sqrt(8 * ln2)  # std of |f|^2
            return 0.5 * math.erfc(-a / (s * math.sqrt(2))) + 0.5 * math.erfc(b / (s * math.sqrt(2)))
        if self.kind is ShapeKind.TWO_SIDED_EXPONENTIAL:
            rate = 2 * ln2 / tau
            left = 0.5 * math.exp(-rate * max(-a, 0.0)) if a < 0 else 0.5 + 0.5 * (1 - math.exp(-rate * a))
            right = 0.5 * math.exp(-rate * b) if b > 0 else 0.5 + 0.5 * (1 - math.exp(rate * b))
            return left + right
        rate = ln2 / tau
        lo = max(a - self.onset, 0.0)
        hi = max(b - self.onset, 0.0)
        return 1.0 - (math.exp(-rate * lo) - math.exp(-rate * hi))


@dataclass(frozen=True, eq=False)
class Wavepacket:
    """Complex photon envelope ``f(t)`` on a :class:`TimeGrid`."""

    grid: TimeGrid
    samples: npt.NDArray[np.complex128] = field(repr=False)

    def __post_init__(self) -> None:
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.shape != (self.grid.n_samples,):
            raise ValueError(f"expected {self.grid.n_samples} samples, got shape {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def intensity(self) -> npt.NDArray[np.float64]:
        return np.abs(self.samples) ** 2

    @property
    def norm_squared(self) -> float:
        return float(np.sum(self.intensity) * self.grid.dt)

    def normalize(self) -> Wavepacket:
        return Wavepacket(self.grid, self.samples / math.sqrt(self.norm_squared))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Continuous-FT approximation ``f~(nu)`` sampled on ``grid.frequencies``."""

    grid: TimeGrid
    samples: npt.NDArray[np.complex128] = field(repr=False)

    @property
    def frequencies(self) -> npt.NDArray[np.float64]:
        return self.grid.frequencies

    @property
    def power(self) -> npt.NDArray[np.float64]:
        return np.abs(self.samples) ** 2

    @property
    def norm_squared(self) -> float:
        return float(np.sum(self.power) * self.grid.dnu)


def _next_pow2(x: float) -> int:
    return 1 << max(1, math.ceil(math.log2(max(x, 2.0))))


def make_grid(
    coherence_time: float,
    oversample: int = 8,
    span_factor: float = 8.0,
    *,
    n_ref: float = DEFAULT_N_REF,
    max_samples: int = DEFAULT_MAX_SAMPLES,
) -> TimeGrid:
    """Build a grid centred on the pulse.

    ``dt = coherence_time / (oversample * n_ref)`` so that a modulator running
    ``n_ref`` times faster than the photon is sampled ``oversample`` times per
    feature; the sample count is the smallest power of two at or above
    ``span_factor * coherence_time * oversample / dt``.
    """
    if oversample < 2:
        raise ValueError("oversample must be >= 2")
    if span_factor < 4:
        raise ValueError("span_factor must be >= 4")
    if not n_ref > 0:
        raise ValueError("n_ref must be positive")
    dt = coherence_time / (oversample * n_ref)
    n = _next_pow2(span_factor * coherence_time * oversample / dt * (1 - 1e-12))
    if n > max_samples:
        raise GridResolutionError(
            f"grid needs {n} samples, above the cap of {max_samples}; reduce oversample, span_factor or n_ref"
        )
    return TimeGrid(t_start=-n * dt / 2, dt=dt, n_samples=n)


def synth_wavepacket(shape: PulseShape, grid: TimeGrid) -> Wavepacket:
    """Sample and normalize ``shape`` on ``grid``.

    Raises :class:`GridResolutionError` if the grid truncates more than 1e-6
    of the pulse energy, leaves the envelope above 1e-6 of its peak at either
    grid end, or resolves the coherence time with fewer than 4 samples.
    """
    if shape.coherence_time < 4 * grid.dt:
        raise GridResolutionError("grid too coarse for the coherence time")
    lost = shape.energy_outside(grid.t_start, grid.t_end)
    if lost > 1e-6:
        raise GridResolutionError(f"grid truncates {lost:.3g} of the pulse energy (limit 1e-6)")
    env = shape.envelope(grid.times)
    if max(env[0], env[-1]) >= 1e-6 * env.max():
        raise GridResolutionError("pulse envelope does not decay below 1e-6 of peak at the grid ends")
    return Wavepacket(grid, env.astype(np.complex128)).normalize()


def _check_same_grid(a: TimeGrid, b: TimeGrid) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


def inner_product(a: Wavepacket, b: Wavepacket) -> complex:
    """Overlap ``<a|b> = sum conj(a) * b * dt``."""
    _check_same_grid(a.grid, b.grid)
    return complex(np.vdot(a.samples, b.samples) * a.grid.dt)


def _phase_ramp(grid: TimeGrid) -> npt.NDArray[np.complex128]:
    # FFT assumes the first sample at t = 0; correct for the true origin.
    return np.exp(-2j * np.pi * grid.frequencies * grid.times[0])


def spectrum_samples(samples: npt.NDArray[np.complex128], grid: TimeGrid) -> npt.NDArray[np.complex128]:
    """Transform raw envelope samples; the array-level core of :func:`to_spectrum`."""
    return np.fft.fftshift(np.fft.fft(samples)) * grid.dt * _phase_ramp(grid)


def power_spectrum(samples: npt.NDArray[np.complex128], grid: TimeGrid) -> npt.NDArray[np.float64]:
    """``|f~(nu)|**2`` on the ascending frequency axis; phase factors dropped."""
    return np.abs(np.fft.fftshift(np.fft.fft(samples))) ** 2 * grid.dt**2


def to_spectrum(w: Wavepacket) -> Spectrum:
    return Spectrum(w.grid, spectrum_samples(w.samples, w.grid))


def from_spectrum(s: Spectrum) -> Wavepacket:
    raw = np.fft.ifft(np.fft.ifftshift(s.samples / _phase_ramp(s.grid)))
    return Wavepacket(s.grid, raw / s.grid.dt)


def measure_fwhm(intensity: npt.ArrayLike, spacing: float) -> float:
    """Full width at half maximum of a single-peaked profile, linearly interpolated.

    Raises ``ValueError`` for flat or multi-peaked input, or if the profile
    does not drop below half maximum on both sides.
    """
    y = np.asarray(intensity, dtype=float)
    if y.ndim != 1 or y.size < 3:
        raise ValueError("need a 1-D profile with at least 3 samples")
    peak = y.max()
    if not peak > y.min():
        raise ValueError("flat profile has no FWHM")
    half = peak / 2
    above = y >= half
    idx = np.flatnonzero(above)
    lo, hi = idx[0], idx[-1]
    if not above[lo : hi + 1].all():
        raise ValueError("profile is multi-peaked at half maximum")
    if lo == 0 or hi == y.size - 1:
        raise ValueError("profile does not fall below half maximum inside the array")
    left = (lo - 1) + (half - y[lo - 1]) / (y[lo] - y[lo - 1])
    right = hi + (y[hi] - half) / (y[hi] - y[hi + 1])
    return float((right - left) * spacing)
