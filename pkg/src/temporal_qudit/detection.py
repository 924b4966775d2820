"""Storage-loop receiver: demodulation, narrowband filtering and projection probabilities.

On round trip ``j`` the photon sent as symbol ``k`` carries the demodulated
envelope ``g(t) = conj(m_j(t)) m_k(t) f(t)``; the probability that it leaves
through the filter is ``sum |g~(nu) T~(nu)|^2 dnu``.  Each round trip is
evaluated independently of the others.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.typing as npt

from .errors import GridMismatchError, GridResolutionError
from .modulation import ModulationWaveform, SymbolSet
from .signal import TimeGrid, Wavepacket, inner_product, power_spectrum

MIN_BINS_PER_FWHM = 4


class FilterShape(str, enum.Enum):
    GAUSSIAN = "gaussian"
    LORENTZIAN = "lorentzian"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True)
class FilterSpec:
    """Narrowband filter; ``bandwidth`` is the FWHM of ``|T~|^2`` in Hz.

    ``center`` is the detuning from the unmodulated carrier.
    """

    shape: FilterShape = FilterShape.LORENTZIAN
    bandwidth: float = 1.0
    center: float = 0.0
    peak_amplitude_transmission: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "shape", FilterShape(self.shape))
        if not self.bandwidth > 0:
            raise ValueError("filter bandwidth must be positive")
        if not 0 < self.peak_amplitude_transmission <= 1:
            raise ValueError("peak amplitude transmission must lie in (0, 1]")


def filter_amplitude_response(spec: FilterSpec, freqs: npt.ArrayLike) -> npt.NDArray[np.complex128]:
    """Complex amplitude transmission ``T~(nu)`` on an ascending uniform axis."""
    nu = np.asarray(freqs, dtype=float)
    spacing = float(nu[1] - nu[0])
    if spec.bandwidth < MIN_BINS_PER_FWHM * spacing:
        raise GridResolutionError(
            f"filter bandwidth {spec.bandwidth:.3g} Hz spans fewer than {MIN_BINS_PER_FWHM} "
            f"frequency bins of {spacing:.3g} Hz"
        )
    x = (nu - spec.center) / spec.bandwidth
    if spec.shape is FilterShape.GAUSSIAN:
        t = np.exp(-2 * np.log(2) * x**2).astype(np.complex128)
    elif spec.shape is FilterShape.LORENTZIAN:
        t = 1.0 / (1.0 + 2j * x)
    else:
        t = (np.abs(x) <= 0.5).astype(np.complex128)
    return spec.peak_amplitude_transmission * t


def filter_power_response(spec: FilterSpec, grid: TimeGrid) -> npt.NDArray[np.float64]:
    return np.abs(filter_amplitude_response(spec, grid.frequencies)) ** 2


@dataclass(frozen=True, eq=False)
class DetectionMatrix:
    """``entries[k, j]``: probability that symbol ``k`` exits the filter on round trip ``j``."""

    entries: npt.NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        e = np.array(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("detection matrix must be square")
        if np.any(e < 0) or np.any(e > 1 + 1e-12):
            raise ValueError("detection probabilities must lie in [0, 1]")
        e = np.clip(e, 0.0, 1.0)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def row_sums(self) -> npt.NDArray[np.float64]:
        return self.entries.sum(axis=1)

    def subset(self, d: int) -> DetectionMatrix:
        return DetectionMatrix(self.entries[:d, :d])


def demodulated(sent: ModulationWaveform, analysis: ModulationWaveform, carrier: Wavepacket) -> npt.NDArray[np.complex128]:
    if not (sent.grid == analysis.grid == carrier.grid):
        raise GridMismatchError("sent, analysis and carrier must share one grid")
    return np.conj(analysis.samples) * sent.samples * carrier.samples


def projection_probability(
    sent: ModulationWaveform,
    analysis: ModulationWaveform,
    carrier: Wavepacket,
    filter: FilterSpec,
) -> float:
    """Filter-transmitted energy of the photon demodulated by ``analysis``."""
    grid = carrier.grid
    g = demodulated(sent, analysis, carrier)
    t2 = filter_power_response(filter, grid)
    return float(np.clip(np.dot(power_spectrum(g, grid), t2) * grid.dnu, 0.0, 1.0))


def detection_matrices(
    symbols: SymbolSet,
    filters: Sequence[FilterSpec],
    *,
    loop_amplitude: float = 1.0,
) -> list[DetectionMatrix]:
    """Detection matrices for several filters, sharing the demodulated spectra.

    ``loop_amplitude`` is the per-pass amplitude transmission of the storage
    loop; round trip ``j`` (0-based) is attenuated by ``loop_amplitude**(2 (j + 1))``.
    """
    if symbols.d < 2:
        raise ValueError("need at least two symbols")
    if not 0 < loop_amplitude <= 1:
        raise ValueError("loop amplitude must lie in (0, 1]")
    carrier = symbols.carrier
    grid = carrier.grid
    responses = np.stack([filter_power_response(f, grid) for f in filters])
    d = symbols.d
    out = np.zeros((len(filters), d, d))
    for k, sent in enumerate(symbols.waveforms):
        for j, analysis in enumerate(symbols.waveforms):
            spec = power_spectrum(demodulated(sent, analysis, carrier), grid)
            out[:, k, j] = responses @ spec * grid.dnu
    out *= loop_amplitude ** (2 * (np.arange(d) + 1))[None, None, :]
    return [DetectionMatrix(np.clip(m, 0.0, 1.0)) for m in out]


def detection_matrix(symbols: SymbolSet, filter: FilterSpec, *, loop_amplitude: float = 1.0) -> DetectionMatrix:
    return detection_matrices(symbols, [filter], loop_amplitude=loop_amplitude)[0]


def ideal_overlap_matrix(symbols: SymbolSet) -> npt.NDArray[np.float64]:
    """``|<psi_j|psi_k>|^2`` for the modulated carriers, indexed ``[k, j]``."""
    c = symbols.carrier
    states = [Wavepacket(c.grid, m.samples * c.samples) for m in symbols.waveforms]
    d = len(states)
    p = np.zeros((d, d))
    for k in range(d):
        for j in range(d):
            p[k, j] = abs(inner_product(states[j], states[k])) ** 2
    return p


def field_overlap_matrix(symbols: SymbolSet) -> npt.NDArray[np.float64]:
    """``|integral conj(m_j) m_k f dt|^2``, the spectral density of the demodulated field at the carrier.

    This is what a vanishingly narrow filter centred on the carrier samples,
    up to one common factor.  It coincides with :func:`ideal_overlap_matrix`
    only when the envelope weight ``f`` can stand in for ``|f|^2``.
    """
    c = symbols.carrier
    stack = np.stack([m.samples for m in symbols.waveforms])
    amp = (stack.conj()[None, :, :] * stack[:, None, :] * c.samples).sum(axis=-1) * c.grid.dt
    return np.abs(amp) ** 2


@dataclass(frozen=True)
class NarrowbandPoint:
    bandwidth: float
    scale: float
    residual: float


@dataclass(frozen=True)
class NarrowbandReport:
    points: tuple[NarrowbandPoint, ...]
    reference_bandwidth: float

    @property
    def monotone(self) -> bool:
        """Residual strictly falls as the bandwidth shrinks below ``reference_bandwidth``."""
        pts = sorted((p for p in self.points if p.bandwidth < self.reference_bandwidth), key=lambda p: -p.bandwidth)
        return all(b.residual < a.residual for a, b in zip(pts, pts[1:]))


def narrowband_limit_check(
    symbols: SymbolSet,
    bandwidths: Sequence[float],
    shape: FilterShape | str = FilterShape.LORENTZIAN,
    reference_bandwidth: float | None = None,
    target: npt.ArrayLike | None = None,
) -> NarrowbandReport:
    """Compare filtered detection with the ideal overlap in the narrow-filter limit.

    For each bandwidth the scalar ``c`` minimizing ``||P_bar - c P_ideal||_F``
    is fitted and the relative residual ``||P_bar - c P_ideal||_F / ||P_bar||_F``
    recorded.  ``reference_bandwidth`` (default: the largest bandwidth given)
    bounds the regime in which :attr:`NarrowbandReport.monotone` is judged.
    ``target`` replaces the ideal overlap matrix as the comparison matrix.
    """
    ideal = ideal_overlap_matrix(symbols) if target is None else np.asarray(target, dtype=float)
    filters = [FilterSpec(shape, b) for b in bandwidths]
    points = []
    for b, m in zip(bandwidths, detection_matrices(symbols, filters)):
        p = m.entries
        c = float(np.sum(p * ideal) / np.sum(ideal * ideal))
        res = float(np.linalg.norm(p - c * ideal) / np.linalg.norm(p))
        points.append(NarrowbandPoint(float(b), c, res))
    ref = reference_bandwidth if reference_bandwidth is not None else max(bandwidths) * (1 + 1e-12)
    return NarrowbandReport(tuple(points), ref)
