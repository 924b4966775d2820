"""Parameter sweeps over dimension, modulator speed and filter bandwidth.

Bandwidths are given as ratios to the photon linewidth: ``eom_ratio`` is
the modulator speed ``Delta_EOM / Delta_photon`` and ``filter_ratio`` is
``Delta_filter / Delta_photon``.  Sweep points are independent; when
``jobs > 1`` they run in a process pool and are merged in grid order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .detection import DetectionMatrix, FilterShape, FilterSpec, detection_matrices, detection_matrix
from .metrics import ChannelModel, MiResult, degrade, ers, mutual_information
from .modulation import (
    EomSpec,
    SymbolSet,
    combination_symbols,
    cyclic_pair_coefficients,
    paired_rotation_basis,
    pfm_symbols,
    ramp_symbols,
    superposition_symbols,
)
from .signal import PulseShape, Wavepacket, make_grid, synth_wavepacket

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class Setup:
    """Photon, grid and receiver settings shared by every point of a sweep."""

    pulse: PulseShape = field(default_factory=PulseShape)
    oversample: int = 8
    span_factor: float = 8.0
    n_ref: float = 100.0
    filter_shape: FilterShape = FilterShape.LORENTZIAN
    loop_amplitude: float = 1.0

    @property
    def photon_bandwidth(self) -> float:
        return self.pulse.bandwidth

    def carrier(self) -> Wavepacket:
        grid = make_grid(self.pulse.coherence_time, self.oversample, self.span_factor, n_ref=self.n_ref)
        return synth_wavepacket(self.pulse, grid)

    def eom(self, ratio: float) -> EomSpec:
        return EomSpec(ratio * self.photon_bandwidth)

    def filter(self, ratio: float) -> FilterSpec:
        return FilterSpec(self.filter_shape, ratio * self.photon_bandwidth)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class ErsPoint:
    d: int
    eom_ratio: float
    ers: float
    mean_efficiency: float
    walsh_n: int | None = None

    @property
    def normalized_dimension(self) -> float:
        return (self.d - 1) / self.eom_ratio


def _pfm_task(args: tuple[Setup, int, float, tuple[int, ...], float]) -> list[ErsPoint]:
    setup, n, ratio, dims, filter_ratio = args
    dims = tuple(d for d in dims if d <= n)
    if not dims:
        return []
    symbols = pfm_symbols(setup.carrier(), n, max(dims), setup.eom(ratio))
    full = detection_matrix(symbols, setup.filter(filter_ratio), loop_amplitude=setup.loop_amplitude)
    out = []
    for d in dims:
        r = ers(full.subset(d))
        out.append(ErsPoint(d, ratio, r.ers, r.mean_detection_efficiency, n))
    return out


def _ramp_task(args: tuple[Setup, float, int, float]) -> ErsPoint:
    setup, ratio, d, filter_ratio = args
    symbols = ramp_symbols(setup.carrier(), d, setup.eom(ratio))
    r = ers(detection_matrix(symbols, setup.filter(filter_ratio), loop_amplitude=setup.loop_amplitude))
    return ErsPoint(d, ratio, r.ers, r.mean_detection_efficiency)


def ers_vs_dimension_sweep(
    scheme: str,
    dims: Sequence[int],
    eom_ratios: Sequence[float],
    *,
    walsh_orders: Sequence[int] = (),
    filter_ratio: float = 1.0,
    setup: Setup | None = None,
    jobs: int = 1,
) -> list[ErsPoint]:
    """ERS over dimension ``d`` for each modulator speed (and Walsh order, for PFM).

    PFM points for one ``(n, N)`` pair share a single greedy selection, so
    the alphabet for ``d`` is the first ``d`` rows of the largest one.
    """
    setup = setup or Setup()
    dims = tuple(int(d) for d in dims)
    if any(d < 2 for d in dims):
        raise ValueError("dimensions must be >= 2")
    if scheme == "pfm":
        tasks = [(setup, int(n), float(r), dims, filter_ratio) for n in walsh_orders for r in eom_ratios]
        return [p for chunk in parallel_map(_pfm_task, tasks, jobs) for p in chunk]
    if scheme == "linear_ramp":
        tasks = [(setup, float(r), d, filter_ratio) for r in eom_ratios for d in dims]
        return parallel_map(_ramp_task, tasks, jobs)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class MiPoint:
    filter_ratio: float
    amplitude: float
    mi: MiResult
    mean_insertion_loss: float


@dataclass(frozen=True)
class MiCurve:
    points: tuple[MiPoint, ...]

    @property
    def bits(self) -> np.ndarray:
        return np.array([p.mi.bits_per_symbol for p in self.points])

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.bits))

    @property
    def argmax_ratio(self) -> float:
        return self.points[self.argmax].filter_ratio

    @property
    def single_peaked(self) -> bool:
        """Non-decreasing up to the maximum and non-increasing after it."""
        b = self.bits
        m = self.argmax
        return bool(np.all(np.diff(b[: m + 1]) >= 0) and np.all(np.diff(b[m:]) <= 0))


def superposed_alphabet(base: SymbolSet, a: float, b: float = 0.0, pairing: str = "cyclic") -> SymbolSet:
    """States ``sqrt(1-a^2)|w_k> + a e^{ib}|w_j>`` over ``base``.

    ``pairing="cyclic"`` partners ``k`` with ``k + 1 mod d``; ``"adjacent"``
    rotates the disjoint pairs ``(0, 1), (2, 3), ...`` into an orthonormal basis.
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"superposition amplitude must lie in [0, 1], got {a}")
    if a == 0.0:
        return base
    if pairing == "cyclic":
        return combination_symbols(cyclic_pair_coefficients(base.d, a, b), base)
    if pairing == "adjacent":
        return superposition_symbols(paired_rotation_basis(base.d, a, b), base)
    raise ValueError(f"unknown pairing {pairing!r}")


def filter_bandwidth_sweep(
    d: int,
    eom_ratio: float,
    a: float,
    filter_ratios: Sequence[float],
    *,
    b: float = 0.0,
    pairing: str = "cyclic",
    setup: Setup | None = None,
) -> MiCurve:
    """Mutual information against filter bandwidth for the ramp alphabet.

    Symbols and analysis patterns are the same superposition states, so the
    receiver measures in the matching basis.
    """
    setup = setup or Setup()
    base = ramp_symbols(setup.carrier(), d, setup.eom(eom_ratio))
    symbols = superposed_alphabet(base, a, b, pairing)
    loss = 1.0 - float(np.mean([m.scale**2 for m in symbols.waveforms]))
    mats = detection_matrices(symbols, [setup.filter(r) for r in filter_ratios], loop_amplitude=setup.loop_amplitude)
    pts = tuple(MiPoint(float(r), a, mutual_information(m), loss) for r, m in zip(filter_ratios, mats))
    return MiCurve(pts)


@dataclass(frozen=True)
class LossPoint:
    loss: float
    d: int
    ers: float


def _loss_base(args: tuple[Setup, float, int, float]) -> DetectionMatrix:
    setup, ratio, d, filter_ratio = args
    symbols = ramp_symbols(setup.carrier(), d, setup.eom(ratio))
    return detection_matrix(symbols, setup.filter(filter_ratio), loop_amplitude=setup.loop_amplitude)


def loss_sweep(
    dims: Sequence[int],
    losses: Sequence[float],
    *,
    eom_ratio: float = 100.0,
    filter_ratio: float = 1.0,
    dark_rate: float = 100.0,
    gate_window: float = 100e-9,
    setup: Setup | None = None,
    jobs: int = 1,
) -> list[LossPoint]:
    """ERS of the ramp channel under state-independent loss and dark counts."""
    setup = setup or Setup()
    bases = parallel_map(_loss_base, [(setup, eom_ratio, int(d), filter_ratio) for d in dims], jobs)
    out = []
    for d, base in zip(dims, bases):
        for loss in losses:
            m = degrade(base, ChannelModel(loss=loss, dark_rate=dark_rate, gate_window=gate_window))
            out.append(LossPoint(float(loss), int(d), ers(m).ers))
    return out

