"""Encoding schemes: phase-flip (Walsh) codes, linear phase ramps and superpositions.

Every modulator is passive: a waveform ``m(t)`` never exceeds unit magnitude.
Finite electro-optic bandwidth is modelled as a Gaussian low-pass acting on
the drive phase, so pure-phase waveforms stay pure phase.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .errors import GridMismatchError, GridResolutionError
from .signal import TimeGrid, Wavepacket

_PASSIVE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WalshMatrix:
    n: int
    entries: npt.NDArray[np.int64] = field(repr=False)

    def sign_changes(self, i: int, j: int) -> int:
        """Number of sign flips along the element-wise product of rows ``i`` and ``j``."""
        p = self.entries[i] * self.entries[j]
        return int(np.count_nonzero(p[1:] != p[:-1]))

    def flip_table(self) -> npt.NDArray[np.int64]:
        e = self.entries
        prod = e[:, None, :] * e[None, :, :]
        return np.count_nonzero(prod[..., 1:] != prod[..., :-1], axis=-1)


def walsh_matrix(n: int) -> WalshMatrix:
    """Sylvester-ordered Hadamard matrix of order ``n`` (a power of two, at least 4)."""
    if n < 4 or n & (n - 1):
        raise ValueError(f"Walsh dimension must be a power of two >= 4, got {n}")
    return WalshMatrix(n, scipy.linalg.hadamard(n).astype(np.int64))


@dataclass(frozen=True)
class EomSpec:
    """Electro-optic modulator; ``bandwidth`` in Hz, ``math.inf`` for an ideal device."""

    bandwidth: float

    def __post_init__(self) -> None:
        if not self.bandwidth > 0:
            raise ValueError("EOM bandwidth must be positive")

    @property
    def kernel_sigma(self) -> float:
        """Standard deviation (s) of the unit-area Gaussian smoothing kernel.

        The kernel's power response ``|H(nu)|**2 = exp(-4 pi^2 sigma^2 nu^2)``
        has a full width at half maximum equal to ``bandwidth``.
        """
        return math.sqrt(math.log(2)) / (math.pi * self.bandwidth)


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    grid: TimeGrid
    phase: npt.NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        p = np.asarray(self.phase, dtype=float)
        if p.shape != (self.grid.n_samples,) or not np.all(np.isfinite(p)):
            raise ValueError("phase must be a finite array matching the grid")
        p.setflags(write=False)
        object.__setattr__(self, "phase", p)

    def waveform(self) -> ModulationWaveform:
        return ModulationWaveform(self.grid, np.exp(1j * self.phase))


@dataclass(frozen=True, eq=False)
class ModulationWaveform:
    """Modulator transfer ``m(t)``.

    ``scale`` is the amplitude factor applied to fit a target waveform under
    the passive limit ``max|m| <= 1``; it is ``1`` for pure-phase waveforms.
    """

    grid: TimeGrid
    samples: npt.NDArray[np.complex128] = field(repr=False)
    scale: float = 1.0

    def __post_init__(self) -> None:
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.shape != (self.grid.n_samples,):
            raise ValueError("waveform length does not match its grid")
        if np.max(np.abs(s)) > 1 + _PASSIVE_TOL:
            raise ValueError("passive modulator cannot exceed unit magnitude")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def is_pure_phase(self) -> bool:
        return bool(np.allclose(np.abs(self.samples), 1.0, rtol=0, atol=1e-12))


class Scheme(str, enum.Enum):
    PFM = "pfm"
    LINEAR_RAMP = "linear_ramp"
    SUPERPOSITION = "superposition"


@dataclass(frozen=True, eq=False)
class SymbolSet:
    """A qudit alphabet: ``d`` waveforms imprinted on a common carrier."""

    waveforms: tuple[ModulationWaveform, ...]
    scheme: Scheme
    carrier: Wavepacket
    eom: EomSpec
    labels: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "waveforms", tuple(self.waveforms))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        for m in self.waveforms:
            if m.grid != self.carrier.grid:
                raise GridMismatchError("symbol waveform is not on the carrier grid")
        if self.scheme is not Scheme.SUPERPOSITION and not all(m.is_pure_phase for m in self.waveforms):
            raise ValueError(f"{self.scheme.value} symbols must be pure phase")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(len(self.waveforms))))

    @property
    def d(self) -> int:
        return len(self.waveforms)

    def subset(self, d: int) -> SymbolSet:
        return SymbolSet(self.waveforms[:d], self.scheme, self.carrier, self.eom, self.labels[:d])


@dataclass(frozen=True, eq=False)
class SuperpositionBasis:
    """Rows of ``coeffs`` are the new basis states in computational coordinates."""

    coeffs: npt.NDArray[np.complex128] = field(repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("coefficient matrix must be square")
        err = np.max(np.abs(c @ c.conj().T - np.eye(c.shape[0])))
        if err > 1e-10:
            raise ValueError(f"coefficients are not unitary (residual {err:.2e})")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def d(self) -> int:
        return self.coeffs.shape[0]


# ---------------------------------------------------------------------------
# Phase-flip modulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Partition:
    """Segment boundaries ``t_1 .. t_{n+1}`` of an equal-intensity split."""

    grid: TimeGrid
    boundaries: npt.NDArray[np.float64] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.boundaries) - 1

    def segment_index(self) -> npt.NDArray[np.int64]:
        """Segment containing each sample centre."""
        idx = np.searchsorted(self.boundaries[1:-1], self.grid.times, side="right")
        return idx.astype(np.int64)


def equal_intensity_partition(w: Wavepacket, n: int) -> Partition:
    """Split ``w`` into ``n`` intervals carrying equal energy.

    The cumulative energy is treated as piecewise linear across each sample
    cell and inverted at the levels ``k/n``.
    """
    if n < 2:
        raise ValueError("need at least two segments")
    grid = w.grid
    if n > grid.n_samples:
        raise ValueError("more segments than grid samples")
    edges = grid.t_start + np.arange(grid.n_samples + 1) * grid.dt
    cum = np.concatenate([[0.0], np.cumsum(w.intensity)])
    cum /= cum[-1]
    levels = np.arange(1, n) / n
    inner = np.interp(levels, cum, edges)
    bounds = np.concatenate([[grid.t_start], inner, [grid.t_end]])
    return Partition(grid, bounds)


def pfm_phase_profile(W: WalshMatrix, row: int, partition: Partition) -> PhaseProfile:
    """Phase ``pi/2 * (W[row, j] + 1)`` on segment ``j``: ``pi`` where the entry is +1, 0 where -1."""
    if not 0 <= row < W.n:
        raise IndexError(f"row {row} outside Walsh matrix of order {W.n}")
    if partition.n != W.n:
        raise ValueError(f"partition has {partition.n} segments, Walsh order is {W.n}")
    seg = partition.segment_index()
    phase = 0.5 * np.pi * (W.entries[row][seg] + 1)
    return PhaseProfile(partition.grid, phase)


def _gaussian_lowpass(x: npt.NDArray[np.float64], sigma_samples: float) -> npt.NDArray[np.float64]:
    pad = int(math.ceil(10 * sigma_samples)) + 1
    xp = np.pad(x, pad, mode="edge")
    nu = np.fft.rfftfreq(xp.size)
    h = np.exp(-2 * np.pi**2 * sigma_samples**2 * nu**2)
    return np.fft.irfft(np.fft.rfft(xp) * h, n=xp.size)[pad:-pad]


def apply_eom_bandwidth(p: PhaseProfile, eom: EomSpec) -> PhaseProfile:
    """Low-pass the drive phase with the modulator's Gaussian response.

    Ends are extended with their edge values, so a profile that is constant
    near the grid ends is filtered as if it continued forever.
    """
    if math.isinf(eom.bandwidth):
        return p
    if 1.0 / eom.bandwidth < 2 * p.grid.dt:
        raise GridResolutionError(
            f"EOM bandwidth {eom.bandwidth:.3g} Hz is not representable with dt = {p.grid.dt:.3g} s"
        )
    return PhaseProfile(p.grid, _gaussian_lowpass(p.phase, eom.kernel_sigma / p.grid.dt))


def average_pairwise_flips(W: WalshMatrix, rows: Sequence[int]) -> float:
    table = W.flip_table()
    pairs = list(itertools.combinations(rows, 2))
    if not pairs:
        return 0.0
    return float(np.mean([table[i, j] for i, j in pairs]))


def select_symbols(W: WalshMatrix, d: int) -> list[int]:
    """Greedily pick ``d`` Walsh rows whose pairwise products flip sign most often.

    Seeded with the pair of maximal flips; each step adds the row that
    maximizes the mean pairwise flip count.  Ties go to the lowest index, so
    the result is deterministic and prefix-nested in ``d``.
    """
    if not 2 <= d <= W.n:
        raise ValueError(f"need 2 <= d <= {W.n}, got {d}")
    table = W.flip_table()
    best = -1
    chosen: list[int] = []
    for i, j in itertools.combinations(range(W.n), 2):
        if table[i, j] > best:
            best, chosen = int(table[i, j]), [i, j]
    remaining = [r for r in range(W.n) if r not in chosen]
    while len(chosen) < d:
        # Fixed set size per step, so maximizing the sum maximizes the mean.
        gains = [int(table[r, chosen].sum()) for r in remaining]
        pick = remaining[int(np.argmax(gains))]
        chosen.append(pick)
        remaining.remove(pick)
    return chosen


def pfm_symbols(carrier: Wavepacket, n: int, d: int, eom: EomSpec) -> SymbolSet:
    """Phase-flip alphabet: ``d`` greedy-selected rows of the order-``n`` Walsh matrix."""
    W = walsh_matrix(n)
    partition = equal_intensity_partition(carrier, n)
    rows = select_symbols(W, d)
    waveforms = [apply_eom_bandwidth(pfm_phase_profile(W, r, partition), eom).waveform() for r in rows]
    return SymbolSet(tuple(waveforms), Scheme.PFM, carrier, eom, tuple(rows))


# ---------------------------------------------------------------------------
# Linear phase ramp
# ---------------------------------------------------------------------------


def ramp_shift(k: int, d: int, eom: EomSpec) -> float:
    """Frequency shift of ramp symbol ``k``: ``k * bandwidth / (d - 1)``."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    if not 0 <= k < d:
        raise ValueError(f"symbol index {k} outside 0..{d - 1}")
    if math.isinf(eom.bandwidth):
        raise ValueError("linear ramp needs a finite EOM bandwidth")
    return k * eom.bandwidth / (d - 1)


def linear_ramp_waveform(k: int, d: int, eom: EomSpec, grid: TimeGrid) -> ModulationWaveform:
    shift = ramp_shift(k, d, eom)
    if shift >= 0.5 / grid.dt:
        raise GridResolutionError("ramp shift beyond the grid's Nyquist frequency")
    return ModulationWaveform(grid, np.exp(2j * np.pi * shift * grid.times))


def ramp_symbols(carrier: Wavepacket, d: int, eom: EomSpec) -> SymbolSet:
    waveforms = tuple(linear_ramp_waveform(k, d, eom, carrier.grid) for k in range(d))
    return SymbolSet(waveforms, Scheme.LINEAR_RAMP, carrier, eom)


def modulate(w: Wavepacket, m: ModulationWaveform) -> Wavepacket:
    """Imprint ``m`` on ``w``.  The result is not renormalized."""
    if w.grid != m.grid:
        raise GridMismatchError("wavepacket and waveform grids differ")
    return Wavepacket(w.grid, w.samples * m.samples)


# ---------------------------------------------------------------------------
# Superposition bases
# ---------------------------------------------------------------------------


def gram_schmidt(seed: npt.ArrayLike) -> SuperpositionBasis:
    """Orthonormalize the rows of ``seed`` in their natural order.

    Classical Gram-Schmidt with one re-orthogonalization pass, which leaves
    the exact-arithmetic result unchanged and holds orthogonality to
    machine precision.
    """
    a = np.array(seed, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("seed must be a square matrix")
    if np.linalg.svd(a, compute_uv=False).min() <= 1e-8:
        # Locate the first row that is (numerically) spanned by its predecessors.
        for r in range(1, a.shape[0] + 1):
            if np.linalg.svd(a[:r], compute_uv=False).min() <= 1e-8:
                raise ValueError(f"seed rows are linearly dependent at row {r - 1}")
    q = np.zeros_like(a)
    for i, v in enumerate(a):
        for _ in range(2):
            v = v - q[:i].T @ (q[:i].conj() @ v)
        q[i] = v / np.linalg.norm(v)
    return SuperpositionBasis(q)


def _superpose(coeffs: npt.ArrayLike, base: SymbolSet) -> ModulationWaveform:
    c = np.asarray(coeffs, dtype=np.complex128)
    stack = np.stack([m.samples for m in base.waveforms])
    target = c @ stack
    peak = float(np.max(np.abs(target)))
    scale = min(1.0, 1.0 / peak)
    return ModulationWaveform(base.carrier.grid, target * scale, scale=scale)


def superposition_waveform(basis: SuperpositionBasis, row: int, base: SymbolSet) -> ModulationWaveform:
    """Passive waveform for basis state ``row`` written over ``base``'s symbols.

    The target ``sum_j coeffs[row, j] * m_j(t)`` is rescaled so that its peak
    magnitude is 1; the factor is kept in ``ModulationWaveform.scale``.
    """
    if base.scheme is Scheme.SUPERPOSITION:
        raise ValueError("base alphabet must be a computational (pfm or linear_ramp) set")
    if basis.d != base.d:
        raise ValueError(f"basis dimension {basis.d} does not match alphabet size {base.d}")
    if not 0 <= row < basis.d:
        raise IndexError(f"row {row} outside basis of dimension {basis.d}")
    return _superpose(basis.coeffs[row], base)


def superposition_symbols(basis: SuperpositionBasis, base: SymbolSet) -> SymbolSet:
    waveforms = tuple(superposition_waveform(basis, r, base) for r in range(basis.d))
    return SymbolSet(waveforms, Scheme.SUPERPOSITION, base.carrier, base.eom)


def insertion_loss(m: ModulationWaveform, carrier: Wavepacket) -> float:
    """Energy fraction of ``carrier`` removed by the passive waveform ``m``."""
    return 1.0 - modulate(carrier, m).norm_squared / carrier.norm_squared


def paired_rotation_basis(d: int, a: float, b: float = 0.0) -> SuperpositionBasis:
    """Basis of pairwise rotations ``sqrt(1-a^2)|k> + a e^{ib}|k+1>`` on adjacent pairs.

    Pairs are ``(0, 1), (2, 3), ...``; each partner row is the orthogonal
    complement ``-a e^{-ib}|k> + sqrt(1-a^2)|k+1>``.  For odd ``d`` the last
    state is left alone.
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"superposition amplitude must lie in [0, 1], got {a}")
    c = np.eye(d, dtype=np.complex128)
    ca = math.sqrt(1.0 - a * a)
    for k in range(0, d - 1, 2):
        c[k, k], c[k, k + 1] = ca, a * np.exp(1j * b)
        c[k + 1, k], c[k + 1, k + 1] = -a * np.exp(-1j * b), ca
    return SuperpositionBasis(c)


def cyclic_pair_coefficients(d: int, a: float, b: float = 0.0) -> npt.NDArray[np.complex128]:
    """Rows ``sqrt(1-a^2)|k> + a e^{ib}|k+1 mod d>``, one per symbol.

    Neighbouring rows share a component, so the rows are not orthonormal for
    ``0 < a < 1``; for even ``d`` and ``a = 1/sqrt(2)`` they are linearly
    dependent.
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"superposition amplitude must lie in [0, 1], got {a}")
    if d < 2:
        raise ValueError("need at least two symbols")
    c = np.zeros((d, d), dtype=np.complex128)
    ca = math.sqrt(1.0 - a * a)
    for k in range(d):
        c[k, k] += ca
        c[k, (k + 1) % d] += a * np.exp(1j * b)
    return c


def combination_symbols(coeffs: npt.ArrayLike, base: SymbolSet) -> SymbolSet:
    """Passive waveforms for arbitrary coefficient rows over ``base``; no unitarity required."""
    c = np.asarray(coeffs, dtype=np.complex128)
    if c.shape != (base.d, base.d):
        raise ValueError(f"coefficients must be {base.d}x{base.d}")
    if base.scheme is Scheme.SUPERPOSITION:
        raise ValueError("base alphabet must be a computational (pfm or linear_ramp) set")
    waveforms = tuple(_superpose(row, base) for row in c)
    return SymbolSet(waveforms, Scheme.SUPERPOSITION, base.carrier, base.eom)


# Coefficients printed for the d = 4 superposition example; rows are |S_k>.
EXAMPLE_BASIS_4 = np.array(
    [
        [0.267, 0.413, -0.785, -0.376],
        [0.187, 0.593, 0.610, -0.491],
        [0.936, -0.324, 0.103, 0.094],
        [0.134, 0.611, -0.006, 0.780],
    ]
)
