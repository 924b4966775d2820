"""Figures of merit for a detection matrix: error rate per symbol and mutual information."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .detection import DetectionMatrix


@dataclass(frozen=True)
class ErsResult:
    ers: float
    per_input_error: npt.NDArray[np.float64] = field(repr=False)
    mean_detection_efficiency: float


@dataclass(frozen=True)
class MiResult:
    bits_per_symbol: float
    output_entropy: float
    conditional_entropy: float
    erasure_probability: float


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """State-independent loss and detector dark counts.

    ``dark_rate`` is in counts per second and ``gate_window`` in seconds; the
    dark-click probability per detection slot is their product.
    """

    loss: float = 0.0
    dark_rate: float = 0.0
    gate_window: float = 100e-9
    prior: npt.NDArray[np.float64] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.loss < 1.0:
            raise ValueError("loss must lie in [0, 1)")
        if self.dark_rate < 0 or self.gate_window < 0:
            raise ValueError("dark rate and gate window must be non-negative")
        if self.prior is not None:
            p = np.asarray(self.prior, dtype=float)
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("prior must be a probability vector")

    @property
    def dark_probability(self) -> float:
        return self.dark_rate * self.gate_window


def ers(m: DetectionMatrix) -> ErsResult:
    """Error rate per symbol: mean over inputs of the wrong-slot fraction of detections.

    An input that is never detected contributes ``1 - 1/d``, the random-guess error.
    """
    p = m.entries
    d = m.d
    totals = p.sum(axis=1)
    diag = np.diag(p)
    if not np.any(totals > 0):
        raise ValueError("detection matrix has no detections")
    with np.errstate(invalid="ignore", divide="ignore"):
        err = np.where(totals > 0, 1.0 - diag / totals, 1.0 - 1.0 / d)
    return ErsResult(float(np.mean(err)), err, float(np.mean(diag)))


def degrade(m: DetectionMatrix, model: ChannelModel) -> DetectionMatrix:
    """Apply channel loss and additive first-order dark counts to every slot."""
    p_dark = model.dark_probability
    if p_dark >= 1:
        raise ValueError(f"dark-count probability per window is {p_dark:.3g} >= 1")
    if model.prior is not None and len(model.prior) != m.d:
        raise ValueError("prior length does not match the matrix dimension")
    return DetectionMatrix(np.clip((1.0 - model.loss) * m.entries + p_dark, 0.0, 1.0))


def _entropy_bits(p: npt.NDArray[np.float64], axis: int = -1) -> npt.NDArray[np.float64]:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(p), 0.0)
    return terms.sum(axis=axis)


def channel_transition(m: DetectionMatrix) -> npt.NDArray[np.float64]:
    """Conditional output distribution over the ``d`` slots plus an erasure outcome.

    Where the independently evaluated round trips sum to more than one, the
    row is rescaled to unit total and the erasure probability is zero.
    """
    p = m.entries
    totals = p.sum(axis=1, keepdims=True)
    slots = p / np.maximum(totals, 1.0)
    erasure = 1.0 - slots.sum(axis=1, keepdims=True)
    return np.hstack([slots, np.clip(erasure, 0.0, None)])


def mutual_information(m: DetectionMatrix, prior: npt.ArrayLike | None = None) -> MiResult:
    """``I(X:Y) = H(Y) - H(Y|X)`` in bits, with no-detection as an explicit output."""
    d = m.d
    px = np.full(d, 1.0 / d) if prior is None else np.asarray(prior, dtype=float)
    if px.shape != (d,) or np.any(px < 0) or abs(px.sum() - 1) > 1e-12:
        raise ValueError("prior must be a length-d probability vector")
    q = channel_transition(m)
    py = px @ q
    h_y = float(_entropy_bits(py))
    h_yx = float(px @ _entropy_bits(q, axis=1))
    bits = min(max(h_y - h_yx, 0.0), float(np.log2(d)))
    return MiResult(bits, h_y, h_yx, float(px @ q[:, -1]))
