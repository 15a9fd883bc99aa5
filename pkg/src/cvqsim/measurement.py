"""Homodyne projection and photon-number-resolving post-selection.

Both measurements are deterministic conditioning: the chosen branch is
computed together with its weight (squared norm before renormalization)
rather than sampled.  Weights compose multiplicatively across successive
measurements via ``QumodeState.norm_weight``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fock
from .errors import ConfigError, ContractError, ZeroProbabilityError
from .fock import QumodeState

__all__ = ["MeasurementRecord", "homodyne", "pnr_postselect", "HOMODYNE_SIGMA"]

# Squeezed-scheme projector variance mirroring the photonic simulator default.
HOMODYNE_SIGMA = 2e-4

_NORM_FLOOR = 1e-14


@dataclass(frozen=True)
class MeasurementRecord:
    mode: int
    kind: str               # "homodyne" or "pnr"
    value: float | int      # measured position / Fock outcome m
    weight: float           # squared norm before renormalization
    scheme: str | None = None

    def to_dict(self) -> dict:
        return {"mode": self.mode, "kind": self.kind, "value": self.value,
                "weight": self.weight, "scheme": self.scheme}


def _squeezed_kernel(n_max: int, value: float, sigma: float) -> np.ndarray:
    """Fock coefficients of a normalized Gaussian of position variance sigma at x=value.

    Computed by Gauss-Legendre quadrature over the (narrow) support; the
    Hermite functions vary slowly on that scale so modest node counts are exact
    to machine precision.
    """
    width = np.sqrt(sigma)
    nodes, weights = np.polynomial.legendre.leggauss(160)
    x = value + 8.0 * width * nodes
    w = 8.0 * width * weights
    g = (2.0 * np.pi * sigma) ** (-0.25) * np.exp(-((x - value) ** 2) / (4.0 * sigma))
    return fock.hermite_table(n_max, x) @ (w * g)


def _contract(state: QumodeState, mode: int, kernel: np.ndarray):
    amps = np.moveaxis(state.amplitudes, mode, -1)
    return amps @ kernel.astype(np.complex128)


def _finalize(state: QumodeState, reduced: np.ndarray, record_args: dict):
    weight = float(np.sum(np.abs(reduced) ** 2))
    if np.sqrt(weight) < _NORM_FLOOR:
        raise ZeroProbabilityError(
            f"measurement branch has vanishing probability (weight={weight:.3e})")
    record = MeasurementRecord(weight=weight, **record_args)
    if reduced.ndim == 0:
        return None, record
    out = QumodeState(reduced / np.sqrt(weight),
                      norm_weight=state.norm_weight * weight)
    return out, record


def homodyne(state: QumodeState, mode: int, value: float, scheme: str = "delta",
             sigma: float = HOMODYNE_SIGMA):
    """Project ``mode`` onto position ``value`` and drop it from the state.

    ``scheme="delta"`` contracts against the exact position kernel phi_n(value);
    ``scheme="squeezed"`` projects onto a squeezed Gaussian of variance ``sigma``
    instead.  Returns ``(reduced_state, record)``; the reduced state is ``None``
    when the last mode is measured.
    """
    if mode >= state.num_modes:
        raise ContractError(f"mode {mode} out of range for {state.num_modes} modes")
    if scheme == "delta":
        kernel = fock.hermite_table(state.n_max, np.array([value]))[:, 0]
    elif scheme == "squeezed":
        kernel = _squeezed_kernel(state.n_max, value, sigma)
    else:
        raise ConfigError(f"unknown homodyne scheme {scheme!r}")
    reduced = _contract(state, mode, kernel)
    return _finalize(state, reduced, dict(mode=mode, kind="homodyne",
                                          value=float(value), scheme=scheme))


def pnr_postselect(state: QumodeState, mode: int, m: int):
    """Condition ``mode`` on the photon-number outcome ``m`` and drop it.

    The weight equals the success probability of the post-selection.
    """
    if mode >= state.num_modes:
        raise ContractError(f"mode {mode} out of range for {state.num_modes} modes")
    if not 0 <= m <= state.n_max:
        raise ContractError(f"PNR outcome m={m} outside truncation 0..{state.n_max}")
    reduced = np.take(state.amplitudes, m, axis=mode)
    return _finalize(state, reduced, dict(mode=mode, kind="pnr", value=int(m),
                                          scheme=None))
