"""Truncated Fock-space representation of multi-qumode states.

A qumode is a quantum harmonic oscillator (natural units, hbar = m = omega = 1).
States live in the tensor product of per-mode Fock spaces truncated at
``n_max``; amplitudes are stored as a dense complex tensor of shape
``(n_max + 1,) * num_modes``.  Position-basis quantities are evaluated through
the oscillator eigenfunctions (Hermite functions).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, ContractError, HermiteRangeWarning

__all__ = [
    "QumodeState",
    "PositionGrid",
    "ground_state",
    "coherent_state",
    "hermite_fn",
    "hermite_table",
    "position_density",
    "fidelity",
    "annihilation",
    "creation",
    "number_operator",
    "position_operator",
    "momentum_operator",
    "position_eigensystem",
    "momentum_eigensystem",
    "write_density_csv",
]

FLOAT_FMT = "%.17g"


@dataclass
class QumodeState:
    """Pure state of ``num_modes`` qumodes, each truncated at ``n_max + 1`` levels.

    ``norm_weight`` accumulates the pre-normalization squared norms of the
    measurements a state has been conditioned on; it is multiplicative across
    successive measurements.
    """

    amplitudes: np.ndarray
    norm_weight: float = 1.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim < 1:
            raise ConfigError("amplitude tensor must have at least one mode axis")
        dim = amps.shape[0]
        if any(d != dim for d in amps.shape):
            raise ConfigError(f"amplitude tensor must be hypercubic, got shape {amps.shape}")
        if dim < 2:
            raise ConfigError("truncation n_max must be >= 1 (at least two Fock levels)")
        if self.norm_weight < 0:
            raise ConfigError("norm_weight must be nonnegative")
        self.amplitudes = amps

    @property
    def n_max(self) -> int:
        return self.amplitudes.shape[0] - 1

    @property
    def num_modes(self) -> int:
        return self.amplitudes.ndim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes.ravel()))

    def normalized(self) -> "QumodeState":
        n = self.norm()
        if n == 0.0:
            raise ConfigError("cannot normalize the zero state")
        return QumodeState(self.amplitudes / n, norm_weight=self.norm_weight)

    def copy(self) -> "QumodeState":
        return QumodeState(self.amplitudes.copy(), norm_weight=self.norm_weight)


@dataclass(frozen=True)
class PositionGrid:
    """Uniform grid on ``[x_min, x_max]`` with ``num_points`` points (endpoints included)."""

    x_min: float = -8.0
    x_max: float = 8.0
    num_points: int = 401

    def __post_init__(self):
        if self.num_points < 2:
            raise ConfigError("grid needs at least two points")
        if not self.x_min < self.x_max:
            raise ConfigError("grid requires x_min < x_max")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.num_points)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.num_points - 1)


def ground_state(n_max: int, num_modes: int = 1) -> QumodeState:
    """Product vacuum |0...0> at the given truncation."""
    if n_max < 1:
        raise ConfigError(f"n_max must be >= 1, got {n_max}")
    if num_modes < 1:
        raise ConfigError(f"num_modes must be >= 1, got {num_modes}")
    amps = np.zeros((n_max + 1,) * num_modes, dtype=np.complex128)
    amps[(0,) * num_modes] = 1.0
    return QumodeState(amps)


def coherent_state(alpha: complex, n_max: int) -> QumodeState:
    """Single-mode coherent state, amplitudes exp(-|a|^2/2) a^n / sqrt(n!), renormalized."""
    n = np.arange(n_max + 1)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, n_max + 1)))))
    amps = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * log_fact) * np.power(complex(alpha), n)
    return QumodeState(amps).normalized()


def hermite_fn(n: int, x) -> np.ndarray | float:
    """Value of the n-th oscillator eigenfunction phi_n(x).

    phi_0(x) = pi^(-1/4) exp(-x^2/2) and the stable two-term recurrence
    phi_n = sqrt(2/n) x phi_{n-1} - sqrt((n-1)/n) phi_{n-2}.
    """
    if n < 0:
        raise ContractError(f"Hermite index must be nonnegative, got {n}")
    xs = np.asarray(x, dtype=float)
    table = hermite_table(n, xs.ravel())
    out = table[n].reshape(xs.shape)
    return float(out) if np.isscalar(x) or xs.shape == () else out


def hermite_table(n_max: int, x: np.ndarray) -> np.ndarray:
    """All phi_n(x_j) for n = 0..n_max, returned as an (n_max+1, len(x)) array."""
    x = np.asarray(x, dtype=float)
    table = np.empty((n_max + 1, x.size), dtype=float)
    table[0] = np.pi ** (-0.25) * np.exp(-0.5 * x**2)
    if n_max >= 1:
        table[1] = np.sqrt(2.0) * x * table[0]
    for n in range(2, n_max + 1):
        table[n] = np.sqrt(2.0 / n) * x * table[n - 1] - np.sqrt((n - 1) / n) * table[n - 2]
    return table


def reliable_position_range(n_max: int) -> float:
    """Half-width beyond which truncated-basis position values are untrustworthy."""
    return np.sqrt(2.0 * n_max) + 4.0


def position_density(state: QumodeState, mode_index: int = 0,
                     grid: PositionGrid | None = None) -> np.ndarray:
    """Position-space probability density of one mode, tracing out the others.

    For a single mode this is |sum_n A_n phi_n(x)|^2; for several modes the
    traced axes are summed incoherently after transforming the target axis to
    the grid, which avoids forming a density matrix.
    """
    grid = grid or PositionGrid()
    if mode_index >= state.num_modes:
        raise ContractError(f"mode_index {mode_index} out of range for {state.num_modes} modes")
    x = grid.points
    limit = reliable_position_range(state.n_max)
    if np.max(np.abs(x)) > limit:
        warnings.warn(
            f"grid extends beyond the reliable Hermite range |x| <= {limit:.2f} "
            f"for n_max={state.n_max}",
            HermiteRangeWarning,
            stacklevel=2,
        )
    table = hermite_table(state.n_max, x)  # (D, G)
    amps = np.moveaxis(state.amplitudes, mode_index, -1)  # (..., D)
    waves = amps @ table.astype(np.complex128)  # (..., G)
    if state.num_modes == 1:
        return np.abs(waves) ** 2
    return np.sum(np.abs(waves) ** 2, axis=tuple(range(state.num_modes - 1)))


def fidelity(a: QumodeState, b: QumodeState) -> float:
    """|<a|b>|^2 for states of identical shape."""
    if a.amplitudes.shape != b.amplitudes.shape:
        raise ContractError(
            f"state shapes differ: {a.amplitudes.shape} vs {b.amplitudes.shape}")
    overlap = np.vdot(a.amplitudes, b.amplitudes)
    return float(np.clip(abs(overlap) ** 2, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Truncated ladder / quadrature operators.
# x = (a + a^dag)/sqrt(2), p = i (a^dag - a)/sqrt(2), [x, p] = i.
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def annihilation(n_max: int) -> np.ndarray:
    d = n_max + 1
    a = np.zeros((d, d), dtype=np.complex128)
    ns = np.arange(1, d)
    a[ns - 1, ns] = np.sqrt(ns)
    return a


def creation(n_max: int) -> np.ndarray:
    return annihilation(n_max).conj().T


@lru_cache(maxsize=None)
def number_operator(n_max: int) -> np.ndarray:
    return np.diag(np.arange(n_max + 1).astype(np.complex128))


@lru_cache(maxsize=None)
def position_operator(n_max: int) -> np.ndarray:
    a = annihilation(n_max)
    return (a + a.conj().T) / np.sqrt(2.0)


@lru_cache(maxsize=None)
def momentum_operator(n_max: int) -> np.ndarray:
    a = annihilation(n_max)
    return 1j * (a.conj().T - a) / np.sqrt(2.0)


@lru_cache(maxsize=None)
def position_eigensystem(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of the truncated position operator (cached)."""
    vals, vecs = np.linalg.eigh(position_operator(n_max))
    return vals, vecs


@lru_cache(maxsize=None)
def momentum_eigensystem(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(momentum_operator(n_max))
    return vals, vecs


def write_density_csv(path, grid: PositionGrid, rho: np.ndarray,
                      n_max: int, step: int = 0, time: float = 0.0) -> None:
    """Emit a density trace as CSV with columns x, rho and a metadata header."""
    xs = grid.points
    lines = [f"# n_max={n_max}", f"# step={step}", f"# time={FLOAT_FMT % time}", "x,rho"]
    lines += [f"{FLOAT_FMT % x},{FLOAT_FMT % r}" for x, r in zip(xs, rho)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
