"""Independent classical references and comparison metrics.

Two references bracket the simulator: exact evolution of the truncated
Fock-space Hamiltonian (shares the truncation, no Trotter error) and a
split-step spectral solver on a wide position grid (no truncation at all).
Their mutual agreement bounds truncation systematics; either can serve as the
baseline for KL / fidelity / L2 comparisons.
"""

from __future__ import annotations

import numpy as np

from . import fock
from .errors import ContractError, GridDomainError
from .evolver import Potential
from .fock import QumodeState

__all__ = ["FockHamiltonian", "exact_evolution", "grid_schrodinger",
           "default_solver_grid", "vacuum_wavefunction", "kl_divergence",
           "l2_density_error", "density_on_points",
           "lattice_hamiltonian", "exact_lattice_evolution"]

KL_FLOOR = 1e-12


class FockHamiltonian:
    """H = p^2/2 + V(x) on the truncated space.

    The oscillator part enters through its exact truncated spectrum
    diag(n + 1/2) (the same spectrum the rotation gate exponentiates) and the
    anharmonic remainder V(x) - x^2/2 through the eigenvalues of the truncated
    position operator, so exact evolution under this matrix differs from the
    Trotterized simulator only by the splitting error.
    """

    def __init__(self, potential: Potential, n_max: int):
        self.potential = potential
        self.n_max = n_max
        lam, vecs = fock.position_eigensystem(n_max)
        h1 = (vecs * potential.h1(lam)) @ vecs.conj().T
        self.matrix = np.diag(np.arange(n_max + 1) + 0.5).astype(np.complex128) + h1
        self._eigensystem = None

    def eigensystem(self):
        if self._eigensystem is None:
            self._eigensystem = np.linalg.eigh(self.matrix)
        return self._eigensystem

    def expectation(self, state: QumodeState) -> float:
        a = state.amplitudes
        return float(np.vdot(a, self.matrix @ a).real)


def exact_evolution(hamiltonian: FockHamiltonian, psi0: QumodeState,
                    t: float) -> QumodeState:
    """exp(-i H t) |psi0> via one eigendecomposition (exactly unitary)."""
    if psi0.num_modes != 1:
        raise ContractError("exact_evolution expects a single-mode state")
    if psi0.n_max != hamiltonian.n_max:
        raise ContractError("state and Hamiltonian truncations differ")
    vals, vecs = hamiltonian.eigensystem()
    phases = np.exp(-1j * vals * t)
    amps = vecs @ (phases * (vecs.conj().T @ psi0.amplitudes))
    return QumodeState(amps, norm_weight=psi0.norm_weight)


def default_solver_grid(x_half: float = 12.0, num_points: int = 2048) -> np.ndarray:
    """Periodic grid for the split-step solver (endpoint excluded for the FFT)."""
    return np.linspace(-x_half, x_half, num_points, endpoint=False)


def vacuum_wavefunction(x: np.ndarray) -> np.ndarray:
    return np.pi ** (-0.25) * np.exp(-0.5 * np.asarray(x, dtype=float) ** 2)


def grid_schrodinger(potential: Potential, psi0_grid, t: float,
                     dt_grid: float = 1e-3, x: np.ndarray | None = None,
                     edge_tol: float = 1e-8) -> np.ndarray:
    """Split-step spectral evolution; returns the final density on the grid.

    Strang splitting: half potential step in position space, full kinetic step
    in momentum space, half potential step.  ``psi0_grid`` may be an array on
    the grid, a callable x -> psi(x), or None for the vacuum Gaussian.
    Raises GridDomainError when probability reaches the grid boundary.
    """
    x = default_solver_grid() if x is None else np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    if psi0_grid is None:
        psi = vacuum_wavefunction(x).astype(np.complex128)
    elif callable(psi0_grid):
        psi = np.asarray(psi0_grid(x), dtype=np.complex128)
    else:
        psi = np.asarray(psi0_grid, dtype=np.complex128)
        if psi.shape != x.shape:
            raise ContractError("psi0_grid length does not match the grid")
    psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2) * dx)

    if t == 0.0:
        return np.abs(psi) ** 2

    steps = max(1, int(np.ceil(t / dt_grid)))
    dt = t / steps
    k = 2.0 * np.pi * np.fft.fftfreq(x.size, d=dx)
    half_v = np.exp(-0.5j * dt * potential(x))
    kinetic = np.exp(-0.5j * dt * k**2)

    def check_edges(p):
        edge = max(abs(p[0]) ** 2, abs(p[-1]) ** 2)
        if edge > edge_tol:
            raise GridDomainError(
                f"state support reached the grid boundary (edge density {edge:.3e})")

    check_edges(psi)
    for step in range(steps):
        psi = half_v * psi
        psi = np.fft.ifft(kinetic * np.fft.fft(psi))
        psi = half_v * psi
        if step % 200 == 0:
            check_edges(psi)
    check_edges(psi)
    return np.abs(psi) ** 2


def density_on_points(state: QumodeState, x: np.ndarray, mode: int = 0) -> np.ndarray:
    """Marginal position density of one mode evaluated on arbitrary points."""
    table = fock.hermite_table(state.n_max, np.asarray(x, dtype=float))
    amps = np.moveaxis(state.amplitudes, mode, -1)
    waves = amps @ table.astype(np.complex128)
    if state.num_modes == 1:
        return np.abs(waves) ** 2
    return np.sum(np.abs(waves) ** 2, axis=tuple(range(state.num_modes - 1)))


def kl_divergence(p, q, grid=None) -> float:
    """Relative entropy sum p ln(p/q) in nats after grid-level normalization.

    Both inputs are normalized to probability vectors over the (uniform) grid
    and floored at 1e-12, which pins down the discretization so the numbers
    are reproducible.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ContractError(f"density shapes differ: {p.shape} vs {q.shape}")
    if np.any(p < -1e-12) or np.any(q < -1e-12):
        raise ContractError("densities must be nonnegative")
    p = np.maximum(p, 0.0)
    q = np.maximum(q, 0.0)
    p = p / p.sum()
    q = q / q.sum()
    p = np.maximum(p, KL_FLOOR)
    q = np.maximum(q, KL_FLOOR)
    return float(np.sum(p * np.log(p / q)))


def l2_density_error(p, q, dx: float) -> float:
    """sqrt(integral (p - q)^2 dx) on a uniform grid."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ContractError(f"density shapes differ: {p.shape} vs {q.shape}")
    return float(np.sqrt(np.sum((p - q) ** 2) * dx))


# ---------------------------------------------------------------------------
# Multi-mode lattice oracle (desk scale: (n_max+1)^M up to a few thousand).
# ---------------------------------------------------------------------------

def _kron_embed(ops: dict, num_sites: int, dim: int) -> np.ndarray:
    eye = np.eye(dim, dtype=np.complex128)
    out = None
    for k in range(num_sites):
        m = ops.get(k, eye)
        out = m if out is None else np.kron(out, m)
    return out


def lattice_hamiltonian(potential: Potential, num_sites: int, spacing: float,
                        n_max: int) -> np.ndarray:
    """Dense matrix of (lattice Hamiltonian * spacing) on the truncated product space.

    Per site: N + 1/2 + x^2/2 + spacing^2 V(x) (position function calculus),
    minus the periodic hopping sum x_{k+1} x_k.  For num_sites = 2 the
    periodic sum traverses the single edge twice, doubling the coupling.
    """
    d = n_max + 1
    lam, vecs = fock.position_eigensystem(n_max)
    h1_eff = 0.5 * lam**2 + spacing**2 * np.asarray(potential(lam), dtype=float)
    site_term = np.diag(np.arange(d) + 0.5).astype(np.complex128) \
        + (vecs * h1_eff) @ vecs.conj().T
    xop = fock.position_operator(n_max)
    ham = np.zeros((d**num_sites, d**num_sites), dtype=np.complex128)
    for k in range(num_sites):
        ham += _kron_embed({k: site_term}, num_sites, d)
        ham -= _kron_embed({(k + 1) % num_sites: xop, k: xop}, num_sites, d)
    return ham


def exact_lattice_evolution(ham: np.ndarray, psi0: QumodeState,
                            t_prime: float) -> QumodeState:
    """exp(-i (H a) t') |psi0> for the dense lattice Hamiltonian."""
    vals, vecs = np.linalg.eigh(ham)
    flat = psi0.amplitudes.ravel()
    out = vecs @ (np.exp(-1j * vals * t_prime) * (vecs.conj().T @ flat))
    return QumodeState(out.reshape(psi0.amplitudes.shape),
                       norm_weight=psi0.norm_weight)
