"""1+1-dimensional real scalar field on a periodic spatial lattice.

Each of the M sites carries one qumode whose position quadrature stands for
the field value; conjugate momenta come for free as the p quadratures.  After
absorbing the lattice spacing into a rescaled time step dt' = dt / a, a Trotter
step is one evolver gadget per site with the effective potential
x^2/2 + a^2 V(x) followed by a ring of controlled-Z hopping gates.

The hopping term enters the Hamiltonian as -sum_k x_{k+1} x_k, so each edge
contributes the phase exp(+i dt' x x); with the gate convention
ControlZ(s) = exp(-i s x x) that is ControlZ(-dt').  For M = 2 the periodic
sum traverses the single edge twice; the doubled coupling must be acknowledged
explicitly via ``doubled_edge``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import fock
from .errors import ConfigError
from .evolver import EvolverSpec, Potential, build_evolver_ket, evolver_coefficients
from .fock import FLOAT_FMT, PositionGrid, QumodeState, ground_state
from .gates import ControlX, ControlZ, Rotate, Squeeze, apply_gate
from .measurement import MeasurementRecord, homodyne
from .trotter import DEFAULT_S_OVER_Q, _direct_step_matrices

__all__ = ["LatticeConfig", "LatticeTrace", "lattice_h1", "effective_site_potential",
           "qft_trotter_step", "qft_evolve", "gate_count_per_step", "mean_position",
           "two_point_x"]


def gate_count_per_step(num_sites: int) -> int:
    """Gates per Trotter step: 3 per evolver gadget plus M hopping gates."""
    return 4 * num_sites


def effective_site_potential(potential: Potential, spacing: float) -> Potential:
    """Single-site potential x^2 + a^2 V(x) whose non-Gaussian part drives the gadget."""
    if spacing <= 0:
        raise ConfigError("lattice spacing must be positive")
    if potential.kind == "polynomial":
        coeffs = np.array(potential.coefficients, dtype=float) * spacing**2
        if len(coeffs) < 3:
            coeffs = np.concatenate([coeffs, np.zeros(3 - len(coeffs))])
        coeffs[2] += 1.0
        return Potential.polynomial(coeffs)
    return Potential.from_callable(
        lambda x, _p=potential, _a=spacing: np.asarray(x, dtype=float) ** 2
        + _a**2 * np.asarray(_p(x), dtype=float))


def lattice_h1(potential: Potential, spacing: float):
    """Per-site non-Gaussian part H1(x) = x^2/2 + a^2 V(x), as a callable."""
    return effective_site_potential(potential, spacing).h1


@dataclass(frozen=True)
class LatticeConfig:
    num_sites: int
    spacing: float
    potential: Potential
    delta_t: float
    n_max: int
    mode: str = "direct"
    doubled_edge: bool = False
    # gadget parameters for circuit mode
    q: float = 1.0
    L: float = 7.0
    s: float | None = None

    def __post_init__(self):
        if self.num_sites < 2:
            raise ConfigError("lattice requires M >= 2 sites (M = 1 is a self-loop)")
        if self.num_sites == 2 and not self.doubled_edge:
            raise ConfigError(
                "M = 2 counts its single edge twice in the periodic hopping sum; "
                "set doubled_edge=True to acknowledge the doubled coupling")
        if self.spacing <= 0:
            raise ConfigError("lattice spacing must be positive")
        if self.delta_t <= 0:
            raise ConfigError("delta_t must be positive")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if self.mode not in ("direct", "circuit"):
            raise ConfigError(f"mode must be 'direct' or 'circuit', got {self.mode!r}")
        if self.s is None:
            object.__setattr__(self, "s", DEFAULT_S_OVER_Q * self.q)

    @property
    def delta_t_prime(self) -> float:
        return self.delta_t / self.spacing

    @property
    def r(self) -> float:
        return float(np.log(self.q / self.s))

    def site_potential(self) -> Potential:
        return effective_site_potential(self.potential, self.spacing)

    def build_evolver(self, **kwargs) -> EvolverSpec:
        return evolver_coefficients(self.site_potential(), self.delta_t_prime,
                                    q=self.q, L=self.L, n_max=self.n_max, **kwargs)


def qft_trotter_step(state: QumodeState, config: LatticeConfig,
                     evolver_ket: QumodeState | None = None):
    """One lattice Trotter step; returns (state, measurement records).

    Site gadgets first (direct phase injection or the ancilla circuit per
    site), then the periodic controlled-Z ring with phase exp(+i dt' x x)
    per edge.
    """
    m = config.num_sites
    if state.num_modes != m:
        raise ConfigError(f"state has {state.num_modes} modes, config expects {m}")
    dtp = config.delta_t_prime
    records: list[MeasurementRecord] = []
    if config.mode == "direct":
        u1, rot = _direct_step_matrices(config.site_potential(), dtp, config.n_max)
        step_matrix = rot[:, None] * u1
        amps = state.amplitudes
        for k in range(m):
            amps = np.moveaxis(
                np.tensordot(step_matrix, amps, axes=([1], [k])), 0, k)
        current = QumodeState(amps, norm_weight=state.norm_weight)
    else:
        if evolver_ket is None:
            raise ConfigError("circuit mode requires an evolver ket")
        current = state
        for k in range(m):
            joint = QumodeState(
                np.multiply.outer(current.amplitudes, evolver_ket.amplitudes),
                norm_weight=current.norm_weight)
            ancilla = m  # appended as the last axis
            if config.r != 0.0:
                joint = apply_gate(joint, Squeeze(config.r, mode=ancilla))
            joint = apply_gate(joint, ControlX(-config.s, control=k, target=ancilla))
            joint, record = homodyne(joint, mode=ancilla, value=0.0)
            current = apply_gate(joint, Rotate(-dtp, mode=k))
            records.append(record)
    for k in range(m):
        current = apply_gate(current, ControlZ(-dtp, control=(k + 1) % m, target=k))
    return current, records


def mean_position(state: QumodeState, site: int) -> float:
    xop = fock.position_operator(state.n_max)
    amps = state.amplitudes
    acted = np.moveaxis(np.tensordot(xop, amps, axes=([1], [site])), 0, site)
    return float(np.vdot(amps, acted).real)


def two_point_x(state: QumodeState, site_a: int, site_b: int) -> float:
    """<x_a x_b> for distinct sites."""
    xop = fock.position_operator(state.n_max)
    amps = state.amplitudes
    acted = np.moveaxis(np.tensordot(xop, amps, axes=([1], [site_a])), 0, site_a)
    acted = np.moveaxis(np.tensordot(xop, acted, axes=([1], [site_b])), 0, site_b)
    return float(np.vdot(amps, acted).real)


@dataclass
class LatticeTrace:
    grid: PositionGrid
    config: LatticeConfig
    times: list[float] = field(default_factory=list)
    mean_x: list[list[float]] = field(default_factory=list)       # per step, per site
    norms: list[float] = field(default_factory=list)
    densities: list[list[np.ndarray]] = field(default_factory=list)
    cumulative_weight: float = 1.0
    measurements: list[MeasurementRecord] = field(default_factory=list)
    final_state: QumodeState | None = None

    @property
    def gate_count_per_step(self) -> int:
        return gate_count_per_step(self.config.num_sites)

    def to_csv(self, path) -> None:
        lines = [f"# sites={self.config.num_sites}",
                 f"# n_max={self.config.n_max}", f"# mode={self.config.mode}",
                 f"# gate_count_per_step={self.gate_count_per_step}",
                 "t,site,mean_x,norm"]
        for t, means, norm in zip(self.times, self.mean_x, self.norms):
            for site, mx in enumerate(means):
                lines.append(",".join([FLOAT_FMT % t, str(site), FLOAT_FMT % mx,
                                       FLOAT_FMT % norm]))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    def write_densities(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        for step, (t, per_site) in enumerate(zip(self.times, self.densities)):
            for site, rho in enumerate(per_site):
                fock.write_density_csv(
                    os.path.join(directory, f"site{site}_{step + 1:05d}.csv"),
                    self.grid, rho, self.config.n_max, step=step + 1, time=t)

    def to_json(self, path) -> None:
        payload = {
            "sites": self.config.num_sites, "n_max": self.config.n_max,
            "mode": self.config.mode,
            "gate_count_per_step": self.gate_count_per_step,
            "times": self.times, "mean_x": self.mean_x, "norms": self.norms,
            "cumulative_weight": self.cumulative_weight,
            "measurements": [r.to_dict() for r in self.measurements],
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")


def qft_evolve(config: LatticeConfig, steps: int,
               initial: QumodeState | None = None,
               evolver: EvolverSpec | QumodeState | None = None,
               grid: PositionGrid | None = None,
               record_every: int = 1) -> LatticeTrace:
    """Iterate the lattice step, recording per-site means and marginal densities."""
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    state = initial if initial is not None else ground_state(config.n_max,
                                                             config.num_sites)
    if state.num_modes != config.num_sites:
        raise ConfigError("initial state mode count does not match the lattice")
    ket = None
    if config.mode == "circuit":
        if evolver is None:
            evolver = config.build_evolver()
        ket = evolver if isinstance(evolver, QumodeState) else build_evolver_ket(evolver)
    grid = grid or PositionGrid()
    trace = LatticeTrace(grid=grid, config=config)
    for step in range(1, steps + 1):
        state, records = qft_trotter_step(state, config, ket)
        trace.measurements.extend(records)
        for rec in records:
            trace.cumulative_weight *= rec.weight
        if step % record_every == 0 or step == steps:
            trace.times.append(step * config.delta_t_prime)
            trace.mean_x.append([mean_position(state, k)
                                 for k in range(config.num_sites)])
            trace.norms.append(state.norm())
            trace.densities.append([fock.position_density(state, k, grid)
                                    for k in range(config.num_sites)])
    trace.final_state = state
    return trace
