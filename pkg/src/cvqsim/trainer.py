"""Trainable state-preparation circuit in the layered GBS style.

Per layer every mode is displaced then squeezed, after which a rectangular
mesh of beamsplitters entangles the register; after I layers the first
n_modes - 1 modes are post-selected on fixed photon counts, inducing a
non-Gaussian state on the last mode.  Parameters are fitted to a target
amplitude vector with a simultaneous-perturbation (SPSA) optimizer: the loss
landscape is cheap but nonsmooth through the post-selection, and SPSA needs
only two circuit evaluations per iteration regardless of dimension.

Parameter layout, per layer (n = n_modes, P = n(n-1)/2 mesh couplers):
    [0:n]        displacement real parts
    [n:2n]       displacement imaginary parts
    [2n:3n]      squeeze real parts
    [3n:4n]      squeeze imaginary parts
    [4n:4n+2P]   beamsplitter (theta, phi) pairs in mesh order
giving (4n + n(n-1)) * layers parameters in total.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, TrainingFailure, ZeroProbabilityError
from .evolver import EvolverSpec
from .fock import FLOAT_FMT, QumodeState, ground_state
from .gates import Beamsplitter, Displace, Squeeze, apply_gate
from .measurement import pnr_postselect

__all__ = ["PrepCircuitConfig", "SPSASettings", "TrainHistory", "parameter_count",
           "clements_pairs", "run_prep_circuit", "initial_parameters", "loss",
           "train", "save_parameters", "load_parameters"]


def parameter_count(n_modes: int, layers: int) -> int:
    """(4n + n(n-1)) * layers: 2 per displacement and squeeze per mode, 2 per coupler."""
    if n_modes < 2:
        raise ConfigError("the preparation circuit needs at least 2 modes")
    if layers < 1:
        raise ConfigError("layers must be >= 1")
    return (4 * n_modes + n_modes * (n_modes - 1)) * layers


def clements_pairs(n_modes: int) -> list[tuple[int, int]]:
    """Rectangular mesh: n columns of alternating even/odd neighbour couplings.

    Yields exactly n(n-1)/2 pairs, e.g. [(0,1), (1,2), (0,1)] for three modes.
    """
    pairs = []
    for column in range(n_modes):
        start = column % 2
        pairs.extend((i, i + 1) for i in range(start, n_modes - 1, 2))
    return pairs


@dataclass(frozen=True)
class PrepCircuitConfig:
    n_modes: int
    layers: int
    postselect: tuple[int, ...]
    target: EvolverSpec | None
    n_max: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "postselect", tuple(int(m) for m in self.postselect))
        parameter_count(self.n_modes, self.layers)  # validates n_modes, layers
        if len(self.postselect) != self.n_modes - 1:
            raise ConfigError(
                f"need {self.n_modes - 1} post-selection outcomes, got "
                f"{len(self.postselect)}")
        if any(m < 0 or m > self.n_max for m in self.postselect):
            raise ConfigError("post-selection outcomes must lie within the truncation")
        if self.target is not None and self.target.n_max != self.n_max:
            raise ConfigError("target truncation differs from circuit truncation")

    @property
    def parameter_count(self) -> int:
        return parameter_count(self.n_modes, self.layers)


def run_prep_circuit(config: PrepCircuitConfig, params: np.ndarray):
    """Execute the layered circuit from vacuum; returns (state, success probability).

    The post-selections are deterministic conditioning; their joint success
    probability is the product of the individual branch weights.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (config.parameter_count,):
        raise ConfigError(
            f"expected {config.parameter_count} parameters, got {params.shape}")
    n = config.n_modes
    per_layer = 4 * n + n * (n - 1)
    pairs = clements_pairs(n)
    state = ground_state(config.n_max, n)
    for layer in range(config.layers):
        p = params[layer * per_layer:(layer + 1) * per_layer]
        for m in range(n):
            state = apply_gate(state, Displace(complex(p[m], p[n + m]), mode=m))
        for m in range(n):
            state = apply_gate(state, Squeeze(complex(p[2 * n + m], p[3 * n + m]),
                                              mode=m))
        bs = p[4 * n:]
        for j, (a, b) in enumerate(pairs):
            state = apply_gate(state, Beamsplitter(bs[2 * j], bs[2 * j + 1],
                                                   mode_a=a, mode_b=b))
    for outcome in config.postselect:
        state, _ = pnr_postselect(state, 0, outcome)
    return state, state.norm_weight


def initial_parameters(config: PrepCircuitConfig, rng: np.random.Generator) -> np.ndarray:
    """Small random start, with displacement magnitudes boosted so the fixed
    photon-count post-selection begins at nonzero probability."""
    n = config.n_modes
    per_layer = 4 * n + n * (n - 1)
    params = rng.uniform(-0.05, 0.05, size=config.parameter_count)
    for layer in range(config.layers):
        lo = layer * per_layer
        params[lo:lo + 2 * n] = rng.uniform(-0.5, 0.5, size=2 * n)
    return params


def loss(produced: np.ndarray, target: np.ndarray, n_max: int) -> float:
    """(1/n_max) sum_n |A_n - A'_n|^2 after aligning the produced global phase.

    The phase is fixed at the largest-magnitude target amplitude; if the
    produced amplitude vanishes there, no alignment is possible and the raw
    difference is scored.
    """
    produced = np.asarray(produced, dtype=np.complex128)
    target = np.asarray(target, dtype=np.complex128)
    if produced.shape != target.shape:
        raise ConfigError("produced and target truncations differ")
    if produced.shape != (n_max + 1,):
        raise ConfigError(f"amplitude vectors must have length n_max+1={n_max + 1}")
    j = int(np.argmax(np.abs(target)))
    if abs(produced[j]) > 0:
        produced = produced * np.exp(
            1j * (np.angle(target[j]) - np.angle(produced[j])))
    return float(np.sum(np.abs(produced - target) ** 2) / n_max)


@dataclass(frozen=True)
class SPSASettings:
    iterations: int = 5000
    a: float = 0.15
    c: float = 0.03
    stability: float | None = None      # A in the gain schedule; default 0.1*iterations
    alpha: float = 0.602
    gamma: float = 0.101
    tolerance: float = 0.0              # stop once best_loss <= tolerance

    def gains(self, k: int) -> tuple[float, float]:
        big_a = self.stability if self.stability is not None else 0.1 * self.iterations
        return (self.a / (k + big_a) ** self.alpha, self.c / k ** self.gamma)


@dataclass
class TrainHistory:
    iterations: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    best_losses: list[float] = field(default_factory=list)
    success_probs: list[float] = field(default_factory=list)
    rejected: int = 0

    def append(self, iteration, current_loss, best_loss, success_prob):
        self.iterations.append(int(iteration))
        self.losses.append(float(current_loss))
        self.best_losses.append(float(best_loss))
        self.success_probs.append(float(success_prob))

    def to_csv(self, path) -> None:
        lines = [f"# rejected={self.rejected}", "iteration,loss,best_loss,success_prob"]
        for i, l, b, p in zip(self.iterations, self.losses, self.best_losses,
                              self.success_probs):
            lines.append(",".join([str(i), FLOAT_FMT % l, FLOAT_FMT % b,
                                   FLOAT_FMT % p]))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def train(config: PrepCircuitConfig, settings: SPSASettings | None = None):
    """SPSA minimization of the amplitude loss; returns (best_params, history).

    Deterministic for a given config.seed.  Iterations whose perturbed
    evaluations hit a zero-probability branch are rejected (no parameter
    update); if every iteration is rejected the training fails.
    """
    if config.target is None:
        raise ConfigError("training requires a target evolver spec")
    settings = settings or SPSASettings()
    rng = np.random.default_rng(config.seed)
    target = config.target.coefficients
    theta = initial_parameters(config, rng)

    def evaluate(p):
        state, prob = run_prep_circuit(config, p)
        return loss(state.amplitudes, target, config.n_max), prob

    history = TrainHistory()
    best_loss = np.inf
    best_params = theta.copy()
    accepted = 0
    for k in range(1, settings.iterations + 1):
        ak, ck = settings.gains(k)
        delta = rng.choice([-1.0, 1.0], size=theta.size)
        try:
            current_loss, prob = evaluate(theta)
            if current_loss < best_loss:
                best_loss = current_loss
                best_params = theta.copy()
            loss_plus, _ = evaluate(theta + ck * delta)
            loss_minus, _ = evaluate(theta - ck * delta)
        except ZeroProbabilityError:
            history.rejected += 1
            history.append(k, np.nan, best_loss if np.isfinite(best_loss) else np.nan,
                           0.0)
            continue
        accepted += 1
        history.append(k, current_loss, best_loss, prob)
        if best_loss <= settings.tolerance:
            break
        theta = theta - ak * (loss_plus - loss_minus) / (2.0 * ck) * delta
    if accepted == 0:
        raise TrainingFailure(
            f"all {settings.iterations} iterations hit zero-probability branches "
            f"(postselect={config.postselect})")
    return best_params, history


def save_parameters(path, config: PrepCircuitConfig, params: np.ndarray) -> None:
    payload = {
        "n_modes": config.n_modes, "layers": config.layers,
        "postselect": list(config.postselect), "n_max": config.n_max,
        "seed": config.seed,
        "parameters": [float(p) for p in np.asarray(params, dtype=float)],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_parameters(path) -> tuple[PrepCircuitConfig, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    config = PrepCircuitConfig(
        n_modes=data["n_modes"], layers=data["layers"],
        postselect=tuple(data["postselect"]), target=None, n_max=data["n_max"],
        seed=data.get("seed", 0))
    return config, np.array(data["parameters"], dtype=float)
