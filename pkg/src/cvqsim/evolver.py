"""Potentials, their non-Gaussian part, and evolver-state construction.

The evolver state is the ancilla resource that transfers exp(-i H1(x) dt) onto
a target mode through entangle-squeeze-measure.  With an idealized flat
(top-hat) resource of width L, its Fock amplitudes are integrals of
exp(-i H1(y/q) dt) against the oscillator eigenfunctions over [-L/2, L/2],
computed here by adaptive composite Gauss-Legendre quadrature.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import fock
from .errors import ConfigError, QuadratureError
from .fock import QumodeState

__all__ = ["Potential", "EvolverSpec", "h1_eval", "evolver_coefficients",
           "build_evolver_ket", "reconstruct_wavefunction"]

_MAX_POLY_DEGREE = 8


class Potential:
    """Analytic potential V(x), natural units.

    Supported forms: ``polynomial`` (coefficients c0..cd, degree <= 8),
    ``cosh_shifted`` (cosh(x - x0) - 1), and ``custom`` (a sympy expression in
    x, or any vectorized callable).
    """

    def __init__(self, kind: str, *, coefficients=None, x0=None, expression=None,
                 func=None):
        self.kind = kind
        self.coefficients = None if coefficients is None else tuple(float(c) for c in coefficients)
        self.x0 = None if x0 is None else float(x0)
        self.expression = expression
        if kind == "polynomial":
            if not self.coefficients:
                raise ConfigError("polynomial potential needs coefficients")
            if len(self.coefficients) - 1 > _MAX_POLY_DEGREE:
                raise ConfigError(f"polynomial degree capped at {_MAX_POLY_DEGREE}")
            self._func = lambda x: np.polynomial.polynomial.polyval(x, self.coefficients)
        elif kind == "cosh_shifted":
            if self.x0 is None:
                raise ConfigError("cosh_shifted potential needs x0")
            shift = self.x0
            self._func = lambda x: np.cosh(np.asarray(x, dtype=float) - shift) - 1.0
        elif kind == "custom":
            if func is not None:
                self._func = func
            elif expression is not None:
                self._func = _lambdify_expression(expression)
            else:
                raise ConfigError("custom potential needs an expression or callable")
            probe = self._func(np.array([0.0, 1.0, -2.5]))
            if not np.all(np.isfinite(probe)):
                raise ConfigError("custom potential is not finite at finite x")
        else:
            raise ConfigError(f"unknown potential kind {kind!r}")

    def __call__(self, x):
        return self._func(x)

    def h1(self, x):
        """Non-Gaussian part V(x) - x^2/2."""
        x = np.asarray(x, dtype=float)
        return self._func(x) - 0.5 * x**2

    # --- named forms -------------------------------------------------------

    @classmethod
    def polynomial(cls, coefficients) -> "Potential":
        return cls("polynomial", coefficients=coefficients)

    @classmethod
    def tilted_quartic(cls, eps: float) -> "Potential":
        """(1/8)(x^2-2x)^2 - (eps/8) x^3, i.e. a double well tilted by eps.

        Expanded: x^2/2 - ((1+eps/4)/2) x^3 + x^4/8.
        """
        return cls.polynomial([0.0, 0.0, 0.5, -(1.0 + eps / 4.0) / 2.0, 0.125])

    @classmethod
    def cosh_shifted(cls, x0: float = 1.0) -> "Potential":
        return cls("cosh_shifted", x0=x0)

    @classmethod
    def sho(cls) -> "Potential":
        return cls.polynomial([0.0, 0.0, 0.5])

    @classmethod
    def free(cls) -> "Potential":
        return cls.polynomial([0.0])

    @classmethod
    def from_expression(cls, expression: str) -> "Potential":
        return cls("custom", expression=expression)

    @classmethod
    def from_callable(cls, func) -> "Potential":
        return cls("custom", func=func)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.coefficients is not None:
            out["coefficients"] = list(self.coefficients)
        if self.x0 is not None:
            out["x0"] = self.x0
        if self.expression is not None:
            out["expression"] = str(self.expression)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Potential":
        return cls(data["kind"], coefficients=data.get("coefficients"),
                   x0=data.get("x0"), expression=data.get("expression"))


def _lambdify_expression(expression: str):
    import sympy

    x = sympy.symbols("x")
    expr = sympy.sympify(expression)
    extra = expr.free_symbols - {x}
    if extra:
        raise ConfigError(f"potential expression may only use x, found {extra}")
    return sympy.lambdify(x, expr, "numpy")


def h1_eval(potential: Potential, x):
    """V(x) - x^2/2 as a free function (same as ``potential.h1``)."""
    return potential.h1(x)


@dataclass
class EvolverSpec:
    """Top-hat evolver-state description: parameters plus Fock coefficients.

    ``coefficients`` are unit-norm; ``captured_norm`` records the squared norm
    of the raw (1/L-scaled) integrals, which tends to 1/L as n_max grows when
    |f| = 1.  The transferred evolution is trustworthy on
    |x| < validity_halfwidth = L/(2q).
    """

    q: float
    L: float
    delta_t: float
    n_max: int
    coefficients: np.ndarray
    captured_norm: float

    def __post_init__(self):
        if self.q <= 0 or self.L <= 0:
            raise ConfigError("q and L must be positive")
        if self.delta_t < 0:
            raise ConfigError("delta_t must be nonnegative")
        coeffs = np.asarray(self.coefficients, dtype=np.complex128)
        if coeffs.shape != (self.n_max + 1,):
            raise ConfigError(
                f"coefficient vector must have length n_max+1={self.n_max + 1}")
        self.coefficients = coeffs

    @property
    def validity_halfwidth(self) -> float:
        return self.L / (2.0 * self.q)

    def to_dict(self) -> dict:
        return {
            "q": self.q, "L": self.L, "delta_t": self.delta_t, "n_max": self.n_max,
            "captured_norm": self.captured_norm,
            "validity_halfwidth": self.validity_halfwidth,
            "coefficients": [{"re": float(c.real), "im": float(c.imag)}
                             for c in self.coefficients],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvolverSpec":
        coeffs = np.array([complex(c["re"], c["im"]) for c in data["coefficients"]])
        return cls(q=data["q"], L=data["L"], delta_t=data["delta_t"],
                   n_max=data["n_max"], coefficients=coeffs,
                   captured_norm=data["captured_norm"])

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "EvolverSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


_PANEL_ORDER = 64


@lru_cache(maxsize=8)
def _gauss_panel(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def _interval_integral(f, a: float, b: float, n_max: int, panels: int) -> np.ndarray:
    """Composite Gauss-Legendre integral of f(y) phi_n(y) over [a, b], all n <= n_max.

    Fixed-order panels; resolution is raised by subdividing, not by raising
    the order, so node generation stays cheap.
    """
    base_nodes, base_weights = _gauss_panel(_PANEL_ORDER)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    centers = 0.5 * (edges[:-1] + edges[1:])
    y = (centers[:, None] + half * base_nodes[None, :]).ravel()
    w = np.broadcast_to(half * base_weights, (panels, _PANEL_ORDER)).ravel()
    acc = np.zeros(n_max + 1, dtype=np.complex128)
    chunk = 65536
    for lo in range(0, y.size, chunk):
        ys, ws = y[lo:lo + chunk], w[lo:lo + chunk]
        acc += fock.hermite_table(n_max, ys) @ (ws * f(ys))
    return acc


def evolver_coefficients(potential: Potential, delta_t: float, q: float = 0.25,
                         L: float = 10.0, n_max: int = 60, tol: float = 1e-10,
                         base_nodes: int = 64, max_doublings: int = 14) -> EvolverSpec:
    """Fock amplitudes of the top-hat evolver state.

    A_n = (1/L) * integral_{-L/2}^{L/2} exp(-i H1(y/q) dt) phi_n(y) dy,
    evaluated per unit subinterval with node doubling until successive results
    differ by less than ``tol`` per coefficient; the final vector is
    renormalized.
    """
    if q <= 0 or L <= 0:
        raise ConfigError("q and L must be positive")
    if delta_t < 0:
        raise ConfigError("delta_t must be nonnegative")

    def f(y):
        return np.exp(-1j * delta_t * potential.h1(y / q))

    n_sub = max(1, int(np.ceil(L)))
    edges = np.linspace(-L / 2.0, L / 2.0, n_sub + 1)
    local_tol = 0.5 * tol / n_sub
    total = np.zeros(n_max + 1, dtype=np.complex128)
    for a, b in zip(edges[:-1], edges[1:]):
        panels = max(1, base_nodes // _PANEL_ORDER)
        prev = _interval_integral(f, a, b, n_max, panels)
        for _ in range(max_doublings):
            panels *= 2
            cur = _interval_integral(f, a, b, n_max, panels)
            diff = float(np.max(np.abs(cur - prev)))
            prev = cur
            if diff < local_tol:
                break
        else:
            raise QuadratureError(
                "evolver coefficient quadrature did not converge",
                diagnostics={"interval": (a, b), "panels": panels, "last_diff": diff,
                             "tol": local_tol})
        total += prev
    raw = total / L
    captured = float(np.sum(np.abs(raw) ** 2))
    if captured == 0.0:
        raise QuadratureError("evolver integrals vanished identically",
                              diagnostics={"L": L, "q": q})
    coeffs = raw / np.sqrt(captured)
    return EvolverSpec(q=q, L=L, delta_t=delta_t, n_max=n_max,
                       coefficients=coeffs, captured_norm=captured)


def build_evolver_ket(spec: EvolverSpec) -> QumodeState:
    """Single-mode state carrying the evolver amplitudes (unit norm)."""
    return QumodeState(spec.coefficients.copy())


def reconstruct_wavefunction(coefficients: np.ndarray, y: np.ndarray) -> np.ndarray:
    """sum_n A_n phi_n(y) on the given points."""
    coefficients = np.asarray(coefficients, dtype=np.complex128)
    table = fock.hermite_table(coefficients.size - 1, np.asarray(y, dtype=float))
    return coefficients @ table.astype(np.complex128)
