"""Physical parameters and the nonlinear two-wall cavity Hamiltonian.

Units: hbar = c = k_B = 1, frequencies, energies and temperatures in units of
the bare cavity frequency at the first resonance.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractViolationError
from .operators import ModeOperators, TruncationSpec


@dataclass(frozen=True)
class ModelParams:
    omega_1: float = 2.0
    omega_2: float = 2.6
    omega_c: float = 1.0
    g_1: float = 0.05
    g_2: float = 0.05

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ContractViolationError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        for name in ("omega_1", "omega_2", "omega_c"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be > 0")
        if not self.omega_1 < self.omega_2:
            out.append("omega_1 must be < omega_2 (wall 1 is the low-frequency, cold wall)")
        for name in ("g_1", "g_2"):
            g = getattr(self, name)
            if not g >= 0:
                out.append(f"{name} must be >= 0")
            elif self.omega_1 > 0 and g > 0.5 * self.omega_1:
                out.append(f"{name} must be <= 0.5 * omega_1")
        return out

    def with_cavity(self, omega_c: float) -> "ModelParams":
        return replace(self, omega_c=float(omega_c))


@dataclass(frozen=True)
class BathParams:
    gamma_1: float = 0.01
    gamma_2: float = 0.01
    kappa: float = 1e-6
    T_c: float = 0.15
    T_h: float = 0.40
    T_0: float = 1e-7

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ContractViolationError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        for name in ("gamma_1", "gamma_2", "kappa"):
            if not getattr(self, name) >= 0:
                out.append(f"{name} must be >= 0")
        for name in ("T_c", "T_h", "T_0"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be > 0")
        if not self.T_c <= self.T_h:
            out.append("T_c must not exceed T_h")
        return out

    @property
    def carnot(self) -> float:
        return 1.0 - self.T_c / self.T_h


def build_H0(params: ModelParams, spec: TruncationSpec) -> np.ndarray:
    labels = spec.labels()
    freqs = np.array([params.omega_c, params.omega_1, params.omega_2])
    return np.diag(labels @ freqs).astype(complex)


def build_HI(params: ModelParams, spec: TruncationSpec, ops: ModeOperators | None = None) -> np.ndarray:
    ops = ops or ModeOperators.build(spec)
    xa, xb1, xb2 = ops.positions()
    xa2 = xa @ xa  # shared by both walls so g_1 <-> g_2 stays exactly symmetric
    h = 0.5 * params.g_1 * (xa2 @ xb1) + 0.5 * params.g_2 * (xa2 @ xb2)
    # the factors act on different modes and commute; symmetrize away roundoff
    return 0.5 * (h + h.conj().T)


def build_Hs(params: ModelParams, spec: TruncationSpec, ops: ModeOperators | None = None) -> np.ndarray:
    return build_H0(params, spec) + build_HI(params, spec, ops)


def total_number(spec: TruncationSpec, ops: ModeOperators | None = None) -> np.ndarray:
    ops = ops or ModeOperators.build(spec)
    return sum(x.conj().T @ x for x in (ops.a, ops.b1, ops.b2))
