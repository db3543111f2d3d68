"""Fixed-step RK4 propagation and the thermodynamic ledger."""
from __future__ import annotations

import bisect
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .dressed import DressedGenerator
from .drive import DriveSchedule, f as drive_f, f_dot as drive_f_dot
from .errors import DivergenceError

log = logging.getLogger(__name__)

TRACE_RENORM_TOL = 1e-9


@dataclass
class DensityState:
    rho: np.ndarray
    t: float = 0.0

    @classmethod
    def pure(cls, psi, t: float = 0.0) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()), t)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T), initial=0.0))

    def trace_error(self) -> float:
        return float(abs(np.trace(self.rho) - 1.0))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))[0])

    def is_valid(self) -> bool:
        return (
            self.hermiticity_error() < 1e-10
            and self.trace_error() < 1e-9
            and self.min_eigenvalue() >= -1e-8
        )


def rk4_step(fun: Callable, t: float, y: Sequence[np.ndarray], h: float) -> list[np.ndarray]:
    """Classical RK4 on a list of arrays; fun(t, y) returns a list like y."""
    k1 = fun(t, y)
    k2 = fun(t + 0.5 * h, [a + 0.5 * h * k for a, k in zip(y, k1)])
    k3 = fun(t + 0.5 * h, [a + 0.5 * h * k for a, k in zip(y, k2)])
    k4 = fun(t + h, [a + h * k for a, k in zip(y, k3)])
    return [a + (h / 6.0) * (p + 2.0 * q + 2.0 * r + s) for a, p, q, r, s in zip(y, k1, k2, k3, k4)]


def step_rk4(state: DensityState, h: float, generator: Callable[[float, np.ndarray], np.ndarray]) -> DensityState:
    if not h > 0:
        raise ValueError("step size must be positive")
    (rho,) = rk4_step(lambda t, y: [generator(t, y[0])], state.t, [state.rho], h)
    t_new = state.t + h
    if not np.all(np.isfinite(rho)):
        raise DivergenceError(t_new)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_RENORM_TOL:
        log.warning("trace drift %.3e at t=%.6g; renormalizing", tr - 1.0, t_new)
        rho = rho / tr
    return DensityState(rho, t_new)


def internal_energy(state: DensityState, H_total: np.ndarray) -> float:
    return float(np.real(np.trace(H_total @ state.rho)))


def power(state: DensityState, sched: DriveSchedule, A: np.ndarray) -> float:
    """f'(t) * delta_omega * Tr[rho A^dag A]."""
    fd = drive_f_dot(state.t, sched)
    if fd == 0.0:
        return 0.0
    return fd * sched.delta_omega * float(np.real(np.trace(A.conj().T @ A @ state.rho)))


LEDGER_COLUMNS = ("t", "U", "W", "Q", "P", "N_c", "N_w1", "N_w2", "f")


@dataclass
class LedgerSample:
    t: float
    U: float
    W: float
    Q: float
    P: float
    N_c: float
    N_w1: float
    N_w2: float
    f: float
    Q_direct: float = 0.0
    trace_error: float = 0.0
    hermiticity_error: float = 0.0
    positive: bool = True

    @property
    def first_law_residual(self) -> float:
        return self.Q - self.Q_direct


@dataclass
class Ledger:
    """Time series of thermodynamic samples.

    W is the trapezoidal integral of the power over every integrator step,
    Q = (U - U(0)) - W, and Q_direct integrates Tr[H L_D rho] independently.
    """

    samples: list[LedgerSample] = field(default_factory=list)
    U0: float | None = None
    min_eigenvalues: list[tuple[float, float]] = field(default_factory=list)
    renormalizations: int = 0

    def __len__(self) -> int:
        return len(self.samples)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def first_law_residuals(self) -> np.ndarray:
        return np.array([s.first_law_residual for s in self.samples])

    def index_at(self, t: float, tol: float = 1e-9) -> int:
        times = self.t
        k = int(np.searchsorted(times, t - tol))
        if k >= len(times) or abs(times[k] - t) > max(tol, 1e-9 * abs(t)):
            raise KeyError(f"no ledger sample at t={t}")
        return k

    def at(self, t: float) -> LedgerSample:
        return self.samples[self.index_at(t)]

    def write_csv(self, path, reference: LedgerSample | None = None, comment: str | None = None) -> None:
        """Columns t, U, W, Q, P, N_c, N_w1, N_w2, f; U, W, Q relative to `reference`.

        `comment`, if given, is written first as a '#'-prefixed line.
        """
        ref = reference or (self.samples[0] if self.samples else None)
        with Path(path).open("w", newline="") as fh:
            if comment is not None:
                fh.write(f"# {comment}\n")
            writer = csv.writer(fh)
            writer.writerow(LEDGER_COLUMNS)
            for s in self.samples:
                row = [
                    s.t, s.U - ref.U, s.W - ref.W, s.Q - ref.Q, s.P,
                    s.N_c, s.N_w1, s.N_w2, s.f,
                ]
                writer.writerow([repr(float(x)) for x in row])


def accumulate(ledger: Ledger, sample: LedgerSample) -> Ledger:
    if ledger.U0 is None:
        ledger.U0 = sample.U
    ledger.samples.append(sample)
    return ledger


class DressedPropagator:
    """Sequential integrator for the driven dressed master equation.

    The drive amplitude at time t is f(t) * delta_omega taken from `sched`,
    which the caller may extend with new cycle starts while integrating.
    Where the drive vanishes identically the generator is autonomous and
    populations decouple from coherences, so `stride` RK4 steps are applied
    at once through the precomputed RK4 amplification polynomial; this is
    the same map as stepping one at a time, up to roundoff.
    """

    def __init__(self, gen: DressedGenerator, blocks, sched: DriveSchedule, h: float = 0.01,
                 stride: int = 10, ledger: Ledger | None = None, check_stride: int = 100):
        if not h > 0:
            raise ValueError("step size must be positive")
        self.gen = gen
        self.blocks = np.array(blocks, dtype=complex)
        self.sched = sched
        self.h = float(h)
        self.stride = int(stride)
        self.check_stride = int(check_stride)
        self.step_count = 0
        self.W = 0.0
        self.Q_direct = 0.0
        self.ledger = ledger if ledger is not None else Ledger()
        self._power = 0.0
        self._heat_rate = 0.0
        self._idle_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._pops = np.empty(gen.shape[0] * gen.shape[1])
        self._record(force_check=True)

    @property
    def t(self) -> float:
        return self.step_count * self.h

    def steps_for(self, duration: float) -> int:
        n = duration / self.h
        k = int(round(n))
        if abs(n - k) > 1e-6:
            raise ValueError(f"duration {duration} is not a multiple of the step {self.h}")
        return k

    def drive(self, t: float) -> float:
        return drive_f(t, self.sched) * self.sched.delta_omega

    def _heat(self, drive: float) -> float:
        g = self.gen
        return _kernels.heat_rate(
            g.energies_packed, g.out_packed, g.decay, g.W_packed, g.M_t, g.M_diag_packed,
            drive, self.blocks, self._pops,
        )

    def _record(self, force_check: bool = False) -> None:
        t = self.t
        blocks = self.blocks
        if not np.all(np.isfinite(blocks)):
            raise DivergenceError(t)
        tr = float(np.real(np.trace(blocks, axis1=1, axis2=2).sum()))
        trace_error = abs(tr - 1.0)
        if trace_error > TRACE_RENORM_TOL:
            log.warning("trace drift %.3e at t=%.6g; renormalizing", tr - 1.0, t)
            blocks /= tr
            self.ledger.renormalizations += 1
        herm = float(np.max(np.abs(blocks - np.conj(np.transpose(blocks, (0, 2, 1))))))
        positive = True
        shift = 1e-8 * np.eye(blocks.shape[1])
        for b in blocks:
            try:
                np.linalg.cholesky(b + shift)
            except np.linalg.LinAlgError:
                positive = False
        if force_check or len(self.ledger) % self.check_stride == 0 or not positive:
            lam = min(np.linalg.eigvalsh(0.5 * (b + b.conj().T))[0] for b in blocks)
            self.ledger.min_eigenvalues.append((t, float(lam)))
        fv = drive_f(t, self.sched)
        drive = fv * self.sched.delta_omega
        n_c = self.gen.expect(0, blocks)
        U = self.gen.bare_energy(blocks) + drive * n_c
        P = drive_f_dot(t, self.sched) * self.sched.delta_omega * n_c
        self._power = P
        self._heat_rate = self._heat(drive)
        U0 = self.ledger.U0 if self.ledger.U0 is not None else U
        sample = LedgerSample(
            t=t, U=U, W=self.W, Q=(U - U0) - self.W, P=P,
            N_c=n_c, N_w1=self.gen.expect(1, blocks), N_w2=self.gen.expect(2, blocks),
            f=fv, Q_direct=self.Q_direct, trace_error=trace_error,
            hermiticity_error=herm, positive=positive,
        )
        accumulate(self.ledger, sample)

    def _idle_propagator(self, n: int):
        """RK4 amplification over n steps of the drive-free generator.

        Returns (population map, coherence factors, heat weights); the heat
        weights give the per-step trapezoid of the heat current over the n
        steps as a linear functional of the initial populations.
        """
        if n not in self._idle_cache:
            g = self.gen
            R = g.W_packed - np.diag(g.out_packed)
            Z = self.h * R
            Z2 = Z @ Z
            one_step = np.eye(len(R)) + Z + Z2 / 2 + Z2 @ Z / 6 + Z2 @ Z2 / 24
            z = self.h * g.elementwise
            coh = (1 + z + z * z / 2 + z**3 / 6 + z**4 / 24) ** n
            # without drive the heat current is E^T R p
            rate = g.energies_packed @ R
            weights = 0.5 * rate
            row = rate
            for k in range(1, n + 1):
                row = row @ one_step
                weights = weights + (0.5 if k == n else 1.0) * row
            self._idle_cache[n] = (np.linalg.matrix_power(one_step, n), coh, self.h * weights)
        return self._idle_cache[n]

    def _advance_idle(self, n: int) -> None:
        pops_prop, coh, heat_weights = self._idle_propagator(n)
        nb, m, _ = self.gen.shape
        p0 = self.gen.populations(self.blocks)
        p = (pops_prop @ p0).reshape(nb, m)
        self.blocks = coh * self.blocks
        idx = np.arange(m)
        self.blocks[:, idx, idx] = p
        self.step_count += n
        self.Q_direct += float(heat_weights @ p0)
        self._heat_rate = self._heat(0.0)

    def _advance_driven(self, n: int) -> None:
        h = self.h
        t0 = self.t
        sched = self.sched
        times = t0 + h * np.arange(n)
        drives = np.empty(3 * n)
        fdots = np.empty(n)
        dw = sched.delta_omega
        for s, t in enumerate(times):
            drives[3 * s] = drive_f(t, sched) * dw
            drives[3 * s + 1] = drive_f(t + 0.5 * h, sched) * dw
            drives[3 * s + 2] = drive_f(t + h, sched) * dw
            fdots[s] = drive_f_dot(t + h, sched)
        g = self.gen
        dW, dQ, self._power, self._heat_rate = _kernels.rk4_run(
            self.blocks, h, drives, fdots, g.elementwise, g.M_re, g.M_c, g.M_t, g.M_diag_packed,
            g.W_packed, g.real_M, g.energies_packed, g.out_packed, g.decay, dw,
            self._power, self._heat_rate,
        )
        self.W += dW
        self.Q_direct += dQ
        self.step_count += n

    def _is_idle(self, t0: float, t1: float) -> bool:
        """True when f vanishes on the whole closed interval [t0, t1]."""
        sched = self.sched
        starts = sched.cycle_starts
        k = bisect.bisect_right(starts, t0) - 1
        if k >= 0 and t0 - starts[k] < sched.active_duration - 1e-12:
            return False
        nxt = starts[k + 1] if k + 1 < len(starts) else np.inf
        return t1 <= nxt + 1e-12

    def advance(self, n_steps: int) -> None:
        """Integrate n_steps, sampling every `stride` steps and at the end."""
        remaining = int(n_steps)
        while remaining > 0:
            n = min(remaining, self.stride - (self.step_count % self.stride))
            t0 = self.t
            if self._is_idle(t0, t0 + n * self.h):
                self._advance_idle(n)
            else:
                self._advance_driven(n)
            remaining -= n
            if self.step_count % self.stride == 0 or remaining == 0:
                self._record()

    def advance_to(self, t_end: float) -> None:
        self.advance(self.steps_for(t_end - self.t))

    def density_matrix(self) -> np.ndarray:
        """Current state in the energy-ordered eigenbasis."""
        return self.gen.unpack(self.blocks)
