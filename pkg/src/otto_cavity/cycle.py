"""Otto cycle orchestration, stroke bookkeeping and efficiency."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dressed as _dressed
from .dressed import DressedGenerator, baths_from_params, live_sectors, n_thermal, symmetry_sectors, transition_rates
from .drive import DriveSchedule
from .dynamics import DressedPropagator, Ledger, LedgerSample
from .errors import FirstLawError, NoHeatInputError
from .model import BathParams, ModelParams, build_Hs
from .operators import ModeOperators, TruncationSpec
from .spectral import eig_hermitian

log = logging.getLogger(__name__)

STROKES = ("compression", "hot", "expansion", "cold")
FIRST_LAW_TOL = 1e-6


def detect_plateau(series, window: int, tol: float) -> bool:
    if window < 10:
        raise ValueError("plateau window must hold at least 10 samples")
    values = np.asarray(series, dtype=float)
    if values.size < window:
        return False
    recent = values[-window:]
    return bool(recent.max() - recent.min() < tol)


def carnot(T_c: float, T_h: float) -> float:
    return 1.0 - T_c / T_h


def efficiency(W_out: float, Q_in: float, T_c: float | None = None, T_h: float | None = None):
    """eta = W_out / Q_in; with both temperatures also returns the Carnot bound."""
    if not Q_in > 0:
        raise NoHeatInputError(f"efficiency undefined without heat input (Q_in = {Q_in:.3e})")
    eta = W_out / Q_in
    if T_c is None or T_h is None:
        return eta
    return eta, carnot(T_c, T_h)


@dataclass
class StrokeFlow:
    dU: float
    dQ: float
    dW: float


def stroke_attribution(ledger: Ledger, sched: DriveSchedule, k: int, cycle_end: float | None = None) -> dict[str, StrokeFlow]:
    out = {}
    for name, (a, b) in sched.stroke_bounds(k, cycle_end).items():
        s0, s1 = ledger.at(a), ledger.at(b)
        out[name] = StrokeFlow(dU=s1.U - s0.U, dQ=s1.Q - s0.Q, dW=s1.W - s0.W)
    return out


@dataclass
class CycleReport:
    index: int
    t_start: float
    t_end: float
    W_net: float
    W_out: float
    Q_in: float
    Q_out: float
    eta: float | None
    eta_carnot: float
    strokes: dict[str, StrokeFlow]
    N_c_end_hot: float
    N_c_end_cold: float
    cold_plateau: bool
    first_law_max: float

    @property
    def engine(self) -> bool:
        return self.W_out > 0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["engine"] = self.engine
        return d


@dataclass
class EngineRun:
    ledger: Ledger
    reports: list[CycleReport]
    schedule: DriveSchedule
    reference: LedgerSample
    transient_plateau: bool
    eigensystem: object = field(repr=False)
    dressed: object = field(repr=False)
    generator: DressedGenerator = field(repr=False)
    propagator: DressedPropagator = field(repr=False)

    @property
    def etas(self) -> list[float | None]:
        return [r.eta for r in self.reports]


@dataclass(frozen=True)
class PlateauSettings:
    """Auto-extension of the transient and cold strokes.

    Extension proceeds in chunks of `chunk` time units until the last
    `window` samples of U vary by less than `rel_tol` times the range of U
    seen in the current phase, or `max_extension` is reached.
    """

    window: int = 500
    rel_tol: float = 1e-5
    chunk: float = 50.0
    max_extension: float = 6000.0
    min_transient: float | None = None


def _settle(prop: DressedPropagator, start_index: int, settings: PlateauSettings) -> bool:
    extended = 0.0
    chunk_steps = prop.steps_for(settings.chunk)
    while True:
        U = prop.ledger.column("U")[start_index:]
        span = float(U.max() - U.min()) if U.size else 0.0
        if detect_plateau(U, settings.window, settings.rel_tol * span):
            return True
        if extended >= settings.max_extension:
            log.warning("no plateau after extending %.1f time units at t=%.6g", extended, prop.t)
            return False
        prop.advance(chunk_steps)
        extended += settings.chunk


def build_generator(model: ModelParams, baths: BathParams, spec: TruncationSpec, delta_omega: float):
    """Diagonalize H_s once and assemble the dressed generator pieces."""
    ops = ModeOperators.build(spec)
    H = build_Hs(model, spec, ops)
    es = eig_hermitian(H)
    ds = _dressed.build_dressed_operators(es, ops.positions())
    W = transition_rates(ds, baths_from_params(baths))
    numbers = ds.number_operators()
    parity_d = es.to_dressed(ops.photon_parity())
    sectors = symmetry_sectors(numbers[0], parity_d)
    return ops, es, ds, W, numbers, sectors


def run_engine(
    model: ModelParams,
    baths: BathParams,
    sched: DriveSchedule,
    spec: TruncationSpec,
    n_cycles: int = 2,
    h: float = 0.01,
    stride: int = 10,
    plateau: PlateauSettings = PlateauSettings(),
    strict_first_law: bool = True,
) -> EngineRun:
    """Transient from the bare vacuum followed by `n_cycles` Otto cycles.

    `model.omega_c` is the cavity frequency of the Hamiltonian whose
    eigenbasis defines the dressed operators for the whole run; cycle start
    times are generated here (any in `sched` are ignored).
    """
    sched = DriveSchedule(sched.omega_eff_1, sched.omega_eff_2, sched.tau, sched.dt_hot, sched.dt_cold)
    ops, es, ds, W, numbers, sectors = build_generator(model, baths, spec, sched.delta_omega)

    vacuum = np.zeros(spec.total, dtype=complex)
    vacuum[spec.index(0, 0, 0)] = 1.0
    psi_d = es.states.conj().T @ vacuum
    rho_d = np.outer(psi_d, psi_d.conj())
    live = live_sectors(sectors, W, rho_d)
    gen = DressedGenerator(es.energies, numbers[0], W, live, observables=numbers)
    prop = DressedPropagator(gen, gen.pack(rho_d), sched, h=h, stride=stride)

    min_transient = plateau.min_transient if plateau.min_transient is not None else sched.dt_cold
    prop.advance_to(min_transient)
    transient_ok = _settle(prop, 0, plateau)
    reference = prop.ledger.samples[-1]

    reports = []
    for k in range(n_cycles):
        t0 = prop.t
        start_index = len(prop.ledger) - 1
        sched = sched.with_start(t0)
        prop.sched = sched
        prop.advance_to(t0 + sched.active_duration + sched.dt_cold)
        cold_ok = _settle(prop, start_index, plateau)
        reports.append(_report(prop.ledger, sched, k, prop.t, baths, start_index))
        reports[-1].cold_plateau = cold_ok

    run = EngineRun(prop.ledger, reports, sched, reference, transient_ok, es, ds, gen, prop)
    worst = max((abs(r) for r in prop.ledger.first_law_residuals()), default=0.0)
    if strict_first_law and worst > FIRST_LAW_TOL:
        raise FirstLawError(f"first-law residual {worst:.3e} exceeds {FIRST_LAW_TOL}")
    return run


def _report(ledger: Ledger, sched: DriveSchedule, k: int, t_end: float, baths: BathParams, start_index: int) -> CycleReport:
    strokes = stroke_attribution(ledger, sched, k, t_end)
    t0 = sched.cycle_starts[k]
    W_net = ledger.at(t_end).W - ledger.at(t0).W
    W_out = -W_net
    Q_in = strokes["hot"].dQ
    Q_out = -strokes["cold"].dQ
    eta = W_out / Q_in if Q_in > 0 else None
    hot_end = sched.stroke_bounds(k, t_end)["hot"][1]
    residuals = ledger.first_law_residuals()[start_index:]
    return CycleReport(
        index=k, t_start=t0, t_end=t_end, W_net=W_net, W_out=W_out, Q_in=Q_in, Q_out=Q_out,
        eta=eta, eta_carnot=carnot(baths.T_c, baths.T_h), strokes=strokes,
        N_c_end_hot=ledger.at(hot_end).N_c, N_c_end_cold=ledger.at(t_end).N_c,
        cold_plateau=True, first_law_max=float(np.max(np.abs(residuals), initial=0.0)),
    )


def suppression(N_c: float, omega: float, T: float) -> float:
    """Fractional shortfall of N_c relative to a bare thermal mode at (omega, T)."""
    return 1.0 - N_c / n_thermal(omega, T)
