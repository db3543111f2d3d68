"""Diagonalization, spectrum scans and avoided-crossing location."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractViolationError, InvalidArgumentError, NoCrossingError
from .model import ModelParams, build_Hs
from .operators import ModeOperators, TruncationSpec, is_hermitian


@dataclass(frozen=True)
class EigenSystem:
    energies: np.ndarray
    states: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.energies)

    def to_dressed(self, op: np.ndarray) -> np.ndarray:
        """Matrix elements <i|op|j> in the eigenbasis."""
        return self.states.conj().T @ op @ self.states

    def from_dressed(self, op: np.ndarray) -> np.ndarray:
        return self.states @ op @ self.states.conj().T


def eig_hermitian(H: np.ndarray, tol: float = 1e-12) -> EigenSystem:
    H = np.asarray(H)
    scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
    if not is_hermitian(H, tol * scale):
        raise ContractViolationError("eig_hermitian requires a Hermitian matrix")
    if np.iscomplexobj(H) and not np.any(H.imag):
        H = H.real  # real symmetric: keep a real orthogonal eigenbasis
    energies, states = np.linalg.eigh(H)
    return EigenSystem(energies=energies, states=states)


@dataclass(frozen=True)
class SpectrumScan:
    omega_grid: np.ndarray
    energies: np.ndarray  # (len(grid), n_levels)

    def to_csv(self, path, comment: str | None = None) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            if comment is not None:
                fh.write(f"# {comment}\n")
            writer = csv.writer(fh)
            writer.writerow(["omega_c"] + [f"E_{k}" for k in range(self.energies.shape[1])])
            for w, row in zip(self.omega_grid, self.energies):
                writer.writerow([repr(float(w))] + [repr(float(e)) for e in row])


def scan_spectrum(
    params_base: ModelParams,
    omega_grid,
    spec: TruncationSpec,
    n_levels: int = 10,
) -> SpectrumScan:
    grid = np.asarray(omega_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidArgumentError("omega grid must be a non-empty 1-D sequence")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError("omega grid must be positive and strictly increasing")
    if not 1 <= n_levels <= spec.total:
        raise InvalidArgumentError(f"n_levels must be in [1, {spec.total}]")
    ops = ModeOperators.build(spec)
    out = np.empty((grid.size, n_levels))
    for k, w in enumerate(grid):
        H = build_Hs(params_base.with_cavity(w), spec, ops)
        out[k] = np.linalg.eigvalsh(H)[:n_levels]
    return SpectrumScan(omega_grid=grid, energies=out)


@dataclass(frozen=True)
class CrossingReport:
    omega_eff: float
    gap: float
    level_pair: tuple[int, int]
    scan_range: tuple[float, float]

    def as_dict(self) -> dict:
        return {
            "omega_eff": self.omega_eff,
            "gap": self.gap,
            "level_pair": list(self.level_pair),
            "scan_range": list(self.scan_range),
        }


def find_avoided_crossing(scan: SpectrumScan, level_pair: tuple[int, int]) -> CrossingReport:
    i, j = level_pair
    if j != i + 1:
        raise InvalidArgumentError("level pair must be adjacent (j = i + 1)")
    grid = scan.omega_grid
    if grid.size < 3:
        raise InvalidArgumentError("crossing search needs at least 3 grid points")
    if j >= scan.energies.shape[1]:
        raise InvalidArgumentError(f"scan holds only {scan.energies.shape[1]} levels")
    gap = scan.energies[:, j] - scan.energies[:, i]
    k = int(np.argmin(gap))
    if k == 0 or k == grid.size - 1:
        raise NoCrossingError(f"gap of levels {level_pair} has no interior minimum in the scan")
    x = grid[k - 1 : k + 2]
    y = gap[k - 1 : k + 2]
    a, b, c = np.polyfit(x - x[1], y, 2)
    if a > 0:
        shift = float(np.clip(-b / (2 * a), x[0] - x[1], x[2] - x[1]))
        omega = x[1] + shift
        g_min = float(c + b * shift + a * shift**2)
    else:
        omega, g_min = float(x[1]), float(y[1])
    if not g_min > 0:
        # parabola overshoots on a V-shaped (true) crossing
        g_min = float(y[1])
    return CrossingReport(
        omega_eff=float(omega),
        gap=g_min,
        level_pair=(i, j),
        scan_range=(float(grid[0]), float(grid[-1])),
    )


def interior_minima(scan: SpectrumScan) -> list[CrossingReport]:
    """Every adjacent level pair whose gap has an interior minimum."""
    found = []
    for i in range(scan.energies.shape[1] - 1):
        try:
            found.append(find_avoided_crossing(scan, (i, i + 1)))
        except NoCrossingError:
            continue
    return found


def locate_resonance(scan: SpectrumScan, target: float, window: float = 0.05) -> CrossingReport:
    """Lowest level pair whose gap minimum lies within `window` of `target`.

    `target` is the bare resonance omega_j / 2.
    """
    candidates = [r for r in interior_minima(scan) if abs(r.omega_eff - target) <= window]
    if not candidates:
        raise NoCrossingError(
            f"no avoided crossing within {window} of omega_c = {target:.4g} "
            f"in the scanned range [{scan.omega_grid[0]:.4g}, {scan.omega_grid[-1]:.4g}]"
        )
    return min(candidates, key=lambda r: r.level_pair[0])


def transition_amplitudes(es: EigenSystem, X: np.ndarray) -> np.ndarray:
    """t[i, j] = <i|X|j> between eigenstates of the diagonalized Hamiltonian."""
    if not is_hermitian(X, 1e-10):
        raise ContractViolationError("transition amplitudes need a Hermitian position operator")
    t = es.to_dressed(X)
    return 0.5 * (t + t.conj().T)
