"""Truncated bosonic operators on the cavity (x) wall1 (x) wall2 product space."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidDimensionError

HERMITIAN_TOL = 1e-12


class Slot(str, Enum):
    CAVITY = "cavity"
    WALL1 = "wall1"
    WALL2 = "wall2"


_SLOT_ORDER = (Slot.CAVITY, Slot.WALL1, Slot.WALL2)


@dataclass(frozen=True)
class TruncationSpec:
    """Fock cutoffs: mode k keeps levels 0..d_k-1."""

    d_c: int = 8
    d_1: int = 5
    d_2: int = 5

    def __post_init__(self):
        for name in ("d_c", "d_1", "d_2"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise InvalidDimensionError(f"{name} must be an integer, got {value!r}")
            if value < 2:
                raise InvalidDimensionError(f"{name} must be >= 2, got {value}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.d_c, self.d_1, self.d_2)

    @property
    def total(self) -> int:
        return self.d_c * self.d_1 * self.d_2

    def dim_of(self, slot) -> int:
        return self.dims[_SLOT_ORDER.index(Slot(slot))]

    def index(self, l: int, m: int, n: int) -> int:
        """Flat index of the Fock product state |l, m, n>."""
        return (l * self.d_1 + m) * self.d_2 + n

    def labels(self) -> np.ndarray:
        """(D, 3) array of occupation numbers (l, m, n) in flat-index order."""
        grid = np.indices(self.dims).reshape(3, -1).T
        return grid


def destroy(d: int) -> np.ndarray:
    if d < 2:
        raise InvalidDimensionError(f"Fock dimension must be >= 2, got {d}")
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def embed(op: np.ndarray, slot, spec: TruncationSpec) -> np.ndarray:
    """Lift a single-mode operator into the three-mode space."""
    slot = Slot(slot)
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1] or op.shape[0] != spec.dim_of(slot):
        raise InvalidDimensionError(
            f"operator of shape {op.shape} does not fit slot {slot.value} "
            f"of dimension {spec.dim_of(slot)}"
        )
    factors = [op if s is slot else identity(d) for s, d in zip(_SLOT_ORDER, spec.dims)]
    return np.kron(np.kron(factors[0], factors[1]), factors[2])


def position_sum(op: np.ndarray) -> np.ndarray:
    """op + op^dagger; for a lowering operator this is the bare quadrature a + a^dagger."""
    op = np.asarray(op)
    return op + op.conj().T


def is_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        return False
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= tol)


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


@dataclass(frozen=True)
class ModeOperators:
    """Lowering operators of the three modes on the full space."""

    a: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    @classmethod
    def build(cls, spec: TruncationSpec) -> "ModeOperators":
        return cls(
            a=embed(destroy(spec.d_c), Slot.CAVITY, spec),
            b1=embed(destroy(spec.d_1), Slot.WALL1, spec),
            b2=embed(destroy(spec.d_2), Slot.WALL2, spec),
        )

    def positions(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return position_sum(self.a), position_sum(self.b1), position_sum(self.b2)

    def photon_parity(self) -> np.ndarray:
        """(-1)^(a^dagger a), conserved by the system Hamiltonian."""
        n = np.real(np.diag(self.a.conj().T @ self.a))
        return np.diag(np.where(np.rint(n).astype(int) % 2 == 0, 1.0, -1.0)).astype(complex)
