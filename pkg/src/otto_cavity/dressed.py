"""Dressed-picture Lindblad generator for the three baths.

The jump operators are the eigenbasis transitions |i><j| weighted by the
position-operator amplitudes of the bath's subsystem.  Because every jump
operator is a single eigenbasis projector, the dissipator splits into a
population rate equation plus pure decay of coherences; `DressedGenerator`
exploits that split, `apply_liouvillian` is the reference implementation in
the Fock basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidGapError
from .model import BathParams
from .operators import ModeOperators
from .spectral import EigenSystem, transition_amplitudes

DEGENERACY_TOL = 1e-9
AMPLITUDE_CUTOFF = 1e-12  # on |x_ij|^2


class Channel(str, Enum):
    CAVITY = "cavity"
    WALL1 = "wall1"
    WALL2 = "wall2"


@dataclass(frozen=True)
class BathSpec:
    rate: float
    temperature: float
    channel: Channel

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("bath rate must be >= 0")
        if not self.temperature > 0:
            raise ValueError("bath temperature must be > 0")


def baths_from_params(bp: BathParams) -> tuple[BathSpec, BathSpec, BathSpec]:
    return (
        BathSpec(bp.kappa, bp.T_0, Channel.CAVITY),
        BathSpec(bp.gamma_1, bp.T_c, Channel.WALL1),
        BathSpec(bp.gamma_2, bp.T_h, Channel.WALL2),
    )


def n_thermal(delta_E, T):
    """Bose-Einstein occupation 1 / (exp(delta_E / T) - 1)."""
    delta_E = np.asarray(delta_E, dtype=float)
    if np.any(delta_E <= 0):
        raise InvalidGapError("thermal occupation needs a positive energy gap")
    if not T > 0:
        raise InvalidGapError("thermal occupation needs a positive temperature")
    with np.errstate(over="ignore"):
        n = 1.0 / np.expm1(delta_E / T)
    return float(n) if n.ndim == 0 else n


@dataclass(frozen=True)
class DressedSet:
    """Dressed lowering operators (Fock basis) and their eigenbasis tables.

    `c`, `u`, `v` are the full Hermitian tables <i|X|j>; the lowering
    operators keep only the entries with E_i < E_j, so in the energy-ordered
    eigenbasis they are strictly upper triangular.
    """

    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    c: np.ndarray
    u: np.ndarray
    v: np.ndarray
    energies: np.ndarray
    states: np.ndarray
    A_d: np.ndarray = field(repr=False)
    B1_d: np.ndarray = field(repr=False)
    B2_d: np.ndarray = field(repr=False)

    def table(self, channel: Channel) -> np.ndarray:
        return {Channel.CAVITY: self.c, Channel.WALL1: self.u, Channel.WALL2: self.v}[Channel(channel)]

    def to_dressed(self, op: np.ndarray) -> np.ndarray:
        return self.states.conj().T @ op @ self.states

    def from_dressed(self, op: np.ndarray) -> np.ndarray:
        return self.states @ op @ self.states.conj().T

    def number_operators(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """A^dag A, B1^dag B1, B2^dag B2 in the eigenbasis."""
        return tuple(x.conj().T @ x for x in (self.A_d, self.B1_d, self.B2_d))


def lowering_mask(energies: np.ndarray) -> np.ndarray:
    """mask[i, j] true when |j> -> |i> lowers the energy by more than the degeneracy tolerance."""
    e = np.asarray(energies)
    return (e[None, :] - e[:, None]) > DEGENERACY_TOL


def build_dressed_operators(es: EigenSystem, position_ops) -> DressedSet:
    xa, xb1, xb2 = position_ops
    mask = lowering_mask(es.energies)
    tables = [transition_amplitudes(es, x) for x in (xa, xb1, xb2)]
    lowered = [np.where(mask, t, 0.0) for t in tables]
    fock = [es.from_dressed(x) for x in lowered]
    return DressedSet(
        A=fock[0], B1=fock[1], B2=fock[2],
        c=tables[0], u=tables[1], v=tables[2],
        energies=es.energies.copy(), states=es.states,
        A_d=lowered[0], B1_d=lowered[1], B2_d=lowered[2],
    )


def dressed_set_for(es: EigenSystem, ops: ModeOperators) -> DressedSet:
    return build_dressed_operators(es, ops.positions())


def dissipator(P: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """D[P]rho = P rho P^dag - (P^dag P rho + rho P^dag P) / 2."""
    Pd = P.conj().T
    PdP = Pd @ P
    return P @ rho @ Pd - 0.5 * (PdP @ rho + rho @ PdP)


def transition_rates(ds: DressedSet, baths) -> np.ndarray:
    """W[a, b]: total rate of the jump |b> -> |a> in the eigenbasis, summed over baths."""
    e = ds.energies
    mask = lowering_mask(e)
    gaps = e[None, :] - e[:, None]  # gaps[i, j] = E_j - E_i
    W = np.zeros((len(e), len(e)))
    for bath in baths:
        if bath.rate == 0:
            continue
        weight = np.abs(ds.table(bath.channel)) ** 2
        active = mask & (weight >= AMPLITUDE_CUTOFF)
        if not active.any():
            continue
        n = np.zeros_like(gaps)
        n[active] = n_thermal(gaps[active], bath.temperature)
        base = bath.rate * np.where(active, weight, 0.0)
        W += base * (1.0 + n)  # emission j -> i, i lower
        W += (base * n).T  # absorption i -> j
    return W


def _apply_dissipator_dressed(W: np.ndarray, rho_d: np.ndarray) -> np.ndarray:
    out_rate = W.sum(axis=0)
    out = -0.5 * (out_rate[:, None] + out_rate[None, :]) * rho_d
    out[np.diag_indices_from(out)] += W @ np.real(np.diag(rho_d))
    return out


def apply_liouvillian(H: np.ndarray, baths, ds: DressedSet, rho: np.ndarray, W: np.ndarray | None = None) -> np.ndarray:
    """d rho / dt in the Fock basis for the instantaneous Hamiltonian `H`."""
    if W is None:
        W = transition_rates(ds, baths)
    drho = -1j * (H @ rho - rho @ H)
    if np.any(W):
        rho_d = ds.to_dressed(rho)
        drho = drho + ds.from_dressed(_apply_dissipator_dressed(W, rho_d))
    return drho


def liouvillian_by_terms(H: np.ndarray, baths, ds: DressedSet, rho: np.ndarray) -> np.ndarray:
    """Literal sum of dissipator terms over all transition projectors.

    O(D^5); used as an oracle for `apply_liouvillian` on small spaces.
    """
    e = ds.energies
    S = ds.states
    drho = -1j * (H @ rho - rho @ H)
    mask = lowering_mask(e)
    for bath in baths:
        if bath.rate == 0:
            continue
        x = ds.table(bath.channel)
        for i, j in zip(*np.nonzero(mask)):
            w = abs(x[i, j]) ** 2
            if w < AMPLITUDE_CUTOFF:
                continue
            n = n_thermal(e[j] - e[i], bath.temperature)
            down = np.outer(S[:, i], S[:, j].conj())  # |i><j|, i lower
            drho = drho + bath.rate * w * (
                n * dissipator(down.conj().T, rho) + (1.0 + n) * dissipator(down, rho)
            )
    return drho


class DressedGenerator:
    """Liouvillian for H(t) = diag(E) + drive(t) * M in the eigenbasis.

    The state is a stack of diagonal blocks of rho, one per symmetry sector
    of M (photon parity for this model), padded to a common size.  The
    Hamiltonian never couples sectors and the dissipator only moves
    population between them, so coherences between sectors stay exactly
    zero if they start so.
    """

    def __init__(self, energies, M, W, sectors, observables=()):
        self.energies = np.asarray(energies, dtype=float)
        self.W = np.asarray(W, dtype=float)
        self.out_rate = self.W.sum(axis=0)
        self.sectors = [np.asarray(s, dtype=int) for s in sectors]
        nb = len(self.sectors)
        n = max(len(s) for s in self.sectors)
        self.shape = (nb, n, n)
        # flat slot b * n + k -> eigenbasis index, -1 for padding
        slots = -np.ones(nb * n, dtype=int)
        for b, s in enumerate(self.sectors):
            slots[b * n:b * n + len(s)] = s
        self.slots = slots
        real = slots >= 0
        self._real_slots = real

        def spread(vec):
            out = np.zeros(nb * n)
            out[real] = np.asarray(vec)[slots[real]]
            return out

        self.energies_packed = spread(self.energies)
        self.out_packed = spread(self.out_rate)
        self.W_packed = np.zeros((nb * n, nb * n))
        self.W_packed[np.ix_(real, real)] = self.W[np.ix_(slots[real], slots[real])]

        e = self.energies_packed.reshape(nb, n)
        g = self.out_packed.reshape(nb, n)
        self.coherent = -1j * (e[:, :, None] - e[:, None, :])
        self.decay = -0.5 * (g[:, :, None] + g[:, None, :])
        self.elementwise = self.coherent + self.decay
        self.real_M = not np.iscomplexobj(M) or not np.any(np.imag(M))
        self.M = self.stack(np.real(M) if self.real_M else np.asarray(M, dtype=complex))
        # both dtypes are handed to the compiled kernel, which picks by real_M
        self.M_re = np.ascontiguousarray(np.real(self.M))
        self.M_c = np.ascontiguousarray(self.M, dtype=complex)
        self.M_t = np.ascontiguousarray(np.transpose(self.M, (0, 2, 1))).astype(complex)
        self.M_diag_packed = np.real(np.diagonal(self.M, axis1=1, axis2=2)).reshape(-1).copy()
        self.observables = [self.stack(op).transpose(0, 2, 1).astype(complex).copy() for op in observables]

    # packing -----------------------------------------------------------
    def stack(self, op: np.ndarray) -> np.ndarray:
        """Diagonal blocks of an eigenbasis matrix, padded with zeros."""
        op = np.asarray(op)
        out = np.zeros(self.shape, dtype=op.dtype)
        for b, s in enumerate(self.sectors):
            out[b, :len(s), :len(s)] = op[np.ix_(s, s)]
        return out

    def pack(self, rho_d: np.ndarray) -> np.ndarray:
        return self.stack(np.asarray(rho_d, dtype=complex))

    def unpack(self, blocks: np.ndarray) -> np.ndarray:
        dim = len(self.energies)
        rho = np.zeros((dim, dim), dtype=complex)
        for b, s in enumerate(self.sectors):
            rho[np.ix_(s, s)] = blocks[b, :len(s), :len(s)]
        return rho

    def populations(self, blocks: np.ndarray) -> np.ndarray:
        return np.real(np.diagonal(blocks, axis1=1, axis2=2)).reshape(-1)

    # generator (reference implementation; the propagator uses _kernels) --
    def dissipative(self, blocks: np.ndarray) -> np.ndarray:
        gain = (self.W_packed @ self.populations(blocks)).reshape(self.shape[:2])
        out = self.decay * blocks
        idx = np.arange(self.shape[1])
        out[:, idx, idx] += gain
        return out

    def __call__(self, drive: float, blocks: np.ndarray) -> np.ndarray:
        out = self.dissipative(blocks) + self.coherent * blocks
        if drive != 0.0:
            x = self.M @ blocks
            out += -1j * drive * (x - np.conj(np.transpose(x, (0, 2, 1))))
        return out

    # expectation values --------------------------------------------------
    def expect(self, k: int, blocks: np.ndarray) -> float:
        """Tr[O_k rho] for the k-th registered observable."""
        return float(np.real(np.sum(self.observables[k] * blocks)))

    def expect_operator(self, op: np.ndarray, blocks: np.ndarray) -> float:
        return float(np.real(np.sum(self.stack(op).transpose(0, 2, 1) * blocks)))

    def drive_expectation(self, blocks: np.ndarray) -> float:
        return float(np.real(np.sum(self.M_t * blocks)))

    def bare_energy(self, blocks: np.ndarray) -> float:
        return float(self.energies_packed @ self.populations(blocks))

    def energy_rate(self, drive: float, blocks: np.ndarray) -> float:
        """Tr[H(t) L_D rho]: the heat current into the system."""
        d = self.dissipative(blocks)
        rate = self.bare_energy(d)
        if drive != 0.0:
            rate += drive * float(np.real(np.sum(self.M_t * d)))
        return rate


def symmetry_sectors(M: np.ndarray, parity_d: np.ndarray | None = None, tol: float = 1e-8) -> list[np.ndarray]:
    """Split the eigenbasis into sectors that M does not couple.

    With a parity operator given (in the eigenbasis), eigenstates are grouped
    by its eigenvalue when they all carry a definite parity; otherwise one
    sector holds everything.
    """
    n = M.shape[0]
    if parity_d is not None:
        p = np.real(np.diag(parity_d))
        off = parity_d - np.diag(np.diag(parity_d))
        if np.all(np.abs(np.abs(p) - 1.0) < tol) and np.max(np.abs(off), initial=0.0) < tol:
            even = np.nonzero(p > 0)[0]
            odd = np.nonzero(p < 0)[0]
            if np.max(np.abs(M[np.ix_(even, odd)]), initial=0.0) < tol * max(1.0, np.max(np.abs(M))):
                return [s for s in (even, odd) if len(s)]
    return [np.arange(n)]


def live_sectors(sectors, W: np.ndarray, rho_d: np.ndarray, tol: float = 1e-13) -> list[np.ndarray]:
    """Sectors reachable from the initial state; the rest stay identically zero.

    Sector weights below `tol` count as empty (roundoff of the basis change).
    """
    live = [bool(np.max(np.abs(rho_d[np.ix_(s, s)]), initial=0.0) > tol) for s in sectors]
    changed = True
    while changed:
        changed = False
        for k, s in enumerate(sectors):
            if live[k]:
                continue
            sources = [t for t, on in zip(sectors, live) if on]
            if sources and np.any(W[np.ix_(s, np.concatenate(sources))] > 0):
                live[k] = True
                changed = True
    return [s for s, on in zip(sectors, live) if on]
