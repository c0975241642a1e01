"""Truncated boson-fermion Fock basis and sparse ladder operators.

The fermionic sector is the full exterior algebra over 4 modes per lattice
point (particle/antiparticle x spin up/down), encoded as occupation bitmasks,
so the anticommutation relations hold exactly as stored matrices.  The
bosonic sector is truncated: at most ``n_max`` quanta per mode and
``total_cap`` in total, which breaks the commutation relations only on
top-occupation states.

Basis ordering is fermion-mask major (mask value ascending), boson occupation
lexicographic minor; the vacuum is index 0.  Full-space operators are
Kronecker products respecting that ordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, LatticeMismatchError, ParameterError
from .lattice import DiscreteCoefficients, MomentumLattice

DEFAULT_BASIS_CAP = 2_000_000

SPECIES = ("b", "d")  # particle, antiparticle
SPINS = (0.5, -0.5)


def same_lattice(a: MomentumLattice, b: MomentumLattice) -> bool:
    return (
        a is b
        or (
            a.spacing_parameter == b.spacing_parameter
            and np.array_equal(a.integer_points, b.integer_points)
        )
    )


@dataclass(frozen=True)
class FermionMode:
    """One fermionic mode: species, spin, and lattice point index."""

    species: str
    spin: float
    point: int

    def __post_init__(self):
        if self.species not in SPECIES:
            raise ParameterError(f"species must be 'b' or 'd', got {self.species!r}")
        if self.spin not in SPINS:
            raise ParameterError(f"spin must be +-0.5, got {self.spin}")

    def family(self) -> int:
        return 2 * SPECIES.index(self.species) + SPINS.index(self.spin)

    def index(self, n_points: int) -> int:
        """Global mode index: families are contiguous blocks of lattice points."""
        return self.family() * n_points + self.point


@dataclass(frozen=True)
class FockState:
    """One product-basis state: fermion bitmask and boson occupation tuple."""

    fermion_mask: int
    boson_occupation: Tuple[int, ...]


def count_boson_occupations(n_modes: int, n_max: int, total_cap: int) -> int:
    """Number of occupation vectors with per-mode cap and total cap."""

    @lru_cache(maxsize=None)
    def ways(i: int, remaining: int) -> int:
        if i == n_modes:
            return 1
        return sum(ways(i + 1, remaining - n) for n in range(min(n_max, remaining) + 1))

    return ways(0, total_cap)


def _enumerate_boson_occupations(n_modes: int, n_max: int, total_cap: int) -> np.ndarray:
    out: List[Tuple[int, ...]] = []
    occ = [0] * n_modes

    def rec(i: int, remaining: int):
        if i == n_modes:
            out.append(tuple(occ))
            return
        for n in range(min(n_max, remaining) + 1):
            occ[i] = n
            rec(i + 1, remaining - n)
        occ[i] = 0

    rec(0, total_cap)
    return np.array(out, dtype=np.int64)


class FockBasis:
    """Enumerated product basis of fermion bitmasks and boson occupations."""

    def __init__(
        self,
        fermion_lattice: MomentumLattice,
        n_max: int,
        total_cap: Optional[int] = None,
        boson_lattice: Optional[MomentumLattice] = None,
        basis_cap: int = DEFAULT_BASIS_CAP,
    ):
        if n_max < 0:
            raise ParameterError(f"n_max must be >= 0, got {n_max}")
        total_cap = n_max if total_cap is None else total_cap
        if total_cap < 0:
            raise ParameterError(f"total boson cap must be >= 0, got {total_cap}")
        boson_lattice = boson_lattice or fermion_lattice

        self.fermion_lattice = fermion_lattice
        self.boson_lattice = boson_lattice
        self.n_max = n_max
        self.total_cap = total_cap
        self.n_fermion_modes = 4 * fermion_lattice.n_points
        self.n_boson_modes = boson_lattice.n_points
        self.fermion_dim = 1 << self.n_fermion_modes

        n_bos = count_boson_occupations(self.n_boson_modes, n_max, total_cap)
        projected = self.fermion_dim * n_bos
        if projected > basis_cap:
            raise CapacityError(
                f"projected Fock dimension {projected} exceeds cap {basis_cap}",
                projected=projected,
                cap=basis_cap,
            )
        self.boson_occupations = _enumerate_boson_occupations(self.n_boson_modes, n_max, total_cap)
        self.boson_dim = len(self.boson_occupations)
        self.boson_index = {tuple(row): i for i, row in enumerate(self.boson_occupations)}
        self.dim = self.fermion_dim * self.boson_dim

        masks = np.arange(self.fermion_dim, dtype=np.int64)
        self._masks = masks
        n = fermion_lattice.n_points
        b_bits = (1 << (2 * n)) - 1          # families 0,1 occupy the low 2n bits
        d_bits = ((1 << (4 * n)) - 1) ^ b_bits
        self._fermion_number_mask = np.bitwise_count(masks)
        self._charge_mask = (
            np.bitwise_count(masks & b_bits).astype(np.int64)
            - np.bitwise_count(masks & d_bits).astype(np.int64)
        )

    # -- state access -------------------------------------------------------

    def state(self, i: int) -> FockState:
        mask, bos = divmod(i, self.boson_dim)
        return FockState(int(mask), tuple(int(x) for x in self.boson_occupations[bos]))

    def index_of(self, state: FockState) -> int:
        return state.fermion_mask * self.boson_dim + self.boson_index[state.boson_occupation]

    def mode_index(self, mode: FermionMode) -> int:
        if mode.point >= self.fermion_lattice.n_points:
            raise ParameterError(f"point index {mode.point} outside lattice")
        return mode.index(self.fermion_lattice.n_points)

    # -- per-state diagnostics ----------------------------------------------

    def fermion_number(self) -> np.ndarray:
        """Total fermion occupation (particles + antiparticles) per basis state."""
        return np.repeat(self._fermion_number_mask, self.boson_dim)

    def charge(self) -> np.ndarray:
        """Particle minus antiparticle number per basis state (conserved by the coupling)."""
        return np.repeat(self._charge_mask, self.boson_dim)

    def boson_number(self) -> np.ndarray:
        return np.tile(self.boson_occupations.sum(axis=1), self.fermion_dim)


def enumerate_basis(
    lattice: MomentumLattice,
    n_max: int,
    total_cap: Optional[int] = None,
    boson_lattice: Optional[MomentumLattice] = None,
    basis_cap: int = DEFAULT_BASIS_CAP,
) -> FockBasis:
    """Full fermionic exterior algebra times truncated boson occupations."""
    return FockBasis(lattice, n_max, total_cap, boson_lattice, basis_cap)


# -- mask-space fermion operators (2^n dimensional factor) -------------------


def mask_annihilator(n_modes: int, mode: int) -> sp.csr_matrix:
    """Annihilator on the occupation-bitmask space with Jordan-Wigner signs.

    Sign is (-1)^(number of occupied modes below ``mode``).
    """
    if not 0 <= mode < n_modes:
        raise ParameterError(f"mode {mode} outside [0, {n_modes})")
    dim = 1 << n_modes
    masks = np.arange(dim, dtype=np.int64)
    occupied = ((masks >> mode) & 1).astype(bool)
    cols = masks[occupied]
    rows = cols ^ (1 << mode)
    below = cols & ((1 << mode) - 1)
    signs = 1.0 - 2.0 * (np.bitwise_count(below) & 1).astype(float)
    return sp.csr_matrix((signs.astype(complex), (rows, cols)), shape=(dim, dim))


def smeared_mask_annihilator(n_modes: int, modes: Sequence[int], weights: np.ndarray) -> sp.csr_matrix:
    """Weighted sum of mask annihilators: sum_j weights[j] * c_{modes[j]}."""
    dim = 1 << n_modes
    out = sp.csr_matrix((dim, dim), dtype=complex)
    for mode, w in zip(modes, weights):
        if w != 0:
            out = out + w * mask_annihilator(n_modes, mode)
    return out


# -- boson-block operators ----------------------------------------------------


def boson_block_annihilator(basis: FockBasis, mode: int) -> sp.csr_matrix:
    """Annihilator on the boson occupation block: a|n> = sqrt(n)|n-1>.

    The adjoint (creation) is truncated by construction: raising out of the
    enumerated occupation set gives zero.
    """
    if not 0 <= mode < basis.n_boson_modes:
        raise ParameterError(f"boson mode {mode} outside [0, {basis.n_boson_modes})")
    rows, cols, vals = [], [], []
    for i, occ in enumerate(basis.boson_occupations):
        n = occ[mode]
        if n > 0:
            target = occ.copy()
            target[mode] -= 1
            rows.append(basis.boson_index[tuple(target)])
            cols.append(i)
            vals.append(np.sqrt(float(n)))
    return sp.csr_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)),
        shape=(basis.boson_dim, basis.boson_dim),
    )


# -- full-space operators ------------------------------------------------------


def _lift_fermion(basis: FockBasis, mask_op: sp.spmatrix) -> sp.csr_matrix:
    return sp.kron(mask_op, sp.identity(basis.boson_dim, dtype=complex, format="csr"), format="csr")


def _lift_boson(basis: FockBasis, block: sp.spmatrix) -> sp.csr_matrix:
    return sp.kron(sp.identity(basis.fermion_dim, dtype=complex, format="csr"), block, format="csr")


def fermion_annihilator(mode: FermionMode, basis: FockBasis) -> sp.csr_matrix:
    return _lift_fermion(basis, mask_annihilator(basis.n_fermion_modes, basis.mode_index(mode)))


def fermion_creator(mode: FermionMode, basis: FockBasis) -> sp.csr_matrix:
    return fermion_annihilator(mode, basis).conj().T.tocsr()


def boson_annihilator(mode: int, basis: FockBasis) -> sp.csr_matrix:
    return _lift_boson(basis, boson_block_annihilator(basis, mode))


def boson_creator(mode: int, basis: FockBasis) -> sp.csr_matrix:
    return boson_annihilator(mode, basis).conj().T.tocsr()


def smeared_fermion(
    xi: DiscreteCoefficients,
    species: str,
    spin: float,
    basis: FockBasis,
    create: bool = False,
) -> sp.csr_matrix:
    """Coefficient-smeared fermion ladder operator.

    The annihilator is antilinear in the coefficients,
    sum_q conj(xi(q)) sqrt(cell_volume) c_{s,q}; the creator is its adjoint.
    Its operator norm equals the discrete L2 norm of ``xi``.
    """
    if not same_lattice(xi.lattice, basis.fermion_lattice):
        raise LatticeMismatchError("coefficients sampled on a different lattice than the basis")
    root_w = np.sqrt(basis.fermion_lattice.cell_volume)
    n = basis.fermion_lattice.n_points
    family = FermionMode(species, spin, 0).family()
    modes = [family * n + j for j in range(n)]
    mask_op = smeared_mask_annihilator(basis.n_fermion_modes, modes, np.conj(xi.values) * root_w)
    op = _lift_fermion(basis, mask_op)
    return op.conj().T.tocsr() if create else op


def smeared_boson(eta: DiscreteCoefficients, basis: FockBasis, create: bool = False) -> sp.csr_matrix:
    """Coefficient-smeared boson ladder operator (same conventions as fermions)."""
    if not same_lattice(eta.lattice, basis.boson_lattice):
        raise LatticeMismatchError("coefficients sampled on a different lattice than the basis")
    root_w = np.sqrt(basis.boson_lattice.cell_volume)
    block = sp.csr_matrix((basis.boson_dim, basis.boson_dim), dtype=complex)
    for k, val in enumerate(eta.values):
        if val != 0:
            block = block + np.conj(val) * root_w * boson_block_annihilator(basis, k)
    op = _lift_boson(basis, block)
    return op.conj().T.tocsr() if create else op


# -- second quantization -------------------------------------------------------


def _check_energies(values: np.ndarray) -> np.ndarray:
    vals = np.asarray(values)
    if np.iscomplexobj(vals) and np.max(np.abs(vals.imag), initial=0.0) > 1e-12:
        raise ParameterError("mode energies must be real")
    real = np.real(vals).astype(float)
    if np.any(real < 0):
        raise ParameterError("mode energies must be non-negative")
    return real


def fermion_number_diagonal(basis: FockBasis, point_energies: np.ndarray) -> np.ndarray:
    """Per-mask sum of occupation * energy; one energy per lattice point."""
    energies = _check_energies(point_energies)
    if energies.shape != (basis.fermion_lattice.n_points,):
        raise ParameterError("need one energy per fermion lattice point")
    masks = np.arange(basis.fermion_dim, dtype=np.int64)
    diag = np.zeros(basis.fermion_dim)
    for family in range(4):
        for j in range(basis.fermion_lattice.n_points):
            mode = family * basis.fermion_lattice.n_points + j
            diag += energies[j] * ((masks >> mode) & 1)
    return diag


def boson_number_diagonal(basis: FockBasis, mode_energies: np.ndarray) -> np.ndarray:
    energies = _check_energies(mode_energies)
    if energies.shape != (basis.n_boson_modes,):
        raise ParameterError("need one energy per boson mode")
    return basis.boson_occupations @ energies


def second_quantization(
    energies: DiscreteCoefficients, basis: FockBasis, side: str
) -> sp.csr_matrix:
    """Lift one-particle energies to the additive number operator dGamma.

    ``side`` selects the tensor factor: "fermion" applies one energy per
    lattice point to all four modes there; "boson" one energy per mode.
    Diagonal in the occupation basis.
    """
    if side == "fermion":
        if not same_lattice(energies.lattice, basis.fermion_lattice):
            raise LatticeMismatchError("energies sampled on a different lattice than the basis")
        diag = np.repeat(fermion_number_diagonal(basis, energies.values), basis.boson_dim)
    elif side == "boson":
        if not same_lattice(energies.lattice, basis.boson_lattice):
            raise LatticeMismatchError("energies sampled on a different lattice than the basis")
        diag = np.tile(boson_number_diagonal(basis, energies.values), basis.fermion_dim)
    else:
        raise ParameterError(f"side must be 'fermion' or 'boson', got {side!r}")
    return sp.diags(diag.astype(complex), format="csr")
