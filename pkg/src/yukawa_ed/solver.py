"""Lowest eigenvalues, spectral gaps, sector minima, and refinement scans.

Two routes to the bottom of the spectrum: full Hermitian diagonalization
(authoritative under a dimension cap) and a Lanczos iteration with full
reorthogonalization.  The Lanczos route restarts in the orthogonal
complement of converged eigenvectors, so degenerate eigenvalues are
resolved with their multiplicities and the two routes can be compared
eigenvalue by eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import CapacityError, ConvergenceError, ParameterError
from .fock import FockBasis
from .hamiltonian import ModelParams, build_model

DEFAULT_DENSE_CAP = 4096
DEGENERACY_TOL = 1e-10


@dataclass
class SpectralResult:
    """Lowest eigenvalues and ground-state diagnostics of one matrix."""

    eigenvalues: np.ndarray
    ground_vector: Optional[np.ndarray]
    residual: float
    method: str
    iterations: int = 0
    matvecs: int = 0

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_multiplicity(self) -> int:
        return int(np.sum(self.eigenvalues - self.eigenvalues[0] < DEGENERACY_TOL))

    @property
    def gap(self) -> float:
        """First excitation energy; exactly 0.0 when the ground level is degenerate."""
        if len(self.eigenvalues) < 2:
            return 0.0
        raw = float(self.eigenvalues[1] - self.eigenvalues[0])
        return 0.0 if raw < DEGENERACY_TOL else raw


def _as_operator(h):
    return h.tocsr() if sp.issparse(h) else np.asarray(h)


def dense_lowest(h, k: int, dense_cap: int = DEFAULT_DENSE_CAP) -> SpectralResult:
    """Full Hermitian diagonalization; the oracle route under the cap."""
    dim = h.shape[0]
    if dim > dense_cap:
        raise CapacityError(
            f"dense diagonalization of dimension {dim} exceeds cap {dense_cap}",
            projected=dim,
            cap=dense_cap,
        )
    if k < 1:
        raise ParameterError(f"need k >= 1, got {k}")
    k = min(k, dim)
    dense = h.toarray() if sp.issparse(h) else np.asarray(h)
    vals, vecs = np.linalg.eigh(dense)
    ground = vecs[:, 0]
    residual = float(np.linalg.norm(dense @ ground - vals[0] * ground))
    return SpectralResult(
        eigenvalues=vals[:k].copy(),
        ground_vector=ground,
        residual=residual,
        method="dense",
    )


class _LanczosState:
    """Converged eigenpairs plus iteration counters across deflation rounds."""

    def __init__(self, h, rng):
        self.h = h
        self.rng = rng
        self.values: List[float] = []
        self.vectors: List[np.ndarray] = []
        self.iterations = 0
        self.matvecs = 0
        self.best_residual = math.inf

    def run_round(self, need: int, tol: float, max_iter: int) -> Optional[float]:
        """One Lanczos sweep in the complement of the converged vectors.

        Accepts the lowest Ritz pairs whose residual estimates pass ``tol``
        and returns the smallest value accepted this round, or None when
        nothing converged (either a residual failure or an exhausted
        complement; the caller distinguishes via the remaining dimension).
        """
        dim = self.h.shape[0]
        deflate = np.column_stack(self.vectors) if self.vectors else None
        start = self.rng.standard_normal(dim) + 1j * self.rng.standard_normal(dim)
        if deflate is not None:
            start -= deflate @ (deflate.conj().T @ start)
        nrm = float(np.linalg.norm(start))
        if nrm < 1e-10:
            return None
        start /= nrm

        basis_vecs = [start]
        alphas: List[float] = []
        betas: List[float] = []
        steps = min(max_iter, dim - len(self.values))
        for j in range(steps):
            self.iterations += 1
            w = self.h @ basis_vecs[-1]
            self.matvecs += 1
            alpha = float(np.vdot(basis_vecs[-1], w).real)
            alphas.append(alpha)
            w = w - alpha * basis_vecs[-1]
            if j > 0:
                w = w - betas[-1] * basis_vecs[-2]
            if deflate is not None:
                w -= deflate @ (deflate.conj().T @ w)
            vmat = np.column_stack(basis_vecs)
            w -= vmat @ (vmat.conj().T @ w)
            w -= vmat @ (vmat.conj().T @ w)
            beta = float(np.linalg.norm(w))

            theta, smat = sla.eigh_tridiagonal(alphas, betas)
            resid_est = np.abs(beta * smat[-1, :])
            self.best_residual = min(self.best_residual, float(resid_est[0]))
            exhausted = beta < 1e-13 * max(1.0, float(np.max(np.abs(alphas))))
            prefix = 0
            while prefix < len(theta) and resid_est[prefix] <= tol:
                prefix += 1
            if prefix >= min(need, len(theta)) or exhausted or j == steps - 1:
                # on an exhausted Krylov space every Ritz pair is exact
                take = len(theta) if exhausted else prefix
                if take == 0:
                    return None
                ritz = vmat @ smat[:, :take]
                for col in range(take):
                    self.values.append(float(theta[col]))
                    self.vectors.append(np.ascontiguousarray(ritz[:, col]))
                return float(theta[0])
            betas.append(beta)
            basis_vecs.append(w / beta)
        return None


def lanczos_lowest(
    h,
    k: int,
    tol: float = 1e-10,
    max_iter: int = 400,
    seed: int = 0,
) -> SpectralResult:
    """Lowest ``k`` eigenpairs by Lanczos with full reorthogonalization.

    Converged eigenvectors are deflated and the iteration restarts in their
    orthogonal complement, which resolves degenerate levels one copy at a
    time.  Once ``k`` pairs are in hand, extra probe rounds continue until
    the complement's lowest eigenvalue lies above the k-th found value, so
    no degenerate copy hiding below the k-th level can be missed.
    Deterministic for a fixed seed.
    """
    if k < 1:
        raise ParameterError(f"need k >= 1, got {k}")
    h = _as_operator(h)
    dim = h.shape[0]
    k = min(k, dim)
    state = _LanczosState(h, np.random.default_rng(seed))
    tie_tol = 10.0 * tol

    max_rounds = 4 * k + 16
    complete = False
    for _ in range(max_rounds):
        if len(state.values) >= dim:
            complete = True
            break
        if len(state.values) < k:
            lowest = state.run_round(k - len(state.values), tol, max_iter)
            if lowest is None:
                raise ConvergenceError(
                    f"Lanczos failed to converge within {max_iter} iterations "
                    f"(best residual {state.best_residual:.3e}, tol {tol:.3e})",
                    best_residual=state.best_residual,
                )
            continue
        kth = float(np.sort(state.values)[k - 1])
        probe = state.run_round(1, tol, max_iter)
        if probe is None:
            raise ConvergenceError(
                f"Lanczos completeness probe failed to converge "
                f"(best residual {state.best_residual:.3e}, tol {tol:.3e})",
                best_residual=state.best_residual,
            )
        if probe > kth + tie_tol:
            complete = True
            break
    if len(state.values) < k or not complete:
        raise ConvergenceError(
            f"Lanczos found {len(state.values)} pairs but could not certify the "
            f"lowest {k} within {max_rounds} deflation rounds "
            f"(best residual {state.best_residual:.3e})",
            best_residual=state.best_residual,
        )

    order = np.argsort(state.values)[:k]
    vals = np.array([state.values[i] for i in order])
    ground = state.vectors[order[0]]
    residual = float(np.linalg.norm(h @ ground - vals[0] * ground))
    return SpectralResult(
        eigenvalues=vals,
        ground_vector=ground,
        residual=residual,
        method="lanczos",
        iterations=state.iterations,
        matvecs=state.matvecs,
    )


def solve_lowest(
    h,
    k: int,
    tol: float = 1e-10,
    max_iter: int = 400,
    seed: int = 0,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> SpectralResult:
    """Dense route under the cap, Lanczos above it."""
    if h.shape[0] <= dense_cap:
        return dense_lowest(h, k, dense_cap)
    return lanczos_lowest(h, k, tol=tol, max_iter=max_iter, seed=seed)


def operator_norm_dense(h, dense_cap: int = DEFAULT_DENSE_CAP) -> float:
    """Spectral norm via dense Hermitian eigenvalues (small instances only)."""
    dim = h.shape[0]
    if dim > dense_cap:
        raise CapacityError(
            f"dense norm of dimension {dim} exceeds cap {dense_cap}", projected=dim, cap=dense_cap
        )
    dense = h.toarray() if sp.issparse(h) else np.asarray(h)
    vals = np.linalg.eigvalsh(dense)
    return float(max(abs(vals[0]), abs(vals[-1])))


# -- invariant sectors ----------------------------------------------------------


@dataclass
class SectorResult:
    """Minimum of the restricted quadratic form on one label sector."""

    label: str
    value: int
    dimension: int
    invariant: bool
    mixing: float
    energy: Optional[float]


def sector_labels(basis: FockBasis, label: str) -> np.ndarray:
    if label == "charge":
        return basis.charge()
    if label == "number":
        return basis.fermion_number()
    raise ParameterError(f"unknown sector label {label!r}")


def sector_minima(
    h,
    basis: FockBasis,
    n: int,
    label: str = "charge",
    dense_cap: int = DEFAULT_DENSE_CAP,
    invariance_tol: float = 1e-12,
    tol: float = 1e-10,
    max_iter: int = 400,
    seed: int = 0,
) -> SectorResult:
    """Lowest energy in the sector with label value ``n``.

    Also measures how strongly the Hamiltonian couples the sector to its
    complement; a sector that is mixed beyond ``invariance_tol`` has no
    well-defined restricted minimum and is reported with ``energy=None``.
    """
    labels = sector_labels(basis, label)
    inside = np.flatnonzero(labels == n)
    if inside.size == 0:
        raise ParameterError(f"no basis states with {label} = {n}")
    h = h.tocsr() if sp.issparse(h) else sp.csr_matrix(h)
    outside = np.flatnonzero(labels != n)
    cross = h[np.ix_(inside, outside)]
    mixing = 0.0 if cross.nnz == 0 else float(np.max(np.abs(cross.data)))
    invariant = mixing <= invariance_tol
    energy = None
    if invariant:
        block = h[np.ix_(inside, inside)]
        result = solve_lowest(block, 1, tol=tol, max_iter=max_iter, seed=seed, dense_cap=dense_cap)
        energy = result.ground_energy
    return SectorResult(
        label=label,
        value=int(n),
        dimension=int(inside.size),
        invariant=invariant,
        mixing=mixing,
        energy=energy,
    )


# -- refinement scans -------------------------------------------------------------

SCAN_AXES = (
    "n_max",
    "total_cap",
    "boson_V",
    "boson_L",
    "fermion_V",
    "fermion_L",
    "fermion_modes",
)


@dataclass
class ScanRow:
    value: float
    dimension: int
    ground_energy: float
    gap: float
    residual: float
    method: str


@dataclass
class ConvergenceReport:
    """Ground energy and gap along one refinement axis.

    The successive-difference column is a convergence diagnostic, not a
    proof: coarse and fine model spaces differ, so only the spectra are
    compared.
    """

    axis: str
    rows: List[ScanRow] = field(default_factory=list)

    @property
    def deltas(self) -> List[float]:
        energies = [row.ground_energy for row in self.rows]
        return [abs(b - a) for a, b in zip(energies, energies[1:])]

    @property
    def ground_energies(self) -> List[float]:
        return [row.ground_energy for row in self.rows]

    @property
    def e0_monotone_nonincreasing(self) -> bool:
        energies = self.ground_energies
        return all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))

    @property
    def tail_deltas_nonincreasing(self) -> bool:
        d = self.deltas
        if len(d) < 2:
            return True
        return d[-1] <= d[-2] * (1 + 1e-9)

    def to_dict(self) -> Dict:
        return {
            "axis": self.axis,
            "rows": [vars(row) for row in self.rows],
            "abs_delta_e0": self.deltas,
            "e0_monotone_nonincreasing": self.e0_monotone_nonincreasing,
            "tail_deltas_nonincreasing": self.tail_deltas_nonincreasing,
            "note": "spectrum comparison across refinement levels; diagnostic, not a proof",
        }


def _params_for_step(params: ModelParams, axis: str, value) -> ModelParams:
    if axis == "n_max":
        return replace(params, n_max=int(value))
    if axis == "total_cap":
        return replace(params, total_boson_cap=int(value))
    if axis == "boson_V":
        return replace(params, boson_V=float(value))
    if axis == "boson_L":
        return replace(params, boson_L=float(value))
    if axis == "fermion_V":
        return replace(params, fermion_V=float(value))
    if axis == "fermion_L":
        return replace(params, fermion_L=float(value))
    if axis == "fermion_modes":
        if params.fermion_points is None:
            raise ParameterError("fermion_modes scan needs explicit fermion_points")
        count = int(value)
        if count > len(params.fermion_points):
            raise ParameterError(
                f"fermion_modes value {count} exceeds available points {len(params.fermion_points)}"
            )
        return replace(params, fermion_points=tuple(params.fermion_points[:count]))
    raise ParameterError(f"unknown scan axis {axis!r}; expected one of {SCAN_AXES}")


def converge_scan(
    params: ModelParams,
    axis: str,
    values: Sequence,
    k: int = 2,
    tol: float = 1e-10,
    max_iter: int = 400,
    seed: int = 0,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> ConvergenceReport:
    """Solve the model along one refinement axis and report E0/gap sequences.

    Aborts with the partial report attached on the first non-converged step.
    """
    values = list(values)
    if not values:
        raise ParameterError("refinement list is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ParameterError("refinement list must be strictly increasing")
    report = ConvergenceReport(axis=axis)
    for value in values:
        step_params = _params_for_step(params, axis, value)
        model = build_model(step_params)
        h = model.hamiltonian()
        try:
            result = solve_lowest(h, k, tol=tol, max_iter=max_iter, seed=seed, dense_cap=dense_cap)
        except ConvergenceError as err:
            err.partial = report
            raise
        report.rows.append(
            ScanRow(
                value=float(value),
                dimension=int(h.shape[0]),
                ground_energy=result.ground_energy,
                gap=result.gap,
                residual=result.residual,
                method=result.method,
            )
        )
    return report
