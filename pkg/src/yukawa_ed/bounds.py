"""Explicit relative-bound constants and numerical inequality verification.

All constants are computed from the same discrete coefficient vectors the
operators are built from, so every inequality checked here is a theorem of
the discrete model: a worst-case ratio above 1 + 1e-9 falsifies the build,
not the sampling.  This makes the suite the strongest regression oracle in
the repository.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ParameterError
from .hamiltonian import (
    Model,
    boson_field,
    chi_spatial_l1_norm,
    dirac_field_component,
)
from .lattice import DiscreteCoefficients
from .spinor import boson_energy

RATIO_TOL = 1e-9


@dataclass
class InequalityCheck:
    name: str
    worst_ratio: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.worst_ratio <= 1.0 + RATIO_TOL

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "worst_ratio": self.worst_ratio,
            "samples": self.samples,
            "passed": self.passed,
        }


@dataclass
class BoundReport:
    """Computed constants and inequality outcomes for one model.

    The square-root interpolation uses the sharp scalar rule
    c(eps) = 1 / (4 eps); relative boundedness of the interaction against
    the free Hamiltonian needs eps below ``epsilon_ceiling``.
    """

    dirac_field_norms: List[float]       # one bound per density component
    kg_weighted_norms: Dict[int, float]  # boson coefficient over sqrt(energy^j)
    chi_spatial_l1: float
    form_bound_slope: float              # multiplies ||sqrt(H_KG) Psi||
    form_bound_offset: float             # multiplies ||Psi||
    epsilon_ceiling: float               # relative-bound margin: epsilon must stay below this
    eps_grid: List[float] = field(default_factory=list)
    checks: Dict[str, InequalityCheck] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks.values())

    def worst_ratios(self) -> Dict[str, float]:
        return {name: check.worst_ratio for name, check in self.checks.items()}

    def to_dict(self) -> Dict:
        return {
            "dirac_field_norms": list(self.dirac_field_norms),
            "kg_weighted_norms": {str(j): v for j, v in self.kg_weighted_norms.items()},
            "chi_spatial_l1": self.chi_spatial_l1,
            "form_bound_slope": self.form_bound_slope,
            "form_bound_offset": self.form_bound_offset,
            "epsilon_ceiling": self.epsilon_ceiling,
            "eps_grid": list(self.eps_grid),
            "c_epsilon_rule": "1/(4*eps)",
            "admissible_eps": [e for e in self.eps_grid if e * self.form_bound_slope < 1.0],
            "checks": {name: check.to_dict() for name, check in self.checks.items()},
            "all_passed": self.all_passed,
        }


def compute_constants(model: Model) -> BoundReport:
    """Discrete-norm versions of all bound constants.

    The norms are taken on the model's lattices, so the constants describe
    this truncated model rather than the continuum.
    """
    dirac_norms = []
    for l in range(4):
        total = 0.0
        for si in range(2):
            total += model.f[si][l].norm + model.g[si][l].norm
        dirac_norms.append(total)

    omega = np.array(
        [boson_energy(k, model.params.boson_mass) for k in model.boson_lattice.points]
    )
    kg_norms = {}
    for j in (0, 1, 2):
        weighted = DiscreteCoefficients(
            model.h.values / omega ** (j / 2.0), model.boson_lattice
        )
        kg_norms[j] = weighted.norm

    l1 = chi_spatial_l1_norm(model.params.chi_spatial)
    gamma_weight = 0.0
    gamma0 = model.algebra.beta
    for lb in range(4):
        for lk in range(4):
            gamma_weight += abs(gamma0[lb, lk]) * dirac_norms[lb] * dirac_norms[lk]
    slope = math.sqrt(2.0) * l1 * gamma_weight * kg_norms[1]
    offset = l1 * gamma_weight * kg_norms[0] / math.sqrt(2.0)
    ceiling = math.inf if slope == 0 else 1.0 / slope
    return BoundReport(
        dirac_field_norms=dirac_norms,
        kg_weighted_norms=kg_norms,
        chi_spatial_l1=l1,
        form_bound_slope=slope,
        form_bound_offset=offset,
        epsilon_ceiling=ceiling,
    )


def _largest_singular_value(op: sp.spmatrix, seed: int) -> float:
    dim = min(op.shape)
    if dim <= 256:
        return float(np.linalg.svd(op.toarray(), compute_uv=False)[0])
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(op.shape[1])
    return float(spla.svds(op.tocsc(), k=1, v0=v0, return_singular_vectors=False)[0])


def _random_states(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    return rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))


def _ratio(lhs: float, rhs: float) -> float:
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else math.inf
    return lhs / rhs


def verify_inequalities(
    model: Model,
    report: Optional[BoundReport] = None,
    n_samples: int = 1000,
    n_field_points: int = 10,
    seed: int = 0,
    eps_grid: Optional[Sequence[float]] = None,
) -> BoundReport:
    """Check every stated operator inequality on random states.

    Failures are recorded in the report rather than raised: a worst ratio
    above 1 + 1e-9 falsifies the build, and the caller (test suite, CLI)
    decides how loudly to fail.
    """
    if n_samples < 1:
        raise ParameterError(f"need at least one sample, got {n_samples}")
    report = report or compute_constants(model)
    rng = np.random.default_rng(seed)
    dim = model.basis.dim
    eps_values = list(eps_grid) if eps_grid is not None else [10.0 ** e for e in range(-3, 2)]
    report.eps_grid = eps_values

    h_int = model.h_int
    h_kg = model.h_kg
    h_free = model.h_free
    sqrt_kg = model.kg_sqrt()
    omega = np.array(
        [boson_energy(k, model.params.boson_mass) for k in model.boson_lattice.points]
    )
    slope, offset = report.form_bound_slope, report.form_bound_offset
    m_kg0, m_kg1 = report.kg_weighted_norms[0], report.kg_weighted_norms[1]

    from .fock import smeared_boson  # local import to keep module deps one-way

    worst: Dict[str, float] = {
        "annihilator_relative": 0.0,
        "creator_relative": 0.0,
        "dirac_field_norm": 0.0,
        "boson_field_vector": 0.0,
        "form_bound": 0.0,
        "interaction_relative": 0.0,
        "sqrt_interpolation": 0.0,
        "free_relative": 0.0,
        "vacuum_interaction": 0.0,
    }

    # smeared ladder bounds on random coefficient vectors and states
    for _ in range(max(1, n_samples // 20)):
        eta = DiscreteCoefficients(
            rng.standard_normal(len(omega)) + 1j * rng.standard_normal(len(omega)),
            model.boson_lattice,
        )
        weighted = DiscreteCoefficients(eta.values / np.sqrt(omega), model.boson_lattice)
        ann = smeared_boson(eta, model.basis)
        cre = ann.conj().T.tocsr()
        for psi in _random_states(rng, dim, 5):
            sqrt_term = np.linalg.norm(sqrt_kg @ psi)
            lhs = np.linalg.norm(ann @ psi)
            worst["annihilator_relative"] = max(
                worst["annihilator_relative"], _ratio(lhs, weighted.norm * sqrt_term)
            )
            lhs = np.linalg.norm(cre @ psi)
            rhs = weighted.norm * sqrt_term + eta.norm * np.linalg.norm(psi)
            worst["creator_relative"] = max(worst["creator_relative"], _ratio(lhs, rhs))

    # field operators at random spatial points
    for i in range(n_field_points):
        x = rng.normal(scale=2.0 * model.params.chi_spatial.scale, size=3)
        for l in range(4):
            op = dirac_field_component(model, l, x)
            sigma = _largest_singular_value(op, seed=seed + 13 * i + l)
            worst["dirac_field_norm"] = max(
                worst["dirac_field_norm"], _ratio(sigma, report.dirac_field_norms[l])
            )
        phi_op = boson_field(model, x)
        for psi in _random_states(rng, dim, 3):
            lhs = np.linalg.norm(phi_op @ psi)
            rhs = (
                math.sqrt(2.0) * m_kg1 * np.linalg.norm(sqrt_kg @ psi)
                + m_kg0 * np.linalg.norm(psi) / math.sqrt(2.0)
            )
            worst["boson_field_vector"] = max(worst["boson_field_vector"], _ratio(lhs, rhs))

    # quadratic form and vector bounds on the interaction
    for psi in _random_states(rng, dim, n_samples):
        norm_psi = np.linalg.norm(psi)
        sqrt_term = np.linalg.norm(sqrt_kg @ psi)
        int_psi = h_int @ psi
        rhs_int = slope * sqrt_term + offset * norm_psi
        worst["interaction_relative"] = max(
            worst["interaction_relative"], _ratio(np.linalg.norm(int_psi), rhs_int)
        )
        phi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        lhs = abs(np.vdot(phi, int_psi))
        worst["form_bound"] = max(
            worst["form_bound"], _ratio(lhs, rhs_int * np.linalg.norm(phi))
        )
        kg_term = np.linalg.norm(h_kg @ psi)
        free_term = np.linalg.norm(h_free @ psi)
        for eps in eps_values:
            rhs_half = eps * kg_term + norm_psi / (4.0 * eps)
            worst["sqrt_interpolation"] = max(
                worst["sqrt_interpolation"], _ratio(sqrt_term, rhs_half)
            )
            rhs_free = eps * slope * free_term + (slope / (4.0 * eps) + offset) * norm_psi
            worst["free_relative"] = max(
                worst["free_relative"], _ratio(np.linalg.norm(int_psi), rhs_free)
            )

    # the vacuum carries no boson energy, so the offset alone must bound it
    vacuum = np.zeros(dim, dtype=complex)
    vacuum[0] = 1.0
    worst["vacuum_interaction"] = _ratio(float(np.linalg.norm(h_int @ vacuum)), offset)

    for name, ratio in worst.items():
        report.checks[name] = InequalityCheck(name=name, worst_ratio=float(ratio), samples=n_samples)
    return report
