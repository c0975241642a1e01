import math

import numpy as np
import pytest
import scipy.sparse as sp

from yukawa_ed.errors import CapacityError, ConvergenceError, ParameterError
from yukawa_ed.fock import enumerate_basis
from yukawa_ed.hamiltonian import ModelParams, assemble_free, build_model
from yukawa_ed.solver import (
    converge_scan,
    dense_lowest,
    lanczos_lowest,
    operator_norm_dense,
    sector_minima,
    solve_lowest,
)

RNG = np.random.default_rng(97)

TWO_PI = 2.0 * math.pi


def minimal_params(**kwargs):
    defaults = dict(dirac_mass=1.0, boson_mass=1.0, coupling=0.5, n_max=3, total_boson_cap=3)
    defaults.update(kwargs)
    return ModelParams(**defaults)


def strong_coupling_params(**kwargs):
    # coarse lattice: large cells boost the effective coupling so truncation
    # effects sit well above float noise
    defaults = dict(
        dirac_mass=1.0,
        boson_mass=1.0,
        coupling=0.5,
        fermion_V=math.pi,
        fermion_L=0.9,
        n_max=3,
        total_boson_cap=None,
    )
    defaults.update(kwargs)
    return ModelParams(**defaults)


def random_hermitian(dim, rng, degenerate=False):
    mat = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    mat = (mat + mat.conj().T) / 2
    if degenerate:
        half = dim // 2
        block = mat[:half, :half]
        mat = np.kron(np.eye(2), block)  # every eigenvalue twice
    return sp.csr_matrix(mat)


class TestDenseLowest:
    def test_free_hamiltonian_minimal_basis(self):
        params = minimal_params(coupling=0.0)
        basis = enumerate_basis(params.build_fermion_lattice(), 3, 3)
        h0 = assemble_free(params, basis)
        result = dense_lowest(h0, 4)
        assert result.ground_energy == 0.0
        assert result.gap == pytest.approx(1.0, abs=1e-15)

    def test_identity_matrix(self):
        result = dense_lowest(sp.identity(10, format="csr"), 3)
        assert np.allclose(result.eigenvalues, [1, 1, 1], atol=0)

    def test_small_diagonal(self):
        result = dense_lowest(sp.diags([0.0, 2.0, 5.0]).tocsr(), 2)
        assert np.allclose(result.eigenvalues, [0.0, 2.0], atol=0)

    def test_cap_enforced(self):
        with pytest.raises(CapacityError):
            dense_lowest(sp.identity(100, format="csr"), 1, dense_cap=50)

    def test_residual_reported(self):
        h = random_hermitian(40, RNG)
        result = dense_lowest(h, 2)
        assert result.residual < 1e-12


class TestLanczosLowest:
    def test_agrees_with_dense_on_random_matrices(self):
        for trial in range(8):
            dim = int(RNG.integers(30, 300))
            h = random_hermitian(dim, RNG)
            k = int(RNG.integers(1, 6))
            dense = dense_lowest(h, k)
            fast = lanczos_lowest(h, k, tol=1e-11, seed=trial)
            assert np.allclose(fast.eigenvalues, dense.eigenvalues, atol=1e-8)

    def test_resolves_degenerate_multiplicities(self):
        h = random_hermitian(120, RNG, degenerate=True)
        dense = dense_lowest(h, 6)
        fast = lanczos_lowest(h, 6, tol=1e-11, seed=3)
        # doubly degenerate spectrum: both copies of each level must appear
        assert np.allclose(fast.eigenvalues, dense.eigenvalues, atol=1e-8)
        assert dense.eigenvalues[1] - dense.eigenvalues[0] < 1e-10
        # degeneracy is reported via multiplicity, never as a tiny positive gap
        assert dense.gap == 0.0
        assert dense.ground_multiplicity >= 2
        assert fast.gap == 0.0

    def test_zero_coupling_ground_state_is_exact_vacuum(self):
        params = minimal_params(coupling=0.0)
        basis = enumerate_basis(params.build_fermion_lattice(), 3, 3)
        h0 = assemble_free(params, basis)
        result = lanczos_lowest(h0, 2, tol=1e-12, seed=11)
        assert abs(result.ground_energy) < 1e-12
        assert result.residual < 1e-11

    def test_deterministic_for_fixed_seed(self):
        h = random_hermitian(80, RNG)
        a = lanczos_lowest(h, 3, seed=42)
        b = lanczos_lowest(h, 3, seed=42)
        assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()

    def test_nonconvergence_raises_with_best_residual(self):
        h = random_hermitian(400, RNG)
        with pytest.raises(ConvergenceError) as err:
            lanczos_lowest(h, 4, tol=1e-12, max_iter=3, seed=0)
        assert err.value.best_residual is not None
        assert err.value.best_residual > 1e-12

    def test_small_dimension_clips_k(self):
        h = sp.diags([1.0, 2.0]).tocsr()
        result = lanczos_lowest(h, 5, seed=1)
        assert np.allclose(result.eigenvalues, [1.0, 2.0], atol=1e-10)

    def test_interacting_model_matches_dense(self):
        model = build_model(strong_coupling_params())
        h = model.hamiltonian()
        dense = dense_lowest(h, 4)
        fast = lanczos_lowest(h, 4, tol=1e-11, seed=5)
        assert np.allclose(fast.eigenvalues, dense.eigenvalues, atol=1e-8)


class TestPerturbationBound:
    def test_ground_energy_shift_bounded_by_coupling_times_norm(self):
        model = build_model(strong_coupling_params())
        hnorm = operator_norm_dense(model.h_int)
        e0_free = dense_lowest(model.h_free, 1).ground_energy
        for kappa in (0.1, 0.5, 1.0, 2.0):
            e0 = dense_lowest(model.hamiltonian(kappa), 1).ground_energy
            assert abs(e0 - e0_free) <= kappa * hnorm * (1 + 1e-12)


class TestSectorMinima:
    def test_free_charge_sectors_cost_one_mass_each(self):
        params = minimal_params(coupling=0.0)
        model = build_model(params)
        h = model.hamiltonian()
        for n in (1, 2):
            sector = sector_minima(h, model.basis, n, label="charge")
            assert sector.invariant
            assert sector.energy == pytest.approx(n * params.dirac_mass, abs=1e-14)

    def test_interacting_minimal_sector_bound(self):
        model = build_model(minimal_params(coupling=0.5))
        h = model.hamiltonian()
        e0 = dense_lowest(h, 1).ground_energy
        for n in (1, 2, 3, 4):
            sector = sector_minima(h, model.basis, n, label="number")
            assert sector.invariant  # rest-frame coupling conserves total number
            assert sector.energy >= e0 + n * model.params.dirac_mass - 1e-9

    def test_mixed_sector_reported_not_solved(self):
        params = minimal_params(
            coupling=0.5,
            fermion_points=((0, 0, 0), (0, 0, 1)),
            fermion_V=TWO_PI,
            fermion_L=1.5,
            n_max=1,
            total_boson_cap=1,
        )
        model = build_model(params)
        h = model.hamiltonian()
        sector = sector_minima(h, model.basis, 1, label="number")
        assert not sector.invariant
        assert sector.energy is None
        assert sector.mixing > 1e-12
        charge_sector = sector_minima(h, model.basis, 1, label="charge")
        assert charge_sector.invariant

    def test_empty_sector_rejected(self):
        model = build_model(minimal_params())
        with pytest.raises(ParameterError):
            sector_minima(model.hamiltonian(), model.basis, 7, label="charge")


class TestConvergeScan:
    def test_free_scan_is_flat_zero(self):
        report = converge_scan(minimal_params(coupling=0.0), "n_max", [1, 2, 3])
        assert all(row.ground_energy == 0.0 for row in report.rows)
        assert all(d == 0.0 for d in report.deltas)

    def test_boson_truncation_scan_converges(self):
        report = converge_scan(strong_coupling_params(), "n_max", [1, 2, 3, 4])
        assert report.e0_monotone_nonincreasing
        assert report.tail_deltas_nonincreasing
        # truncation error must be resolvable above float noise
        assert report.deltas[-1] > 1e-14
        assert report.deltas[0] > report.deltas[-1]

    def test_fermion_mode_scan_monotone(self):
        params = minimal_params(
            coupling=0.5,
            fermion_points=((0, 0, 0), (0, 0, 1), (0, 0, -1)),
            fermion_V=TWO_PI,
            fermion_L=1.5,
            n_max=1,
            total_boson_cap=1,
            boson_points=((0, 0, 0),),
        )
        report = converge_scan(params, "fermion_modes", [1, 2, 3], dense_cap=600)
        assert len(report.rows) == 3
        assert report.e0_monotone_nonincreasing

    def test_refinement_list_validation(self):
        with pytest.raises(ParameterError):
            converge_scan(minimal_params(), "n_max", [2, 2, 3])
        with pytest.raises(ParameterError):
            converge_scan(minimal_params(), "n_max", [])
        with pytest.raises(ParameterError):
            converge_scan(minimal_params(), "lattice_flavor", [1, 2])

    def test_single_element_list_has_no_deltas(self):
        report = converge_scan(minimal_params(coupling=0.1), "n_max", [2])
        assert len(report.rows) == 1
        assert report.deltas == []

    def test_report_serializes(self):
        report = converge_scan(minimal_params(coupling=0.1), "n_max", [1, 2])
        data = report.to_dict()
        assert data["axis"] == "n_max"
        assert len(data["rows"]) == 2
        assert "diagnostic" in data["note"]


class TestScanAbort:
    def test_failed_step_carries_partial_report(self, monkeypatch):
        import yukawa_ed.solver as solver_mod

        calls = {"n": 0}
        original = solver_mod.solve_lowest

        def flaky(h, k, **kwargs):
            calls["n"] += 1
            if calls["n"] >= 2:
                raise ConvergenceError("stalled", best_residual=1e-3)
            return original(h, k, **kwargs)

        monkeypatch.setattr(solver_mod, "solve_lowest", flaky)
        with pytest.raises(ConvergenceError) as err:
            converge_scan(minimal_params(coupling=0.2), "n_max", [1, 2, 3])
        partial = err.value.partial
        assert partial is not None
        assert len(partial.rows) == 1
