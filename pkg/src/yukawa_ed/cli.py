"""Command-line entry points: spectrum, scan-kappa, converge, verify.

Configuration is one YAML file; every field has a default except the two
masses and the coupling.  Outputs are JSON (spectrum, converge, verify) or
CSV with a JSON sidecar (scan-kappa), all embedding the fully resolved
configuration and a schema_version for provenance.  With --threads 1 (the
default) outputs are byte-for-byte reproducible for a fixed config and seed;
wall-clock timings are only recorded when explicitly requested, since they
would break that reproducibility.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import yaml

from .bounds import compute_constants, verify_inequalities
from .errors import CapacityError, ConfigError, ConvergenceError, ParameterError
from .hamiltonian import ModelParams, build_model
from .solver import DEFAULT_DENSE_CAP, converge_scan, solve_lowest
from .spinor import CutoffProfile

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "YUKAWA_ED_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_CONVERGENCE = 4


@dataclass
class SolverConfig:
    k: int = 2
    tol: float = 1e-10
    max_iter: int = 400
    seed: int = 1234
    dense_cap: int = DEFAULT_DENSE_CAP


@dataclass
class ScanConfig:
    kappa_grid: List[float] = field(default_factory=lambda: [0.0, 0.5, 1.0])
    axis: str = "n_max"
    values: List[float] = field(default_factory=lambda: [1, 2, 3])


@dataclass
class VerifyConfig:
    samples: int = 1000
    field_points: int = 10


@dataclass
class RunConfig:
    params: ModelParams
    solver: SolverConfig
    scan: ScanConfig
    verify: VerifyConfig
    output_path: Optional[str] = None
    record_timings: bool = False
    threads: int = 1

    def resolved(self) -> Dict:
        """Plain-dict snapshot of everything that influenced the run."""
        p = asdict(self.params)
        for key in ("chi_dirac", "chi_kg", "chi_spatial"):
            profile = getattr(self.params, key)
            p[key] = {"kind": profile.kind, "scale": profile.scale}
        return {
            "model": p,
            "solver": asdict(self.solver),
            "scan": asdict(self.scan),
            "verify": asdict(self.verify),
            "output_path": self.output_path,
            "record_timings": self.record_timings,
            "threads": self.threads,
        }


def _check_keys(section: Dict, allowed: Sequence[str], where: str):
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _profile_from(section, where: str, default_kind="gaussian") -> CutoffProfile:
    if section is None:
        return CutoffProfile(default_kind, 1.0)
    _check_keys(section, ("kind", "scale"), where)
    try:
        return CutoffProfile(section.get("kind", default_kind), float(section.get("scale", 1.0)))
    except (ParameterError, TypeError, ValueError) as err:
        raise ConfigError(f"bad cutoff in {where}: {err}") from err


def _points_from(value, where: str):
    if value is None:
        return None
    try:
        return tuple(tuple(int(c) for c in row) for row in value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad lattice points in {where}: {err}") from err


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"config is not valid YAML: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level")
    return config_from_dict(raw)


def config_from_dict(raw: Dict) -> RunConfig:
    _check_keys(raw, ("model", "solver", "scan", "verify", "output", "limits"), "top level")
    model = raw.get("model")
    if not isinstance(model, dict):
        raise ConfigError("missing required section 'model'")
    _check_keys(
        model,
        ("dirac_mass", "boson_mass", "coupling", "cutoffs", "lattice", "truncation"),
        "model",
    )
    for required in ("dirac_mass", "boson_mass", "coupling"):
        if required not in model:
            raise ConfigError(f"missing required field model.{required}")

    cutoffs = model.get("cutoffs") or {}
    _check_keys(cutoffs, ("dirac", "kg", "spatial"), "model.cutoffs")
    lattice = model.get("lattice") or {}
    _check_keys(
        lattice,
        ("fermion_V", "fermion_L", "boson_V", "boson_L", "fermion_points", "boson_points"),
        "model.lattice",
    )
    trunc = model.get("truncation") or {}
    _check_keys(trunc, ("n_max", "total"), "model.truncation")
    limits = raw.get("limits") or {}
    _check_keys(limits, ("basis_cap", "point_cap", "chi_hat_floor"), "limits")

    try:
        params = ModelParams(
            dirac_mass=float(model["dirac_mass"]),
            boson_mass=float(model["boson_mass"]),
            coupling=float(model["coupling"]),
            chi_dirac=_profile_from(cutoffs.get("dirac"), "model.cutoffs.dirac"),
            chi_kg=_profile_from(cutoffs.get("kg"), "model.cutoffs.kg"),
            chi_spatial=_profile_from(cutoffs.get("spatial"), "model.cutoffs.spatial"),
            fermion_V=float(lattice.get("fermion_V", 2.0 * math.pi)),
            fermion_L=float(lattice.get("fermion_L", 0.5)),
            boson_V=None if lattice.get("boson_V") is None else float(lattice["boson_V"]),
            boson_L=None if lattice.get("boson_L") is None else float(lattice["boson_L"]),
            fermion_points=_points_from(lattice.get("fermion_points"), "model.lattice"),
            boson_points=_points_from(lattice.get("boson_points"), "model.lattice"),
            n_max=int(trunc.get("n_max", 3)),
            total_boson_cap=None if trunc.get("total") is None else int(trunc["total"]),
            chi_hat_floor=float(limits.get("chi_hat_floor", 1e-14)),
            point_cap=int(limits.get("point_cap", 250_000)),
            basis_cap=int(limits.get("basis_cap", 2_000_000)),
        )
    except (ParameterError, TypeError, ValueError) as err:
        raise ConfigError(f"invalid model parameters: {err}") from err

    solver_raw = raw.get("solver") or {}
    _check_keys(solver_raw, ("k", "tol", "max_iter", "seed", "dense_cap"), "solver")
    solver = SolverConfig(
        k=int(solver_raw.get("k", 2)),
        tol=float(solver_raw.get("tol", 1e-10)),
        max_iter=int(solver_raw.get("max_iter", 400)),
        seed=int(solver_raw.get("seed", 1234)),
        dense_cap=int(solver_raw.get("dense_cap", DEFAULT_DENSE_CAP)),
    )
    if solver.k < 1:
        raise ConfigError(f"solver.k must be >= 1, got {solver.k}")

    scan_raw = raw.get("scan") or {}
    _check_keys(scan_raw, ("kappa_grid", "axis", "values"), "scan")
    scan = ScanConfig(
        kappa_grid=[float(v) for v in scan_raw.get("kappa_grid", [0.0, 0.5, 1.0])],
        axis=str(scan_raw.get("axis", "n_max")),
        values=list(scan_raw.get("values", [1, 2, 3])),
    )
    if not scan.kappa_grid:
        raise ConfigError("scan.kappa_grid must not be empty")
    if any(b <= a for a, b in zip(scan.values, scan.values[1:])):
        raise ConfigError("scan.values must be strictly increasing")

    verify_raw = raw.get("verify") or {}
    _check_keys(verify_raw, ("samples", "field_points"), "verify")
    verify = VerifyConfig(
        samples=int(verify_raw.get("samples", 1000)),
        field_points=int(verify_raw.get("field_points", 10)),
    )
    if verify.samples < 1:
        raise ConfigError("verify.samples must be >= 1")

    output = raw.get("output") or {}
    _check_keys(output, ("path", "record_timings"), "output")
    return RunConfig(
        params=params,
        solver=solver,
        scan=scan,
        verify=verify,
        output_path=output.get("path"),
        record_timings=bool(output.get("record_timings", False)),
    )


def _resolve_out(config: RunConfig, override: Optional[str], default_name: str) -> str:
    path = override or config.output_path or default_name
    outdir = os.environ.get(OUTPUT_DIR_ENV)
    if outdir and not os.path.isabs(path):
        path = os.path.join(outdir, path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def _write_json(path: str, payload: Dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _timed(config: RunConfig):
    start = time.perf_counter()

    def stamp():
        return {"wall_seconds": time.perf_counter() - start} if config.record_timings else None

    return stamp


@contextlib.contextmanager
def _thread_limit(threads: int):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover - present in the supported env
        yield
        return
    with threadpool_limits(limits=threads):
        yield


def run_spectrum(config: RunConfig, out_path: str) -> Dict:
    stamp = _timed(config)
    model = build_model(config.params)
    h = model.hamiltonian()
    result = solve_lowest(
        h,
        config.solver.k,
        tol=config.solver.tol,
        max_iter=config.solver.max_iter,
        seed=config.solver.seed,
        dense_cap=config.solver.dense_cap,
    )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "spectrum",
        "config": config.resolved(),
        "dimension": int(h.shape[0]),
        "eigenvalues": [float(v) for v in result.eigenvalues],
        "ground_energy": result.ground_energy,
        "gap": result.gap,
        "ground_multiplicity": result.ground_multiplicity,
        "residual": result.residual,
        "method": result.method,
        "free_gap": config.params.free_gap,
        "timings": stamp(),
    }
    _write_json(out_path, payload)
    return payload


def run_scan_kappa(config: RunConfig, out_path: str) -> Dict:
    stamp = _timed(config)
    model = build_model(config.params)
    rows = []
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("kappa,E0,gap,residual\n")
        fh.flush()
        for kappa in config.scan.kappa_grid:
            h = model.hamiltonian(kappa)
            result = solve_lowest(
                h,
                config.solver.k,
                tol=config.solver.tol,
                max_iter=config.solver.max_iter,
                seed=config.solver.seed,
                dense_cap=config.solver.dense_cap,
            )
            rows.append((kappa, result.ground_energy, result.gap, result.residual))
            fh.write(f"{kappa!r},{result.ground_energy!r},{result.gap!r},{result.residual!r}\n")
            fh.flush()
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "command": "scan-kappa",
        "config": config.resolved(),
        "rows": len(rows),
        "all_gaps_positive": bool(all(gap > 0 for _, _, gap, _ in rows)),
        "timings": stamp(),
    }
    _write_json(out_path + ".meta.json", sidecar)
    return sidecar


def run_converge(config: RunConfig, out_path: str) -> Dict:
    stamp = _timed(config)
    report = converge_scan(
        config.params,
        config.scan.axis,
        config.scan.values,
        k=config.solver.k,
        tol=config.solver.tol,
        max_iter=config.solver.max_iter,
        seed=config.solver.seed,
        dense_cap=config.solver.dense_cap,
    )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "converge",
        "config": config.resolved(),
        "report": report.to_dict(),
        "timings": stamp(),
    }
    _write_json(out_path, payload)
    return payload


def run_verify(config: RunConfig, out_path: str) -> Dict:
    stamp = _timed(config)
    model = build_model(config.params)
    report = compute_constants(model)
    report = verify_inequalities(
        model,
        report=report,
        n_samples=config.verify.samples,
        n_field_points=config.verify.field_points,
        seed=config.solver.seed,
    )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "config": config.resolved(),
        "report": report.to_dict(),
        "timings": stamp(),
    }
    _write_json(out_path, payload)
    return payload


COMMANDS = {
    "spectrum": (run_spectrum, "spectrum.json"),
    "scan-kappa": (run_scan_kappa, "scan_kappa.csv"),
    "converge": (run_converge, "converge.json"),
    "verify": (run_verify, "verify.json"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="yukawa-ed",
        description="Spectral solver for a lattice-truncated Dirac/Klein-Gordon Yukawa model",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="YAML run configuration")
        cmd.add_argument("--out", default=None, help="output file path")
        cmd.add_argument("--seed", type=int, default=None, help="override solver seed")
        cmd.add_argument("--threads", type=int, default=1, help="BLAS worker threads")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config.solver.seed = args.seed
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        config.threads = args.threads
        runner, default_name = COMMANDS[args.command]
        out_path = _resolve_out(config, args.out, default_name)
        with _thread_limit(config.threads):
            payload = runner(config, out_path)
    except (ConfigError, ParameterError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as err:
        detail = f" (projected {err.projected}, cap {err.cap})" if err.projected else ""
        print(f"error: {err}{detail}", file=sys.stderr)
        return EXIT_CAPACITY
    except ConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONVERGENCE
    summary = {k: payload[k] for k in ("command", "schema_version")}
    if "ground_energy" in payload:
        summary["ground_energy"] = payload["ground_energy"]
        summary["gap"] = payload["gap"]
    if "report" in payload and "all_passed" in payload.get("report", {}):
        summary["all_passed"] = payload["report"]["all_passed"]
    print(json.dumps({"written": out_path, **summary}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
