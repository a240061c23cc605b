"""Pipeline orchestration: config file, stage subcommands, manifests.

Stages mirror the calculation flow: solve-exact (eigensolver
reference), pimd-ecp (sampling to force table and classical curve),
legendre (standard curve and effective frequency), cmd (centroid
dynamics), epac (closed forms), spectra (Fourier transforms), compare
(deviation metrics).  Each stage reads only its declared inputs from
the output directory and writes CSV artifacts plus a manifest, so the
full pipeline is the composition of the stages.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 self-test/acceptance failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .analytic_continuation import EpacParameters, epac_correlation, epac_spectrum
from .centroid_dynamics import centroid_correlation, sample_initial_centroids
from .effective_potential import fit_force_polynomial, standard_potential_pipeline
from .errors import ConfigError, EpacError
from .exact import (
    DEFAULT_GRID,
    EigenSystem,
    GridSpec,
    exact_canonical_correlation,
    exact_correlation,
    exact_spectrum,
    harmonic_reference,
    solve_eigensystem,
)
from .pimd import SamplerConfig, centroid_force_grid
from .potentials import PotentialSpec, SystemParams
from .series import KIND_CANONICAL
from .spectra import fourier_transform_series, kubo_factor

# defaults per scale; the config file always wins
_SCALE_DEFAULTS = {
    "ci": {"grid_points": 21, "production": 30000, "members": 2000},
    "paper": {"grid_points": 51, "production": 10_000_000, "members": 10000},
}

_DEFAULTS = {
    "system": {"betas": "1 10", "hbar": "1.0", "boltzmann": "1.0"},
    "potential": {"mass": "1.0"},
    "oracle": {
        "q_min": "-8.0",
        "q_max": "8.0",
        "n_points": "2001",
        "n_states": "0",
        "t_max": "20.0",
        "dt": "0.05",
    },
    "pimd": {
        "trotter": "0",
        "grid_min": "-2.5",
        "grid_max": "2.5",
        "equilibration": "4000",
        "steps_per_period": "120",
        "chain_length": "4",
        "replicas": "8",
    },
    "effpot": {
        "degree": "9",
        "j_min": "-3.0",
        "j_max": "3.0",
        "j_points": "81",
        "q_min": "-2.0",
        "q_max": "2.0",
        "q_points": "81",
        "error_samples": "16",
    },
    "cmd": {"dt": "0.01", "t_max": "16.0", "origins": "8"},
    "epac": {"z_beta": ""},
    "spectra": {"window": "hann"},
    "run": {"seed": "1234", "out": "runs/out", "scale": "ci"},
}


def load_config(path, overrides=None) -> dict:
    """Read the INI config into a plain nested dict with defaults applied."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = {sec: dict(vals) for sec, vals in _DEFAULTS.items()}
    for sec in parser.sections():
        cfg.setdefault(sec, {}).update(dict(parser[sec]))
    for key, value in (overrides or {}).items():
        sec, name = key.split(".", 1)
        cfg.setdefault(sec, {})[name] = str(value)
    scale = cfg["run"]["scale"]
    if scale not in _SCALE_DEFAULTS:
        raise ConfigError(f"run.scale must be ci or paper, got {scale!r}")
    scale_defaults = _SCALE_DEFAULTS[scale]
    pimd = cfg["pimd"]
    pimd.setdefault("grid_points", str(scale_defaults["grid_points"]))
    pimd.setdefault("production", str(scale_defaults["production"]))
    cfg["cmd"].setdefault("members", str(scale_defaults["members"]))
    if "coefficients" not in cfg.get("potential", {}):
        raise ConfigError("missing required key potential.coefficients")
    return cfg


def _floats(text: str):
    return [float(tok) for tok in text.replace(",", " ").split()]


def _potential(cfg) -> PotentialSpec:
    sec = cfg["potential"]
    try:
        coeffs = _floats(sec["coefficients"])
        return PotentialSpec(tuple(coeffs), mass=float(sec["mass"]))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad potential section: {exc}") from exc


def _system(cfg, beta: float) -> SystemParams:
    sec = cfg["system"]
    return SystemParams(
        beta=beta, hbar=float(sec["hbar"]), boltzmann=float(sec["boltzmann"])
    )


def _betas(cfg):
    return _floats(cfg["system"]["betas"])


def _beta_tag(beta: float) -> str:
    return f"{beta:g}".replace(".", "p")


def _oracle_grid(cfg) -> GridSpec:
    sec = cfg["oracle"]
    return GridSpec(
        float(sec["q_min"]), float(sec["q_max"]), int(sec["n_points"])
    )


def _times(cfg):
    sec = cfg["oracle"]
    dt, t_max = float(sec["dt"]), float(sec["t_max"])
    return np.arange(0.0, t_max + 0.5 * dt, dt)


def _auto_trotter(beta: float) -> int:
    if beta <= 1.0:
        return 32
    if beta <= 10.0:
        return 64
    if beta <= 100.0:
        return 256
    return 512


def _auto_states(pot, sys, grid, beta, start=24):
    n = start
    while True:
        eig = solve_eigensystem(pot, sys, grid, n)
        x = beta * (eig.energies - eig.energies[0])
        if math.exp(-x[-1]) < 1e-12:
            return eig
        n *= 2


def _solve(cfg, beta):
    pot = _potential(cfg)
    sys = _system(cfg, beta)
    grid = _oracle_grid(cfg)
    n_states = int(cfg["oracle"]["n_states"])
    if n_states > 0:
        return solve_eigensystem(pot, sys, grid, n_states)
    return _auto_states(pot, sys, grid, beta)


def stage_solve_exact(cfg, out: Path):
    outputs = []
    times = _times(cfg)
    for beta in _betas(cfg):
        tag = _beta_tag(beta)
        eig = _solve(cfg, beta)
        eig_path = out / f"eigensystem_beta{tag}.json"
        with open(eig_path, "w") as fh:
            json.dump(
                {
                    "energies": [float(e) for e in eig.energies],
                    "q_elements": [[float(x) for x in row] for row in eig.q_elements],
                    "grid": {
                        "q_min": eig.grid.q_min,
                        "q_max": eig.grid.q_max,
                        "n_points": eig.grid.n_points,
                    },
                    "hbar": eig.hbar,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        outputs.append(eig_path)
        for name, series in (
            ("exact_corr", exact_correlation(eig, beta, times)),
            ("canonical_corr", exact_canonical_correlation(eig, beta, times)),
        ):
            path = out / f"{name}_beta{tag}.csv"
            io.write_correlation(path, series)
            outputs.extend([path, io.sidecar_path(path)])
        for kind, name in (("exact", "exact_lines"), ("canonical", "canonical_lines")):
            path = out / f"{name}_beta{tag}.csv"
            io.write_lines(path, exact_spectrum(eig, beta, kind=kind))
            outputs.extend([path, io.sidecar_path(path)])
    return outputs


def _load_eigensystem(out: Path, tag: str) -> EigenSystem:
    path = out / f"eigensystem_beta{tag}.json"
    if not path.exists():
        raise ConfigError(f"missing {path.name}; run solve-exact first")
    with open(path) as fh:
        data = json.load(fh)
    grid = GridSpec(**data["grid"])
    n = len(data["energies"])
    return EigenSystem(
        energies=np.array(data["energies"]),
        wavefunctions=np.zeros((n, grid.n_points)),
        grid=grid,
        q_elements=np.array(data["q_elements"]),
        hbar=data["hbar"],
    )


def stage_pimd_ecp(cfg, out: Path):
    outputs = []
    pot = _potential(cfg)
    sec = cfg["pimd"]
    grid = np.linspace(
        float(sec["grid_min"]), float(sec["grid_max"]), int(sec["grid_points"])
    )
    seed = int(cfg["run"]["seed"])
    chash = io.config_hash(cfg)
    for beta in _betas(cfg):
        tag = _beta_tag(beta)
        table_path = out / f"force_table_beta{tag}.csv"
        if table_path.exists():
            meta = json.load(open(io.sidecar_path(table_path)))
            if meta.get("config_hash") == chash:
                outputs.extend([table_path, io.sidecar_path(table_path)])
                continue  # resume: identical config, skip sampling
        trotter = int(sec["trotter"]) or _auto_trotter(beta)
        sampler_cfg = SamplerConfig(
            production_steps=int(sec["production"]),
            equilibration_steps=int(sec["equilibration"]),
            steps_per_period=int(sec["steps_per_period"]),
            chain_length=int(sec["chain_length"]),
            replicas=int(sec["replicas"]),
            seed=seed,
        )
        table = centroid_force_grid(pot, _system(cfg, beta), trotter, grid, sampler_cfg)
        io.write_force_table(table_path, table, {"config_hash": chash})
        outputs.extend([table_path, io.sidecar_path(table_path)])
        fit = fit_force_polynomial(table, int(cfg["effpot"]["degree"]), pot.symmetric)
        from .effective_potential import integrate_to_ecp

        ecp = integrate_to_ecp(fit)
        ecp_path = out / f"ecp_beta{tag}.csv"
        io.write_curve(
            ecp_path,
            ecp,
            {"chi2_dof": fit.chi2_dof, "force_table": io.file_sha256(table_path)},
        )
        outputs.extend([ecp_path, io.sidecar_path(ecp_path)])
    return outputs


def stage_legendre(cfg, out: Path):
    outputs = []
    pot = _potential(cfg)
    eff = cfg["effpot"]
    j_grid = np.linspace(float(eff["j_min"]), float(eff["j_max"]), int(eff["j_points"]))
    q_grid = np.linspace(float(eff["q_min"]), float(eff["q_max"]), int(eff["q_points"]))
    for beta in _betas(cfg):
        tag = _beta_tag(beta)
        table_path = out / f"force_table_beta{tag}.csv"
        if not table_path.exists():
            raise ConfigError(f"missing {table_path.name}; run pimd-ecp first")
        table = io.read_force_table(table_path)
        fit = fit_force_polynomial(table, int(eff["degree"]), pot.symmetric)
        result = standard_potential_pipeline(
            fit,
            j_grid,
            q_grid,
            mass=pot.mass,
            error_samples=int(eff["error_samples"]),
        )
        w = result.generating
        w_path = out / f"generating_beta{tag}.csv"
        io._write_rows(
            w_path,
            ["J", "w", "stderr"],
            [
                (io._fmt(j), io._fmt(v), io._fmt(0.0))
                for j, v in zip(w.source_grid, w.values)
            ],
        )
        io._write_sidecar(
            w_path, {"beta": io._beta_str(beta), "tail_mass": w.tail_mass}
        )
        std_path = out / f"standard_beta{tag}.csv"
        io.write_curve(std_path, result.standard)
        params_path = out / f"epac_params_beta{tag}.json"
        with open(params_path, "w") as fh:
            json.dump(
                {
                    "beta": beta,
                    "mass": pot.mass,
                    "omega_beta": result.frequency.omega,
                    "q_min": result.frequency.q_min,
                    "omega_stat_error": result.frequency.stat_error,
                    "omega_window_spread": result.frequency.window_spread,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        outputs.extend(
            [w_path, io.sidecar_path(w_path), std_path, io.sidecar_path(std_path), params_path]
        )
        if w.tail_mass > 0.01:
            print(
                f"note: beta={beta:g} integrand mass outside the sampled window: "
                f"{w.tail_mass:.1%} (polynomial extrapolation in use)"
            )
    return outputs


def stage_cmd(cfg, out: Path):
    outputs = []
    sec = cfg["cmd"]
    seed = int(cfg["run"]["seed"])
    for beta in _betas(cfg):
        tag = _beta_tag(beta)
        ecp_path = out / f"ecp_beta{tag}.csv"
        if not ecp_path.exists():
            raise ConfigError(f"missing {ecp_path.name}; run pimd-ecp first")
        ecp = io.read_curve(ecp_path)
        sys = _system(cfg, beta)
        ensemble = sample_initial_centroids(
            ecp, sys, int(sec["members"]), seed=seed + 1
        )
        from .centroid_dynamics import _frequency_scale

        dt = min(float(sec["dt"]), 0.04 / _frequency_scale(ecp, 1.0))
        series = centroid_correlation(
            ensemble,
            ecp,
            dt=dt,
            t_max=float(sec["t_max"]),
            n_origins=int(sec["origins"]),
        )
        path = out / f"cmd_corr_beta{tag}.csv"
        io.write_correlation(path, series)
        outputs.extend([path, io.sidecar_path(path)])
    return outputs


def stage_epac(cfg, out: Path):
    outputs = []
    times = _times(cfg)
    z_text = cfg["epac"]["z_beta"].strip()
    for beta in _betas(cfg):
        tag = _beta_tag(beta)
        params_path = out / f"epac_params_beta{tag}.json"
        if not params_path.exists():
            raise ConfigError(f"missing {params_path.name}; run legendre first")
        with open(params_path) as fh:
            rec = json.load(fh)
        params = EpacParameters(
            omega_beta=rec["omega_beta"],
            q_min=rec["q_min"],
            mass=rec["mass"],
            beta=beta,
            z_beta=float(z_text) if z_text else None,
        )
        if params.z_beta is None:
            series = epac_correlation(params, times)
        else:
            from .analytic_continuation import epac2_correlation

            series = epac2_correlation(params, times)
        path = out / f"epac_corr_beta{tag}.csv"
        io.write_correlation(path, series)
        lines_path = out / f"epac_lines_beta{tag}.csv"
        io.write_lines(lines_path, epac_spectrum(params.with_z(None)))
        outputs.extend(
            [path, io.sidecar_path(path), lines_path, io.sidecar_path(lines_path)]
        )
    return outputs


def stage_spectra(cfg, out: Path):
    outputs = []
    window = cfg["spectra"]["window"]
    for beta in _betas(cfg):
        tag = _beta_tag(beta)
        for name in ("canonical_corr", "cmd_corr", "epac_corr"):
            src = out / f"{name}_beta{tag}.csv"
            if not src.exists():
                continue
            series = io.read_correlation(src)
            spec = fourier_transform_series(series, window=window)
            path = out / f"{name.replace('_corr', '')}_spectrum_beta{tag}.csv"
            io.write_spectrum(path, spec, {"source": src.name})
            outputs.extend([path, io.sidecar_path(path)])
    return outputs


def stage_compare(cfg, out: Path):
    outputs = []
    for beta in _betas(cfg):
        tag = _beta_tag(beta)
        metrics = {"beta": beta}
        exact_path = out / f"exact_corr_beta{tag}.csv"
        can_path = out / f"canonical_corr_beta{tag}.csv"
        cmd_path = out / f"cmd_corr_beta{tag}.csv"
        epac_path = out / f"epac_corr_beta{tag}.csv"
        if can_path.exists() and cmd_path.exists():
            can = io.read_correlation(can_path)
            cmd_series = io.read_correlation(cmd_path)
            t = cmd_series.times
            can_interp = np.interp(t, can.times, can.values.real)
            dev = np.abs(cmd_series.values.real - can_interp)
            c0 = can.values[0].real
            sel = t <= 2.0
            metrics["cmd_max_dev_t2"] = float(dev[sel].max())
            threshold = 0.1 * c0
            above = dev > threshold
            metrics["cmd_threshold"] = threshold
            metrics["cmd_crossing_time"] = (
                float(t[np.argmax(above)]) if above.any() else None
            )
        if exact_path.exists() and epac_path.exists():
            ex = io.read_correlation(exact_path)
            ac = io.read_correlation(epac_path)
            n = min(ex.times.size, ac.times.size)
            metrics["epac_c0_deviation"] = float(
                abs(ac.values[0].real - ex.values[0].real)
            )
            sel = ex.times[:n] <= 2.0
            metrics["epac_max_dev_t2"] = float(
                np.max(np.abs(ac.values[:n].real - ex.values[:n].real)[sel])
            )
            metrics["exact_c0"] = float(ex.values[0].real)
        path = out / f"compare_beta{tag}.json"
        with open(path, "w") as fh:
            json.dump(metrics, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(path)
    return outputs


def run_self_test() -> int:
    """Closed-form harmonic checks; returns a process exit code."""
    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1

    from .potentials import harmonic

    pot = harmonic()
    sys = SystemParams(beta=1.0)
    eig = solve_eigensystem(pot, sys, DEFAULT_GRID, 10)
    check(
        "harmonic eigenvalues n<10 within 1e-6",
        bool(np.max(np.abs(eig.energies - (np.arange(10) + 0.5))) < 1e-6),
    )
    check(
        "harmonic <0|q|1> = 1/sqrt(2) within 1e-6",
        abs(eig.q_elements[0, 1] - 1.0 / math.sqrt(2.0)) < 1e-6,
    )
    ref = harmonic_reference(32)
    c0 = exact_correlation(ref, 1.0, [0.0]).values[0]
    check(
        "C(0) = (1/2) coth(1/2) within 1e-8",
        abs(c0 - 0.5 / math.tanh(0.5)) < 1e-8,
    )
    ccan0 = exact_canonical_correlation(ref, 1.0, [0.0]).values[0]
    check("canonical C(0) = 1 within 1e-8", abs(ccan0 - 1.0) < 1e-8)
    lines = exact_spectrum(ref, 1.0)
    ratio = lines.weight_at(-1.0) / lines.weight_at(1.0)
    check(
        "detailed balance e^{-beta omega} within 1e-10",
        abs(ratio - math.exp(-1.0)) < 1e-10,
    )
    check("E(0) = 1", kubo_factor(0.0, 1.0) == 1.0)
    return 4 if failures else 0


_STAGES = {
    "solve-exact": stage_solve_exact,
    "pimd-ecp": stage_pimd_ecp,
    "legendre": stage_legendre,
    "cmd": stage_cmd,
    "epac": stage_epac,
    "spectra": stage_spectra,
    "compare": stage_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epac",
        description="effective potential analytic continuation workbench",
    )
    sub = parser.add_subparsers(dest="stage", required=True)
    for name in _STAGES:
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "solve-exact"))
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--scale", choices=("ci", "paper"), default=None)
        if name == "solve-exact":
            p.add_argument("--self-test", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.stage == "solve-exact" and getattr(args, "self_test", False):
        return run_self_test()
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.out is not None:
        overrides["run.out"] = args.out
    if args.scale is not None:
        overrides["run.scale"] = args.scale
    try:
        if args.config is None:
            raise ConfigError("--config is required")
        cfg = load_config(args.config, overrides)
        out = Path(cfg["run"]["out"])
        out.mkdir(parents=True, exist_ok=True)
        outputs = _STAGES[args.stage](cfg, out)
        manifest = io.write_manifest(
            out, args.stage, cfg, int(cfg["run"]["seed"]), outputs
        )
        print(f"{args.stage}: wrote {len(outputs)} artifacts, {manifest.name}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EpacError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
