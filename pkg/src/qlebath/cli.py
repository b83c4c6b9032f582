"""Command-line front end: config-driven sweeps with CSV + JSON artifacts.

Every run writes a CSV table and a JSON sidecar into the output directory.
The sidecar is the fully resolved config (so it re-loads as a valid config
reproducing the run) plus a "meta" object holding package and dependency
versions, achieved tolerances, and the command's summary result.

Exit codes: 0 success, 2 invalid config or arguments, 3 numerical failure.
Failures print a single line "error: <kind>: <detail>" on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np
import scipy

from ._version import __version__
from . import bath_sim, diffusion, motion, thermo
from .config import RunConfig, load_config
from .errors import ConfigError, QlebathError
from .response import poles_and_causality, susceptibility


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(cell) for cell in row))
    return "\n".join(lines) + "\n"


def _write_artifacts(cfg: RunConfig, header, rows, meta: dict) -> None:
    os.makedirs(cfg.out_dir, exist_ok=True)
    csv_path = os.path.join(cfg.out_dir, cfg.output["csv"])
    _atomic_write_text(csv_path, _csv_text(header, rows))
    sidecar = cfg.to_json()
    sidecar["meta"] = {
        "package": "qlebath",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        **meta,
    }
    json_path = os.path.join(cfg.out_dir, cfg.output["json"])
    _atomic_write_text(json_path, json.dumps(sidecar, indent=2) + "\n")


def _dim_factor(cfg: RunConfig) -> float:
    """Multiplier applied to one-dimensional quantities (3 in 3D)."""
    return 3.0 if cfg.dim == 3 else 1.0


def _run_susceptibility(cfg: RunConfig) -> dict:
    kernel, model = cfg.kernel(), cfg.model()
    rows = []
    for omega in cfg.grid("omega"):
        alpha = susceptibility(kernel, model, complex(omega, 0.0))
        rows.append((omega, alpha.real, alpha.imag))
    _write_artifacts(cfg, ("omega", "re_alpha", "im_alpha"), rows,
                     {"result": {"points": len(rows)}})
    return {}


def _run_causality(cfg: RunConfig) -> dict:
    kernel, model = cfg.kernel(), cfg.model()
    report = poles_and_causality(kernel, model)
    rows = [(z.real, z.imag) for z in report.poles]
    _write_artifacts(cfg, ("re_pole", "im_pole"), rows,
                     {"result": report.to_json()})
    return report.to_json()


def _thermo_rows(cfg: RunConfig, use_shift_route: bool):
    kernel, model = cfg.kernel(), cfg.model()
    temps = cfg.grid("T")
    allow = cfg.options.get("allow_acausal", False)
    factor = _dim_factor(cfg)
    k = cfg.constants

    values = np.empty(temps.size)
    baselines = np.empty(temps.size)
    errors = np.empty(temps.size)
    for i, T in enumerate(temps):
        baselines[i] = thermo.oscillator_free_energy(model.omega_0, T, k)
        if use_shift_route:
            values[i], errors[i] = thermo.free_energy_shift(
                kernel, model, T, rtol=cfg.tolerance, allow_acausal=allow)
        else:
            values[i], errors[i] = thermo.coupled_free_energy(
                kernel, model, T, rtol=cfg.tolerance, allow_acausal=allow)

    if use_shift_route:
        shifts = values
        f0 = baselines + shifts
        deriv_source = shifts        # derivatives of the shift itself
    else:
        f0 = values
        shifts = f0 - baselines
        deriv_source = f0

    derivs = None
    deriv_note = None
    if temps.size >= 5:
        curve = thermo.FreeEnergyCurve(
            temperatures=temps, values=deriv_source, errors=errors,
            kernel_meta=kernel.to_json(), model_meta=model.to_json())
        try:
            derivs = thermo.thermo_derivatives(curve)
        except QlebathError as exc:
            deriv_note = str(exc)
    else:
        deriv_note = "need at least 5 temperatures for derivatives"

    nan = float("nan")
    rows = []
    for i, T in enumerate(temps):
        U = derivs["U"][i] if derivs is not None else nan
        S = derivs["S"][i] if derivs is not None else nan
        C = derivs["C"][i] if derivs is not None else nan
        rows.append((T, factor * f0[i], factor * baselines[i],
                     factor * shifts[i], factor * U, factor * S, factor * C,
                     factor * errors[i]))

    result = {"max_quad_error": float(np.max(errors))}
    if deriv_note is not None:
        result["derivatives"] = deriv_note
    if model.K > 0:
        c_fit = thermo.fit_quadratic_coefficient(temps, shifts)
        result["t2_coefficient"] = factor * c_fit
        if kernel.variant == "blackbody":
            # shift = c T^2, so the closed-form coefficient is the shift at T = 1
            result["t2_closed_form"] = thermo.bbr_shift_closed_form(
                1.0, model, dimensions=cfg.dim)
    return rows, result


def _run_free_energy(cfg: RunConfig) -> dict:
    rows, result = _thermo_rows(cfg, use_shift_route=False)
    _write_artifacts(cfg, ("T", "F0", "baseline", "shift", "U", "S", "C",
                           "quad_error"), rows, {"result": result})
    return result


def _run_shift(cfg: RunConfig) -> dict:
    rows, result = _thermo_rows(cfg, use_shift_route=True)
    _write_artifacts(cfg, ("T", "F0", "baseline", "shift", "U", "S", "C",
                           "quad_error"), rows, {"result": result})
    return result


def _run_welton(cfg: RunConfig) -> dict:
    model = cfg.model()
    k = cfg.constants
    factor = _dim_factor(cfg) / 3.0   # the stored integrand is the 3D form
    rows = []
    max_rel = 0.0
    for T in cfg.grid("T"):
        value, err = thermo.welton_energy(T, model.M, k, rtol=cfg.tolerance)
        closed = thermo.welton_closed_form(T, model.M, k)
        if closed != 0.0:
            max_rel = max(max_rel, abs(value - closed) / abs(closed))
        rows.append((T, factor * value, factor * closed, factor * err))
    _write_artifacts(cfg, ("T", "welton_energy", "closed_form", "quad_error"),
                     rows, {"result": {"max_rel_dev_vs_closed_form": max_rel}})
    return {}


def _build_force(spec: dict) -> motion.ForceSignal:
    ftype = spec["type"]
    if ftype == "zero":
        return motion.zero_force()
    if ftype == "constant_ramp":
        return motion.constant_with_ramp(spec["f0"], spec["t_ramp"])
    if ftype == "sinusoid":
        return motion.sinusoid(spec["f0"], spec["omega"])
    return motion.gaussian_pulse(spec["f0"], spec["t0"], spec["sigma"])


def _run_electron_motion(cfg: RunConfig) -> dict:
    model = cfg.model()
    t_grid = cfg.grid("t")
    sig = _build_force(cfg.options["force"])
    x0 = cfg.options["x0"]
    v0 = cfg.options["v0"]
    a0 = cfg.options["a0"]
    integrator = cfg.options["integrator"]
    if integrator == "point-limit":
        traj = motion.integrate_point_limit(sig, model, t_grid, x0=x0, v0=v0)
    elif integrator == "bounded-al":
        traj = motion.bounded_al_trajectory(sig, model, t_grid, x0=x0, v0=v0)
    else:
        variant = "cutoff" if integrator == "cutoff" else "abraham_lorentz"
        traj = motion.integrate_third_order(sig, model, t_grid, x0=x0, v0=v0,
                                            a0=a0, variant=variant)
    nan = float("nan")
    a = traj.a if traj.a is not None else [nan] * len(traj.times)
    rows = list(zip(traj.times, traj.x, traj.v, a))
    _write_artifacts(cfg, ("t", "x", "v", "a"), rows,
                     {"result": traj.summary_json()})
    return traj.summary_json()


def _run_diffusion(cfg: RunConfig) -> dict:
    kernel, model = cfg.kernel(), cfg.model()
    T = cfg.options["T"]
    classical = cfg.options["classical"]
    if "t" in cfg.grids:
        times = cfg.grid("t")
    else:
        times = np.geomspace(10.0 / kernel.scale, 100.0 / kernel.scale, 21)
    curve = diffusion.msd_curve(kernel, model, T, times, classical=classical)
    tags = diffusion.regime_tag(curve)
    report = diffusion.report_from_curve(curve)
    rows = list(zip(curve.times, curve.values, tags))
    _write_artifacts(cfg, ("t", "msd", "regime_tag"), rows,
                     {"result": report.to_json()})
    return report.to_json()


def _run_oracle(cfg: RunConfig) -> dict:
    kernel, model = cfg.kernel(), cfg.model()
    opts = cfg.options
    omega_max = opts["omega_max"]
    if omega_max is None:
        omega_max = 16.0 * kernel.scale
    oscillators = bath_sim.discretize_bath(kernel, opts["N"], omega_max)
    t_grid = cfg.grid("t")
    ens = bath_sim.simulate_classical_io(
        oscillators, model, opts["T"], t_grid, opts["n_traj"], cfg.seed,
        freeze_particle=opts["freeze_particle"])

    if "dump" in cfg.output:
        os.makedirs(cfg.out_dir, exist_ok=True)
        dump_path = os.path.join(cfg.out_dir, cfg.output["dump"])
        tmp = dump_path + ".tmp"
        bath_sim.dump_ensemble(ens, tmp)
        os.replace(tmp, dump_path)

    t_rec = bath_sim.recurrence_time(oscillators)
    if opts["freeze_particle"]:
        report = bath_sim.force_autocorrelation_check(ens, oscillators, kernel)
        rows = list(zip(report.times, report.estimate, report.stderr,
                        report.target))
        result = {**report.to_json(), "t_rec": t_rec}
        _write_artifacts(cfg, ("t", "facf_mean", "facf_stderr", "facf_target"),
                         rows, {"result": result})
        return result
    times, mean, stderr = bath_sim.ensemble_msd(ens)
    rows = list(zip(times, mean, stderr))
    result = {"n_traj": ens.n_traj, "N_bath": ens.N_bath, "t_rec": t_rec}
    _write_artifacts(cfg, ("t", "msd_mean", "msd_stderr"), rows,
                     {"result": result})
    return result


_RUNNERS = {
    "susceptibility": _run_susceptibility,
    "causality": _run_causality,
    "free-energy": _run_free_energy,
    "shift": _run_shift,
    "welton": _run_welton,
    "electron-motion": _run_electron_motion,
    "diffusion": _run_diffusion,
    "oracle": _run_oracle,
}


def run(cfg: RunConfig) -> int:
    """Execute a validated config; returns the process exit status."""
    runner = _RUNNERS.get(cfg.command)
    if runner is None:
        print(f"error: config: unknown command '{cfg.command}'",
              file=sys.stderr)
        return 2
    try:
        runner(cfg)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except (QlebathError, ValueError, OverflowError,
            FloatingPointError) as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qlebath",
        description="Heat-bath response, thermodynamics, radiation reaction, "
                    "diffusion, and microscopic-oracle sweeps.")
    parser.add_argument("--config", required=True,
                        help="path to a JSON run configuration")
    parser.add_argument("--out", default=None, metavar="DIR",
                        help="output directory (overrides config out_dir)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--units", choices=("dimensionless", "cgs"),
                        default=None, help="override the unit system")
    parser.add_argument("--dim", type=int, choices=(1, 3), default=None,
                        help="override the dimension convention")
    args = parser.parse_args(argv)

    overrides = {"out_dir": args.out, "seed": args.seed,
                 "units": args.units, "dim": args.dim}
    try:
        cfg = load_config(args.config, overrides=overrides)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
