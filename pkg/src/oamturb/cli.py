"""Command-line front end: presets, validation runs, and data export.

Subcommands: ph-curve, fidelity-scan, rotation-scan, screen-validate,
calibrate.  Configuration comes from per-command defaults, optionally a
JSON config file (--config; a manifest.json from a previous run is also
accepted), with explicit flags winning.  Every run writes its data files
(CSV/JSON summary) plus a manifest.json recording the resolved config;
re-running with --config manifest.json reproduces the data files bytewise.

Exit codes: 0 success, 1 usage/configuration error, 2 numerical or
statistical failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os.path
import sys

import numpy as np
from scipy.stats import spearmanr

from . import __version__
from .analytic import (
    DEFAULT_STRENGTHS,
    QuadratureConfig,
    ring_coefficients,
    success_probability,
)
from .elements import MUB_LABELS, HybridQubit, mub_states
from .errors import (
    AliasingError,
    OamTurbError,
    RangeError,
    StatisticsError,
    ToleranceError,
)
from .fields import GridSpec
from .montecarlo import (
    ExperimentConfig,
    run_fidelity_scan,
    run_rotation_scan,
)
from .turbulence import (
    TurbulenceParams,
    beam_broadening_mc,
    coherence_estimate,
    fried_from_broadening,
    fried_parameter,
    generate_screen,
    save_screen,
    structure_function,
    structure_function_estimate,
)

_COMMON_DEFAULTS = {
    "seed": 2,
    "grid_n": 256,
    "grid_extent": 8.0,
    "workers": 1,
}

_COMMAND_DEFAULTS: dict[str, dict] = {
    "ph-curve": {
        **_COMMON_DEFAULTS,
        "strengths": list(DEFAULT_STRENGTHS),
        "l": 1,
        "realizations": 500,
        "radial_nodes": 200,
        "angular_nodes": 512,
        "tolerance": 1e-6,
    },
    "fidelity-scan": {
        **_COMMON_DEFAULTS,
        "strengths": list(DEFAULT_STRENGTHS),
        "l": 1,
        "realizations": 500,
    },
    "rotation-scan": {
        **_COMMON_DEFAULTS,
        "strength": 0.6,
        "n_angles": 16,
        "l": 1,
        "realizations": 30,
    },
    "screen-validate": {
        **_COMMON_DEFAULTS,
        "strength": 1.0,
        "realizations": 2000,
        "export_screens": 0,
    },
    "calibrate": {
        **_COMMON_DEFAULTS,
        "grid_n": 512,
        "grid_extent": 16.0,
        "strengths": [0.0, 0.2, 0.6, 1.0, 1.4],
        "realizations": 100,
        "distance": 30.0,
        "wavelength": 0.01,
        "lambda_nm": None,
        "cn2": None,
        "path_m": None,
        "waist_mm": None,
    },
}


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamturb",
        description="Hybrid polarization/OAM qubits through Kolmogorov turbulence: "
        "presets, validation and calibration runs.",
    )
    parser.add_argument("--version", action="version", version=f"oamturb {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--grid-n", type=int, default=None, help="grid samples per axis")
    common.add_argument("--grid-extent", type=float, default=None,
                        help="grid side length in waist units")
    common.add_argument("--realizations", type=int, default=None,
                        help="Monte Carlo realizations (or screens) per cell")
    common.add_argument("--out-dir", default=None, help="output directory")
    common.add_argument("--config", default=None,
                        help="JSON config or a previous run's manifest.json")
    common.add_argument("--workers", type=int, default=None,
                        help="engine worker threads (results are worker-count independent)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ph-curve", parents=[common],
                       help="analytic vs Monte Carlo success probability curve")
    p.add_argument("--strengths", type=_float_list, default=None)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--radial-nodes", type=int, default=None)
    p.add_argument("--angular-nodes", type=int, default=None)
    p.add_argument("--tolerance", type=float, default=None)

    p = sub.add_parser("fidelity-scan", parents=[common],
                       help="MUB-state fidelity vs turbulence strength")
    p.add_argument("--strengths", type=_float_list, default=None)
    p.add_argument("--l", type=int, default=None)

    p = sub.add_parser("rotation-scan", parents=[common],
                       help="fidelity vs receiver frame angle at one strength")
    p.add_argument("--strength", type=float, default=None)
    p.add_argument("--n-angles", type=int, default=None)
    p.add_argument("--l", type=int, default=None)

    p = sub.add_parser("screen-validate", parents=[common],
                       help="phase screen statistics vs theory")
    p.add_argument("--strength", type=float, default=None)
    p.add_argument("--export-screens", type=int, default=None,
                   help="also write the first K screens as CSV")

    p = sub.add_parser("calibrate", parents=[common],
                       help="infer w/r0 from Gaussian beam broadening")
    p.add_argument("--strengths", type=_float_list, default=None)
    p.add_argument("--distance", type=float, default=None,
                   help="propagation distance in waist units")
    p.add_argument("--wavelength", type=float, default=None,
                   help="wavelength in waist units")
    p.add_argument("--lambda-nm", type=float, default=None, dest="lambda_nm",
                   help="physical wavelength (nm); use with --cn2/--path-m/--waist-mm")
    p.add_argument("--cn2", type=float, default=None, help="Cn^2 in m^(-2/3)")
    p.add_argument("--path-m", type=float, default=None, help="path length (m)")
    p.add_argument("--waist-mm", type=float, default=None, help="beam waist (mm)")
    return parser


class _UsageError(Exception):
    pass


def _resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(_COMMAND_DEFAULTS[command])
    cfg["out_dir"] = os.path.join("runs", command.replace("-", "_"))
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _UsageError(f"cannot read config {args.config}: {exc}") from exc
        if isinstance(loaded, dict) and "subcommand" in loaded and "config" in loaded:
            if loaded["subcommand"] != command:
                raise _UsageError(
                    f"manifest is for {loaded['subcommand']!r}, not {command!r}"
                )
            loaded = loaded["config"]
        if not isinstance(loaded, dict):
            raise _UsageError(f"config {args.config} must hold a JSON object")
        unknown = sorted(set(loaded) - set(cfg))
        if unknown:
            raise _UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
        cfg.update(loaded)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return str(value).lower()
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir: str, command: str, cfg: dict) -> None:
    _write_json(os.path.join(out_dir, "manifest.json"), {
        "subcommand": command,
        "config": cfg,
        "master_seed": cfg["seed"],
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    })


def _grid(cfg: dict) -> GridSpec:
    return GridSpec(cfg["grid_n"], cfg["grid_extent"])


def cmd_ph_curve(cfg: dict) -> int:
    grid = _grid(cfg)
    quad = QuadratureConfig(cfg["radial_nodes"], cfg["angular_nodes"], cfg["tolerance"])
    l = int(cfg["l"])
    strengths = sorted(float(s) for s in cfg["strengths"])
    mc_config = ExperimentConfig(
        strengths=tuple(strengths),
        states=(HybridQubit(1, 0, l),),
        state_labels=("0",),
        n_realizations=cfg["realizations"],
        master_seed=cfg["seed"],
        grid=grid,
    )
    mc_rows = run_fidelity_scan(mc_config, n_workers=cfg["workers"])
    rows = []
    ring_half = []
    ring_full = []
    for strength, mc in zip(strengths, mc_rows):
        params = TurbulenceParams(w_over_r0=strength)
        ph = success_probability(params, l, quad)
        rows.append([strength, ph, mc.success_prob.mean, mc.success_prob.stderr])
        # single-radius reduction in both printed kernel variants, for reference
        ring_half.append(ring_coefficients(l, params, quad).c0)
        ring_full.append(ring_coefficients(l, params, quad, full_angle=True).c0)
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    _write_csv(os.path.join(out, "ph_curve.csv"),
               ["w_over_r0", "ph_analytic", "ph_mc_mean", "ph_mc_stderr"], rows)
    gaps = [abs(r[1] - r[2]) / r[1] for r in rows if r[1] > 0]
    _write_json(os.path.join(out, "summary.json"), {
        "config": cfg,
        "n_strengths": len(rows),
        "ph_ring_half_angle_variant": ring_half,
        "ph_ring_full_angle_variant": ring_full,
        "max_relative_gap_mc_vs_analytic": max(gaps),
        "monotone_nonincreasing": all(
            rows[i][1] >= rows[i + 1][1] - 1e-12 for i in range(len(rows) - 1)
        ),
    })
    _write_manifest(out, "ph-curve", cfg)
    return 0


def cmd_fidelity_scan(cfg: dict) -> int:
    grid = _grid(cfg)
    l = int(cfg["l"])
    config = ExperimentConfig(
        strengths=tuple(sorted(float(s) for s in cfg["strengths"])),
        states=tuple(mub_states(l)),
        state_labels=MUB_LABELS,
        n_realizations=cfg["realizations"],
        master_seed=cfg["seed"],
        grid=grid,
    )
    result = run_fidelity_scan(config, n_workers=cfg["workers"])
    rows = [
        [r.w_over_r0, r.state_label, r.fidelity.mean, r.fidelity.stderr,
         r.n_loss / config.n_realizations]
        for r in result
    ]
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    _write_csv(os.path.join(out, "fidelity_scan.csv"),
               ["w_over_r0", "state_label", "fidelity_mean", "fidelity_stderr",
                "loss_rate"], rows)
    means = [r.fidelity.mean for r in result]
    _write_json(os.path.join(out, "summary.json"), {
        "config": cfg,
        "overall_fidelity_mean": float(np.mean(means)),
        "overall_fidelity_dispersion": float(np.std(means)),
        "min_cell_mean": float(np.min(means)),
        "total_losses": int(sum(r.n_loss for r in result)),
    })
    _write_manifest(out, "fidelity-scan", cfg)
    return 0


def cmd_rotation_scan(cfg: dict) -> int:
    grid = _grid(cfg)
    l = int(cfg["l"])
    n_angles = int(cfg["n_angles"])
    if n_angles < 1:
        raise _UsageError("--n-angles must be at least 1")
    angles = tuple(2 * np.pi * k / n_angles for k in range(n_angles))
    config = ExperimentConfig(
        strengths=(float(cfg["strength"]),),
        states=tuple(mub_states(l)),
        state_labels=MUB_LABELS,
        n_realizations=cfg["realizations"],
        master_seed=cfg["seed"],
        grid=grid,
        angles=angles,
    )
    result = run_rotation_scan(config, n_workers=cfg["workers"])
    rows = [[r.theta, r.state_label, r.fidelity.mean, r.fidelity.stderr]
            for r in result]
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    _write_csv(os.path.join(out, "rotation_scan.csv"),
               ["theta", "state_label", "fidelity_mean", "fidelity_stderr"], rows)
    variation = {}
    for label in config.state_labels:
        means = [r.fidelity.mean for r in result if r.state_label == label]
        variation[label] = float(max(means) - min(means))
    all_means = [r.fidelity.mean for r in result]
    _write_json(os.path.join(out, "summary.json"), {
        "config": cfg,
        "fidelity_mean_over_all_points": float(np.mean(all_means)),
        "fidelity_std_over_all_points": float(np.std(all_means)),
        "max_variation_per_state": variation,
        "max_variation": max(variation.values()),
    })
    _write_manifest(out, "rotation-scan", cfg)
    return 0


def cmd_screen_validate(cfg: dict) -> int:
    grid = _grid(cfg)
    strength = float(cfg["strength"])
    n_screens = int(cfg["realizations"])
    params = TurbulenceParams(w_over_r0=strength)
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    screens = [
        generate_screen(params, grid,
                        np.random.SeedSequence(entropy=[int(cfg["seed"]), i]))
        for i in range(n_screens)
    ]
    n_export = int(cfg["export_screens"])
    if n_export > 0:
        os.makedirs(os.path.join(out, "screens"), exist_ok=True)
        for i, s in enumerate(screens[:n_export]):
            save_screen(s, os.path.join(out, "screens", f"screen_{i:04d}.csv"))

    if strength == 0.0:
        peak = max(float(np.max(np.abs(s.phase))) for s in screens)
        _write_csv(os.path.join(out, "structure_function.csv"),
                   ["separation", "d_empirical", "d_stderr", "d_theory"], [])
        _write_csv(os.path.join(out, "coherence.csv"),
                   ["separation", "coherence_empirical", "coherence_stderr",
                    "coherence_theory", "within_3_stderr"], [])
        _write_json(os.path.join(out, "summary.json"), {
            "config": cfg, "passed": True, "zero_turbulence": True,
            "max_abs_phase": peak,
        })
        _write_manifest(out, "screen-validate", cfg)
        return 0

    r0 = 1.0 / strength  # Fried length in waist units
    pitch = grid.pitch
    lags = sorted({
        max(1, int(round(x / pitch)))
        for x in np.geomspace(0.2 * r0, 2.0 * r0, 10)
    } | {int(round(r0 / pitch))})
    seps = [lag * pitch for lag in lags if lag <= grid.n - 1]
    d_emp = structure_function_estimate(screens, seps)
    d_rows = []
    for sep in seps:
        mean, err = d_emp[sep]
        d_rows.append([sep, mean, err, structure_function(sep, params)])
    _write_csv(os.path.join(out, "structure_function.csv"),
               ["separation", "d_empirical", "d_stderr", "d_theory"], d_rows)

    sep_r0 = int(round(r0 / pitch)) * pitch
    d_at_r0 = d_emp[sep_r0][0]
    ratio = d_at_r0 / structure_function(sep_r0, params)
    logs = np.log([row[0] for row in d_rows])
    logd = np.log([row[1] for row in d_rows])
    slope = float(np.polyfit(logs, logd, 1)[0])

    coh_seps = seps[:: max(1, len(seps) // 5)]
    coh_emp = coherence_estimate(screens, coh_seps)
    coh_rows = []
    coh_ok = True
    for sep in coh_seps:
        mean, err = coh_emp[sep]
        theory = float(np.exp(-structure_function(sep, params) / 2))
        ok = abs(mean - theory) <= 3 * err
        coh_ok = coh_ok and ok
        coh_rows.append([sep, mean, err, theory, ok])
    _write_csv(os.path.join(out, "coherence.csv"),
               ["separation", "coherence_empirical", "coherence_stderr",
                "coherence_theory", "within_3_stderr"], coh_rows)

    d_ok = abs(ratio - 1.0) <= 0.10
    slope_ok = abs(slope - 5 / 3) <= 0.10
    passed = d_ok and slope_ok and coh_ok
    _write_json(os.path.join(out, "summary.json"), {
        "config": cfg,
        "d_at_r0": d_at_r0,
        "d_at_r0_ratio_to_theory": ratio,
        "d_ratio_ok": d_ok,
        "loglog_slope": slope,
        "slope_ok": slope_ok,
        "coherence_ok": coh_ok,
        "passed": passed,
    })
    _write_manifest(out, "screen-validate", cfg)
    if not passed:
        print("screen-validate: statistics outside tolerance bands "
              f"(D ratio {ratio:.4f}, slope {slope:.4f}, coherence ok={coh_ok})",
              file=sys.stderr)
        return 2
    return 0


def cmd_calibrate(cfg: dict) -> int:
    grid = _grid(cfg)
    physical = {k: cfg[k] for k in ("lambda_nm", "cn2", "path_m", "waist_mm")}
    given = [k for k, v in physical.items() if v is not None]
    physical_echo = None
    strengths = [float(s) for s in cfg["strengths"]]
    if given:
        if len(given) < 4:
            raise _UsageError(
                "physical units need all of --lambda-nm, --cn2, --path-m, --waist-mm"
            )
        r0_m = fried_parameter(physical["lambda_nm"] * 1e-9, physical["cn2"],
                               physical["path_m"])
        w_over_r0 = (physical["waist_mm"] * 1e-3) / r0_m
        physical_echo = {"r0_m": r0_m, "w_over_r0": w_over_r0}
        strengths = sorted(set(strengths) | {w_over_r0})
    distance = float(cfg["distance"])
    wavelength = float(cfg["wavelength"])
    n_real = int(cfg["realizations"])
    seed = int(cfg["seed"])

    reference, _ = beam_broadening_mc(
        TurbulenceParams(w_over_r0=0.0), n_real, distance, wavelength, seed, grid
    )
    rows = []
    failures = []
    for s in sorted(strengths):
        try:
            w_t, err = beam_broadening_mc(
                TurbulenceParams(w_over_r0=s), n_real, distance, wavelength, seed, grid
            )
        except AliasingError as exc:
            failures.append({"w_over_r0": s, "error": str(exc)})
            continue
        inferred = fried_from_broadening(max(w_t, reference), reference)
        rows.append([s, w_t, err, inferred])
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    _write_csv(os.path.join(out, "calibration.csv"),
               ["w_over_r0_true", "w_t_over_w", "w_t_stderr", "w_over_r0_inferred"],
               rows)
    true_vals = [r[0] for r in rows]
    inferred_vals = [r[3] for r in rows]
    if len(rows) >= 3:
        rho = float(spearmanr(true_vals, inferred_vals).statistic)
    else:
        rho = float("nan")
    monotone = all(inferred_vals[i] <= inferred_vals[i + 1] + 1e-12
                   for i in range(len(inferred_vals) - 1))
    summary = {
        "config": cfg,
        "reference_width_over_w": reference,
        "spearman_rho": rho,
        "monotone_nondecreasing": monotone,
        "operating_range_w_over_r0": "0-1.4",
        "guard_failures": failures,
    }
    if physical_echo is not None:
        summary["physical_conversion"] = physical_echo
    _write_json(os.path.join(out, "summary.json"), summary)
    _write_manifest(out, "calibrate", cfg)
    if failures:
        print(f"calibrate: {len(failures)} cell(s) hit the propagation guard",
              file=sys.stderr)
        return 2
    return 0


_COMMANDS = {
    "ph-curve": cmd_ph_curve,
    "fidelity-scan": cmd_fidelity_scan,
    "rotation-scan": cmd_rotation_scan,
    "screen-validate": cmd_screen_validate,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        cfg = _resolve_config(args.command, args)
    except (_UsageError, RangeError) as exc:
        print(f"oamturb {args.command}: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](cfg)
    except _UsageError as exc:
        print(f"oamturb {args.command}: {exc}", file=sys.stderr)
        return 1
    except (ToleranceError, StatisticsError, AliasingError) as exc:
        print(f"oamturb {args.command}: {exc}", file=sys.stderr)
        return 2
    except OamTurbError as exc:
        print(f"oamturb {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
