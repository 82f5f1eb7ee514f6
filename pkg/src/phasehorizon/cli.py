"""Command-line front end.

    phasehorizon run <config> [--out-dir D] [--method M] [--tol R] [--threads N] [--svg/--no-svg]
    phasehorizon reproduce [--out-dir D]
    phasehorizon fig1 [--range a,b] [--samples N] [--knots a,b] [--out-dir D] [--svg/--no-svg]
    phasehorizon fit [--knots a,b]

Exit codes: 0 success, 1 validation failure, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .config import ConfigError, ScenarioConfig, parse_config
from .dispersion import (
    FUSED_SILICA,
    REFERENCE_PULSE_SPEED,
    DispersionError,
    emit_fig1_table,
    fit_massive_model,
    phase_horizon_band,
)
from .filament import (
    CoverageError,
    FilamentPulse,
    RadialDomainError,
    cylinder_mode,
    lab_wavevector,
    pairs_to_csv,
    substructure_profile,
    total_probability,
)
from .numerics import ConvergenceError
from .planar import PlanarModel, PlanarScenario, Spectrum, spectrum_sweep
from .reproduce import SCHEMA_VERSION, reproduce_reference_numbers, write_report
from .svg import emit_plot

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


@dataclass
class RunOutcome:
    exit_code: int
    summary: dict
    paths: list[Path] = field(default_factory=list)


def _clean(x):
    """JSON-safe value: non-finite floats become null."""
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def dump_json(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _direction(k_z: float, k_perp: float) -> str:
    return "longitudinal" if abs(k_z) > abs(k_perp) else "perpendicular"


def _config_echo(cfg: ScenarioConfig) -> dict:
    return {
        "geometry": cfg.geometry,
        "model": cfg.model,
        "polarizations": [p.value for p in cfg.polarizations],
        "method": cfg.method,
        "n0": cfg.medium.n0,
        "m0_sq": cfg.medium.m0_sq,
        "dispersion_source": cfg.dispersion_source,
        "fit_knots": list(cfg.fit_knots) if cfg.fit_knots else None,
        "v": cfg.v,
        "amplitude": cfg.amplitude,
        "width": cfg.width,
        "rtol": cfg.tol.rtol,
        "atol": cfg.tol.atol,
    }


def _planar_summary(cfg: ScenarioConfig, spectrum: Spectrum) -> tuple[dict, int]:
    modes = []
    ok_rows = [r for r in spectrum.rows if r.result is not None]
    for r in spectrum.rows:
        modes.append({
            "kappa": r.mode.kappa,
            "k_x": r.mode.k_x,
            "polarization": r.mode.polarization.value,
            "method": r.method,
            "beta_abs2": r.beta_abs2,
            "flag": r.flag,
            "error": r.error,
        })
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_echo(cfg),
        "modes_total": len(spectrum.rows),
        "modes_failed": len(spectrum.rows) - len(ok_rows),
        "modes_below_resolution": sum(r.flag == "below_resolution" for r in ok_rows),
        "modes": modes,
    }
    if ok_rows:
        peak = max(ok_rows, key=lambda r: r.beta_abs2)
        summary["peak"] = {
            "beta_abs2": peak.beta_abs2,
            "kappa": peak.mode.kappa,
            "k_x": peak.mode.k_x,
            "polarization": peak.mode.polarization.value,
            "method": peak.method,
            "omega_lab": peak.omega_lab,
            "k_z_lab": peak.k_z_lab,
            "direction": _direction(peak.k_z_lab, peak.mode.k_x),
        }
        total = sum(r.beta_abs2 for r in ok_rows)
        longi = sum(r.beta_abs2 for r in ok_rows if _direction(r.k_z_lab, r.mode.k_x) == "longitudinal")
        if total > 0:
            frac = longi / total
        else:  # nothing emitted: classify the mode set itself
            frac = sum(_direction(r.k_z_lab, r.mode.k_x) == "longitudinal" for r in ok_rows) / len(ok_rows)
        summary["longitudinal_fraction"] = frac
        summary["emission"] = "emission predominantly longitudinal" if frac > 0.5 else "emission predominantly perpendicular"
    if cfg.method == "both":
        by_mode: dict[tuple, dict] = {}
        for r in ok_rows:
            key = (r.mode.polarization.value, r.mode.kappa, r.mode.k_x)
            by_mode.setdefault(key, {})[r.method] = (r.beta_abs2, r.flag)
        agreement = []
        for (pol, kappa, kx), vals in by_mode.items():
            if "perturbative" in vals and "exact" in vals:
                (pe, pflag), (ex, eflag) = vals["perturbative"], vals["exact"]
                ratio = pe / ex if ex > 0 else (1.0 if pe == 0 else math.inf)
                resolved = "below_resolution" not in (pflag, eflag)
                agreement.append({"polarization": pol, "kappa": kappa, "k_x": kx, "ratio": ratio, "resolved": resolved})
        summary["method_agreement"] = agreement
    code = EXIT_OK if ok_rows or not spectrum.rows else EXIT_NUMERICAL
    return summary, code


def run_planar(cfg: ScenarioConfig) -> RunOutcome:
    model = PlanarModel.INDEX if cfg.model == "index" else PlanarModel.MASS
    scenario = PlanarScenario(model, cfg.medium, cfg.v, cfg.amplitude, cfg.width)
    rows = []
    for pol in cfg.polarizations:
        rows.extend(spectrum_sweep(scenario, cfg.kappa, cfg.k_x, cfg.method, pol, cfg.tol, cfg.threads).rows)
    spectrum = Spectrum(rows)
    summary, code = _planar_summary(cfg, spectrum)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "spectrum.csv", out / "summary.json"]
    spectrum.to_csv(paths[0])
    paths[1].write_text(dump_json(summary), newline="")
    if cfg.svg and any(r.result is not None for r in rows):
        paths.append(out / "spectrum.svg")
        emit_plot(spectrum, "spectrum", paths[-1], log_scale=cfg.log_scale)
        first = scenario.trace(scenario.label(cfg.kappa[0], cfg.k_x[0], cfg.polarizations[0]))
        paths.append(out / "potential.svg")
        emit_plot(first, "potential", paths[-1])
    return RunOutcome(code, summary, paths)


def run_filament(cfg: ScenarioConfig) -> RunOutcome:
    n0 = cfg.medium.n0
    sub = None
    if cfg.substructure is not None:
        s = cfg.substructure
        sub = substructure_profile(
            cfg.amplitude, cfg.width, n0, cfg.v, s.v_ph, math.radians(s.theta_deg), s.omega_in,
            cfg.delta_r, cone_correction=s.cone_correction,
        ).substructure
    pulse = FilamentPulse.from_lab(cfg.amplitude, cfg.width, n0, cfg.v, delta_r=cfg.delta_r, substructure=sub)
    results, amps = [], []
    for pol in cfg.polarizations:
        entry = {"polarization": pol.value}
        try:
            final = cylinder_mode(cfg.medium, kappa=cfg.kappa[0], k_r=cfg.k_r, polarization=pol)
            res = total_probability(final, cfg.k_r_prime, pulse, cfg.v, cfg.threads)
        except CoverageError as exc:
            entry.update(flag="failed", error=str(exc), suggested_grid=list(exc.suggested))
        except RadialDomainError as exc:
            entry.update(flag="failed", error=str(exc), suggested_r_max=exc.suggested_r_max)
        except (ValueError, ConvergenceError) as exc:
            entry.update(flag="failed", error=str(exc))
        else:
            amps.extend(res.amplitudes)
            w, kz, kp = lab_wavevector(final, cfg.v)
            entry.update(
                flag="ok",
                omega=final.omega, kappa=final.kappa, k_r=final.k_r,
                probability_per_length=res.probability_per_length,
                rate_per_lab_time=res.rate_per_lab_time,
                omega_lab=w, k_z_lab=kz, direction=_direction(kz, kp),
            )
            if res.amplitudes:
                best = max(res.amplitudes, key=lambda a: a.abs2_per_length)
                pw, pkz, pkp = lab_wavevector(best.final2, cfg.v)
                entry["peak_partner"] = {
                    "abs2_per_length": best.abs2_per_length,
                    "omega": best.final2.omega, "kappa": best.final2.kappa, "k_r": best.final2.k_r,
                    "omega_lab": pw, "k_z_lab": pkz, "direction": _direction(pkz, pkp),
                }
        results.append(entry)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_echo(cfg) | {"delta_r": cfg.delta_r, "k_r": cfg.k_r, "substructure": sub is not None},
        "sigma_tau": pulse.width_tau,
        "results": results,
        "modes_failed": sum(e["flag"] == "failed" for e in results),
    }
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "pairs.csv", out / "summary.json"]
    pairs_to_csv(amps, paths[0])
    paths[1].write_text(dump_json(summary), newline="")
    ok = any(e["flag"] == "ok" for e in results)
    return RunOutcome(EXIT_OK if ok else EXIT_NUMERICAL, summary, paths)


def run_scenario(cfg: ScenarioConfig) -> RunOutcome:
    return run_planar(cfg) if cfg.geometry == "planar" else run_filament(cfg)


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phasehorizon", description="Particle creation by moving index pulses.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("config", type=Path)
    run.add_argument("--out-dir", type=Path)
    run.add_argument("--method", choices=("perturbative", "exact", "both"))
    run.add_argument("--tol", type=float, help="relative tolerance")
    run.add_argument("--threads", type=int)
    run.add_argument("--svg", action=argparse.BooleanOptionalAction, default=None)

    rep = sub.add_parser("reproduce", help="check the quoted reference numbers")
    rep.add_argument("--out-dir", type=Path)

    fig = sub.add_parser("fig1", help="dispersion table of silica and the fitted massive model")
    fig.add_argument("--range", type=_pair, default=(0.5, 2.0), dest="wl_range")
    fig.add_argument("--samples", type=int, default=301)
    fig.add_argument("--knots", type=_pair, default=(0.7, 1.1))
    fig.add_argument("--out-dir", type=Path, default=Path("."))
    fig.add_argument("--svg", action=argparse.BooleanOptionalAction, default=True)

    fit = sub.add_parser("fit", help="fit the massive model to Sellmeier silica")
    fit.add_argument("--knots", type=_pair, default=(0.7, 1.1))
    return p


def _cmd_run(args) -> int:
    overrides = {}
    if args.out_dir is not None:
        overrides["output.dir"] = str(args.out_dir.resolve())
    if args.method is not None:
        overrides["method"] = args.method
    if args.tol is not None:
        overrides["tolerance.rtol"] = args.tol
    if args.threads is not None:
        overrides["output.threads"] = args.threads
    if args.svg is not None:
        overrides["output.svg"] = args.svg
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as exc:
        where = f" (line {exc.line})" if exc.line else ""
        print(f"invalid config {args.config}{where}:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_INVALID
    try:
        outcome = run_scenario(cfg)
    except (ValueError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for p in outcome.paths:
        print(p)
    return outcome.exit_code


def _cmd_reproduce(args) -> int:
    report = reproduce_reference_numbers()
    print(report.format())
    if args.out_dir is not None:
        for p in write_report(report, args.out_dir):
            print(p)
    return EXIT_OK if report.passed else EXIT_INVALID


def _cmd_fig1(args) -> int:
    try:
        massive = fit_massive_model(FUSED_SILICA, *args.knots)
        table = emit_fig1_table(FUSED_SILICA, massive, args.wl_range, args.samples)
    except DispersionError as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "fig1.csv")
    print(out / "fig1.csv")
    if args.svg:
        emit_plot(table, "dispersion", out / "fig1.svg", title="phase, group and geometric-mean indices")
        print(out / "fig1.svg")
    return EXIT_OK


def _cmd_fit(args) -> int:
    try:
        m = fit_massive_model(FUSED_SILICA, *args.knots)
    except DispersionError as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return EXIT_INVALID
    band = phase_horizon_band(m, 1e-3, REFERENCE_PULSE_SPEED, (0.5, 2.0))
    doc = {
        "schema_version": SCHEMA_VERSION,
        "knots_um": list(args.knots),
        "n0": m.n0,
        "m0_sq": m.m0_sq,
        "phase_horizon_band_um": None if band.empty else [band.lower, band.upper],
    }
    print(dump_json(doc), end="")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "reproduce": _cmd_reproduce, "fig1": _cmd_fig1, "fit": _cmd_fit}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
