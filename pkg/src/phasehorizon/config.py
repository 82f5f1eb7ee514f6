"""Scenario files.

A scenario is a TOML document.  Grammar (all wavenumbers and frequencies in
1/um, lengths in um, angles in degrees):

    geometry     = "planar" | "filament"
    model        = "index" | "mass"            # planar only; filament is always "mass"
    polarization = "A" | "Lambda" | "both"
    method       = "perturbative" | "exact" | "both"   # planar only

    [dispersion]                 # exactly one of the two forms
    knots = [0.7, 1.1]           # fit the massive model to Sellmeier silica
    # n0 = 1.4595
    # m0_sq = 0.208

    [pulse]
    v = 0.688                    # pulse speed, units of c0
    delta_n0 = 1e-3              # model "index"; or model "mass" together with wavelength
    delta_m0 = -0.06             # model "mass" (A-field mass change, 1/um)
    wavelength = 1.0             # free-space wavelength for delta_n0 -> delta_m0
    delta_tau = 10.0             # envelope standard deviation in tau (planar)
    delta_t = 10.0               # envelope standard deviation in lab time (filament)
    delta_r = 2.0                # radial standard deviation (filament)

    [pulse.substructure]         # filament only, optional
    enabled = true
    omega_in = 5.927
    theta = 6.5
    v_ph = 0.6944
    cone_correction = false

    [grid]                       # planar
    kappa = [0.1, 0.2]           # list, or {start, stop, num, spacing = "linear" | "log"}
    k_x = [0.0]
    # filament
    # k_r = 0.5                  # outgoing mode; with kappa (scalar)
    # kappa = 0.0
    # k_r_prime = {start = 0.01, stop = 6.0, num = 200}

    [tolerance]
    rtol = 1e-10
    atol = 1e-12

    [output]
    dir = "out"
    svg = true
    log_scale = true
    threads = 1

Parsing collects every violation before reporting.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import tomli

from .dispersion import (
    FUSED_SILICA,
    SELLMEIER_WINDOW,
    DispersionError,
    MassiveField,
    fit_massive_model,
)
from .frames import GaussianProfile, Polarization, PulseKinematics, RegularityError
from .numerics import Tolerance

GEOMETRIES = ("planar", "filament")
MODELS = ("index", "mass")
METHODS = ("perturbative", "exact", "both")
POLARIZATIONS = {"a": "A", "lambda": "Lambda", "λ": "Lambda", "both": "both"}


class ConfigError(ValueError):
    """Unreadable or invalid scenario; ``violations`` lists every problem found."""

    def __init__(self, violations: list[str], line: int | None = None):
        self.violations = list(violations)
        self.line = line
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class SubstructureConfig:
    omega_in: float
    theta_deg: float
    v_ph: float
    cone_correction: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: str
    model: str
    polarizations: tuple[Polarization, ...]
    method: str
    medium: MassiveField
    dispersion_source: str  # "fit" or "explicit"
    v: float
    amplitude: float  # delta_n0 (index) or A-field delta_m0 (mass)
    width: float  # sigma_tau (planar) or sigma_t (filament)
    delta_r: float = 2.0
    substructure: SubstructureConfig | None = None
    kappa: tuple[float, ...] = ()
    k_x: tuple[float, ...] = ()
    k_r: float | None = None
    k_r_prime: tuple[float, ...] = ()
    tol: Tolerance = field(default_factory=Tolerance)
    out_dir: Path = Path("out")
    svg: bool = True
    log_scale: bool = True
    threads: int = 1
    source: Path | None = None
    fit_knots: tuple[float, float] | None = None


def load_toml(path: str | Path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError([f"config file not found: {p}"])
    try:
        return tomli.loads(p.read_text())
    except tomli.TOMLDecodeError as exc:
        line = _decode_line(str(exc))
        raise ConfigError([f"parse error: {exc}"], line) from None
    except UnicodeDecodeError as exc:
        raise ConfigError([f"config is not UTF-8 text: {exc}"]) from None


def _decode_line(message: str) -> int | None:
    # tomli reports "... (at line L, column C)"
    marker = "at line "
    i = message.rfind(marker)
    if i < 0:
        return None
    digits = ""
    for ch in message[i + len(marker):]:
        if not ch.isdigit():
            break
        digits += ch
    return int(digits) if digits else None


def parse_config(path: str | Path, overrides: dict | None = None) -> ScenarioConfig:
    """Read and validate a scenario; raise ConfigError listing all violations.

    ``overrides`` maps dotted keys ("method", "tolerance.rtol", "output.dir",
    ...) to values applied before validation, as the CLI flags do.
    """
    raw = load_toml(path)
    for key, value in (overrides or {}).items():
        *parents, leaf = key.split(".")
        node = raw
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return validate(raw, source=Path(path))


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def fail(self, msg: str):
        self.errors.append(msg)

    def table(self, raw: dict, key: str, required: bool = True) -> dict:
        val = raw.get(key)
        if val is None:
            if required:
                self.fail(f"missing section [{key}]")
            return {}
        if not isinstance(val, dict):
            self.fail(f"[{key}] must be a table")
            return {}
        return val

    def choice(self, raw: dict, key: str, options, default=None, where: str = "") -> str | None:
        val = raw.get(key, default)
        name = f"{where}{key}"
        if val is None:
            self.fail(f"missing key '{name}'")
            return None
        if not isinstance(val, str) or val.lower() not in options:
            self.fail(f"'{name}' must be one of {', '.join(options)}; got {val!r}")
            return None
        return val.lower()

    def number(self, raw: dict, key: str, where: str, required: bool = True, default=None) -> float | None:
        name = f"{where}.{key}"
        if key not in raw:
            if required:
                self.fail(f"missing key '{name}'")
            return default
        val = raw[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            self.fail(f"'{name}' must be a finite number; got {val!r}")
            return None
        return float(val)

    def flag(self, raw: dict, key: str, where: str, default: bool) -> bool:
        val = raw.get(key, default)
        if not isinstance(val, bool):
            self.fail(f"'{where}.{key}' must be true or false; got {val!r}")
            return default
        return val

    def grid(self, raw: dict, key: str, where: str, required: bool = True) -> tuple[float, ...]:
        name = f"{where}.{key}"
        if key not in raw:
            if required:
                self.fail(f"missing key '{name}'")
            return ()
        val = raw[key]
        if isinstance(val, (int, float)) and not isinstance(val, bool):
            val = [val]
        if isinstance(val, list):
            if not val:
                self.fail(f"'{name}' must not be empty")
                return ()
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) for x in val):
                self.fail(f"'{name}' must contain finite numbers only")
                return ()
            return tuple(float(x) for x in val)
        if isinstance(val, dict):
            missing = [k for k in ("start", "stop", "num") if k not in val]
            if missing:
                self.fail(f"'{name}' range is missing {', '.join(missing)}")
                return ()
            start, stop, num = val["start"], val["stop"], val["num"]
            spacing = val.get("spacing", "linear")
            if not isinstance(num, int) or isinstance(num, bool) or num < 1:
                self.fail(f"'{name}.num' must be a positive integer")
                return ()
            if spacing not in ("linear", "log"):
                self.fail(f"'{name}.spacing' must be linear or log")
                return ()
            try:
                start, stop = float(start), float(stop)
            except (TypeError, ValueError):
                self.fail(f"'{name}' start/stop must be numbers")
                return ()
            if spacing == "log":
                if start <= 0 or stop <= 0:
                    self.fail(f"'{name}' log spacing needs positive start and stop")
                    return ()
                pts = np.geomspace(start, stop, num)
            else:
                pts = np.linspace(start, stop, num)
            return tuple(float(x) for x in pts)
        self.fail(f"'{name}' must be a number, a list or a {{start, stop, num}} table")
        return ()


def _writable(path: Path) -> bool:
    p = path.resolve()
    while not p.exists():
        p = p.parent
    return p.is_dir() and os.access(p, os.W_OK)


def validate(raw: dict[str, Any], source: Path | None = None) -> ScenarioConfig:
    """Turn a decoded document into a ScenarioConfig, checking every engine precondition."""
    ck = _Checker()
    known = {"geometry", "model", "polarization", "method", "dispersion", "pulse", "grid", "tolerance", "output"}
    for key in sorted(set(raw) - known):
        ck.fail(f"unknown key '{key}'")

    geometry = ck.choice(raw, "geometry", GEOMETRIES)
    model = ck.choice(raw, "model", MODELS, default="mass" if geometry == "filament" else None)
    if geometry == "filament" and model == "index":
        ck.fail("filament geometry supports model 'mass' only")
    pol_key = ck.choice(raw, "polarization", tuple(POLARIZATIONS), default="A")
    pols: tuple[Polarization, ...] = ()
    if pol_key is not None:
        name = POLARIZATIONS[pol_key]
        pols = (Polarization.A, Polarization.LAMBDA) if name == "both" else (Polarization(name),)
    method = ck.choice(raw, "method", METHODS, default="perturbative")

    # dispersion
    disp = ck.table(raw, "dispersion")
    medium, source_kind, knots = None, None, None
    has_knots = "knots" in disp
    has_explicit = "n0" in disp or "m0_sq" in disp
    if disp and has_knots == has_explicit:
        ck.fail("[dispersion] needs either 'knots' or both 'n0' and 'm0_sq'")
    elif has_knots:
        k = disp["knots"]
        if not (isinstance(k, list) and len(k) == 2 and all(isinstance(x, (int, float)) for x in k)):
            ck.fail("'dispersion.knots' must be a list of two wavelengths")
        else:
            lo, hi = SELLMEIER_WINDOW
            if not all(lo <= x <= hi for x in k):
                ck.fail(f"'dispersion.knots' must lie in the Sellmeier window [{lo}, {hi}] um")
            else:
                try:
                    medium = fit_massive_model(FUSED_SILICA, *k)
                    source_kind, knots = "fit", (float(k[0]), float(k[1]))
                except DispersionError as exc:
                    ck.fail(f"dispersion fit: {exc}")
    elif has_explicit:
        n0 = ck.number(disp, "n0", "dispersion")
        m0_sq = ck.number(disp, "m0_sq", "dispersion")
        if n0 is not None and m0_sq is not None:
            try:
                medium, source_kind = MassiveField(n0, m0_sq), "explicit"
            except DispersionError as exc:
                ck.fail(f"dispersion: {exc}")

    # pulse
    pulse = ck.table(raw, "pulse")
    v = ck.number(pulse, "v", "pulse") if pulse else None
    if v is not None:
        if v >= 1:
            ck.fail("pulse speed must be subluminal in vacuum (v < 1)")
            v = None
        elif v <= 0:
            ck.fail("pulse speed must be positive")
            v = None

    amplitude = None
    if pulse and model == "index":
        amplitude = ck.number(pulse, "delta_n0", "pulse")
        if "delta_m0" in pulse:
            ck.fail("'pulse.delta_m0' does not apply to model 'index'")
    elif pulse and model == "mass":
        if "delta_m0" in pulse and "delta_n0" in pulse:
            ck.fail("give either 'pulse.delta_m0' or 'pulse.delta_n0' with 'pulse.wavelength', not both")
        elif "delta_m0" in pulse:
            amplitude = ck.number(pulse, "delta_m0", "pulse")
        elif "delta_n0" in pulse:
            dn = ck.number(pulse, "delta_n0", "pulse")
            lam = ck.number(pulse, "wavelength", "pulse")
            if lam is not None and lam <= 0:
                ck.fail("'pulse.wavelength' must be positive")
            elif dn is not None and lam is not None and medium is not None:
                from .planar import delta_m_from_delta_n

                try:
                    amplitude = delta_m_from_delta_n(dn, 2 * math.pi / lam, medium)
                except DispersionError as exc:
                    ck.fail(f"delta_n0 conversion: {exc}")
        else:
            ck.fail("missing key 'pulse.delta_m0' (or 'pulse.delta_n0' with 'pulse.wavelength')")

    width_key = "delta_t" if geometry == "filament" else "delta_tau"
    width = ck.number(pulse, width_key, "pulse") if pulse else None
    if width is not None and width <= 0:
        ck.fail(f"'pulse.{width_key}' must be positive")
        width = None
    delta_r = ck.number(pulse, "delta_r", "pulse", required=False, default=2.0) if pulse else 2.0
    if delta_r is not None and delta_r <= 0:
        ck.fail("'pulse.delta_r' must be positive")

    sub = None
    sub_raw = pulse.get("substructure") if pulse else None
    if sub_raw is not None:
        if not isinstance(sub_raw, dict):
            ck.fail("[pulse.substructure] must be a table")
        elif ck.flag(sub_raw, "enabled", "pulse.substructure", True):
            if geometry != "filament":
                ck.fail("substructure is supported for the filament geometry only")
            w_in = ck.number(sub_raw, "omega_in", "pulse.substructure")
            theta = ck.number(sub_raw, "theta", "pulse.substructure")
            v_ph = ck.number(sub_raw, "v_ph", "pulse.substructure")
            cone = ck.flag(sub_raw, "cone_correction", "pulse.substructure", False)
            ok = True
            if w_in is not None and w_in <= 0:
                ck.fail("'pulse.substructure.omega_in' must be positive")
                ok = False
            if theta is not None and not 0 <= theta < 90:
                ck.fail("'pulse.substructure.theta' must lie in [0, 90) degrees")
                ok = False
            if v_ph is not None and not 0 < v_ph < 1:
                ck.fail("'pulse.substructure.v_ph' must lie in (0, 1)")
                ok = False
            if ok and None not in (w_in, theta, v_ph):
                sub = SubstructureConfig(w_in, theta, v_ph, cone)

    # engine preconditions that couple several keys
    if medium is not None and v is not None:
        if geometry == "planar" and model == "index" and amplitude is not None and width is not None:
            try:
                PulseKinematics(v, GaussianProfile(medium.n0, amplitude, width)).check_regular()
            except RegularityError as exc:
                ck.fail(f"comoving frame singular: {exc}")
            if medium.n0 + min(amplitude, 0.0) <= 1:
                ck.fail("index must stay above 1 inside the pulse")
        elif (medium.n0 * v) ** 2 <= 1:
            ck.fail(f"comoving frame singular: n0^2 v^2 = {(medium.n0 * v) ** 2:.6g} is not above 1")
        if model == "mass" and amplitude is not None and medium.m0 + min(amplitude, 0.0) <= 0:
            ck.fail("mass must stay positive inside the pulse (m0 + delta_m0 > 0)")

    # grids
    grid = ck.table(raw, "grid")
    kappa = k_x = k_r_prime = ()
    k_r = None
    if grid and geometry == "planar":
        kappa = ck.grid(grid, "kappa", "grid")
        k_x = ck.grid(grid, "k_x", "grid")
    elif grid and geometry == "filament":
        k_r = ck.number(grid, "k_r", "grid")
        kap = ck.number(grid, "kappa", "grid", required=False, default=0.0)
        kappa = () if kap is None else (kap,)
        k_r_prime = ck.grid(grid, "k_r_prime", "grid")
        if k_r is not None and k_r <= 0:
            ck.fail("'grid.k_r' must be positive")
        if k_r_prime:
            arr = np.asarray(k_r_prime)
            if arr.size < 2 or np.any(arr <= 0) or np.any(np.diff(arr) <= 0):
                ck.fail("'grid.k_r_prime' must be positive, strictly increasing, with at least two points")

    # tolerance
    tol_raw = ck.table(raw, "tolerance", required=False)
    rtol = ck.number(tol_raw, "rtol", "tolerance", required=False, default=1e-10)
    atol = ck.number(tol_raw, "atol", "tolerance", required=False, default=1e-12)
    tol = Tolerance()
    if rtol is not None and atol is not None:
        if rtol <= 0 or atol <= 0:
            ck.fail("tolerances need rtol > 0 and atol > 0")
        else:
            tol = Tolerance(rtol, atol)

    # output
    out = ck.table(raw, "output", required=False)
    out_dir = Path(out.get("dir", "out"))
    if not isinstance(out.get("dir", "out"), str):
        ck.fail("'output.dir' must be a string path")
    else:
        if not out_dir.is_absolute() and source is not None:
            out_dir = source.parent / out_dir
        if not _writable(out_dir):
            ck.fail(f"output directory {out_dir} is not writable")
    svg = ck.flag(out, "svg", "output", True)
    log_scale = ck.flag(out, "log_scale", "output", True)
    threads = out.get("threads", 1)
    if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
        ck.fail("'output.threads' must be a positive integer")
        threads = 1

    if ck.errors:
        raise ConfigError(ck.errors)
    return ScenarioConfig(
        geometry=geometry,
        model=model,
        polarizations=pols,
        method=method,
        medium=medium,
        dispersion_source=source_kind,
        v=v,
        amplitude=amplitude,
        width=width,
        delta_r=delta_r,
        substructure=sub,
        kappa=kappa,
        k_x=k_x,
        k_r=k_r,
        k_r_prime=k_r_prime,
        tol=tol,
        out_dir=out_dir,
        svg=svg,
        log_scale=log_scale,
        threads=threads,
        source=source,
        fit_knots=knots,
    )

