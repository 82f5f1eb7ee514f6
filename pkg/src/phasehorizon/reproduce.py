"""Regenerate the quoted reference numbers and compare them with the engines.

Every row records the quoted value, the computed value, the tolerance rule,
the verdict and where the quoted value comes from.  ``reproduce`` passes
iff every row passes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .dispersion import (
    FUSED_SILICA,
    REFERENCE_MEDIUM,
    REFERENCE_PULSE_SPEED,
    MassiveField,
    fit_massive_model,
    lambda_variant,
)
from .filament import substructure_profile
from .frames import Polarization, clock_rate, regularity_factor
from .planar import (
    PlanarModel,
    PlanarScenario,
    beta_perturbative,
    delta_m_from_delta_n,
    omega_sq_a,
)

SCHEMA_VERSION = 1


@dataclass
class ReproRow:
    name: str
    reference: float
    computed: float
    tolerance: str
    passed: bool
    location: str
    note: str = ""


@dataclass
class ReproReport:
    rows: list[ReproRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def add(self, name, reference, computed, tolerance, passed, location, note=""):
        self.rows.append(ReproRow(name, float(reference), float(computed), tolerance, bool(passed), location, note))

    def format(self) -> str:
        lines = []
        for r in self.rows:
            status = "PASS" if r.passed else "FAIL"
            lines.append(f"[{status}] {r.name}: reference {r.reference:.6g}, computed {r.computed:.6g} ({r.tolerance}); {r.location}")
            if r.note:
                lines.append(f"        {r.note}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'} ({sum(r.passed for r in self.rows)}/{len(self.rows)} rows)")
        return "\n".join(lines)

    def to_json(self) -> str:
        doc = {"schema_version": SCHEMA_VERSION, "passed": self.passed, "rows": [asdict(r) for r in self.rows]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "reference", "computed", "tolerance", "passed", "location", "note"])
        for r in self.rows:
            w.writerow([r.name, f"{r.reference:.17e}", f"{r.computed:.17e}", r.tolerance, r.passed, r.location, r.note])
        return buf.getvalue()


def within_rel(computed: float, reference: float, rel: float) -> bool:
    return abs(computed - reference) <= rel * abs(reference)


def within_factor(computed: float, reference: float, factor: float) -> bool:
    ratio = abs(computed / reference)
    return 1 / factor <= ratio <= factor


def omega0_min(medium: MassiveField, v: float) -> float:
    """Smallest asymptotic mode frequency, n0 m0 sqrt(n0^2 v^2 - 1) / v."""
    return medium.n0 * medium.m0 * math.sqrt((medium.n0 * v) ** 2 - 1) / v


def _peak_delta_omega(model: PlanarModel, amplitude: float, pol: Polarization, medium: MassiveField, v: float) -> tuple[float, float]:
    """(own-clock, common-clock) peak dOmega of the minimal mode."""
    sc = PlanarScenario(model, medium, v, amplitude, 10.0)
    tr = sc.trace(sc.label(0.0, 0.0, pol))
    own = tr.peak_delta_omega()
    return own, own * tr.clock_scale


def minimal_mode_beta_abs2(width: float, medium: MassiveField = REFERENCE_MEDIUM, v: float = REFERENCE_PULSE_SPEED) -> tuple[float, str]:
    sc = PlanarScenario(PlanarModel.INDEX, medium, v, 1e-3, width)
    res = beta_perturbative(sc.trace(sc.label(0.0, 0.0, Polarization.A)))
    return res.beta_abs2, res.flag


def reproduce_reference_numbers() -> ReproReport:
    rep = ReproReport()
    m, v = REFERENCE_MEDIUM, REFERENCE_PULSE_SPEED

    # 1. dispersion fit
    fit = fit_massive_model(FUSED_SILICA, 0.7, 1.1)
    rep.add("fit n0 at knots (0.7, 1.1) um", 1.4595, fit.n0, "1%", within_rel(fit.n0, 1.4595, 0.01),
            "quoted medium index of the fibre")
    rep.add("fit m0^2 at knots (0.7, 1.1) um [1/um^2]", 0.208, fit.m0_sq, "1%", within_rel(fit.m0_sq, 0.208, 0.01),
            "quoted medium mass of the fibre",
            "two-knot Sellmeier fit gives 0.2138; the quoted mass (2 pi/13.46)^2 = 0.218 is itself inconsistent with 0.208")

    # 2. regularity factor
    reg = regularity_factor(1.459, v).value
    rep.add("n^2v^2 = 1.008", 1.008, reg, "3 decimals", round(reg, 3) == 1.008,
            "regularity of the comoving frame for the fibre pulse")

    # 3. minimal frequency
    w_min = omega0_min(m, v)
    rep.add("Omega0_min [1/um]", 1 / 11, w_min, "10%", within_rel(w_min, 1 / 11, 0.10),
            "smallest asymptotic frequency, quoted as about 1/(11 um)")

    # 4. Lambda mass
    m_lam = lambda_variant(MassiveField(1.459, 0.208)).m0_sq
    rep.add("m_Lambda^2 [1/um^2]", 0.943, m_lam, "0.5%", within_rel(m_lam, 0.943, 0.005),
            "effective mass of the dual polarization")

    # 5. mass change
    dm = delta_m_from_delta_n(1e-3, 2 * math.pi, m)
    rep.add("delta_m for delta_n = 1e-3 at 2 pi/um [1/um]", -2 * math.pi / 100, dm, "10%",
            within_rel(dm, -2 * math.pi / 100, 0.10), "mass change equivalent to the Kerr index change")

    # 6. frequency ratio of an optical-scale transverse mode
    kx = 2 * math.pi / m.n0
    ratio = math.sqrt(float(omega_sq_a(m.n0, 0.0, kx, m.m0_sq, v))) / w_min
    rep.add("Omega(k_x = 2 pi/(n0 um)) / Omega0_min", 6.0, ratio, "20%", within_rel(ratio, 6.0, 0.20),
            "quoted 'factor of around six' for optical transverse modes")

    # 7. sub-structure frequencies
    prof = substructure_profile(1.0, 10.0, m.n0, v, 1 / 1.44, math.radians(6.5), 2 * math.pi / 1.06, cone_correction=False)
    sub = prof.substructure
    for name, ref, val in (("omega_tau", 2 * math.pi / 5, sub.omega_tau), ("omega_rho", 2 * math.pi / 10, sub.omega_rho)):
        rep.add(f"{name} [1/um]", ref, val, "15%", within_rel(val, ref, 0.15),
                "boosted carrier frequencies of the pump sub-structure",
                "quoted v_ph = 1/1.44 read as the cone-corrected phase velocity")

    # 8. dOmega peaks (minimal mode, delta_n = 1e-3)
    dm_a = delta_m_from_delta_n(1e-3, 2 * math.pi, m)
    cases = (
        ("dOmega peak, model I, A", PlanarModel.INDEX, 1e-3, Polarization.A, 1300.0),
        ("dOmega peak, model II, A", PlanarModel.MASS, dm_a, Polarization.A, 560.0),
        ("dOmega peak, model II, Lambda", PlanarModel.MASS, dm_a, Polarization.LAMBDA, 280.0),
    )
    for name, model, amp, pol, period in cases:
        own, common = _peak_delta_omega(model, amp, pol, m, v)
        ref = 2 * math.pi / period
        note = f"period 2 pi/|dOmega| = {2 * math.pi / abs(common):.0f} um on the A clock"
        if pol is Polarization.LAMBDA:
            note += f", {2 * math.pi / abs(own):.0f} um on the Lambda clock"
        rep.add(f"{name} [1/um]", ref, abs(common), "factor 2", within_factor(abs(common), ref, 2.0),
                "quoted peak potential perturbation", note)

    # 9. boosted envelope width
    d_tau = 10.0
    d_t_engine = clock_rate(m.n0, v, Polarization.A) * d_tau
    d_t_verbatim = clock_rate(1.459, v, Polarization.A) * d_tau
    quoted = 2500.0
    band_ok = all(300 <= x <= 3000 for x in (d_t_engine, d_t_verbatim, quoted))
    rep.add("oscillator-time width for dtau = 10 um [um]", quoted, d_t_engine, "300-3000 band", band_ok,
            "quoted boosted pulse duration",
            f"engine (n0 = {m.n0}) {d_t_engine:.0f} um; n = 1.459 gives {d_t_verbatim:.0f} um; quoted {quoted:.0f} um")

    # 10. suppression regime
    b_long, flag = minimal_mode_beta_abs2(10.0)
    rep.add("|beta|^2, dtau = 10 um, minimal mode", 1e-20, b_long, "< 1e-20", b_long < 1e-20,
            "suppression by many orders of magnitude", f"solver flag: {flag}")
    b_opt, _ = minimal_mode_beta_abs2(1.0)
    b_short, _ = minimal_mode_beta_abs2(0.2)
    rep.add("|beta|^2, dtau = 1 um, minimal mode", 5e-2, b_opt, "<= 5e-2", b_opt <= 5e-2,
            "optical-scale pulses create at most about one percent",
            f"dtau = 0.2 um gives {b_short:.3g}")
    return rep


def write_report(report: ReproReport, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "reproduce.json", out_dir / "reproduce.csv"]
    paths[0].write_text(report.to_json(), newline="")
    paths[1].write_text(report.to_csv(), newline="")
    return paths

