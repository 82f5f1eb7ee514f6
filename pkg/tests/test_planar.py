import math
import warnings

import numpy as np
import pytest

from phasehorizon.dispersion import REFERENCE_MEDIUM, REFERENCE_PULSE_SPEED, massive_wavenumber
from phasehorizon.frames import ConstantProfile, GaussianProfile, Polarization, lab_mode
from phasehorizon.numerics import ConvergenceError, Tolerance
from phasehorizon.planar import (
    SPECTRUM_COLUMNS,
    PlanarModel,
    PlanarModeLabel,
    PlanarScenario,
    PotentialTrace,
    beta_perturbative,
    bogoliubov_exact,
    delta_m_from_delta_n,
    omega_sq_a,
    omega_sq_lambda,
    potential_model1,
    spectrum_sweep,
)

M, V = REFERENCE_MEDIUM, REFERENCE_PULSE_SPEED


def gaussian_trace(eps, omega0, sigma):
    h = 12 * sigma
    return PotentialTrace.closed_form(lambda t: eps * np.exp(-0.5 * (np.asarray(t) / sigma) ** 2), omega0, (-h, h))


def test_model_parse_and_label():
    assert PlanarModel.parse("index") is PlanarModel.INDEX
    assert PlanarModel.parse("II") is PlanarModel.MASS
    with pytest.raises(ValueError):
        PlanarModel.parse("III")
    with pytest.raises(ValueError):
        PlanarModeLabel(math.inf, 0.0)


def test_potentials_at_asymptote():
    n0, m_sq = M.n0, M.m0_sq
    x = (n0 * V) ** 2
    assert omega_sq_a(n0, 0.3, 1.0, m_sq, V) == pytest.approx(n0**2 * 0.09 + (1 + n0**2 * m_sq) * (x - 1) / V**2)
    # Lambda with mass n0^4 m^2 equals A / n0^4 in Omega^2 at fixed (kappa, k_x) rescaled by the metric factor
    assert omega_sq_lambda(n0, 0.0, 0.0, m_sq * n0**4, V) == pytest.approx(m_sq * (x - 1) / (n0**2 * V**2))


def test_static_trace_gives_zero_beta():
    mode = PlanarModeLabel(0.1, 0.5)
    trace = potential_model1(mode, ConstantProfile(M.n0), V, M.m0_sq)
    assert trace.is_static()
    for res in (beta_perturbative(trace), bogoliubov_exact(trace)):
        assert res.beta == 0 and res.alpha == 1 and res.flag == "ok"


@pytest.mark.parametrize("omega0,sigma", [(1.0, 0.5), (2.0, 0.4), (0.5, 1.0)])
def test_perturbative_gaussian_closed_form(omega0, sigma):
    eps = 1e-4
    res = beta_perturbative(gaussian_trace(eps, omega0, sigma))
    ref = eps * math.sqrt(2 * math.pi) * sigma * math.exp(-2 * (omega0 * sigma) ** 2)
    assert abs(res.beta) == pytest.approx(ref, rel=1e-8)
    assert res.flag == "ok" and res.resolved


def test_exact_matches_perturbative_for_weak_pulse():
    trace = gaussian_trace(1e-5, 1.0, 0.5)
    p, e = beta_perturbative(trace), bogoliubov_exact(trace, Tolerance(1e-12, 1e-14))
    assert abs(e.beta) == pytest.approx(abs(p.beta), rel=1e-3)
    assert abs(e.normalization - 1) < 1e-8


def test_exact_tanh_step_oracle():
    # Omega^2 = w_in^2 -> w_out^2 along tanh(T / s): closed-form |beta|^2
    w1, w2, s = 1.0, 1.5, 0.7

    def dsq(t):
        return 0.5 * (w2 * w2 - w1 * w1) * (1 + np.tanh(np.asarray(t) / s))

    trace = PotentialTrace(dsq, w1 * w1, (-60 * s, 60 * s))
    res = bogoliubov_exact(trace, Tolerance(1e-12, 1e-14))
    wm = 0.5 * (w2 - w1)
    ref = math.sinh(math.pi * s * wm) ** 2 / (math.sinh(math.pi * s * w1) * math.sinh(math.pi * s * w2))
    assert res.beta_abs2 == pytest.approx(ref, rel=1e-6)


def test_guard_warning():
    trace = gaussian_trace(0.5, 1.0, 0.5)
    with pytest.warns(RuntimeWarning, match="perturbative guard"):
        res = beta_perturbative(trace)
    assert res.flag == "warning" and res.warnings


def test_exact_raises_when_normalization_fails():
    trace = gaussian_trace(0.5, 1.0, 0.5)
    with pytest.raises(ConvergenceError):
        bogoliubov_exact(trace, Tolerance(1e-2, 1e-2), retries=0)


def test_resolution_flags():
    # a 10 um pulse suppresses the minimal mode far below double precision
    sc = PlanarScenario(PlanarModel.INDEX, M, V, 1e-3, 10.0)
    res = beta_perturbative(sc.trace(sc.label(0.0, 0.0, Polarization.A)))
    assert res.flag == "below_resolution" and not res.resolved
    sc = PlanarScenario(PlanarModel.INDEX, M, V, 1e-3, 0.5)
    res = beta_perturbative(sc.trace(sc.label(0.0, 0.0, Polarization.A)))
    assert res.resolved


def test_lambda_equals_a_on_common_clock_for_model_two():
    sc = PlanarScenario(PlanarModel.MASS, M, V, -0.01, 1.0)
    a = sc.trace(sc.label(0.0, 0.0, Polarization.A))
    lam = sc.trace(sc.label(0.0, 0.0, Polarization.LAMBDA))
    assert a.omega0 * a.clock_scale == pytest.approx(lam.omega0 * lam.clock_scale, rel=1e-12)
    assert beta_perturbative(a).beta_abs2 == pytest.approx(beta_perturbative(lam).beta_abs2, rel=1e-8)


def test_delta_m_from_delta_n_fixed_k_derivative():
    # dn/dm at fixed k for n = k / sqrt(k^2 + m^2) is -k m / omega^3
    omega = 2 * math.pi
    k, m = massive_wavenumber(M, omega), M.m0
    h = 1e-4
    n = lambda mm: k / math.sqrt(k * k + mm * mm)
    slope = (n(m + h) - n(m - h)) / (2 * h)
    assert slope == pytest.approx(-k * m / math.sqrt(k * k + m * m) ** 3, rel=1e-7)
    dm = delta_m_from_delta_n(1e-3, omega, M)
    assert dm == pytest.approx(-1e-3 * omega**3 / (k * m), rel=1e-14)
    assert dm < 0 and delta_m_from_delta_n(-1e-3, omega, M) > 0
    assert delta_m_from_delta_n(1e-3, omega, M, Polarization.LAMBDA) == pytest.approx(dm * M.n0**2)


def test_model_one_rejects_irregular_pulse():
    with pytest.raises(ValueError):
        potential_model1(PlanarModeLabel(0.0, 0.0), GaussianProfile(M.n0, -0.02, 1.0), V, M.m0_sq)


def test_spectrum_sweep_order_threads_and_lab_labels():
    sc = PlanarScenario(PlanarModel.INDEX, M, V, 1e-3, 0.5)
    kappas, kxs = [0.0, 0.2, 0.4], [0.0, 1.0]
    one = spectrum_sweep(sc, kappas, kxs, threads=1)
    four = spectrum_sweep(sc, kappas, kxs, threads=4)
    assert len(one) == 6
    assert [(r.mode.kappa, r.mode.k_x) for r in one.rows] == [(k, kx) for k in kappas for kx in kxs]
    assert one.to_csv() == four.to_csv()
    row = one.rows[3]
    w, kz = lab_mode(row.omega0, row.mode.kappa, M.n0, V)
    assert (row.omega_lab, row.k_z_lab) == (float(w), float(kz))


def test_spectrum_both_methods_and_csv(tmp_path):
    # narrow pulse: Omega0 sigma_T ~ 0.25, where first order holds
    sc = PlanarScenario(PlanarModel.INDEX, M, V, 1e-4, 0.05)
    spectrum = spectrum_sweep(sc, [0.0], [0.0, 0.5], method="both")
    assert [r.method for r in spectrum.rows] == ["perturbative", "exact"] * 2
    a, b = spectrum.rows[0].beta_abs2, spectrum.rows[1].beta_abs2
    assert a == pytest.approx(b, rel=2e-2)
    path = tmp_path / "s.csv"
    text = spectrum.to_csv(path)
    assert path.read_bytes() == text.encode()
    lines = text.splitlines()
    assert lines[0] == ",".join(SPECTRUM_COLUMNS)
    assert lines[1].split(",")[:2] == ["I", "A"]
    with pytest.raises(ValueError):
        spectrum_sweep(sc, [0.0], [0.0], method="magic")


def test_spectrum_failed_mode_is_reported():
    # a mass dip below zero is rejected per mode, not for the whole sweep
    sc = PlanarScenario(PlanarModel.MASS, M, V, -1.0, 1.0)
    spectrum = spectrum_sweep(sc, [0.0], [0.0])
    row = spectrum.rows[0]
    assert row.flag == "failed" and row.error and math.isnan(row.beta_abs2)
    assert "nan" in spectrum.to_csv().splitlines()[1]


def test_zero_amplitude_spectrum_is_all_zero():
    sc = PlanarScenario(PlanarModel.INDEX, M, V, 0.0, 1.0)
    spectrum = spectrum_sweep(sc, [0.0, 0.3], [0.0, 2.0], method="both")
    assert all(r.beta_abs2 == 0.0 for r in spectrum.rows)
