import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from phasehorizon.frames import (
    ConstantProfile,
    GaussianProfile,
    Polarization,
    PulseKinematics,
    RegularityError,
    RunningIntegral,
    SampledProfile,
    clock_rate,
    comoving_coords,
    comoving_to_lab,
    filament_boost,
    filament_boost_inverse,
    filament_boost_jacobian,
    hubble_parameters,
    lab_mode,
    lab_mode_inverse,
    null_cone_check,
    oscillator_time,
    regularity_factor,
)
from phasehorizon.numerics import SampledFunction

V = 1 / 1.4533
N0 = 1.4595


def kin(amplitude=1e-3, width=1.0):
    return PulseKinematics(V, GaussianProfile(N0, amplitude, width))


def test_polarization_parse():
    assert Polarization.parse("A") is Polarization.A
    assert Polarization.parse("lambda") is Polarization.LAMBDA
    assert Polarization.parse("Λ") is Polarization.LAMBDA
    with pytest.raises(ValueError):
        Polarization.parse("B")


def test_regularity_factor():
    r = regularity_factor(1.459, V)
    assert r.regular and round(r.value, 3) == 1.008
    assert regularity_factor(1 / V, V).regime == "critical"
    assert regularity_factor(1.4, V).regime == "subcritical"
    with pytest.raises(ValueError):
        regularity_factor(-1.0, V)


def test_kinematics_validation():
    with pytest.raises(ValueError):
        PulseKinematics(1.2, ConstantProfile(N0))
    # a dip through n v = 1 is reported with its interval
    k = PulseKinematics(V, GaussianProfile(N0, -0.02, 1.0))
    with pytest.raises(RegularityError) as exc:
        k.check_regular()
    lo, hi = exc.value.interval
    assert lo < 0 < hi


def test_sampled_profile():
    x = np.linspace(-5, 5, 401)
    p = SampledProfile(SampledFunction(x, N0 + 1e-3 * np.exp(-x * x)))
    assert float(p(0.0)) == pytest.approx(N0 + 1e-3, rel=1e-12)
    assert float(p(100.0)) == pytest.approx(N0)
    assert float(p.derivative(100.0)) == 0.0
    with pytest.raises(ValueError):
        SampledProfile(SampledFunction(x, x))


def test_running_integral_against_quad_and_inverse():
    g = lambda t: 2.0 + np.exp(-np.asarray(t) ** 2)
    f = RunningIntegral(g, 2.0, (-8.0, 8.0))
    for tau in (-20.0, -1.3, 0.0, 0.7, 5.0, 30.0):
        ref = quad(lambda s: 2.0 + math.exp(-s * s), 0.0, tau, limit=200)[0]
        assert f(tau) == pytest.approx(ref, abs=1e-12)
    y = np.array([-40.0, -1.0, 0.5, 3.0, 70.0])
    assert np.allclose(f(f.inverse(y)), y, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    t=st.floats(min_value=-50, max_value=50),
    z=st.floats(min_value=-50, max_value=50),
    amp=st.floats(min_value=-5e-3, max_value=5e-3),
)
def test_comoving_round_trip(t, z, amp):
    k = kin(amp, 1.5)
    tau, rho = comoving_coords(t, z, k)
    t2, z2 = comoving_to_lab(tau, rho, k)
    assert abs(float(t2) - t) < 1e-10 and abs(float(z2) - z) < 1e-10


def test_comoving_metric_is_time_dependent_only():
    # along a lab line element, dt^2 - n^2 dz^2 matches the comoving form built from d tau, d rho
    k = kin(2e-3, 1.0)
    t, z, h = 0.3, 0.1, 1e-6
    tau0, rho0 = comoving_coords(t, z, k)
    tau1, rho1 = comoving_coords(t + h, z, k)
    tau2, rho2 = comoving_coords(t, z + h, k)
    # rho depends on t only through tau: d rho / dt = -g(tau)
    n = float(k.n_profile(float(tau0)))
    g = V / (V * V * n * n - 1)
    assert (float(rho1) - float(rho0)) / h == pytest.approx(-g, rel=1e-6)
    assert (float(tau2) - float(tau0)) / h == pytest.approx(-1 / V, rel=1e-9)


def test_clock_rates_and_oscillator_time():
    x = (N0 * V) ** 2
    assert clock_rate(N0, V, Polarization.A) == pytest.approx(V * V / (x - 1))
    assert clock_rate(N0, V, Polarization.LAMBDA) == pytest.approx(x / (x - 1))
    k = kin(1e-3, 1.0)
    assert oscillator_time(0.0, k, Polarization.A) == 0.0
    # far from the pulse, T grows at the asymptotic rate
    far = oscillator_time(200.0, k, Polarization.A) - oscillator_time(100.0, k, Polarization.A)
    assert far == pytest.approx(100 * clock_rate(N0, V, Polarization.A), rel=1e-12)
    # a static medium has a linear clock
    flat = PulseKinematics(V, ConstantProfile(N0))
    assert oscillator_time(3.0, flat, Polarization.LAMBDA) == pytest.approx(3 * clock_rate(N0, V, Polarization.LAMBDA))


def test_hubble_parameters():
    k = kin(1e-3, 1.0)
    hz, hx = hubble_parameters(k)
    tau = hx.x
    n = N0 + 1e-3 * np.exp(-0.5 * tau * tau)
    assert np.allclose(hx.y, -1e-3 * tau * np.exp(-0.5 * tau * tau) / n, atol=1e-15)
    x = (n * V) ** 2
    assert np.allclose(hz.y, x / (x - 1) * hx.y, atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(omega0=st.floats(min_value=-10, max_value=10), kappa=st.floats(min_value=-10, max_value=10))
def test_lab_mode_inverse(omega0, kappa):
    w, kz = lab_mode(omega0, kappa, N0, V)
    o2, k2 = lab_mode_inverse(w, kz, N0, V)
    scale = 1 + abs(omega0) + abs(kappa)
    assert abs(float(o2) - omega0) < 1e-10 * scale
    assert abs(float(k2) - kappa) < 1e-10 * scale


def test_lab_mode_phase_invariance():
    # Omega0 T - kappa rho is the lab phase omega t - k_z z in the homogeneous medium
    k = PulseKinematics(V, ConstantProfile(N0))
    omega0, kappa = 0.4, 0.2
    w, kz = lab_mode(omega0, kappa, N0, V)
    for t, z in ((1.0, 2.0), (-3.0, 0.5), (10.0, -7.0)):
        tau, rho = comoving_coords(t, z, k)
        phase = omega0 * oscillator_time(float(tau), k, Polarization.A) - kappa * float(rho)
        assert phase == pytest.approx(float(w) * t - float(kz) * z, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("kappa,k_x", [(0.0, 0.0), (0.3, 1.0), (0.1, 4.3), (-0.2, 0.5)])
def test_lab_mode_is_on_shell(kappa, k_x):
    # lab wave equation n0^2 omega^2 = k_z^2 + k_x^2 + n0^2 m^2
    m_sq = 0.208
    x = (N0 * V) ** 2
    omega0 = math.sqrt(N0**2 * kappa**2 + (k_x**2 + N0**2 * m_sq) * (x - 1) / V**2)
    w, kz = lab_mode(omega0, kappa, N0, V)
    lhs = N0**2 * float(w) ** 2
    assert lhs == pytest.approx(float(kz) ** 2 + k_x**2 + N0**2 * m_sq, rel=1e-12)


def test_lab_mode_kappa_zero_and_linearity():
    w, kz = lab_mode(0.1, 0.0, N0, V)
    assert float(kz) > 0 and float(kz) > float(w)
    a = np.array(lab_mode(0.3, 0.7, N0, V))
    b = np.array(lab_mode(-1.1, 0.2, N0, V))
    c = np.array(lab_mode(2 * 0.3 - 1.1, 2 * 0.7 + 0.2, N0, V))
    assert np.allclose(2 * a + b, c, rtol=1e-13)


def test_lab_mode_rejects_irregular():
    with pytest.raises(RegularityError):
        lab_mode(1.0, 0.0, 1.3, V)


@settings(max_examples=100, deadline=None)
@given(t=st.floats(min_value=-100, max_value=100), z=st.floats(min_value=-100, max_value=100))
def test_filament_boost_round_trip_and_interval(t, z):
    tau, rho = filament_boost(t, z, V, N0)
    t2, z2 = filament_boost_inverse(tau, rho, V, N0)
    assert abs(float(t2) - t) < 1e-9 and abs(float(z2) - z) < 1e-9
    # the boost preserves dt^2 - n0^2 dz^2
    assert float(tau) ** 2 - float(rho) ** 2 == pytest.approx(t * t - N0 * N0 * z * z, rel=1e-9, abs=1e-7)


def test_filament_boost_jacobian():
    j = filament_boost_jacobian(V, N0)
    tau, rho = filament_boost(1.0, 0.0, V, N0)
    assert (float(tau), float(rho)) == pytest.approx(tuple(j[:, 0]))
    tau, rho = filament_boost(0.0, 1.0, V, N0)
    assert (float(tau), float(rho)) == pytest.approx(tuple(j[:, 1]))
    assert abs(np.linalg.det(j)) == pytest.approx(N0)


def test_null_cones_shared():
    n = N0
    assert null_cone_check(n, (n, 1.0, 0.0)) == (True, True)
    assert null_cone_check(n, (n, 0.6, 0.8)) == (True, True)
    assert null_cone_check(n, (1.0, 1.0, 0.0)) == (False, False)
    with pytest.raises(ValueError):
        null_cone_check(0.0, (1, 0, 0))
