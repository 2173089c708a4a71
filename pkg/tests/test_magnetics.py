import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinpat import kernels
from spinpat.engine import SimulationTrace
from spinpat.experiments import fit_inverse_overdrive
from spinpat.magnetics import (InvalidInputError, InvalidParameterError, MagnetizationState, MagnetMaterial,
                               NoSwitchingError, SwitchingModel, ThermalEnvironment, analytic_switching_delay,
                               anisotropy_field, critical_spin_current, demag_factors, detect_switching,
                               detect_switching_times, kernel_coefficients, llg_step, out_of_plane_scale,
                               sample_cone_angles, sample_initial_state, thermal_cone_angle, tilted)


@pytest.fixture(scope="module")
def mat(params):
    return params.material()


@pytest.fixture(scope="module")
def geo(params):
    return params.geometry()


def no_demag(m: MagnetMaterial) -> MagnetMaterial:
    return MagnetMaterial(alpha=m.alpha, gamma=m.gamma, Ms=m.Ms, Ns=m.Ns, Ku=m.Ku, demag=False)


# ------------------------------------------------------------ closed forms

def test_cone_angle_default(params):
    assert thermal_cone_angle(params.thermal()) == pytest.approx(0.1214, abs=2e-4)


def test_cone_angle_limits():
    assert thermal_cone_angle(ThermalEnvironment(T=0.0, kB=1.0, Eb=2.0)) == 0.0
    assert thermal_cone_angle(ThermalEnvironment(T=3.0, kB=1.0, Eb=3.0)) == pytest.approx(1.0)


@pytest.mark.parametrize("Eb", [0.0, -1e-20])
def test_cone_angle_bad_barrier(Eb):
    with pytest.raises(InvalidParameterError):
        thermal_cone_angle(ThermalEnvironment(T=300.0, kB=1.38e-23, Eb=Eb))


def test_analytic_delay_value():
    tau = analytic_switching_delay(SwitchingModel(tau0=100e-12, theta0=0.1214, chi=2.0))
    assert tau == pytest.approx(325.4e-12, rel=1e-3)


def test_analytic_delay_at_pi_is_zero():
    assert analytic_switching_delay(SwitchingModel(100e-12, math.pi, 3.0)) == pytest.approx(0.0, abs=1e-20)


@pytest.mark.parametrize("chi", [1.0, 0.5])
def test_analytic_delay_no_switching(chi):
    with pytest.raises(NoSwitchingError):
        analytic_switching_delay(SwitchingModel(100e-12, 0.1, chi))


@given(st.floats(1.01, 50.0), st.floats(1.01, 50.0))
def test_analytic_delay_monotone_in_chi(a, b):
    lo, hi = sorted((a, b))
    f = lambda c: analytic_switching_delay(SwitchingModel(1e-10, 0.12, c))
    assert f(hi) <= f(lo)


def test_demag_factors_sum_to_one(geo):
    assert sum(demag_factors(geo)) == pytest.approx(1.0, abs=1e-9)


def test_critical_current_scales_with_damping(mat, geo):
    ic = critical_spin_current(mat, geo)
    assert 1e-6 < ic < 1e-3
    doubled = MagnetMaterial(alpha=2 * mat.alpha, gamma=mat.gamma, Ms=mat.Ms, Ns=mat.Ns, Ku=mat.Ku,
                             demag=mat.demag)
    assert critical_spin_current(doubled, geo) == pytest.approx(2 * ic)


def test_out_of_plane_scale(mat, geo):
    assert out_of_plane_scale(no_demag(mat), geo) == pytest.approx(1.0)
    assert 0 < out_of_plane_scale(mat, geo) < 1


# ---------------------------------------------------------------- sampling

def test_cone_rms_matches_theta0():
    rng = np.random.default_rng(7)
    th = sample_cone_angles(0.1214, 10_000, rng)
    assert np.sqrt(np.mean(th ** 2)) == pytest.approx(0.1214, rel=0.05)
    assert np.all((th > 0) & (th < math.pi / 2))


@given(st.sampled_from([1, -1]), st.floats(1e-3, 1.0), st.integers(0, 2 ** 32 - 1), st.floats(0.05, 1.0))
def test_initial_state_is_unit_and_on_side(sign, theta0, seed, squash):
    m = sample_initial_state(sign, theta0, np.random.default_rng(seed), squash)
    assert np.linalg.norm(m) == pytest.approx(1.0)
    assert np.sign(m[0]) == sign


@given(st.floats(0, math.pi / 2), st.floats(0, 2 * math.pi))
def test_tilted_angle(theta, phi):
    m = tilted(1, theta, phi)
    assert math.acos(min(1.0, m[0])) == pytest.approx(theta, abs=1e-7)


# ------------------------------------------------------------------- LLG

def test_equilibrium_unchanged(mat, geo):
    env = ThermalEnvironment(T=0.0, kB=1.38e-23, Eb=1e-19)
    s = MagnetizationState.along(1)
    for dt in (1e-14, 1e-12, 1e-11):
        assert np.allclose(llg_step(s, mat, geo, env, np.zeros(3), dt).m, [1, 0, 0])


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
       st.lists(st.floats(-1e-3, 1e-3), min_size=3, max_size=3), st.integers(0, 1000))
def test_step_preserves_norm(x, y, z, Is, seed):
    from spinpat.config import default_params

    p = default_params()
    v = np.array([x, y, z])
    if np.linalg.norm(v) < 1e-3:
        v = np.array([1.0, 0, 0])
    s = MagnetizationState(v / np.linalg.norm(v))
    out = llg_step(s, p.material(), p.geometry(), p.thermal(seed=seed), Is, 1e-13,
                   rng=np.random.default_rng(seed))
    assert abs(np.linalg.norm(out.m) - 1) <= 1e-9


def test_step_errors(mat, geo, params):
    s = MagnetizationState.along(0)
    with pytest.raises(InvalidParameterError):
        llg_step(s, mat, geo, params.thermal(), np.zeros(3), 0.0)
    with pytest.raises(InvalidInputError):
        llg_step(s, mat, geo, params.thermal(), [np.nan, 0, 0], 1e-13)
    with pytest.raises(InvalidInputError):
        MagnetizationState([2.0, 0, 0])


def test_precession_frequency(geo, params):
    # uniaxial only: small-angle precession at gamma mu0 Hk / (1 + a^2)
    mat = no_demag(params.material())
    env = ThermalEnvironment(T=0.0, kB=1.38e-23, Eb=1e-19)
    dt = 0.05e-12
    s = MagnetizationState(tilted(1, 0.02, 0.0))
    ys = []
    for _ in range(25_000):
        s = llg_step(s, mat, geo, env, np.zeros(3), dt)
        ys.append(s.m[1])
    ys = np.array(ys)
    up = np.nonzero((ys[:-1] < 0) & (ys[1:] >= 0))[0]
    period = np.mean(np.diff(up)) * dt
    omega = mat.gamma * params["constants.mu0"] * anisotropy_field(mat) / (1 + mat.alpha ** 2)
    assert 2 * math.pi / period == pytest.approx(omega, rel=0.01)


def test_thermal_equilibrium_variance(geo, params):
    # uniaxial only: <m_y^2> -> kB T / (2 Eb) from the Langevin field
    mat = no_demag(params.material())
    hk, hd, al, gm, iq = kernel_coefficients(mat, geo)
    from spinpat.magnetics import thermal_field_sigma

    dt, n, T = 1e-12, 64, 300.0
    sig = thermal_field_sigma(mat, geo, T, dt)
    rng = np.random.default_rng(3)
    m = np.tile([1.0, 0.0, 0.0], (n, 1))
    Is = np.zeros((n, 3))
    coefs = [np.full(n, v) for v in (hk, hd, al, gm, iq)]
    acc = []
    for k in range(60_000):
        kernels.heun_step(m, sig * rng.standard_normal((n, 3)), Is, dt, *coefs)
        if k > 20_000 and k % 50 == 0:
            acc.append(np.mean(m[:, 1] ** 2))
    Eb = mat.Ku * geo.volume
    assert np.mean(acc) == pytest.approx(params["constants.kB"] * T / (2 * Eb), rel=0.15)


def _switch_time(chi, params, dt=0.5e-12):
    mat, geo = params.material(), params.geometry()
    ic = critical_spin_current(mat, geo)
    coefs = [np.array([v]) for v in kernel_coefficients(mat, geo)]
    m = tilted(-1, thermal_cone_angle(params.thermal()), math.pi / 4, out_of_plane_scale(mat, geo))
    m = m.reshape(1, 3).copy()
    Is = np.array([[chi * ic, 0.0, 0.0]])
    t = 0.0
    while t < 100e-9:
        kernels.heun_step(m, np.zeros((1, 3)), Is, dt, *coefs)
        t += dt
        if m[0, 0] > 0:
            return t
    return None


def test_delay_follows_inverse_overdrive(params):
    chis = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
    d = [_switch_time(c, params) for c in chis]
    assert all(x is not None for x in d)
    assert all(b < a for a, b in zip(d, d[1:]))
    _, r2 = fit_inverse_overdrive(chis, d)
    assert r2 >= 0.9


def test_subcritical_current_does_not_switch(params):
    assert _switch_time(0.8, params) is None


# --------------------------------------------------------------- detection

def test_detect_constant_trace():
    t = np.linspace(0, 1e-9, 101)
    assert detect_switching_times(t, -np.ones_like(t)) is None


def test_detect_step():
    dt = 1e-12
    t = np.arange(0, 1e-9, dt)
    mx = np.where(t < 0.3e-9, -1.0, 1.0)
    assert detect_switching_times(t, mx) == pytest.approx(0.3e-9, abs=dt)


@given(st.integers(0, 10_000), st.floats(0.2e-9, 0.8e-9))
def test_detect_noisy_crossing(seed, t0):
    dt = 1e-12
    rng = np.random.default_rng(seed)
    t = np.arange(0, 1e-9, dt)
    mx = np.tanh((t - t0) / 20e-12) + 0.05 * rng.uniform(-1, 1, t.size)
    assert detect_switching_times(t, mx) == pytest.approx(t0, abs=2 * dt + 1.5e-12)


def test_detect_ignores_excursion():
    t = np.linspace(0, 1e-9, 1001)
    mx = -np.ones_like(t)
    mx[400:420] = 0.3       # crosses zero but never reaches +0.9
    assert detect_switching_times(t, mx) is None


def test_detect_switching_unknown_id():
    tr = SimulationTrace(np.array([0.0, 1.0]), ["a"], np.zeros((2, 1, 3)), 1.0)
    with pytest.raises(KeyError):
        detect_switching(tr, "b")
