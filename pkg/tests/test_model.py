"""Closed-form model quantities against hand values and independent oracles."""

import math

import numpy as np
import pytest
from scipy import integrate

import kinfp
from kinfp import (
    ExpWeight,
    LyapunovSpec,
    ModelParams,
    PolyWeight,
    apply_Lstar_exact,
    asymptotic_density,
    energy,
    equilibrium,
    equilibrium_drift,
    grad_potential,
    grad_v_H,
    jbracket,
    lyapunov_H,
    lyapunov_weight,
    phi,
    potential,
    theta_decay,
)
from kinfp.model import asymptotic_prefactor


def test_jbracket_values():
    assert float(jbracket(0.0)) == 1.0
    assert float(jbracket(3.0)) == pytest.approx(math.sqrt(10.0), rel=1e-15)
    assert float(jbracket(-3.0)) == float(jbracket(3.0))
    # vectorised: last axis is the component axis
    out = jbracket(np.array([[3.0], [0.0]]))
    assert out.shape == (2,)
    assert out[1] == 1.0


def test_potential_and_gradient_values():
    p15 = ModelParams(alpha=1.5, kind="exp", beta=0.5)
    p2 = ModelParams(alpha=2.0, kind="exp", beta=2.0)
    assert float(potential(0.0, p15)) == pytest.approx(2.0 / 3.0, rel=1e-15)
    assert float(potential(2.0, p2)) == pytest.approx(2.5, rel=1e-15)
    assert grad_potential(2.0, p2).item() == pytest.approx(2.0, rel=1e-15)
    assert grad_potential(1.0, p15).item() == pytest.approx(2.0 ** (-0.25), rel=1e-12)


def test_grad_potential_matches_finite_differences(rng):
    params = ModelParams(alpha=1.5, kind="exp", beta=0.5)
    xs = rng.uniform(-50.0, 50.0, size=100)
    for x in xs:
        h = 1e-6 * max(1.0, abs(x))
        fd = (float(potential(x + h, params)) - float(potential(x - h, params))) / (
            2.0 * h
        )
        g = grad_potential(x, params).item()
        assert abs(fd - g) / max(abs(g), 1e-12) < 1e-6


def test_grad_potential_dimension_two(rng):
    params = ModelParams(alpha=1.7, kind="exp", beta=1.0, dim=2)
    x = rng.uniform(-5, 5, size=2)
    g = np.asarray(grad_potential(x, params))
    for i in range(2):
        e = np.zeros(2)
        e[i] = 1e-6
        fd = (float(potential(x + e, params)) - float(potential(x - e, params))) / 2e-6
        assert abs(fd - g[i]) < 1e-6 * max(1.0, abs(g[i]))


def test_equilibrium_normalisation_constants():
    # beta = 2: closed form sqrt(2 pi) e^(-1/2)
    p = ModelParams(alpha=2.0, kind="exp", beta=2.0)
    assert p.norm_const == pytest.approx(math.sqrt(2 * math.pi) * math.exp(-0.5), rel=1e-10)
    assert p.norm_const == pytest.approx(1.52035, abs=5e-6)
    # gamma = 1: arctan antiderivative gives exactly pi
    pp = ModelParams(alpha=1.5, kind="poly", gamma=1.0)
    assert pp.norm_const == pytest.approx(math.pi, rel=1e-12)
    assert float(equilibrium(0.0, pp)) == pytest.approx(1.0 / math.pi, rel=1e-12)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0, 3.0])
def test_exp_equilibrium_integrates_to_one(beta):
    params = ModelParams(alpha=1.5, kind="exp", beta=beta)
    val, _ = integrate.quad(
        lambda v: float(equilibrium(v, params)), -1000.0, 1000.0, limit=300
    )
    # tail beyond |v| = 1000 bounded through the unnormalised majorant
    from scipy import special

    tail = (
        2.0
        * beta ** (1.0 / beta - 1.0)
        * special.gammaincc(1.0 / beta, 1000.0**beta / beta)
        * special.gamma(1.0 / beta)
        / params.norm_const
    )
    assert abs(val - 1.0) <= tail + 1e-8


@pytest.mark.parametrize("gamma", [1.5, 2.0, 3.0])
def test_poly_equilibrium_integrates_to_one(gamma):
    params = ModelParams(alpha=1.5, kind="poly", gamma=gamma)
    val, _ = integrate.quad(
        lambda v: float(equilibrium(v, params)), -1000.0, 1000.0, limit=300
    )
    tail = 2.0 * 1000.0 ** (-gamma) / gamma / params.norm_const
    assert abs(val - 1.0) <= tail + 1e-8


def test_equilibrium_even_symmetry(rng, exp_params, poly_params):
    for params in (exp_params, poly_params):
        v = rng.uniform(0.0, 30.0, size=20)
        np.testing.assert_allclose(
            np.asarray([float(equilibrium(t, params)) for t in v]),
            np.asarray([float(equilibrium(-t, params)) for t in v]),
            rtol=0,
        )


def test_equilibrium_drift_values():
    pg = ModelParams(alpha=2.0, kind="exp", beta=2.0)
    assert equilibrium_drift(3.0, pg).item() == pytest.approx(-3.0, rel=1e-15)
    p05 = ModelParams(alpha=2.0, kind="exp", beta=0.5)
    assert equilibrium_drift(1.0, p05).item() == pytest.approx(-(2.0 ** (-0.75)), rel=1e-12)
    pp = ModelParams(alpha=1.5, kind="poly", gamma=1.0)
    assert equilibrium_drift(1.0, pp).item() == pytest.approx(-1.0, rel=1e-15)


def test_equilibrium_drift_is_log_gradient(rng, exp_params, poly_params):
    for params in (exp_params, poly_params):
        for v in rng.uniform(-50.0, 50.0, size=40):
            h = 1e-6 * max(1.0, abs(v))
            fd = (
                math.log(float(equilibrium(v + h, params)))
                - math.log(float(equilibrium(v - h, params)))
            ) / (2.0 * h)
            dr = equilibrium_drift(v, params).item()
            assert abs(fd - dr) / max(abs(dr), 1e-9) < 1e-6


def test_energy_values_and_symmetry(rng):
    p2 = ModelParams(alpha=2.0, kind="exp", beta=2.0)
    assert float(energy(0.0, 0.0, p2)) == pytest.approx(0.5, rel=1e-15)
    assert float(energy(1.0, 2.0, p2)) == pytest.approx(3.0, rel=1e-15)
    x, v = rng.uniform(-10, 10, 2)
    assert float(energy(x, v, p2)) == float(energy(-x, -v, p2))


def test_lyapunov_H_values(exp_params):
    p2 = ModelParams(alpha=2.0, kind="exp", beta=2.0)
    spec = LyapunovSpec(2.0, 0.1, 0.5, 0.6, ExpWeight(theta=1.0, delta=0.1))
    assert float(lyapunov_H(0.0, 0.0, p2, spec)) == pytest.approx(0.25, rel=1e-15)
    # degenerate eps = 0 collapses to E^ell
    s0 = LyapunovSpec(2.0, 0.0, 0.5, 0.6, ExpWeight(theta=1.0, delta=0.1))
    x, v = 1.3, -0.7
    assert float(lyapunov_H(x, v, p2, s0)) == float(energy(x, v, p2)) ** 2
    # hand value at (1, 1)
    spec11 = LyapunovSpec(2.0, 1e-3, 0.05, 0.95, ExpWeight(theta=0.25, delta=1e-2))
    e = 0.5 + 2.0**0.75 / 1.5
    expected = e * e + 1e-3 * 2.0 ** (0.05 / 2.0) * 2.0 ** (-0.95 / 2.0)
    assert float(lyapunov_H(1.0, 1.0, exp_params, spec11)) == pytest.approx(
        expected, rel=1e-14
    )


def test_lyapunov_spec_validation():
    with pytest.raises(ValueError):
        LyapunovSpec(0.9, 0.1, 0.5, 0.6, ExpWeight(theta=0.5, delta=0.1))
    with pytest.raises(ValueError):
        LyapunovSpec(2.0, 0.1, 0.5, 1.2, ExpWeight(theta=0.5, delta=0.1))
    with pytest.raises(ValueError):  # poly weight requires k <= ell
        LyapunovSpec(1.6, 0.1, 0.0, 0.6, PolyWeight(k=1.7))
    with pytest.raises(ValueError):
        ExpWeight(theta=1.5, delta=0.1)
    # comparability condition rejected at evaluation time
    p = ModelParams(alpha=1.1, kind="exp", beta=0.5)
    bad = LyapunovSpec(2.0, 0.1, 1.9, 0.9, ExpWeight(theta=0.25, delta=0.1))
    with pytest.raises(ValueError):
        lyapunov_H(1.0, 1.0, p, bad)


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(alpha=0.9, kind="exp", beta=1.0)
    with pytest.raises(ValueError):
        ModelParams(alpha=1.5, kind="exp", beta=-1.0)
    with pytest.raises(ValueError):
        ModelParams(alpha=1.5, kind="poly", gamma=-0.5)
    with pytest.raises(ValueError):
        ModelParams(alpha=1.5, kind="weird", beta=1.0)


def test_grad_v_H_values_and_fd(rng, exp_params, exp_spec):
    p2 = ModelParams(alpha=2.0, kind="exp", beta=2.0)
    s0 = LyapunovSpec(2.0, 0.0, 0.5, 0.6, ExpWeight(theta=1.0, delta=0.1))
    assert grad_v_H(0.0, 0.0, p2, s0).item() == 0.0
    assert grad_v_H(0.0, 1.0, p2, s0).item() == pytest.approx(2.0, rel=1e-15)
    for _ in range(20):
        x, v = rng.uniform(-20, 20, 2)
        h = 1e-5 * (1.0 + abs(v))
        fd = (
            float(lyapunov_H(x, v + h, exp_params, exp_spec))
            - float(lyapunov_H(x, v - h, exp_params, exp_spec))
        ) / (2.0 * h)
        g = grad_v_H(x, v, exp_params, exp_spec).item()
        assert abs(fd - g) / max(abs(g), 1e-8) < 1e-6


def test_apply_Lstar_energy_power_hand_values():
    p2 = ModelParams(alpha=2.0, kind="exp", beta=2.0)
    spec = LyapunovSpec(2.0, 0.0, 0.5, 0.6, ExpWeight(theta=1.0, delta=0.1))
    assert float(apply_Lstar_exact(0.0, 1.0, p2, spec, "energy_power")) == pytest.approx(
        2.0, rel=1e-14
    )
    # at v = 0 only the Laplacian term survives: ell E^(ell-1) d
    x = 3.0
    e = float(energy(x, 0.0, p2))
    assert float(apply_Lstar_exact(x, 0.0, p2, spec, "energy_power")) == pytest.approx(
        2.0 * e, rel=1e-14
    )


def test_apply_Lstar_linearity_and_degenerate(rng, exp_params):
    spec = LyapunovSpec(2.0, 0.07, 0.5, 0.6, ExpWeight(theta=0.25, delta=0.1))
    s0 = LyapunovSpec(2.0, 0.0, 0.5, 0.6, ExpWeight(theta=0.25, delta=0.1))
    for _ in range(25):
        x, v = rng.uniform(-20, 20, 2)
        full = float(apply_Lstar_exact(x, v, exp_params, spec, "full_h"))
        ep = float(apply_Lstar_exact(x, v, exp_params, spec, "energy_power"))
        ct = float(apply_Lstar_exact(x, v, exp_params, spec, "cross_term"))
        assert full == ep + spec.eps * ct  # exact identity, same arithmetic
        assert float(apply_Lstar_exact(x, v, exp_params, s0, "full_h")) == float(
            apply_Lstar_exact(x, v, exp_params, s0, "energy_power")
        )


def test_apply_Lstar_weight_chain_rule(rng, exp_params, exp_spec, poly_params, poly_spec):
    """weight_m must equal Phi'(H) L*H + Phi''(H) |grad_v H|^2, recomputed here."""
    for params, spec in ((exp_params, exp_spec), (poly_params, poly_spec)):
        for _ in range(20):
            x, v = rng.uniform(-15, 15, 2)
            got = float(apply_Lstar_exact(x, v, params, spec, "weight_m"))
            h = float(lyapunov_H(x, v, params, spec))
            full = float(apply_Lstar_exact(x, v, params, spec, "full_h"))
            g = grad_v_H(x, v, params, spec).item()
            if isinstance(spec.mode, ExpWeight):
                th, de = spec.mode.theta, spec.mode.delta
                m = math.exp(de * h ** (th / 2.0))
                p1 = de * th / 2.0 * h ** (th / 2.0 - 1.0) * m
                p2 = (
                    de
                    * th
                    / 2.0
                    * h ** (th / 2.0 - 2.0)
                    * m
                    * ((th / 2.0 - 1.0) + de * th / 2.0 * h ** (th / 2.0))
                )
            else:
                r = spec.mode.k / spec.ell
                m = h**r
                p1 = r * h ** (r - 1.0)
                p2 = r * (r - 1.0) * h ** (r - 2.0)
            expected = p1 * full + p2 * g * g
            assert got == pytest.approx(expected, rel=1e-12)


def test_apply_Lstar_unknown_target(exp_params, exp_spec):
    with pytest.raises(ValueError):
        apply_Lstar_exact(1.0, 1.0, exp_params, exp_spec, "nonsense")


def test_phi_values_and_domain():
    s_th1 = LyapunovSpec(2.0, 0.1, 0.5, 0.6, ExpWeight(theta=1.0, delta=0.1))
    assert phi(7.3, s_th1) == pytest.approx(7.3, rel=1e-15)
    s_half = LyapunovSpec(2.0, 0.1, 0.5, 0.6, ExpWeight(theta=0.5, delta=0.1))
    assert phi(math.e, s_half) == pytest.approx(math.e, rel=1e-14)
    assert phi(1.0, s_half) == 0.0  # boundary convention
    with pytest.raises(ValueError):
        phi(0.99, s_half)
    s_poly = LyapunovSpec(2.0, 0.1, 0.5, 0.6, PolyWeight(k=2.0))
    assert phi(4.0, s_poly) == pytest.approx(2.0, rel=1e-15)
    assert phi(0.25, s_poly) == pytest.approx(0.5, rel=1e-15)  # concave extension
    with pytest.raises(ValueError):
        phi(-1.0, s_poly)


def test_phi_nondecreasing_tail():
    # phi(m) = m (ln m)^(-sigma) with sigma = (1-theta)/theta is increasing
    # exactly on [e^sigma, infinity); for theta >= 1/2 that includes [e, inf).
    s_half = LyapunovSpec(2.0, 0.1, 0.5, 0.6, ExpWeight(theta=0.5, delta=0.1))
    m = np.linspace(math.e, 200.0, 400)
    assert np.all(np.diff(phi(m, s_half)) >= 0.0)
    s_quarter = LyapunovSpec(2.0, 0.1, 0.5, 0.6, ExpWeight(theta=0.25, delta=0.1))
    m = np.linspace(math.exp(3.0), 200.0, 400)
    assert np.all(np.diff(phi(m, s_quarter)) >= 0.0)


def test_theta_decay():
    s_half = LyapunovSpec(2.0, 0.1, 0.5, 0.6, ExpWeight(theta=0.5, delta=0.1))
    assert theta_decay(4.0, s_half, 1.0) == pytest.approx(math.exp(-2.0), rel=1e-14)
    assert theta_decay(0.0, s_half, 3.0) == 1.0
    s_poly = LyapunovSpec(2.0, 0.1, 0.5, 0.6, PolyWeight(k=2.0))
    assert theta_decay(1.0, s_poly) == pytest.approx(0.25, rel=1e-15)
    assert theta_decay(0.0, s_poly) == 1.0
    t = np.linspace(0.0, 30.0, 200)
    vals = theta_decay(t, s_half, 0.7)
    assert np.all(np.diff(vals) < 0.0)
    # log Theta is linear (hence concave) in the stretched time s = t^theta
    s_coord = t[1:] ** 0.5
    slopes = np.diff(np.log(vals[1:])) / np.diff(s_coord)
    assert np.all(np.abs(slopes + 0.7) < 1e-9)


def test_asymptotic_density_constant_and_shape():
    assert asymptotic_prefactor(1.5, 0.5, 1.15) == pytest.approx(4.0154, abs=1e-4)
    # prefactor exponent (alpha/2)(1 - beta/2) for the linear-potential case
    lo, hi = asymptotic_density(np.array([100.0, 200.0]), 1.0, 1.0, 2.0)
    v100 = math.sqrt(1 + 100.0**2) ** 1.0 / 1.0
    v200 = math.sqrt(1 + 200.0**2) ** 1.0 / 1.0
    ratio = (hi / lo) * math.exp(2.0 * (v200**0.5 - v100**0.5))
    assert ratio == pytest.approx(2.0**0.25, rel=1e-6)
    with pytest.raises(ValueError):
        asymptotic_density(0.0, 1.5, 0.5, 1.15)


def test_asymptotic_density_ratio_tends_to_one():
    """Laplace limit: quadrature/closed-form ratio decreases toward 1.

    The correction decays like 1/(delta V^(beta/2)), so the ratio is still
    about 1.14 at x = 300 and needs x ~ 1e6 to fall below 1%.
    """
    alpha, beta, delta = 1.5, 0.5, 1.15

    def ratio(x):
        vpot = math.sqrt(1 + x * x) ** alpha / alpha
        # shifted integrand avoids underflow at large x
        val, _ = integrate.quad(
            lambda v: math.exp(
                -delta * ((v * v / 2 + vpot) ** (beta / 2) - vpot ** (beta / 2))
            ),
            -4e5,
            4e5,
            limit=400,
        )
        pref = asymptotic_prefactor(alpha, beta, delta) * x ** (
            (alpha / 2) * (1 - beta / 2)
        )
        return val / pref

    r300, r1e4, r1e6 = ratio(300.0), ratio(1e4), ratio(1e6)
    assert r300 == pytest.approx(1.137, abs=5e-3)
    assert abs(r1e4 - 1.0) < abs(r300 - 1.0)
    assert abs(r1e6 - 1.0) < abs(r1e4 - 1.0)
    assert abs(r1e6 - 1.0) < 0.01


def test_lyapunov_weight_modes(exp_params, exp_spec, poly_params, poly_spec):
    x, v = 2.0, -1.0
    h = float(lyapunov_H(x, v, exp_params, exp_spec))
    assert float(lyapunov_weight(x, v, exp_params, exp_spec)) == pytest.approx(
        math.exp(exp_spec.mode.delta * h ** (exp_spec.mode.theta / 2.0)), rel=1e-14
    )
    hp = float(lyapunov_H(x, v, poly_params, poly_spec))
    assert float(lyapunov_weight(x, v, poly_params, poly_spec)) == pytest.approx(
        hp ** (poly_spec.mode.k / poly_spec.ell), rel=1e-14
    )
