"""Converter- and network-side frequency responses.

Independent oracles used here:

* Gamma closed forms, derived by rationalizing
  Gamma(jw) = w0*(jw/G_pll + U) / (jw*U) with G_pll = kp + ki/(jw):

      Re = w0*w^2*kp / (U*(w^2*kp^2 + ki^2))
      Im = w0*(w^2*(ki - kp^2*U) - U*ki^2) / (w*U*(w^2*kp^2 + ki^2))

  so Im = 0 at w^2 = U*ki^2 / (ki - kp^2*U).

* Scalar network response G = -(P/U^2)/b + j*(w0/w)*(Q/U^2)/b.
"""
from __future__ import annotations

import numpy as np
import pytest

from syncstab.config import parse_system_spec
from syncstab.errors import AnalysisError
from syncstab.frequency_response import (OperatingPoint, build_gnet,
                                         build_gnet_sym, gamma,
                                         per_converter_gamma,
                                         resolve_pll_gains, sym_parts,
                                         trace_curves)
from syncstab.network import ReducedNetwork, build_reduced_network

from conftest import (KI, KP, TWO_BUS_CFG, random_operating_point,
                      random_pd_network, synthetic_spec)

W0 = 2 * np.pi * 50


def gamma_oracle(w: float, u: float, kp: float = KP, ki: float = KI,
                 w0: float = W0) -> complex:
    denom = u * (w * w * kp * kp + ki * ki)
    re = w0 * w * w * kp / denom
    im = w0 * (w * w * (ki - kp * kp * u) - u * ki * ki) / (w * denom)
    return complex(re, im)


def crossing_freq_oracle(u: float, kp: float = KP, ki: float = KI) -> float:
    return np.sqrt(u * ki * ki / (ki - kp * kp * u)) / (2 * np.pi)


# --- converter side ----------------------------------------------------------

@pytest.mark.parametrize("f", [0.7, 5.0, 20.3, 33.0, 59.0])
@pytest.mark.parametrize("u", [0.9, 1.0, 1.1])
def test_gamma_matches_rationalized_form(f, u):
    w = 2 * np.pi * f
    got = gamma(w, u, KP, KI, W0)
    assert got == pytest.approx(gamma_oracle(w, u), rel=1e-12)


def test_gamma_worked_example():
    # frozen reference point: f = 20.3 Hz, U = 1
    got = gamma(2 * np.pi * 20.3, 1.0, KP, KI, W0)
    assert got.real == pytest.approx(0.1330, abs=5e-4)
    assert got.imag == pytest.approx(0.0690, abs=5e-4)


def test_gamma_imag_zero_crossing():
    f_star = crossing_freq_oracle(1.0)
    assert f_star == pytest.approx(20.0208843, abs=1e-6)
    assert gamma(2 * np.pi * f_star, 1.0, KP, KI, W0).imag == pytest.approx(
        0.0, abs=1e-12)
    # sign change around it
    assert gamma(2 * np.pi * (f_star - 0.5), 1.0, KP, KI, W0).imag < 0
    assert gamma(2 * np.pi * (f_star + 0.5), 1.0, KP, KI, W0).imag > 0


def test_gamma_re_limit_large_ki_small():
    # ki -> 0: Re Gamma -> w0/(kp*U) independent of w
    for u in (0.9, 1.0, 1.2):
        got = gamma(2 * np.pi * 17.0, u, KP, 1e-9, W0)
        assert got.real == pytest.approx(W0 / (KP * u), rel=1e-6)


def test_gamma_vectorized_and_degenerate():
    w = 2 * np.pi * np.array([1.0, 10.0, 30.0])
    vals = gamma(w, 1.0, KP, KI, W0)
    assert vals.shape == (3,)
    for wi, vi in zip(w, vals):
        assert vi == pytest.approx(gamma_oracle(wi, 1.0), rel=1e-12)
    with pytest.raises(AnalysisError) as exc:
        gamma(0.0, 1.0, KP, KI, W0)
    assert exc.value.code == "DEGENERATE_FREQ"


def test_resolve_pll_gains_identical_and_forced():
    spec = parse_system_spec(TWO_BUS_CFG)
    kp, ki, warnings = resolve_pll_gains(spec)
    assert (kp, ki) == (6.5, 15782) and warnings == []
    mixed = parse_system_spec(TWO_BUS_CFG.replace(
        "C1 bus1 6.5 15782", "C1 bus1 6.5 15782\nC2 bus2 5.0 9000").replace(
        "[nodes]\nbus1\ngrid", "[nodes]\nbus1\nbus2\ngrid").replace(
        "[branches]\nbus1 grid 0.3", "[branches]\nbus1 grid 0.3\nbus2 grid 0.4"))
    with pytest.raises(AnalysisError) as exc:
        resolve_pll_gains(mixed)
    assert exc.value.code == "NONIDENTICAL_PLL"
    kp, ki, warnings = resolve_pll_gains(mixed, force_first_pll=True)
    assert (kp, ki) == (6.5, 15782)
    assert warnings  # carries a note about the unused second tuning


# --- network side ------------------------------------------------------------

def test_gnet_scalar_closed_form():
    net = ReducedNetwork.from_b_matrix(np.array([[1 / 0.3]]))
    op = OperatingPoint(np.array([0.5]), np.array([0.2]), np.array([1.0]))
    w = 2 * np.pi * 20.0
    got = build_gnet(w, net, op, W0)
    assert got.shape == (1, 1)
    expect = -0.5 * 0.3 + 1j * (W0 / w) * 0.2 * 0.3
    assert got[0, 0] == pytest.approx(expect, rel=1e-12)


def test_gnet_voltage_scaling():
    # P/U^2 scaling: halving U quadruples the response
    net = ReducedNetwork.from_b_matrix(np.array([[2.0]]))
    op1 = OperatingPoint(np.array([0.4]), np.array([0.0]), np.array([1.0]))
    op2 = OperatingPoint(np.array([0.4]), np.array([0.0]), np.array([0.5]))
    w = 2 * np.pi * 15.0
    assert build_gnet(w, net, op2, W0)[0, 0] == pytest.approx(
        4 * build_gnet(w, net, op1, W0)[0, 0], rel=1e-12)


def test_gnet_linear_in_power():
    rng = np.random.default_rng(3)
    net = random_pd_network(rng, 4)
    u = np.ones(4)
    p, q = rng.uniform(-1, 1, 4), rng.uniform(-0.5, 0.5, 4)
    w = 2 * np.pi * 22.0
    g1 = build_gnet(w, net, OperatingPoint(p, q, u), W0)
    g2 = build_gnet(w, net, OperatingPoint(2 * p, 2 * q, u), W0)
    np.testing.assert_allclose(g2, 2 * g1, atol=1e-12)


def test_similarity_gnet_vs_symmetric():
    # eigenvalue multisets of B^-1 form and B^-1/2 ... B^-1/2 form agree
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(1, 9))
        net = random_pd_network(rng, n)
        op = random_operating_point(rng, n)
        w = 2 * np.pi * rng.uniform(0.5, 60.0)
        ev_a = np.sort_complex(np.linalg.eigvals(build_gnet(w, net, op, W0)))
        ev_b = np.sort_complex(np.linalg.eigvals(build_gnet_sym(w, net, op, W0)))
        np.testing.assert_allclose(ev_a, ev_b, atol=1e-10)


def test_sym_parts_are_symmetric_and_consistent():
    rng = np.random.default_rng(5)
    net = random_pd_network(rng, 5)
    op = random_operating_point(rng, 5, flat=False)
    s_p, s_q = sym_parts(net, op)
    np.testing.assert_allclose(s_p, s_p.T, atol=1e-12)
    np.testing.assert_allclose(s_q, s_q.T, atol=1e-12)
    w = 2 * np.pi * 18.0
    np.testing.assert_allclose(build_gnet_sym(w, net, op, W0),
                               -s_p + 1j * (W0 / w) * s_q, atol=1e-12)


def test_gnet_real_eigenvalues_when_q_zero():
    rng = np.random.default_rng(9)
    net = random_pd_network(rng, 6)
    p = rng.uniform(-1, 1, 6)
    op = OperatingPoint(p, np.zeros(6), np.ones(6))
    vals = np.linalg.eigvals(build_gnet_sym(2 * np.pi * 12.0, net, op, W0))
    np.testing.assert_allclose(vals.imag, 0.0, atol=1e-12)


# --- curve tracing -----------------------------------------------------------

def test_trace_two_bus_curve_values():
    spec = parse_system_spec(TWO_BUS_CFG)
    net = build_reduced_network(spec)
    op = OperatingPoint(np.array([0.5]), np.array([0.0]), np.array([1.0]))
    curves = trace_curves(spec, net, op)
    assert curves.n == 1
    assert curves.m == spec.options.scan_points
    assert curves.f_hz[0] == pytest.approx(0.5)
    assert curves.f_hz[-1] == pytest.approx(60.0)
    # D_net is constant -P*L/U^2 over the whole grid for the scalar Q=0 system
    assert curves.d_net.shape == (1, curves.m)
    np.testing.assert_allclose(curves.d_net[0, :], -0.5 * 0.3, atol=1e-12)
    np.testing.assert_allclose(curves.k_net[0, :], 0.0, atol=1e-12)
    # converter side matches the closed form on the same grid
    for k in (0, 100, 600, -1):
        expect = gamma_oracle(curves.omega_rad_s[k], 1.0)
        assert curves.d_con[k] == pytest.approx(expect.real, rel=1e-12)
        assert curves.k_con[k] == pytest.approx(expect.imag, rel=1e-12)
    assert curves.branch_jumps == []


def test_trace_grid_override_and_validation():
    spec = parse_system_spec(TWO_BUS_CFG)
    net = build_reduced_network(spec)
    op = OperatingPoint(np.array([0.1]), np.array([0.0]), np.array([1.0]))
    grid = np.linspace(5.0, 25.0, 40)
    curves = trace_curves(spec, net, op, grid_hz=grid)
    assert curves.m == 40
    with pytest.raises(AnalysisError) as exc:
        trace_curves(spec, net, op, grid_hz=np.array([5.0, 4.0]))
    assert exc.value.code == "GRID_INVALID"
    with pytest.raises(AnalysisError):
        trace_curves(spec, net, op, grid_hz=np.array([-1.0, 4.0]))


def test_branch_tracking_continuity():
    # two nearly-degenerate branches; tracked eigenvector overlap must stay
    # high on a dense grid and branch values must be smooth
    rng = np.random.default_rng(21)
    net = random_pd_network(rng, 3)
    op = random_operating_point(rng, 3)
    spec = synthetic_spec(3, scan_points=900)
    curves = trace_curves(spec, net, op)
    assert curves.branch_jumps == []
    # smoothness above the steep w0/w low-frequency edge: successive steps
    # stay small relative to curve scale for f > 5 Hz
    cols = curves.f_hz > 5.0
    d = curves.d_net[:, cols]
    step = np.abs(np.diff(d, axis=1)).max()
    scale = np.abs(d).max() + 1e-12
    assert step < 0.02 * scale


def test_branch_order_is_deterministic():
    rng = np.random.default_rng(33)
    net = random_pd_network(rng, 4)
    op = random_operating_point(rng, 4)
    spec = synthetic_spec(4, scan_points=300)
    a = trace_curves(spec, net, op)
    b = trace_curves(spec, net, op)
    np.testing.assert_array_equal(a.d_net, b.d_net)
    np.testing.assert_array_equal(a.k_net, b.k_net)


def test_per_converter_gamma_shapes():
    spec = parse_system_spec(TWO_BUS_CFG)
    op = OperatingPoint(np.array([0.5]), np.array([0.0]), np.array([0.95]))
    grid = np.linspace(1.0, 30.0, 25)
    vals = per_converter_gamma(spec, op, grid)
    assert vals.shape == (1, 25)
    expect = gamma_oracle(2 * np.pi * grid[7], 0.95)
    assert vals[0, 7] == pytest.approx(expect, rel=1e-12)
