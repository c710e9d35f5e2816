import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinchbeam.channel import (
    attenuation_dl,
    attenuation_ul,
    derive_wavenumbers,
    effective_channel,
    los_channel,
    make_layout,
    pi_coefficient,
    sample_users,
)
from pinchbeam.config import ScenarioConfig
from pinchbeam.errors import ConstraintViolationError, DegenerateGeometryError, InvalidConfigError
from pinchbeam.optimizer import init_layout

C = 299_792_458.0


def test_wavelength_at_28ghz():
    w = derive_wavenumbers(ScenarioConfig())
    assert w.wavelength == pytest.approx(1.0707e-2, rel=1e-4)
    assert w.wavelength == pytest.approx(C / 28e9, rel=1e-15)


def test_guide_wavenumber():
    assert derive_wavenumbers(ScenarioConfig(n_eff=1.0)).k_g == derive_wavenumbers(ScenarioConfig(n_eff=1.0)).k0
    w = derive_wavenumbers(ScenarioConfig(n_eff=1.4))
    assert w.k_g == pytest.approx(2 * math.pi * 1.4 * 28e9 / C, rel=1e-14)
    assert w.k_g / w.k0 == pytest.approx(1.4, rel=1e-14)


def test_attenuation_examples():
    assert attenuation_dl(3.0, 0.0, 0.0, 6) == pytest.approx(1 / 6)
    assert attenuation_dl(10.0, 0.0, 0.1, 6) == pytest.approx(0.132388, abs=5e-7)
    assert attenuation_dl(-2.0, -2.0, 0.1, 1) == 1.0
    assert attenuation_ul(7.0, 0.0, 0.0) == 1.0
    assert attenuation_ul(10.0, 0.0, 0.1) == pytest.approx(0.794328, abs=5e-7)
    assert attenuation_ul(4.2, 1.0, 0.1) == pytest.approx(6 * attenuation_dl(4.2, 1.0, 0.1, 6), rel=1e-15)


@given(st.floats(0, 100), st.floats(0, 100), st.floats(0.001, 1.0))
def test_attenuation_non_increasing(p1, p2, kappa):
    lo, hi = sorted((p1, p2))
    assert attenuation_ul(hi, 0.0, kappa) <= attenuation_ul(lo, 0.0, kappa)
    assert 0 < attenuation_dl(hi, 0.0, kappa, 4) <= 0.25


def test_los_modulus():
    lam = C / 28e9
    h = los_channel([0, 0, 0], [0, 0, 5], lam, 2 * math.pi / lam)
    assert abs(h) == pytest.approx(1.7042e-4, rel=1e-4)
    assert abs(h) == pytest.approx(lam / (4 * math.pi * 5), rel=1e-14)
    h2 = los_channel([0, 0, 0], [0, 0, 10], lam, 2 * math.pi / lam)
    assert abs(h2) == pytest.approx(abs(h) / 2, rel=1e-14)


def test_los_coincident_points():
    with pytest.raises(DegenerateGeometryError):
        los_channel([1, 2, 0], [1, 2, 0], 0.01, 600.0)


def test_pi_at_feed_directly_above_user():
    cfg = ScenarioConfig(kappa=0.0, N=1, M=1)
    lam = C / cfg.f
    k0 = 2 * math.pi / lam
    users = np.array([[cfg.feed_point, 0.0, 0.0]])
    pi = pi_coefficient(users, np.array([cfg.feed_point]), cfg.feed_point, 0.0, cfg)[0, 0]
    assert abs(pi) == pytest.approx(lam / (4 * math.pi * cfg.a), rel=1e-13)
    assert np.exp(1j * np.angle(pi)) == pytest.approx(np.exp(-1j * k0 * cfg.a), abs=1e-9)


def test_pi_factorises(rng):
    cfg = ScenarioConfig(kappa=0.0, N=1)
    w = derive_wavenumbers(cfg)
    users = sample_users(cfg, rng)
    x = rng.uniform(cfg.feed_point, -cfg.feed_point, 5)
    y = 0.75
    pi = pi_coefficient(users, x, cfg.feed_point, y, cfg)
    pa = np.stack([x, np.full(5, y), np.full(5, cfg.a)], axis=-1)
    h = los_channel(users[:, None, :], pa[None], w.wavelength, w.k0)
    np.testing.assert_allclose(pi, h * np.exp(-1j * w.k_g * (x - cfg.feed_point)), rtol=1e-10)


def _explicit_h(users, layout, cfg):
    """h_k^H G by brute-force loops over every PA."""
    lam = C / cfg.f
    k0, kg = 2 * math.pi / lam, 2 * math.pi * cfg.n_eff / lam
    K, (M, N) = len(users), layout.P.shape
    h = np.zeros((K, M * N), complex)
    G = np.zeros((M * N, M), complex)
    for m in range(M):
        for n in range(N):
            pa = np.array([layout.P[m, n], layout.y[m], cfg.a])
            off = layout.P[m, n] - layout.feed[m]
            G[m * N + n, m] = math.sqrt(10 ** (-cfg.kappa * off / 10) / N) * np.exp(-1j * kg * off)
            for k in range(K):
                dist = np.linalg.norm(pa - users[k])
                h[k, m * N + n] = lam / (4 * math.pi * dist) * np.exp(-1j * k0 * dist)
    return h @ G


def test_downlink_matches_explicit_product(rng):
    for cfg in (ScenarioConfig(), ScenarioConfig(M=2, K=2, N=2)):
        users = sample_users(cfg, rng)
        layout = init_layout(cfg, rng)
        H = effective_channel(users, layout, cfg, "dl").H
        ref = _explicit_h(users, layout, cfg)
        assert H.shape == (cfg.K, cfg.M)
        assert np.linalg.norm(H - ref) / np.linalg.norm(ref) < 1e-11


def test_scalar_case(rng):
    cfg = ScenarioConfig(M=1, N=1, K=1)
    users = sample_users(cfg, rng)
    layout = make_layout(cfg, [[3.0]])
    H = effective_channel(users, layout, cfg, "dl").H
    pi = pi_coefficient(users, np.array([3.0]), cfg.feed_point, layout.y[0], cfg)
    assert H.shape == (1, 1) and H[0, 0] == pi[0, 0]


def test_uplink_is_scaled_conjugate_transpose(rng):
    cfg = ScenarioConfig(N=6, kappa=0.1)
    users = sample_users(cfg, rng)
    layout = init_layout(cfg, rng)
    H_dl = effective_channel(users, layout, cfg, "dl").H
    H_ul = effective_channel(users, layout, cfg, "ul").H
    np.testing.assert_allclose(H_ul, math.sqrt(cfg.N) * H_dl.conj().T, rtol=1e-12)
    cfg1 = cfg.replace(N=1)
    layout1 = make_layout(cfg1, layout.P[:, :1])
    np.testing.assert_allclose(
        effective_channel(users, layout1, cfg1, "ul").H, effective_channel(users, layout1, cfg1, "dl").H.conj().T
    )


def test_uplink_noise_covariance(rng):
    cfg = ScenarioConfig()
    users = sample_users(cfg, rng)
    layout = init_layout(cfg, rng)
    R = effective_channel(users, layout, cfg, "ul").noise_cov
    # G^T E{z z^H} G^* with the explicit uplink G
    off = layout.P - layout.feed[:, None]
    g = np.sqrt(10 ** (-cfg.kappa * off / 10)) * np.exp(-1j * 2 * math.pi * cfg.n_eff * cfg.f / C * off)
    G = np.zeros((cfg.M * cfg.N, cfg.M), complex)
    for m in range(cfg.M):
        G[m * cfg.N:(m + 1) * cfg.N, m] = g[m]
    ref = G.T @ (cfg.sigma2 * np.eye(cfg.M * cfg.N)) @ G.conj()
    np.testing.assert_allclose(R, ref.real, rtol=1e-12, atol=0)
    assert np.all(np.diag(R) > 0) and np.count_nonzero(R - np.diag(np.diag(R))) == 0


def test_lossless_noise_covariance(rng):
    for N in (1, 6):
        cfg = ScenarioConfig(kappa=0.0, N=N)
        users = sample_users(cfg, rng)
        R = effective_channel(users, init_layout(cfg, rng), cfg, "ul").noise_cov
        np.testing.assert_allclose(R, N * cfg.sigma2 * np.eye(cfg.M), rtol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_triangle_bound(seed):
    rng = np.random.default_rng(seed)
    cfg = ScenarioConfig()
    users = sample_users(cfg, rng)
    layout = init_layout(cfg, rng)
    H = effective_channel(users, layout, cfg, "dl").H
    lam = cfg.wavelength
    for m in range(cfg.M):
        pa = np.stack([layout.P[m], np.full(cfg.N, layout.y[m]), np.full(cfg.N, cfg.a)], axis=-1)
        dist = np.linalg.norm(pa[None] - users[:, None], axis=-1)
        eta = attenuation_dl(layout.P[m], layout.feed[m], cfg.kappa, cfg.N)
        bound = (lam * np.sqrt(eta) / (4 * math.pi * dist)).sum(axis=1)
        assert np.all(np.abs(H[:, m]) <= bound * (1 + 1e-12))


def test_infeasible_layout_rejected(rng):
    cfg = ScenarioConfig(M=1, N=2)
    users = sample_users(cfg, rng)
    with pytest.raises(ConstraintViolationError):
        effective_channel(users, make_layout(cfg, [[0.0, 0.001]]), cfg, "dl")
    with pytest.raises(ConstraintViolationError):
        effective_channel(users, make_layout(cfg, [[0.0, 30.0]]), cfg, "dl")


def test_users_inside_region(rng):
    cfg = ScenarioConfig()
    u = sample_users(cfg, rng)
    assert u.shape == (cfg.K, 3)
    assert np.all(np.abs(u[:, 0]) <= cfg.D_x / 2) and np.all(np.abs(u[:, 1]) <= cfg.D_y / 2)
    assert np.all(u[:, 2] == 0)


def test_config_validation():
    with pytest.raises(InvalidConfigError) as exc:
        ScenarioConfig(M=0)
    assert exc.value.field == "M"
    with pytest.raises(InvalidConfigError) as exc:
        ScenarioConfig(Delta=10.0, N=7, D_x=50.0)
    assert exc.value.field == "Delta"
    ScenarioConfig(Delta=10.0, N=6, D_x=50.0)  # tight but legal
    for field, value in (("f", 0.0), ("n_eff", 0.9), ("kappa", -1.0), ("N_s", 1), ("a", -1.0)):
        with pytest.raises(InvalidConfigError):
            ScenarioConfig(**{field: value})


def test_config_defaults():
    cfg = ScenarioConfig()
    assert (cfg.D_x, cfg.D_y, cfg.M, cfg.N, cfg.K, cfg.a) == (50, 6, 5, 6, 4, 5)
    assert cfg.spacing == 1.5
    assert cfg.guide_y() == [-3.0, -1.5, 0.0, 1.5, 3.0]
    assert cfg.min_spacing == pytest.approx(C / 28e9 / 2)
    assert cfg.sigma2 == pytest.approx(1e-12) and cfg.P_d == pytest.approx(1e-3)
    assert cfg.N_s == 10_000
