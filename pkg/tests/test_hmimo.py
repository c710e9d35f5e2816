import math

import numpy as np
import pytest

from pinchbeam import downlink, uplink
from pinchbeam.channel import free_space_matrix, sample_users
from pinchbeam.config import ScenarioConfig
from pinchbeam.hmimo import analog_stage, baseline_channel, baseline_sumrate, fixed_array


def test_fixed_array_geometry():
    cfg = ScenarioConfig()
    coords = fixed_array(cfg).coords
    assert coords.shape == (cfg.M, cfg.N, 3)
    np.testing.assert_allclose(np.diff(coords[0, :, 0]), cfg.wavelength / 2)
    assert abs(coords[0, :, 0].mean()) < 1e-15
    np.testing.assert_allclose(coords[:, 0, 1], cfg.guide_y())
    assert np.all(coords[..., 2] == cfg.a)


def test_single_chain_coherent_gain(rng):
    cfg = ScenarioConfig(M=1, K=1)
    users = sample_users(cfg, rng)
    h = free_space_matrix(users, fixed_array(cfg).coords, cfg)
    F = analog_stage(h, 1, cfg.N)
    np.testing.assert_allclose(F[:, 0], np.exp(-1j * np.angle(h[0])))
    assert (h @ F)[0, 0] == pytest.approx(np.abs(h).sum(), rel=1e-12)


def test_analog_stage_unit_modulus(rng):
    cfg = ScenarioConfig()
    users = sample_users(cfg, rng)
    h = free_space_matrix(users, fixed_array(cfg).coords, cfg)
    F = analog_stage(h, cfg.M, cfg.N)
    blocks = F.reshape(cfg.M, cfg.N, cfg.M)
    for m in range(cfg.M):
        np.testing.assert_allclose(np.abs(blocks[m, :, m]), 1.0, atol=1e-15)
        assert np.count_nonzero(np.delete(blocks[m], m, axis=1)) == 0
    H, _ = baseline_channel(cfg, users, "dl")
    assert H.shape == (cfg.K, cfg.M)


def test_downlink_radiated_power(rng):
    cfg = ScenarioConfig()
    users = sample_users(cfg, rng)
    h = free_space_matrix(users, fixed_array(cfg).coords, cfg)
    F = analog_stage(h, cfg.M, cfg.N)
    H, _ = baseline_channel(cfg, users, "dl")
    W = downlink.dl_beamformer("mmse", H, cfg.P_d, cfg.sigma2).W
    X = F @ W / math.sqrt(cfg.N)  # per-antenna signals
    assert np.trace(X @ X.conj().T).real == pytest.approx(cfg.P_d, rel=1e-10)


def test_uplink_noise(rng):
    cfg = ScenarioConfig()
    users = sample_users(cfg, rng)
    H, R = baseline_channel(cfg, users, "ul")
    assert H.shape == (cfg.M, cfg.K)
    np.testing.assert_allclose(R, cfg.N * cfg.sigma2 * np.eye(cfg.M))


def test_identity_pattern_single_antenna_is_plain_array(rng):
    cfg = ScenarioConfig(N=1)
    users = sample_users(cfg, rng)
    F = np.eye(cfg.M)
    h = free_space_matrix(users, fixed_array(cfg).coords, cfg)
    for scheme in downlink.SCHEMES:
        assert baseline_sumrate(cfg, users, "dl", scheme, F) == pytest.approx(
            downlink.dl_sumrate(h, scheme, cfg.P_d, cfg.sigma2), rel=1e-12)
    p = np.full(cfg.K, cfg.P_u)
    for scheme in uplink.SCHEMES:
        assert baseline_sumrate(cfg, users, "ul", scheme, F) == pytest.approx(
            uplink.ul_sumrate(h.conj().T, scheme, p, cfg.sigma2 * np.eye(cfg.M)), rel=1e-12)


def test_baseline_ignores_pass_seed(rng):
    users = sample_users(ScenarioConfig(), rng)
    a = baseline_sumrate(ScenarioConfig(seed=1), users, "dl", "zf")
    b = baseline_sumrate(ScenarioConfig(seed=99), users, "dl", "zf")
    assert a == b
