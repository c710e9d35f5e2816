"""Fixed-antenna hybrid MIMO benchmark.

Each of the M RF chains drives N fixed antennas through unit-modulus phase
shifters.  Antennas of chain m sit on a half-wavelength line centred at
x = 0, at the ordinate and height of waveguide m.  The analog stage
phase-matches one user per chain (chain m serves user m mod K); the digital
stage is any of the downlink/uplink linear schemes applied to the resulting
effective channel.
"""

from dataclasses import dataclass

import numpy as np

from . import downlink, uplink
from .channel import free_space_matrix


@dataclass(frozen=True, eq=False)
class FixedArray:
    coords: np.ndarray  # (M, N, 3)
    F: np.ndarray | None = None  # (M N) x M analog matrix


def fixed_array(config):
    M, N = config.M, config.N
    x = (np.arange(N) - (N - 1) / 2) * config.wavelength / 2
    y = np.asarray(config.guide_y())
    coords = np.stack(
        [np.broadcast_to(x, (M, N)), np.broadcast_to(y[:, None], (M, N)), np.full((M, N), config.a)],
        axis=-1,
    )
    return FixedArray(coords)


def chain_users(M, K):
    """User whose channel each RF chain phase-matches."""
    return np.arange(M) % K


def analog_stage(h_full, M, N, assignment=None):
    """Block-diagonal unit-modulus analog matrix.

    ``h_full`` is the K x (M N) free-space channel.  Chain m's phase
    shifters conjugate the phases of its assigned user's N coefficients.
    """
    K = h_full.shape[0]
    assignment = chain_users(M, K) if assignment is None else np.asarray(assignment)
    F = np.zeros((M * N, M), complex)
    for m in range(M):
        sub = h_full[assignment[m], m * N:(m + 1) * N]
        F[m * N:(m + 1) * N, m] = np.exp(-1j * np.angle(sub))
    return F


def baseline_channel(config, users, direction, F=None):
    """Effective channel of the hybrid array and (uplink) its noise covariance.

    On the downlink each chain's power is split over its N antennas, so
    the radiated power equals the digital power budget.  On the uplink the
    noise of the N antennas adds up through the phase shifters,
    R_z = sigma^2 ||f_m||^2 I, and the effective channel is (h F)^H.
    """
    arr = fixed_array(config)
    h_full = free_space_matrix(users, arr.coords, config)
    if F is None:
        F = analog_stage(h_full, config.M, config.N)
    G = h_full @ F  # K x M
    if direction == "dl":
        return G / np.sqrt(config.N), None
    if direction == "ul":
        norms = np.sum(np.abs(F) ** 2, axis=0)
        return G.conj().T, np.diag(config.sigma2 * norms)
    raise ValueError(f"direction must be 'dl' or 'ul', got {direction!r}")


def baseline_sumrate(config, users, direction, scheme, F=None):
    H, R = baseline_channel(config, users, direction, F)
    if direction == "dl":
        return downlink.dl_sumrate(H, scheme, config.P_d, config.sigma2)
    return uplink.ul_sumrate(H, scheme, np.full(config.K, config.P_u), R)
