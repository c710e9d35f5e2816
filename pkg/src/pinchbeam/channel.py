"""Geometry, line-of-sight coefficients and effective channels.

Conventions
-----------
* Users live on the z = 0 plane; waveguide ``m`` runs along x at
  ``y = y_m`` and height ``a``.  Its feed sits at ``o_m = -D_x/2``.
* The downlink effective channel is ``K x M``; entry ``(k, m)`` is the sum
  over the PAs of waveguide ``m`` of :func:`pi_coefficient`.
* The uplink effective channel is ``M x K`` and equals the conjugate
  transpose of the downlink construction with the lossy-only factor
  ``zeta`` in place of ``eta``.
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT
from .errors import (
    ConstraintViolationError,
    DegenerateGeometryError,
    InvalidConfigError,
)

Wavenumbers = namedtuple("Wavenumbers", "wavelength k0 guide_wavelength k_g")

# relative slack for the spacing / span constraints (float positions)
FEASIBILITY_RTOL = 1e-9


def derive_wavenumbers(config):
    """Free-space and in-guide wavelengths and wavenumbers."""
    if not config.f > 0:
        raise InvalidConfigError("f", "carrier frequency must be positive")
    wavelength = SPEED_OF_LIGHT / config.f
    guide_wavelength = wavelength / config.n_eff
    return Wavenumbers(
        wavelength, 2 * np.pi / wavelength, guide_wavelength, 2 * np.pi / guide_wavelength
    )


def attenuation_dl(p, o, kappa, N):
    """Downlink power factor eta: in-guide loss split evenly over N PAs."""
    return 10.0 ** (-kappa * np.abs(np.asarray(p) - o) / 10.0) / N


def attenuation_ul(p, o, kappa):
    """Uplink power factor zeta.  Unlike eta there is no 1/N split."""
    return 10.0 ** (-kappa * np.abs(np.asarray(p) - o) / 10.0)


def los_channel(user, pa, wavelength, k0):
    """Spherical-wave LoS coefficient lambda/(4 pi d) exp(-j k0 d).

    ``user`` and ``pa`` broadcast against each other along the last axis
    (length 3).
    """
    dist = np.linalg.norm(np.asarray(pa, float) - np.asarray(user, float), axis=-1)
    if np.any(dist <= 0):
        raise DegenerateGeometryError("user and antenna coincide")
    return wavelength / (4 * np.pi * dist) * np.exp(-1j * k0 * dist)


def _distances(users, x, y, a):
    """Distances between K users and PAs at x-positions ``x`` on one guide.

    Returns shape ``(K,) + x.shape``.
    """
    users = np.asarray(users, float)
    x = np.asarray(x, float)
    dx = x[None, ...] - users[:, 0].reshape((-1,) + (1,) * x.ndim)
    dy = y - users[:, 1].reshape((-1,) + (1,) * x.ndim)
    dz = a - users[:, 2].reshape((-1,) + (1,) * x.ndim)
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def pi_coefficient(users, x, feed, y, config, direction="dl", waves=None):
    """Per-PA contribution to the effective channel.

    Evaluates ``lambda sqrt(att) / (4 pi d_k) * exp(-j[k0 d_k + k_g (x - o)])``
    for every user against every position in ``x`` on a waveguide with feed
    ``feed`` at height ``config.a`` and ordinate ``y``.  ``att`` is eta for
    ``direction="dl"`` and zeta for ``"ul"``.  Output shape is
    ``(K,) + np.shape(x)``.
    """
    waves = waves or derive_wavenumbers(config)
    x = np.asarray(x, float)
    dist = _distances(users, x, y, config.a)
    if np.any(dist <= 0):
        raise DegenerateGeometryError("user and antenna coincide")
    if direction == "dl":
        att = attenuation_dl(x, feed, config.kappa, config.N)
    elif direction == "ul":
        att = attenuation_ul(x, feed, config.kappa)
    else:
        raise ValueError(f"direction must be 'dl' or 'ul', got {direction!r}")
    phase = waves.k0 * dist + waves.k_g * (x - feed)[None, ...]
    return waves.wavelength * np.sqrt(att)[None, ...] / (4 * np.pi * dist) * np.exp(-1j * phase)


def sample_users(config, rng):
    """K users drawn uniformly over the D_x x D_y rectangle, on z = 0."""
    xy = rng.uniform(-0.5, 0.5, size=(config.K, 2)) * np.array([config.D_x, config.D_y])
    return np.column_stack([xy, np.zeros(config.K)])


def check_users(users, config):
    users = np.asarray(users, float)
    if users.shape != (config.K, 3):
        raise ValueError(f"expected users of shape ({config.K}, 3), got {users.shape}")
    tol = 1e-12
    if (
        np.any(np.abs(users[:, 0]) > config.D_x / 2 + tol)
        or np.any(np.abs(users[:, 1]) > config.D_y / 2 + tol)
        or np.any(users[:, 2] != 0)
    ):
        raise ValueError("users must lie inside the region on the z = 0 plane")
    return users


@dataclass(frozen=True, eq=False)
class PinchingLayout:
    """x-positions ``P`` (M x N) of all pinching antennas plus guide geometry."""

    P: np.ndarray
    feed: np.ndarray
    y: np.ndarray
    a: float

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        P.setflags(write=False)
        object.__setattr__(self, "P", P)
        for name in ("feed", "y"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def M(self):
        return self.P.shape[0]

    @property
    def N(self):
        return self.P.shape[1]

    def with_position(self, m, n, x):
        P = self.P.copy()
        P[m, n] = x
        return PinchingLayout(P, self.feed, self.y, self.a)

    def violations(self, min_spacing, length):
        """Human-readable list of constraint violations (empty if feasible)."""
        out = []
        slack = FEASIBILITY_RTOL * max(length, min_spacing)
        rel = self.P - self.feed[:, None]
        for m, n in zip(*np.nonzero((rel < -slack) | (rel > length + slack))):
            out.append(f"PA ({m},{n}) at {self.P[m, n]:.6g} m outside the guide span")
        for m in range(self.M):
            row = np.sort(self.P[m])
            gaps = np.diff(row)
            for i in np.nonzero(gaps < min_spacing - slack)[0]:
                out.append(f"guide {m}: PAs at {row[i]:.6g} and {row[i + 1]:.6g} closer than {min_spacing:.6g} m")
        return out

    def is_feasible(self, min_spacing, length):
        return not self.violations(min_spacing, length)


def make_layout(config, P):
    """Attach the configured guide geometry to a position matrix."""
    P = np.asarray(P, float)
    if P.shape != (config.M, config.N):
        raise ValueError(f"expected positions of shape ({config.M}, {config.N}), got {P.shape}")
    return PinchingLayout(P, np.full(config.M, config.feed_point), np.array(config.guide_y()), config.a)


def check_layout(layout, config):
    problems = layout.violations(config.min_spacing, config.guide_length)
    if problems:
        raise ConstraintViolationError("; ".join(problems))
    return layout


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """Effective channel of one link direction.

    ``H`` is K x M for ``"dl"`` and M x K for ``"ul"``.  ``guide_norms``
    holds ``||g(p_m)||^2`` (sum of eta or zeta over the PAs of each guide).
    ``noise_cov`` is the diagonal uplink noise covariance R_z (``None`` on
    the downlink).
    """

    H: np.ndarray
    direction: str
    guide_norms: np.ndarray
    noise_cov: np.ndarray | None = None

    @property
    def columns(self):
        """K x M matrix whose m-th column is the per-waveguide vector.

        Downlink: the m-th column of H.  Uplink: the m-th column of H^H.
        """
        return self.H if self.direction == "dl" else self.H.conj().T


def guide_coefficients(users, layout, config, direction, waves=None):
    """Pi coefficients of every PA: array of shape (K, M, N)."""
    waves = waves or derive_wavenumbers(config)
    return np.stack(
        [
            pi_coefficient(users, layout.P[m], layout.feed[m], layout.y[m], config, direction, waves)
            for m in range(layout.M)
        ],
        axis=1,
    )


def effective_channel_dl(users, layout, config):
    check_layout(layout, config)
    pis = guide_coefficients(users, layout, config, "dl")
    norms = attenuation_dl(layout.P, layout.feed[:, None], config.kappa, config.N).sum(axis=1)
    return EffectiveChannel(pis.sum(axis=2), "dl", norms)


def effective_channel_ul(users, layout, config):
    """Uplink channel (M x K) and its noise covariance R_z."""
    check_layout(layout, config)
    pis = guide_coefficients(users, layout, config, "ul")
    norms = attenuation_ul(layout.P, layout.feed[:, None], config.kappa).sum(axis=1)
    return EffectiveChannel(pis.sum(axis=2).conj().T, "ul", norms, np.diag(config.sigma2 * norms))


def effective_channel(users, layout, config, direction):
    if direction == "dl":
        return effective_channel_dl(users, layout, config)
    if direction == "ul":
        return effective_channel_ul(users, layout, config)
    raise ValueError(f"direction must be 'dl' or 'ul', got {direction!r}")


# -- explicit matrix construction (h_k, G); used as an independent path --------


def pa_coordinates(layout):
    """(M, N, 3) Cartesian coordinates of every PA."""
    M, N = layout.P.shape
    return np.stack(
        [layout.P, np.broadcast_to(layout.y[:, None], (M, N)), np.full((M, N), layout.a)], axis=-1
    )


def free_space_matrix(users, coords, config):
    """K x (M N) matrix of LoS coefficients h_{k,m,n} (row-major over m, n)."""
    waves = derive_wavenumbers(config)
    flat = np.asarray(coords, float).reshape(-1, 3)
    users = np.asarray(users, float)
    return los_channel(users[:, None, :], flat[None, :, :], waves.wavelength, waves.k0)


def guide_matrix(layout, config, direction):
    """Block-diagonal (M N) x M in-waveguide propagation matrix G."""
    waves = derive_wavenumbers(config)
    M, N = layout.P.shape
    offset = layout.P - layout.feed[:, None]
    if direction == "dl":
        att = attenuation_dl(layout.P, layout.feed[:, None], config.kappa, N)
    else:
        att = attenuation_ul(layout.P, layout.feed[:, None], config.kappa)
    g = np.sqrt(att) * np.exp(-1j * waves.k_g * offset)
    G = np.zeros((M * N, M), complex)
    for m in range(M):
        G[m * N:(m + 1) * N, m] = g[m]
    return G
