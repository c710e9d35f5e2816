"""Downlink baseband beamforming (MRT / ZF / MMSE) and per-PA objectives.

``H`` is always the K x M effective channel.  The per-PA objectives take a
state built for one waveguide ``m`` (everything that does not depend on the
positions on that guide) and a ``(K, n)`` batch of candidate columns
``H[:, m]``; they return one score per candidate.
"""

from dataclasses import dataclass
import logging

import numpy as np

from .errors import DegenerateChannelError, SchemeInfeasibleError, SingularChannelError, SingularUpdateError
from .rankone import CachedInverse, rank1_factors, trace_reduction_rank1, woodbury_M

log = logging.getLogger(__name__)

SCHEMES = ("mrt", "zf", "mmse")

# residual interference-plus-noise is clamped at this fraction of B_k
CLAMP = 1e-15
# condition number beyond which a Gram matrix is treated as singular
COND_LIMIT = 1e13


@dataclass(frozen=True, eq=False)
class DlBeamformer:
    W: np.ndarray
    scheme: str
    norm_factor: float


def _gram(H):
    return H @ H.conj().T


def mrt_beamformer(H, P):
    H = np.asarray(H)
    power = float(np.trace(_gram(H)).real)
    if power <= 0:
        raise DegenerateChannelError("MRT needs a non-zero channel")
    scale = np.sqrt(P / power)
    return DlBeamformer(scale * H.conj().T, "mrt", scale)


def _zf_inverse(H):
    K, M = H.shape
    if K > M:
        raise SchemeInfeasibleError(f"zero-forcing needs K <= M, got K={K}, M={M}")
    T = _gram(H)
    if not np.isfinite(np.linalg.cond(T)) or np.linalg.cond(T) > COND_LIMIT:
        raise SingularChannelError("H H^H is (numerically) singular")
    return np.linalg.inv(T)


def zf_beamformer(H, P):
    H = np.asarray(H)
    T_inv = _zf_inverse(H)
    scale = np.sqrt(P / np.trace(T_inv).real)
    return DlBeamformer(scale * H.conj().T @ T_inv, "zf", scale)


def mmse_power_factor(H, P, sigma2):
    """beta(P) = P / tr((rho H H^H + I)^-2 H H^H), rho = P/(K sigma^2)."""
    K = H.shape[0]
    T = _gram(H)
    Q = np.linalg.inv(P / (K * sigma2) * T + np.eye(K))
    return P / np.trace(Q @ Q @ T).real


def mmse_beamformer(H, P, sigma2):
    H = np.asarray(H)
    K = H.shape[0]
    T = _gram(H)
    Q = np.linalg.inv(P / (K * sigma2) * T + np.eye(K))
    beta = P / np.trace(Q @ Q @ T).real
    return DlBeamformer(np.sqrt(beta) * H.conj().T @ Q, "mmse", float(np.sqrt(beta)))


def dl_beamformer(scheme, H, P, sigma2):
    if scheme == "mrt":
        return mrt_beamformer(H, P)
    if scheme == "zf":
        return zf_beamformer(H, P)
    if scheme == "mmse":
        return mmse_beamformer(H, P, sigma2)
    raise ValueError(f"unknown downlink scheme {scheme!r}")


def sinr_dl_direct(H, W, sigma2):
    """Per-user SINR of an arbitrary precoder W on channel H."""
    G = np.abs(np.asarray(H) @ np.asarray(W)) ** 2
    signal = np.diag(G)
    interference = G.sum(axis=1) - signal
    return signal / (interference + sigma2)


def sum_rate(sinr):
    return float(np.sum(np.log2(1.0 + np.asarray(sinr))))


def sinr_mrt_closed(H, P, sigma2):
    T = _gram(H)
    d = np.diag(T).real
    interference = np.sum(np.abs(T) ** 2, axis=1) - d**2
    return d**2 / (interference + np.trace(T).real * sigma2 / P)


def sinr_zf_closed(H, P, sigma2):
    return P / (np.trace(_zf_inverse(np.asarray(H))).real * np.asarray(sigma2))


def sinr_mmse_closed(H, P, sigma2):
    H = np.asarray(H)
    K = H.shape[0]
    Mw = woodbury_M(H, P / (K * sigma2))
    G = np.abs(H @ Mw @ H.conj().T) ** 2
    beta = mmse_power_factor(H, P, sigma2)
    signal = np.diag(G)
    return signal / (G.sum(axis=1) - signal + sigma2 / beta)


def dl_sumrate(H, scheme, P, sigma2):
    """Full pipeline: build the beamformer, substitute, sum the rates."""
    W = dl_beamformer(scheme, H, P, sigma2).W
    return sum_rate(sinr_dl_direct(H, W, sigma2))


# -- element-wise states ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MrtState:
    c: np.ndarray  # sum over m' != m of b b^H
    P: float
    sigma2: float


@dataclass(frozen=True, eq=False)
class ZfState:
    rest: np.ndarray  # H_breve: sum over m' != m of b b^H
    cache: CachedInverse | None  # None -> H_breve singular, direct fallback
    P: float
    sigma2: float


@dataclass(frozen=True, eq=False)
class MmseState:
    rest: np.ndarray
    cache: CachedInverse  # of I + rho * rest
    rho: float
    P: float
    sigma2: float
    RA: np.ndarray  # rest @ A_inv
    tr_ARA: float


def _rest_gram(columns, m):
    others = np.delete(columns, m, axis=1)
    return others @ others.conj().T


def build_dl_state(scheme, columns, m, P, sigma2):
    """Constants of the downlink objective for waveguide ``m``.

    ``columns`` is the current K x M channel; only columns other than
    ``m`` enter the state.
    """
    K, M = columns.shape
    rest = _rest_gram(columns, m)
    if scheme == "mrt":
        return MrtState(rest, P, sigma2)
    if scheme == "zf":
        if K > M:
            raise SchemeInfeasibleError(f"zero-forcing needs K <= M, got K={K}, M={M}")
        cache = None
        if M - 1 >= K and np.linalg.cond(rest) < COND_LIMIT:
            cache = CachedInverse.from_matrix(rest, with_square=True)
        return ZfState(rest, cache, P, sigma2)
    if scheme == "mmse":
        rho = P / (K * sigma2)
        cache = CachedInverse.from_matrix(np.eye(K) + rho * rest)
        RA = rest @ cache.A_inv
        tr_ARA = float(np.trace(cache.A_inv @ RA).real)
        return MmseState(rest, cache, rho, P, sigma2, RA, tr_ARA)
    raise ValueError(f"unknown downlink scheme {scheme!r}")


def _outer(U):
    """a[n, k, k'] = u_k conj(u_k') for every candidate column."""
    return U.T[:, :, None] * U.T.conj()[:, None, :]


def mrt_objective(state, U):
    """MRT sum-rate at each candidate column, via the A_k / B_k split."""
    a = _outer(np.asarray(U))
    c = state.c
    a_diag = np.einsum("nkk->nk", a).real
    c_diag = np.diag(c).real
    A = a_diag**2 + 2 * a_diag * c_diag + c_diag**2
    cross = np.abs(a) ** 2 + 2 * (a * c.conj()[None]).real + np.abs(c)[None] ** 2
    noise = (a_diag.sum(axis=1) + c_diag.sum()) * state.sigma2 / state.P
    B = cross.sum(axis=2) + noise[:, None]
    resid = B - A
    floor = CLAMP * B
    if np.any(resid < floor):
        log.warning("MRT objective: clamped %d cancelling residual(s)", int(np.sum(resid < floor)))
        resid = np.maximum(resid, floor)
    return np.sum(np.log2(1 + A / resid), axis=1)


def zf_objective(state, U):
    """Score whose argmax minimises tr((H H^H)^-1).

    With an invertible base this is the Sherman-Morrison ratio
    ``u^H Hb^-2 u / (1 + u^H Hb^-1 u)`` (= base trace - new trace).
    Otherwise the negated trace is evaluated directly.
    """
    U = np.asarray(U)
    if state.cache is not None:
        try:
            return trace_reduction_rank1(state.cache, U)
        except SingularUpdateError:
            log.warning("ZF objective: singular rank-one update, using direct trace")
    return -_direct_trace(state.rest, U)


def _direct_trace(rest, U):
    T = rest[None] + _outer(U)
    lam = np.linalg.eigvalsh(T)
    scale = np.abs(lam).max(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        inv = np.where(lam > scale * 1e-14, 1.0 / lam, np.inf)
    return inv.sum(axis=1)


def zf_trace(state, scores):
    """Recover tr((H H^H)^-1) from :func:`zf_objective` scores."""
    scores = np.asarray(scores)
    if state.cache is not None:
        return state.cache.base_trace - scores
    return -scores


def zf_sumrate(state, scores, K):
    trace = zf_trace(state, scores)
    return K * np.log2(1 + state.P / (trace * state.sigma2))


def mmse_objective(state, U):
    """MMSE sum-rate at each candidate column.

    The Woodbury form of M(P) gives H M H^H = T Q with T = H H^H and
    Q = (I + rho T)^-1, and beta(P) = P / tr(Q T Q).  Q is a rank-one
    update of the cached inverse A, Q = A - rho v v^H / den with v = A u,
    so T Q = R A + z v^H with z = u - rho (R v + (u^H v) u) / den; nothing
    is inverted per candidate.
    """
    U = np.asarray(U)
    rho = state.rho
    A = state.cache.A_inv
    V, _, den = rank1_factors(state.cache, U, rho)
    den = den.real
    q = np.einsum("kn,kn->n", U.conj(), V).real
    RV = state.rest @ V
    Z = U - rho * (RV + U * q) / den
    # |G_kj|^2 with G = RA + z v^H, summed over j without forming G
    RAV = state.RA @ V
    ra_rows = np.sum(np.abs(state.RA) ** 2, axis=1)
    total = ra_rows[:, None] + np.abs(Z) ** 2 * np.sum(np.abs(V) ** 2, axis=0) + 2 * (Z * RAV.conj()).real
    signal = np.abs(np.diag(state.RA)[:, None] + Z * V.conj()) ** 2
    vAz = np.einsum("kn,kn->n", V.conj(), A @ Z)
    vRAv = np.einsum("kn,kn->n", V.conj(), RAV)
    vz = np.einsum("kn,kn->n", V.conj(), Z)
    vv = np.einsum("kn,kn->n", V.conj(), V)
    tr_QTQ = (state.tr_ARA + vAz - rho * (vRAv + vz * vv) / den).real
    beta = state.P / tr_QTQ
    sinr = signal / (total - signal + state.sigma2 / beta[None, :])
    return np.sum(np.log2(1 + sinr), axis=0)


def dl_objective(state, U):
    if isinstance(state, MrtState):
        return mrt_objective(state, U)
    if isinstance(state, ZfState):
        return zf_objective(state, U)
    return mmse_objective(state, U)
