"""Uplink linear combining (MRC / ZF / MMSE) and per-PA objectives.

``H`` is the M x K uplink effective channel, ``R`` the diagonal noise
covariance R_z and ``powers`` the per-user transmit powers.  Element-wise
objectives work on the columns ``b_m`` of ``H^H`` (K-vectors) together
with the per-guide noise powers ``s_m = sigma^2 ||g_ul(p_m)||^2``.
"""

from collections import namedtuple
from dataclasses import dataclass
import logging

import numpy as np

from .errors import SchemeInfeasibleError, SingularChannelError, SingularUpdateError
from .rankone import CachedInverse, sherman_morrison_apply

log = logging.getLogger(__name__)

SCHEMES = ("mrc", "zf", "mmse")
COND_LIMIT = 1e13
CLAMP = 1e-15

MmseRates = namedtuple("MmseRates", "full reduced")


@dataclass(frozen=True, eq=False)
class UlCombiner:
    V: np.ndarray
    scheme: str


def mrc_combiner(H):
    return UlCombiner(np.array(H), "mrc")


def _zf_gram_inverse(H):
    M, K = H.shape
    if K > M:
        raise SchemeInfeasibleError(f"zero-forcing needs K <= M, got K={K}, M={M}")
    T = H.conj().T @ H
    cond = np.linalg.cond(T)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularChannelError("H^H H is (numerically) singular")
    return np.linalg.inv(T)


def zf_combiner(H):
    H = np.asarray(H)
    return UlCombiner(H @ _zf_gram_inverse(H), "zf")


def mmse_combiner(H, powers, R):
    H = np.asarray(H)
    S = (H * np.asarray(powers)[None, :]) @ H.conj().T + R
    return UlCombiner(np.linalg.solve(S, H), "mmse")


def ul_combiner(scheme, H, powers, R):
    if scheme == "mrc":
        return mrc_combiner(H)
    if scheme == "zf":
        return zf_combiner(H)
    if scheme == "mmse":
        return mmse_combiner(H, powers, R)
    raise ValueError(f"unknown uplink scheme {scheme!r}")


def sinr_ul_direct(H, V, powers, R):
    """Per-user SINR for combiner columns v_k."""
    V = np.asarray(V)
    powers = np.asarray(powers, float)
    G = np.abs(V.conj().T @ np.asarray(H)) ** 2 * powers[None, :]
    signal = np.diag(G)
    noise = np.einsum("mk,mn,nk->k", V.conj(), R, V).real
    return signal / (G.sum(axis=1) - signal + noise)


def sinr_mrc_closed(H, powers, R):
    H = np.asarray(H)
    powers = np.asarray(powers, float)
    T = H.conj().T @ H
    d = np.diag(T).real
    cross = np.abs(T) ** 2 * powers[None, :]
    interference = cross.sum(axis=1) - d**2 * powers
    noise = np.einsum("mk,mn,nk->k", H.conj(), R, H).real
    return powers * d**2 / (interference + noise)


def sinr_zf_closed(H, powers, R):
    """P_k / [M M^H]_kk with M = (H^H H)^-1 H^H R^(1/2)."""
    H = np.asarray(H)
    Mz = _zf_gram_inverse(H) @ H.conj().T @ np.sqrt(R)
    return np.asarray(powers, float) / np.einsum("km,km->k", Mz, Mz.conj()).real


def _logdet2(A):
    sign, logabs = np.linalg.slogdet(A)
    return logabs / np.log(2)


def ul_rate_mmse_det(H, powers, R):
    """Per-user MMSE-SIC-free rates in two equivalent determinant forms.

    ``full`` uses M x M determinants of the received covariance with and
    without user k; ``reduced`` applies Sylvester's identity to work with
    K x K and (K-1) x (K-1) matrices.
    """
    H = np.asarray(H)
    powers = np.asarray(powers, float)
    M, K = H.shape
    S = (H * powers[None, :]) @ H.conj().T + R
    full = np.empty(K)
    reduced = np.empty(K)
    Rinv = np.diag(1.0 / np.diag(R).real)
    F = H.conj().T @ Rinv @ H  # K x K
    logdet_all = _logdet2(F * powers[None, :] + np.eye(K))
    logdet_S = _logdet2(S)
    for k in range(K):
        hk = H[:, k]
        full[k] = logdet_S - _logdet2(S - powers[k] * np.outer(hk, hk.conj()))
        keep = np.arange(K) != k
        Fk = F[np.ix_(keep, keep)] * powers[keep][None, :]
        reduced[k] = logdet_all - _logdet2(Fk + np.eye(K - 1))
    return MmseRates(full, reduced)


def ul_sumrate(H, scheme, powers, R):
    """Full pipeline: combiner, substitution, sum of log2(1 + SINR)."""
    V = ul_combiner(scheme, H, powers, R).V
    return float(np.sum(np.log2(1 + sinr_ul_direct(H, V, powers, R))))


# -- element-wise states ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MrcState:
    c: np.ndarray  # sum over m' != m of b b^H
    noise_rest: np.ndarray  # (K,) sum over m' != m of |b_k|^2 s_m'
    powers: np.ndarray


@dataclass(frozen=True, eq=False)
class UlZfState:
    rest: np.ndarray  # sum over m' != m of b b^H
    noise_rest: np.ndarray  # sum over m' != m of s_m' b b^H  (N N^H without guide m)
    cache: CachedInverse | None
    powers: np.ndarray


@dataclass(frozen=True, eq=False)
class UlMmseState:
    B_inv: np.ndarray
    Bbar_inv: tuple  # one (K-1) x (K-1) inverse per user
    log_constant: float  # K log2 det B - sum_k log2 det Bbar_k
    powers: np.ndarray


def build_ul_state(scheme, columns, noise, m, powers):
    """Constants of the uplink objective for waveguide ``m``.

    ``columns`` is H^H (K x M); ``noise`` holds s_m' for every guide.
    """
    K, M = columns.shape
    powers = np.asarray(powers, float)
    others = np.delete(columns, m, axis=1)
    s_others = np.delete(np.asarray(noise, float), m)
    rest = others @ others.conj().T
    if scheme == "mrc":
        noise_rest = (np.abs(others) ** 2 * s_others[None, :]).sum(axis=1)
        return MrcState(rest, noise_rest, powers)
    if scheme == "zf":
        if K > M:
            raise SchemeInfeasibleError(f"zero-forcing needs K <= M, got K={K}, M={M}")
        noise_rest = (others * s_others[None, :]) @ others.conj().T
        cache = None
        if M - 1 >= K and np.linalg.cond(rest) < COND_LIMIT:
            cache = CachedInverse.from_matrix(rest)
        return UlZfState(rest, noise_rest, cache, powers)
    if scheme == "mmse":
        weighted = (others / s_others[None, :]) @ others.conj().T
        B = weighted * powers[None, :] + np.eye(K)
        log_constant = K * _logdet2(B)
        bbar = []
        for k in range(K):
            keep = np.arange(K) != k
            Bk = weighted[np.ix_(keep, keep)] * powers[keep][None, :] + np.eye(K - 1)
            log_constant -= _logdet2(Bk) if K > 1 else 0.0
            bbar.append(np.linalg.inv(Bk))
        return UlMmseState(np.linalg.inv(B), tuple(bbar), float(log_constant), powers)
    raise ValueError(f"unknown uplink scheme {scheme!r}")


def _outer(U):
    return U.T[:, :, None] * U.T.conj()[:, None, :]


def mrc_objective(state, U, s):
    """MRC sum-rate per candidate: sum_k log2(1 + P_k A_k / (D_k + C_k))."""
    U = np.asarray(U)
    a = _outer(U)
    c = state.c
    P = state.powers
    a_diag = np.einsum("nkk->nk", a).real
    c_diag = np.diag(c).real
    A = (a_diag + c_diag) ** 2
    pair = (np.abs(a) ** 2 + 2 * (a.conj() * c[None]).real) * P[None, None, :]
    own = np.einsum("nkk->nk", pair)
    D = pair.sum(axis=2) - own + a_diag * np.asarray(s)[:, None]
    cross = np.abs(c) ** 2 * P[None, :]
    C = cross.sum(axis=1) - np.diag(cross) + state.noise_rest
    den = D + C[None, :]
    floor = CLAMP * (np.abs(D) + np.abs(C)[None, :])
    if np.any(den < floor):
        log.warning("MRC objective: clamped %d residual(s)", int(np.sum(den < floor)))
        den = np.maximum(den, floor)
    return np.sum(np.log2(1 + P[None, :] * A / den), axis=1)


def ul_zf_objective(state, U, s):
    """ZF sum-rate per candidate: sum_k log2(1 + P_k / ||m_k||^2)."""
    U = np.asarray(U)
    s = np.asarray(s, float)
    NN = state.noise_rest[None] + s[:, None, None] * _outer(U)
    Q = None
    if state.cache is not None:
        try:
            Q = sherman_morrison_apply(state.cache, U)
        except SingularUpdateError:
            log.warning("uplink ZF objective: singular rank-one update, inverting directly")
    if Q is None:
        Q = _guarded_inverse(state.rest[None] + _outer(U))
    mk = np.einsum("nki,nij,nkj->nk", Q, NN, Q.conj()).real
    return np.sum(np.log2(1 + state.powers[None, :] / mk), axis=1)


def _guarded_inverse(T):
    lam, vec = np.linalg.eigh(T)
    scale = np.abs(lam).max(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        inv = np.where(lam > scale * 1e-14, 1.0 / lam, np.inf)
    return np.einsum("nik,nk,njk->nij", vec, inv, vec.conj())


def ul_mmse_objective(state, U, s):
    """Sum over users of f_ul^MMSE: the MMSE sum-rate minus a guide constant.

    Adding ``state.log_constant`` recovers the true sum-rate.
    """
    U = np.asarray(U)
    s = np.asarray(s, float)
    P = state.powers
    K = U.shape[0]
    first = np.einsum("kn,k,kj,jn->n", U.conj(), P, state.B_inv, U).real
    total = K * np.log2(1 + first / s)
    for k in range(K):
        if K == 1:
            break
        keep = np.arange(K) != k
        Uk = U[keep]
        second = np.einsum("kn,k,kj,jn->n", Uk.conj(), P[keep], state.Bbar_inv[k], Uk).real
        total -= np.log2(1 + second / s)
    return total


def ul_objective(state, U, s):
    if isinstance(state, MrcState):
        return mrc_objective(state, U, s)
    if isinstance(state, UlZfState):
        return ul_zf_objective(state, U, s)
    return ul_mmse_objective(state, U, s)
