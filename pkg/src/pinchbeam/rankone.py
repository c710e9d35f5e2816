"""Rank-one inverse updates used by the element-wise objectives.

Every position update changes exactly one column ``u`` of the effective
channel, so the Gram-type matrices of the objectives move by ``scale*u u^H``.
The helpers here evaluate the updated inverse (or its trace) from a cached
inverse of the base matrix, for one vector or a batch of vectors at once.

A batch of vectors is passed as a ``(K, n)`` array: one column per
candidate.  Batched results carry the candidate axis first.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularUpdateError

# |1 + s u^H A^-1 u| below this fraction of ||A^-1 u|| ||u|| is "singular"
SINGULAR_GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class CachedInverse:
    """Inverse of a base matrix that excludes one rank-one contribution."""

    A_inv: np.ndarray
    A_inv2: np.ndarray | None = None
    base_trace: float = 0.0

    @classmethod
    def from_matrix(cls, A, with_square=False):
        A_inv = np.linalg.inv(A)
        A_inv2 = A_inv @ A_inv if with_square else None
        return cls(A_inv, A_inv2, float(np.trace(A_inv).real))


def _quad(A, U):
    """u^H A u for each column of U -> (n,) complex, and A u -> (K, n)."""
    AU = A @ U
    return np.einsum("kn,kn->n", U.conj(), AU), AU


def _check_denominator(den, AU, U, scale):
    scale_mag = abs(scale)
    bound = SINGULAR_GUARD * scale_mag * np.linalg.norm(AU, axis=0) * np.linalg.norm(U, axis=0)
    bad = np.abs(den) < bound
    if np.any(bad):
        raise SingularUpdateError(f"{int(bad.sum())} rank-one update(s) with vanishing denominator")


def rank1_factors(cache, U, scale=1.0):
    """Factored Sherman-Morrison update for a batch of columns ``U`` (K, n).

    Returns ``(AU, UA, den)`` with ``AU = A^-1 U``, rows ``UA = U^H A^-1``
    and ``den = 1 + scale * u^H A^-1 u`` so that, per candidate,
    ``(A + scale u u^H)^-1 = A^-1 - scale * AU[:, i] UA[i] / den[i]``.
    """
    A_inv = cache.A_inv
    AU = A_inv @ U
    UA = U.conj().T @ A_inv  # A need not be Hermitian
    den = 1.0 + scale * np.sum(UA * U.T, axis=1)
    _check_denominator(den, AU, U, scale)
    return AU, UA, den


def sherman_morrison_apply(cache, u, scale=1.0):
    """Inverse of ``A + scale * u u^H`` given ``cache.A_inv = A^-1``.

    ``u`` of shape ``(K,)`` returns a ``K x K`` matrix; ``(K, n)`` returns
    ``(n, K, K)``.  The updated matrix itself is never formed.
    """
    u = np.asarray(u)
    single = u.ndim == 1
    U = u[:, None] if single else u
    AU, UA, den = rank1_factors(cache, U, scale)
    out = cache.A_inv[None] - scale * AU.T[:, :, None] * UA[:, None, :] / den[:, None, None]
    return out[0] if single else out


def trace_reduction_rank1(cache, u):
    """``u^H A^-2 u / (1 + u^H A^-1 u)``: how much ``u u^H`` lowers tr(A^-1)."""
    u = np.asarray(u)
    single = u.ndim == 1
    U = u[:, None] if single else u
    A_inv2 = cache.A_inv2 if cache.A_inv2 is not None else cache.A_inv @ cache.A_inv
    q1, AU = _quad(cache.A_inv, U)
    q2, _ = _quad(A_inv2, U)
    den = 1.0 + q1
    _check_denominator(den, AU, U, 1.0)
    out = (q2 / den).real
    return float(out[0]) if single else out


def trace_inverse_rank1(cache, u):
    """``tr((A + u u^H)^-1)`` from the cached inverse and its square.

    Costs O(K^2) per vector; ``u`` may be ``(K,)`` or ``(K, n)``.
    """
    return cache.base_trace - trace_reduction_rank1(cache, u)


def woodbury_M(H, rho, inner_inv=None):
    """``(rho H^H H + I_M)^-1`` through the K x K inner inverse.

    ``inner_inv`` may supply ``(I_K + rho H H^H)^-1`` (for instance from a
    rank-one update); otherwise it is computed directly.
    """
    H = np.asarray(H)
    K, M = H.shape
    if inner_inv is None:
        inner_inv = np.linalg.inv(np.eye(K) + rho * H @ H.conj().T)
    return np.eye(M) - rho * H.conj().T @ inner_inv @ H
