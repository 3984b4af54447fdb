"""Per-instant baseline estimators: Tikhonov smoothing and a graph Wiener filter.

Both estimators look at one observation at a time and keep no temporal
state, which is exactly what makes them baselines for the cooperative
filter: they cannot exploit the previous instant.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ContractError, SingularInnovationError, SingularSystemError

__all__ = ["tikhonov_estimate", "wiener_estimate"]


def tikhonov_estimate(L, obs, y, zeta):
    """Graph-smoothness regularized reconstruction from partial observations.

    Solves ``(C^T C + zeta L) x = C^T y`` with a symmetric positive
    definite solve. Larger ``zeta`` pulls the reconstruction toward the
    Laplacian nullspace (constants, on a connected graph).

    Raises
    ------
    SingularSystemError
        If the regularized system is singular (for instance zeta = 0
        with unobserved nodes).
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if L.shape != (n, n):
        raise ContractError("Laplacian must be square")
    if zeta < 0:
        raise ContractError("zeta must be nonnegative")
    y = np.asarray(y, dtype=float)
    idx = obs.observed_nodes
    if y.shape != (idx.size,):
        raise ContractError("observation length does not match the observed set")
    A = zeta * L
    A[idx, idx] += 1.0
    rhs = np.zeros(n)
    rhs[idx] = y
    try:
        return cho_solve(cho_factor(A, lower=True), rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("Tikhonov system is singular") from exc


def wiener_estimate(es, psd, mean, obs, y, floor=1e-8):
    """Linear MMSE interpolation from the signal's spectral prior.

    Uses ``H = S C^T (C S C^T)^{-1}`` and offset ``b = (I - H C) mu``
    with ``S = U diag(psd) U^T``; the estimate is ``H y + b``. There is
    deliberately no observation-noise term in the inversion, so observed
    nodes are reproduced exactly (noise and all) and the filter's value
    lies in its interpolation of the unobserved ones. The PSD is floored
    at ``floor * max(psd)`` to keep the interpolation matrix invertible
    when the spectral prior touches zero.

    Raises
    ------
    SingularInnovationError
        If ``C S C^T`` is singular even after the flooring (for instance
        an all-zero PSD).
    """
    p = np.asarray(psd, dtype=float)
    mean = np.asarray(mean, dtype=float)
    y = np.asarray(y, dtype=float)
    if p.shape != (es.n,) or mean.shape != (es.n,):
        raise ContractError("PSD and mean must be length-n vectors")
    idx = obs.observed_nodes
    if y.shape != (idx.size,):
        raise ContractError("observation length does not match the observed set")
    pmax = float(p.max()) if p.size else 0.0
    if pmax <= 0:
        raise SingularInnovationError("PSD is identically zero")
    U = es.eigenvectors
    S = (U * np.maximum(p, floor * pmax)) @ U.T
    SCt = S[:, idx]
    try:
        H = cho_solve(cho_factor(S[np.ix_(idx, idx)], lower=True), SCt.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularInnovationError("interpolation matrix is singular") from exc
    return mean + H @ (y - mean[idx])
