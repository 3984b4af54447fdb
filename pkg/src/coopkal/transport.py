"""Optimal transport between Gaussians and the induced affine maps.

For two Gaussians ``N(mu_1, S_1)`` and ``N(mu_2, S_2)`` the squared
2-Wasserstein distance has the closed form

    W2^2 = ||mu_1 - mu_2||^2 + tr(S_1 + S_2 - 2 (S_1^{1/2} S_2 S_1^{1/2})^{1/2})

and the optimal (Monge) map is affine, ``T(x) = mu_2 + Q (x - mu_1)`` with

    Q = S_1^{-1/2} (S_1^{1/2} S_2 S_1^{1/2})^{1/2} S_1^{-1/2}.

When both covariances share the graph Fourier basis, ``S_i = U diag(p_i)
U^T``, the map reduces to a spectral rescaling ``Q = U diag(sqrt(p_2 /
p_1)) U^T``. That square-root form is the one that satisfies the
pushforward constraint ``Q S_1 Q^T = S_2``; a ``linear`` variant using the
plain ratio ``p_2 / p_1`` is kept behind a mode switch for comparison and
deliberately fails that constraint whenever ``p_1 != p_2``.

The affine map doubles as the state transition of the cooperative Kalman
filter, with ``Q`` driving the error covariance propagation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, SingularSourceError
from .signals import GaussianMoments

__all__ = [
    "TransportMap",
    "wasserstein2",
    "ot_map_general",
    "ot_map_spectral",
    "apply_map",
]


@dataclass(frozen=True)
class TransportMap:
    """Affine Gaussian transport map ``x -> mu_to + Q (x - mu_from)``."""

    mu_from: np.ndarray
    mu_to: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        mu1 = np.asarray(self.mu_from, dtype=float)
        mu2 = np.asarray(self.mu_to, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        if mu1.ndim != 1 or mu2.shape != mu1.shape or Q.shape != (mu1.size, mu1.size):
            raise ContractError("inconsistent transport map dimensions")
        object.__setattr__(self, "mu_from", mu1)
        object.__setattr__(self, "mu_to", mu2)
        object.__setattr__(self, "Q", Q)

    @property
    def n(self):
        return self.mu_from.size

    def __call__(self, x):
        return apply_map(self, x)

    def to_json_dict(self):
        """Generic matrix JSON for debugging and experiment logs."""
        return {
            "mu_from": self.mu_from.tolist(),
            "mu_to": self.mu_to.tolist(),
            "Q": self.Q.tolist(),
        }


def _sqrtm_psd(M):
    # symmetric square root with negative roundoff eigenvalues clamped
    lam, V = np.linalg.eigh((M + M.T) / 2.0)
    return (V * np.sqrt(np.maximum(lam, 0.0))) @ V.T


def wasserstein2(g1, g2):
    """Squared 2-Wasserstein distance between two Gaussians.

    Parameters
    ----------
    g1, g2 : GaussianMoments

    Returns
    -------
    float
        Nonnegative, symmetric in its arguments, and zero exactly when
        the two Gaussians coincide (up to roundoff clamping).
    """
    if g1.n != g2.n:
        raise ContractError("Gaussians live in different dimensions")
    s1h = _sqrtm_psd(g1.cov)
    cross = _sqrtm_psd(s1h @ g2.cov @ s1h)
    val = float(np.sum((g1.mean - g2.mean) ** 2) + np.trace(g1.cov) + np.trace(g2.cov) - 2.0 * np.trace(cross))
    return max(val, 0.0)


def ot_map_general(g1, g2, floor=1e-8):
    """Gaussian optimal transport map from general (full-matrix) moments.

    The source covariance is inverted through its eigendecomposition with
    eigenvalues floored at ``floor * lambda_max`` to tolerate PSDs that
    touch zero.

    Raises
    ------
    SingularSourceError
        If the source covariance is zero, so no flooring can make it
        invertible.
    """
    if g1.n != g2.n:
        raise ContractError("Gaussians live in different dimensions")
    lam, V = np.linalg.eigh((g1.cov + g1.cov.T) / 2.0)
    lmax = float(lam[-1]) if lam.size else 0.0
    if lmax <= 0:
        raise SingularSourceError("source covariance is zero")
    lam = np.maximum(lam, floor * lmax)
    s1h = (V * np.sqrt(lam)) @ V.T
    s1hi = (V / np.sqrt(lam)) @ V.T
    mid = _sqrtm_psd(s1h @ g2.cov @ s1h)
    Q = s1hi @ mid @ s1hi
    return TransportMap(mu_from=g1.mean, mu_to=g2.mean, Q=(Q + Q.T) / 2.0)


def ot_map_spectral(es, p1, p2, mu1, mu2, mode="sqrt", floor=1e-8):
    """Gaussian OT map between two PSDs sharing one graph Fourier basis.

    Parameters
    ----------
    es : Eigensystem
        Common eigenbasis U.
    p1, p2 : ndarray, shape (n,)
        Source and target PSDs; ``p1`` is floored at ``floor * max(p1)``
        before the ratio.
    mu1, mu2 : ndarray, shape (n,)
        Source and target means.
    mode : {"sqrt", "linear"}
        "sqrt" (default) uses ``diag(sqrt(p2/p1))``, the form consistent
        with the general Gaussian OT map and the only one satisfying the
        pushforward constraint. "linear" uses the plain ratio
        ``diag(p2/p1)`` and is provided for comparison.

    Raises
    ------
    SingularSourceError
        If ``p1`` is identically zero.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    if not (p1.shape == p2.shape == mu1.shape == mu2.shape == (es.n,)):
        raise ContractError("PSDs and means must all be length-n vectors")
    if mode not in ("sqrt", "linear"):
        raise ContractError(f"unknown transport mode {mode!r}")
    pmax = float(p1.max()) if p1.size else 0.0
    if pmax <= 0:
        raise SingularSourceError("source PSD is identically zero")
    ratio = p2 / np.maximum(p1, floor * pmax)
    d = np.sqrt(ratio) if mode == "sqrt" else ratio
    U = es.eigenvectors
    Q = (U * d) @ U.T
    return TransportMap(mu_from=mu1, mu_to=mu2, Q=(Q + Q.T) / 2.0)


def apply_map(tm, x):
    """Evaluate ``T(x) = mu_to + Q (x - mu_from)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (tm.n,):
        raise ContractError(f"vector length {x.shape} does not match map size {tm.n}")
    return tm.mu_to + tm.Q @ (x - tm.mu_from)


def moments_of(es, psd, mean):
    """Assemble full-matrix Gaussian moments from a spectral PSD."""
    U = es.eigenvectors
    cov = (U * np.asarray(psd, dtype=float)) @ U.T
    return GaussianMoments(mean=mean, cov=(cov + cov.T) / 2.0)
