"""Cyclic wide-sense stationary graph signal models and estimators.

A process on a graph is wide-sense stationary when its covariance is
diagonalized by the graph Fourier basis, so its second-order behaviour is
captured by a power spectral density (PSD): one variance per graph
frequency. The cyclic variant lets the mean and PSD repeat with a period
``P`` over time; phase ``p = t mod P`` selects the active pair.

This module holds the synthetic PSD bank used by the experiments, the
sampler, and the two estimators the pipeline needs: PSD estimation from a
fixed-phase ensemble and period detection from a raw stream.
"""

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractError,
    DegenerateSpectrumError,
    FlatSignalWarning,
    InsufficientSamplesError,
)

__all__ = [
    "CyclicPsd",
    "GaussianMoments",
    "synth_psd_bank",
    "cgwss_signal",
    "sample_cgwss",
    "estimate_psd",
    "estimate_period",
    "save_signals",
    "load_signals",
]


@dataclass(frozen=True)
class CyclicPsd:
    """Period-P family of per-frequency PSDs and means.

    Attributes
    ----------
    period : int
        Cycle length P >= 1.
    psds : ndarray, shape (P, n)
        Nonnegative PSD vector for each phase.
    means : ndarray, shape (P, n)
        Mean vector for each phase.
    """

    period: int
    psds: np.ndarray
    means: np.ndarray

    def __post_init__(self):
        psds = np.asarray(self.psds, dtype=float)
        means = np.asarray(self.means, dtype=float)
        if self.period < 1:
            raise ContractError("period must be >= 1")
        if psds.ndim != 2 or psds.shape[0] != self.period:
            raise ContractError("psds must have shape (period, n)")
        if means.shape != psds.shape:
            raise ContractError("means must have the same shape as psds")
        if np.any(psds < 0):
            raise ContractError("PSD entries must be nonnegative")
        object.__setattr__(self, "psds", psds)
        object.__setattr__(self, "means", means)

    @property
    def n(self):
        return self.psds.shape[1]

    def phase(self, t):
        """Phase index of time ``t``."""
        return int(t) % self.period

    def psd(self, t):
        """PSD active at time ``t``."""
        return self.psds[self.phase(t)]

    def mean(self, t):
        """Mean active at time ``t``."""
        return self.means[self.phase(t)]


@dataclass(frozen=True)
class GaussianMoments:
    """First two moments of a Gaussian on a graph.

    The covariance must be symmetric (within 1e-10 relative) and positive
    semidefinite up to a -1e-10 * trace eigenvalue tolerance.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ContractError("mean must be length n and cov n x n")
        scale = max(1.0, float(np.abs(cov).max()) if cov.size else 1.0)
        if float(np.abs(cov - cov.T).max()) > 1e-10 * scale:
            raise ContractError("covariance must be symmetric")
        tr = float(np.trace(cov))
        if cov.size and float(np.linalg.eigvalsh((cov + cov.T) / 2.0)[0]) < -1e-10 * max(1.0, tr):
            raise ContractError("covariance must be positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n(self):
        return self.mean.size


def synth_psd_bank(es, period=8):
    """The synthetic experiment's PSD bank: four low-pass kernels cycled.

    Phase ``p`` maps, modulo 4, to

    - ``p = 0``: ``1 - lambda_i / lambda_max``
    - ``p = 1``: ``exp(-lambda_i / lambda_max)``
    - ``p = 2``: ``1 / (1 + lambda_i)``
    - ``p = 3``: ``cos(pi lambda_i / (2 lambda_max))``

    and every phase mean is the all-ones vector.

    Parameters
    ----------
    es : Eigensystem
        Spectrum of the graph carrying the process.
    period : int
        Cycle length; must be a positive multiple of 4 (the experiment
        protocol uses 8).

    Raises
    ------
    DegenerateSpectrumError
        If ``lambda_max == 0`` (empty-edge graph), since the kernels
        normalize by it.
    """
    if period < 4 or period % 4 != 0:
        raise ContractError("period must be a positive multiple of 4")
    lam = es.eigenvalues
    lmax = es.lam_max
    if lmax <= 0:
        raise DegenerateSpectrumError("lambda_max is zero; the kernel bank is undefined")
    kernels = [
        1.0 - lam / lmax,
        np.exp(-lam / lmax),
        1.0 / (1.0 + lam),
        np.cos(np.pi * lam / (2.0 * lmax)),
    ]
    # cos(pi/2) style roundoff can land a hair below zero at lambda_max
    psds = np.maximum([kernels[p % 4] for p in range(period)], 0.0)
    means = np.ones((period, es.n))
    return CyclicPsd(period=period, psds=psds, means=means)


def cgwss_signal(es, cp, t, z):
    """Deterministic CGWSS synthesis from a given spectral innovation.

    Returns ``mu_p + U diag(sqrt(p_p)) z`` with ``p = t mod P``. Drawing
    ``z`` fresh per call gives independent samples; reusing one ``z``
    across calls yields a temporally coherent stream whose time-t sample
    is exactly the Gaussian optimal-transport image of the time-s sample
    for any two phases, which is the regime where the cooperative filter's
    transition is informative.
    """
    if cp.n != es.n:
        raise ContractError("PSD family does not match the graph size")
    z = np.asarray(z, dtype=float)
    if z.shape != (es.n,):
        raise ContractError("innovation must be a length-n vector")
    return cp.mean(t) + es.eigenvectors @ (np.sqrt(cp.psd(t)) * z)


def sample_cgwss(es, cp, t, rng):
    """Draw one CGWSS sample ``N(mu_p, U diag(p_p) U^T)`` at time ``t``."""
    return cgwss_signal(es, cp, t, rng.standard_normal(es.n))


def estimate_psd(samples, es):
    """Estimate a PSD and mean from a fixed-phase sample ensemble.

    Parameters
    ----------
    samples : ndarray, shape (n, K)
        K signal snapshots at one phase, one per column.
    es : Eigensystem
        Basis to project the sample covariance onto.

    Returns
    -------
    psd : ndarray, shape (n,)
        ``diag(U^T Cov U)`` with the ensemble covariance (divisor K),
        clamped at zero from below.
    mean : ndarray, shape (n,)
        Row means.

    Raises
    ------
    InsufficientSamplesError
        If fewer than two snapshots are given.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or X.shape[0] != es.n:
        raise ContractError("samples must have shape (n, K)")
    K = X.shape[1]
    if K < 2:
        raise InsufficientSamplesError("PSD estimation needs at least two snapshots")
    mean = X.mean(axis=1)
    spec = es.eigenvectors.T @ (X - mean[:, None])
    psd = np.maximum((spec**2).sum(axis=1) / K, 0.0)
    return psd, mean


def estimate_period(stream, max_period):
    """Detect the cycle length of a stream from its energy autocorrelation.

    The detector forms the per-instant energy ``e_t = ||x_t - x_bar||^2``,
    centers it, and scores every candidate ``P in [2, max_period]`` by the
    normalized mean lag-P autocorrelation. The winner is the smallest
    candidate whose score is within a statistical tolerance of the best
    one; the tolerance (``max(0.1, 2/sqrt(T))``) folds harmonic near-ties
    (2P, 3P, ...) down to the fundamental, which a strict argmax would
    lose to sampling noise about half the time. Exact mathematical ties
    resolve to the smallest candidate as a special case.

    The detector is simple infrastructure, validated on unambiguously
    periodic streams only.

    Parameters
    ----------
    stream : ndarray, shape (n, T)
        Signal snapshots over time.
    max_period : int
        Largest candidate period; requires ``T >= 2 * max_period``.

    Returns
    -------
    int
        Estimated period. A constant (flat) stream has no energy
        variation to correlate; the smallest candidate 2 is returned and
        a :class:`FlatSignalWarning` is issued.
    """
    X = np.asarray(stream, dtype=float)
    if X.ndim != 2:
        raise ContractError("stream must be an (n, T) matrix")
    if max_period < 2:
        raise ContractError("max_period must be at least 2")
    T = X.shape[1]
    if T < 2 * max_period:
        raise InsufficientSamplesError(
            f"need T >= 2 * max_period samples, got T={T}, max_period={max_period}"
        )
    e = ((X - X.mean(axis=1, keepdims=True)) ** 2).sum(axis=0)
    f = e - e.mean()
    v = float((f**2).mean())
    if v <= 1e-12 * max(1.0, float(e.mean()) ** 2):
        warnings.warn("flat stream: energy has no variation", FlatSignalWarning)
        return 2
    cands = np.arange(2, max_period + 1)
    r = np.array([float((f[: T - P] * f[P:]).mean()) / v for P in cands])
    best = float(r.max())
    tol = max(0.1, 2.0 / np.sqrt(T))
    for P, rv in zip(cands, r):
        if rv >= best - tol:
            return int(P)
    return int(cands[-1])


def save_signals(path, X, sidecar_path=None, period=None, phase0_time=0, mean_convention="ensemble"):
    """Write a signal matrix as CSV (rows nodes, columns time).

    Header is ``node,t0,t1,...``; values keep full round-trip precision.
    An optional JSON sidecar records the period, the time index of phase
    zero, and the mean convention used when the matrix was produced.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ContractError("signal matrix must be 2-D")
    n, T = X.shape
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["node"] + [f"t{t}" for t in range(T)])
        for i in range(n):
            wr.writerow([i] + [repr(float(v)) for v in X[i]])
    if sidecar_path is not None:
        meta = {
            "period": period,
            "phase0_time": phase0_time,
            "mean_convention": mean_convention,
        }
        with open(sidecar_path, "w") as fh:
            json.dump(meta, fh, sort_keys=True)
            fh.write("\n")


def load_signals(path):
    """Read a signal matrix written by :func:`save_signals`.

    Returns
    -------
    node_ids : list
        First-column identifiers, as strings.
    X : ndarray, shape (n, T)
    """
    from .errors import DataError

    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read signals file {path}: {exc}") from exc
    with fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if not header or header[0] != "node":
            raise DataError(f"signals CSV must start with a 'node' column, got {header}")
        node_ids = []
        rows = []
        for row in rd:
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"row for node {row[0]!r} has {len(row)} fields, expected {len(header)}")
            node_ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise DataError(f"non-numeric signal value in row {row[0]!r}") from exc
    if not rows:
        raise DataError("signals CSV contains no data rows")
    return node_ids, np.asarray(rows, dtype=float)
