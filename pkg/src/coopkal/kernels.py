"""Cross-graph PSD transfer through continuous rational kernels.

A PSD sampled on one graph's eigenvalue grid cannot be used directly on
another graph whose spectrum has a different length and different
eigenvalue locations. The transfer runs in three steps: approximate the
source PSD by a continuous rational function of the graph frequency
(an ARMA-style kernel), optionally adapt its coefficients toward target
observations, and discretize the kernel on the target's eigenvalues.

The rational family is ``p(lambda) = (b_0 + b_1 lambda + ... + b_Qn
lambda^Qn) / (1 + a_1 lambda + ... + a_Qd lambda^Qd)``. Fitting uses the
classical linearized least squares (multiply through by the denominator)
followed by one guarded Gauss-Newton pass on the true residual.
"""

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, FitFailureError, InvalidKernelError

__all__ = [
    "RationalKernel",
    "fit_kernel",
    "adapt_kernel",
    "discretize",
    "transfer_psd",
]

log = logging.getLogger(__name__)

# density of the extended positivity scan over [0, 1.1 * lam_max]
_DENSE_POINTS = 512


@dataclass(frozen=True)
class RationalKernel:
    """Rational approximation of a PSD as a function of graph frequency.

    Attributes
    ----------
    num : ndarray
        Numerator coefficients ``b_0 ... b_Qn`` (ascending powers).
    den : ndarray
        Denominator coefficients ``a_1 ... a_Qd``; the denominator
        polynomial is ``1 + sum a_r lambda^r``. The denominator must stay
        strictly positive on ``[0, 1.1 * lambda_max]`` of any grid the
        kernel is evaluated on; this is checked at evaluation time.
    """

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = np.atleast_1d(np.asarray(self.num, dtype=float))
        den = np.atleast_1d(np.asarray(self.den, dtype=float)) if np.size(self.den) else np.zeros(0)
        if num.ndim != 1 or den.ndim != 1 or num.size < 1:
            raise ContractError("kernel coefficients must be 1-D, numerator nonempty")
        if not (np.isfinite(num).all() and np.isfinite(den).all()):
            raise ContractError("kernel coefficients must be finite")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def orders(self):
        return (self.num.size - 1, self.den.size)

    def _num_at(self, lam):
        return sum(b * lam**q for q, b in enumerate(self.num))

    def _den_at(self, lam):
        return 1.0 + sum(a * lam ** (r + 1) for r, a in enumerate(self.den))

    def __call__(self, lam):
        """Evaluate on a grid, enforcing the positivity invariant."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        _check_positive_den(self, float(lam.max()) if lam.size else 0.0)
        return self._num_at(lam) / self._den_at(lam)

    def to_json(self):
        return json.dumps({"num": self.num.tolist(), "den": self.den.tolist()})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(num=np.asarray(d["num"], dtype=float), den=np.asarray(d["den"], dtype=float))


def _check_positive_den(kernel, lam_max):
    span = np.linspace(0.0, 1.1 * max(lam_max, 0.0), _DENSE_POINTS)
    dvals = kernel._den_at(span)
    if np.min(dvals) <= 0.0:
        raise InvalidKernelError(
            f"denominator is not strictly positive on [0, {1.1 * lam_max:.4g}]"
        )


def _design(lam, p, qn, qd):
    cols = [lam**q for q in range(qn + 1)]
    cols += [-p * lam**r for r in range(1, qd + 1)]
    return np.column_stack(cols)


def _true_sse(kernel, lam, p):
    return float(np.sum((kernel._num_at(lam) / kernel._den_at(lam) - p) ** 2))


def fit_kernel(eigenvalues, psd, orders=(3, 3)):
    """Fit a rational kernel to PSD samples by linearized least squares.

    Minimizes ``sum_i (p_i (1 + sum a_r lam_i^r) - sum_q b_q lam_i^q)^2``
    through a single ``lstsq`` solve, then runs one Gauss-Newton pass on
    the true residual ``sum_i (p(lam_i) - p_i)^2``. The refinement is kept
    only when it lowers the true residual and preserves denominator
    positivity.

    Parameters
    ----------
    eigenvalues : ndarray, shape (N,)
        Sample grid; needs ``N > Qn + Qd + 1``.
    psd : ndarray, shape (N,)
        Nonnegative PSD samples.
    orders : (int, int)
        Numerator degree Qn and denominator degree Qd.

    Raises
    ------
    FitFailureError
        When the design matrix is rank deficient and no exact
        representation exists at these orders (lowering the orders is the
        standard remedy), or when the fitted denominator is not strictly
        positive on the grid's span.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    p = np.asarray(psd, dtype=float)
    qn, qd = int(orders[0]), int(orders[1])
    if lam.ndim != 1 or p.shape != lam.shape:
        raise ContractError("eigenvalues and psd must be equal-length vectors")
    if qn < 0 or qd < 0:
        raise ContractError("orders must be nonnegative")
    if lam.size <= qn + qd + 1:
        raise ContractError(f"need more than Qn + Qd + 1 = {qn + qd + 1} grid points")
    if np.any(p < 0):
        raise ContractError("PSD samples must be nonnegative")

    A = _design(lam, p, qn, qd)
    sol, _, rank, _ = np.linalg.lstsq(A, p, rcond=None)
    lin_res = float(np.linalg.norm(A @ sol - p))
    if rank < qn + qd + 1 and lin_res > 1e-8 * max(1.0, float(np.linalg.norm(p))):
        # degenerate parametrization with no exact representation at
        # these orders; a consistent deficient system (lin_res ~ 0) is
        # fine because the minimum-norm solution then fits exactly
        raise FitFailureError(
            f"rank-deficient design (rank {rank} < {qn + qd + 1}) with nonzero residual"
        )
    kernel = RationalKernel(num=sol[: qn + 1], den=sol[qn + 1 :])
    lmax = float(lam.max())
    try:
        _check_positive_den(kernel, lmax)
    except InvalidKernelError as exc:
        raise FitFailureError(str(exc)) from exc

    refined = _gauss_newton_pass(kernel, lam, p)
    if refined is not None:
        kernel = refined
    return kernel


def _gauss_newton_pass(kernel, lam, p):
    # one damped-free GN step on the true residual; None when rejected
    den = kernel._den_at(lam)
    val = kernel._num_at(lam) / den
    r = val - p
    J = [lam**q / den for q in range(kernel.num.size)]
    J += [-val * lam ** (rr + 1) / den for rr in range(kernel.den.size)]
    J = np.column_stack(J)
    try:
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
    except np.linalg.LinAlgError:
        return None
    if not np.isfinite(step).all():
        return None
    cand = RationalKernel(
        num=kernel.num + step[: kernel.num.size],
        den=kernel.den + step[kernel.num.size :],
    )
    try:
        _check_positive_den(cand, float(lam.max()))
    except InvalidKernelError:
        return None
    if _true_sse(cand, lam, p) >= _true_sse(kernel, lam, p):
        return None
    return cand


def adapt_kernel(src, target_obs=None, ridge=1e-3):
    """Adapt a source kernel toward target-grid PSD observations.

    With no observations the source kernel is returned unchanged; this is
    the working assumption of the cooperative pipeline, where the two
    graphs are taken to share one underlying kernel. With observations
    ``(grid, psd)``, the coefficients are re-fit by the linearized least
    squares of :func:`fit_kernel` with a ridge penalty ``ridge *
    ||alpha - alpha_src||^2`` pulling toward the source coefficients, so
    ``ridge -> inf`` recovers the source kernel exactly.

    Raises
    ------
    FitFailureError
        When the regularized system cannot produce a positive-denominator
        kernel.
    """
    if target_obs is None:
        return src
    lam, p = target_obs
    lam = np.asarray(lam, dtype=float)
    p = np.asarray(p, dtype=float)
    if lam.ndim != 1 or p.shape != lam.shape:
        raise ContractError("target_obs must be (grid, psd) of equal length")
    if ridge < 0:
        raise ContractError("ridge weight must be nonnegative")
    qn, qd = src.orders
    A = _design(lam, p, qn, qd)
    alpha_src = np.concatenate([src.num, src.den])
    # (A^T A + ridge I) alpha = A^T p + ridge alpha_src
    H = A.T @ A + ridge * np.eye(alpha_src.size)
    rhs = A.T @ p + ridge * alpha_src
    try:
        alpha = np.linalg.solve(H, rhs)
    except np.linalg.LinAlgError as exc:
        raise FitFailureError("ridge-regularized normal equations are singular") from exc
    kernel = RationalKernel(num=alpha[: qn + 1], den=alpha[qn + 1 :])
    try:
        _check_positive_den(kernel, float(lam.max()))
    except InvalidKernelError as exc:
        raise FitFailureError(str(exc)) from exc
    return kernel


def discretize(kernel, target_eigenvalues):
    """Evaluate a kernel on a target eigenvalue grid as a PSD.

    Entrywise evaluation with negative values clamped to zero (rational
    fits may dip below zero between their sample points).

    Raises
    ------
    InvalidKernelError
        If the denominator is not strictly positive over the target
        grid's span.
    """
    lam = np.asarray(target_eigenvalues, dtype=float)
    if lam.ndim != 1:
        raise ContractError("target eigenvalues must be a vector")
    return np.maximum(kernel(lam), 0.0)


def transfer_psd(src_es, src_psd, trg_es, orders=(3, 3), target_obs=None, ridge=1e-3):
    """Transfer a PSD from a source graph to a target graph.

    Composition of :func:`fit_kernel`, :func:`adapt_kernel` and
    :func:`discretize`; the output has the target's dimension regardless
    of the source size.

    Noisy PSD estimates routinely produce rational fits whose denominator
    has a root inside the operating band, which the kernel invariant
    rejects. In that case the orders are lowered step by step, ending at
    a denominator-free polynomial, so a valid transfer always exists for
    any sane input; each fallback is logged at debug level. Clean inputs
    fit at the requested orders and never cascade.
    """
    lam_src = np.asarray(src_es.eigenvalues, dtype=float)
    p_src = np.asarray(src_psd, dtype=float)
    if p_src.shape != lam_src.shape:
        raise ContractError("source PSD does not match the source spectrum")
    qn, qd = int(orders[0]), int(orders[1])
    ladder = [(qn, qd), (2, 2), (1, 1), (qn, 0), (1, 0)]
    tried = []
    last_exc = None
    for cand in ladder:
        if cand in tried or lam_src.size <= cand[0] + cand[1] + 1:
            continue
        tried.append(cand)
        try:
            kernel = fit_kernel(lam_src, p_src, orders=cand)
            kernel = adapt_kernel(kernel, target_obs=target_obs, ridge=ridge)
            out = discretize(kernel, trg_es.eigenvalues)
        except (FitFailureError, InvalidKernelError) as exc:
            last_exc = exc
            continue
        if cand != (qn, qd):
            log.debug("transfer_psd fell back to orders %s: %s", cand, last_exc)
        return out
    raise FitFailureError(
        f"no rational fit found down the order ladder {tried}"
    ) from last_exc
