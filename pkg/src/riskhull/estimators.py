"""Projection estimator, exact risks, oracle bandwidth and URE diagnostics.

The projection (spectral cutoff) estimator keeps the first N noisy
coefficients and zeroes the rest.  Its mean square risk decomposes
exactly into a squared-bias tail plus accumulated noise variance:

    R(theta, N) = sum_{k>N} theta_k^2 + sum_{k<=N} sigma_k^2.

Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sequence_model import Observation, SigmaSpec, Signal, sigma_values, unit_spec

__all__ = [
    "RiskCurve",
    "project",
    "squared_loss",
    "projection_risk",
    "oracle_risk",
    "rhm_risk",
    "ure_threshold",
]


@dataclass(frozen=True, eq=False)
class RiskCurve:
    """Risk as a function of bandwidth N = 1..N_max, with its minimizer.

    ``argmin_N`` is the smallest minimizer; ``min_value = values[argmin_N - 1]``.
    """

    values: np.ndarray
    argmin_N: int
    min_value: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64).reshape(-1).copy()
        if arr.size < 1:
            raise ValueError("risk curve needs at least one bandwidth")
        if not (1 <= self.argmin_N <= arr.size):
            raise ValueError(f"argmin_N {self.argmin_N} outside 1..{arr.size}")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


def project(obs: Observation, N: int) -> Signal:
    """Keep the first N observed coefficients, zero the rest."""
    if not 0 <= N <= obs.n_max:
        raise ValueError(f"bandwidth N={N} outside 0..{obs.n_max}")
    return Signal(obs.ys[:N])


def squared_loss(estimate: Signal, truth: Signal) -> float:
    """Squared l2 distance over the union of the stored supports."""
    n = max(len(estimate), len(truth))
    diff = estimate.padded(n) - truth.padded(n)
    return float(np.sum(diff**2))


def projection_risk(signal: Signal, spec: SigmaSpec, N: int) -> float:
    """Exact risk sum_{k>N} theta_k^2 + sum_{k<=N} sigma_k^2.

    The bias tail runs over the signal's stored prefix only.
    """
    if N < 1:
        raise ValueError(f"bandwidth N must be >= 1, got {N}")
    coeffs = signal.coeffs
    tail = float(np.sum(coeffs[N:] ** 2)) if N < coeffs.size else 0.0
    var = float(np.sum(sigma_values(spec, N) ** 2))
    return tail + var


def oracle_risk(signal: Signal, spec: SigmaSpec, N_max: int) -> RiskCurve:
    """Exhaustive scan of the projection risk over N = 1..N_max.

    Ties break towards the smallest bandwidth.  Each curve entry is the
    pointwise value of :func:`projection_risk`, bit for bit.
    """
    if N_max < 1:
        raise ValueError(f"N_max must be >= 1, got {N_max}")
    values = np.array([projection_risk(signal, spec, N) for N in range(1, N_max + 1)])
    idx = int(np.argmin(values))
    return RiskCurve(values=values, argmin_N=idx + 1, min_value=float(values[idx]))


def rhm_risk(signal: Signal, spec: SigmaSpec, hull, alpha: float, N: int) -> float:
    """Hull-penalized risk: projection risk plus (1 + alpha) * U0(N)."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not 1 <= N <= hull.N_max:
        raise ValueError(f"N={N} outside hull table range 1..{hull.N_max}")
    return projection_risk(signal, spec, N) + (1.0 + alpha) * float(hull.U0[N - 1])


def ure_threshold(spec: SigmaSpec, N_max: int) -> int | None:
    """Smallest N with sum sigma_k^2 >= 2 * sqrt(2 * sum sigma_k^4).

    Below this bandwidth the URE objective's standard deviation exceeds
    its mean, so URE cannot resolve the risk there; the comparison is
    non-strict.  Returns None when no N <= N_max qualifies.  Both sides
    carry the same sigma_1^2 factor, so the inequality is evaluated on
    the unit-rescaled spectrum; the result is then independent of the
    noise level by construction (for beta = 0 the N = 8 boundary is an
    exact equality, which plain eps-scaled arithmetic would spoil).
    """
    if N_max < 1:
        raise ValueError(f"N_max must be >= 1, got {N_max}")
    sig2 = sigma_values(unit_spec(spec), N_max) ** 2
    lhs = np.cumsum(sig2)
    rhs = 2.0 * np.sqrt(2.0 * np.cumsum(sig2**2))
    hits = np.nonzero(lhs >= rhs)[0]
    return int(hits[0]) + 1 if hits.size else None
