"""Data-driven bandwidth selection: URE, RHM and custom penalties.

All selectors minimize a penalized empirical risk over N = 1..N_max,

    -sum_{k<=N} y_k^2 + sum_{k<=N} sigma_k^2 + pen(N),

computed in one cumulative pass.  URE uses pen(N) = sum sigma_k^2; RHM
adds the hull term (1 + alpha) * U0(N) on top of that.  Ties always
break to the smallest bandwidth.

A note on alpha: the risk bound behind RHM asks for alpha > 1, and the
benchmark default is 1.1.  Any alpha >= 0 is accepted here; alpha = 0
destabilizes strongly ill-posed spectra (beta around 2 and beyond) and
very large alpha over-penalizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .hull import HullTable
from .sequence_model import Observation, fingerprint, sigma_values

__all__ = [
    "SelectorResult",
    "Selector",
    "penalized_objective",
    "select_ure",
    "select_rhm",
    "select_penalized",
    "ure_selector",
    "rhm_selector",
    "fixed_selector",
]


@dataclass(frozen=True, eq=False)
class SelectorResult:
    """Selected bandwidth plus the full objective curve that produced it."""

    N_selected: int
    objective_values: np.ndarray
    method: str

    def __post_init__(self) -> None:
        arr = np.asarray(self.objective_values, dtype=np.float64).reshape(-1).copy()
        if not (1 <= self.N_selected <= arr.size):
            raise ValueError(f"N_selected {self.N_selected} outside 1..{arr.size}")
        arr.flags.writeable = False
        object.__setattr__(self, "objective_values", arr)


Selector = Callable[[Observation], SelectorResult]


def _base_objective(obs: Observation, N_max: int) -> np.ndarray:
    """URE objective -cumsum(y^2) + 2*cumsum(sigma^2) over N = 1..N_max."""
    if not 1 <= N_max <= obs.n_max:
        raise ValueError(f"N_max={N_max} outside 1..{obs.n_max}")
    y = obs.ys[:N_max]
    sig2 = sigma_values(obs.sigma, N_max) ** 2
    return -np.cumsum(y * y) + 2.0 * np.cumsum(sig2)


def penalized_objective(obs: Observation, pen: Callable[[int], float], N: int) -> float:
    """-sum_{k<=N} y_k^2 + sum_{k<=N} sigma_k^2 + pen(N)."""
    if not 1 <= N <= obs.n_max:
        raise ValueError(f"N={N} outside 1..{obs.n_max}")
    y = obs.ys[:N]
    sig2 = sigma_values(obs.sigma, N) ** 2
    return float(-np.sum(y * y) + np.sum(sig2) + pen(N))


def select_ure(obs: Observation, N_max: int) -> SelectorResult:
    """Unbiased risk estimation: smallest minimizer of the URE objective."""
    obj = _base_objective(obs, N_max)
    return SelectorResult(N_selected=int(np.argmin(obj)) + 1, objective_values=obj, method="ure")


def select_rhm(obs: Observation, hull: HullTable, alpha: float, N_max: int) -> SelectorResult:
    """Risk hull minimization: URE objective plus (1 + alpha) * U0(N).

    The hull table must have been built for the observation's spectrum;
    a fingerprint mismatch means a stale cache and is an error.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if N_max > hull.N_max:
        raise ValueError(f"N_max={N_max} exceeds hull table range {hull.N_max}")
    if hull.spec_fingerprint != fingerprint(obs.sigma):
        raise ValueError("hull table fingerprint does not match the observation's spec (stale cache)")
    obj = _base_objective(obs, N_max) + (1.0 + alpha) * hull.U0[:N_max]
    return SelectorResult(N_selected=int(np.argmin(obj)) + 1, objective_values=obj, method="rhm")


def select_penalized(obs: Observation, pen: Callable[[int], float], N_max: int) -> SelectorResult:
    """Generic penalized empirical risk with a caller-supplied penalty."""
    obj = np.array([penalized_objective(obs, pen, N) for N in range(1, N_max + 1)])
    return SelectorResult(N_selected=int(np.argmin(obj)) + 1, objective_values=obj, method="custom-penalty")


def ure_selector(N_max: int) -> Selector:
    def select(obs: Observation) -> SelectorResult:
        return select_ure(obs, N_max)

    return select


def rhm_selector(hull: HullTable, alpha: float, N_max: int) -> Selector:
    def select(obs: Observation) -> SelectorResult:
        return select_rhm(obs, hull, alpha, N_max)

    return select


def fixed_selector(N: int) -> Selector:
    """Always pick bandwidth N (baseline / oracle plumbing for benchmarks)."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    obj = np.ones(N)
    obj[N - 1] = 0.0

    def select(obs: Observation) -> SelectorResult:
        if N > obs.n_max:
            raise ValueError(f"fixed bandwidth {N} exceeds observation length {obs.n_max}")
        return SelectorResult(N_selected=N, objective_values=obj, method="custom-penalty")

    return select
