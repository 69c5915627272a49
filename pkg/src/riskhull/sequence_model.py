"""Noise spectra, signals and the generative Gaussian sequence model.

The observation model is

    y_k = theta_k + sigma_k * xi_k,        k = 1, 2, ...

with xi_k i.i.d. standard normal.  ``sigma_k`` encodes how strongly the
noise is amplified at frequency k; a polynomially growing spectrum
``sigma_k = epsilon * k**beta`` is the moderately ill-posed case, beta = 0
being direct estimation.

All random draws go through counter-based Philox streams keyed by
(seed, stream indices), so any experiment built on top of this module is
bit-reproducible regardless of how work is scheduled across workers.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SigmaSpec",
    "Signal",
    "Observation",
    "sigma_at",
    "sigma_values",
    "max_index",
    "unit_spec",
    "fingerprint",
    "spec_to_dict",
    "spec_from_dict",
    "rng_for",
    "derive_seed",
    "make_observation",
    "simulate",
    "signal_family",
]

POWER_LAW = "power-law"
EXPLICIT = "explicit"


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for the sub-stream ``stream`` of ``seed``.

    Distinct stream tuples give statistically independent Philox streams;
    the mapping is a pure function of (seed, stream), independent of
    thread count or call order.
    """
    if seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=stream)
    return np.random.Generator(np.random.Philox(key=ss.generate_state(2)))


def derive_seed(seed: int, *stream: int) -> int:
    """Deterministically derive a child seed for the given sub-stream."""
    if seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=stream)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SigmaSpec:
    """Noise-spectrum specification sigma_k.

    Either a power law ``sigma_k = epsilon * k**beta`` (unbounded index
    domain) or an explicit finite table of positive values (querying past
    the table is an error).
    """

    kind: str
    epsilon: float | None = None
    beta: float | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == POWER_LAW:
            if self.epsilon is None or not np.isfinite(self.epsilon) or self.epsilon <= 0:
                raise ValueError(f"epsilon must be a positive finite real, got {self.epsilon}")
            if self.beta is None or not np.isfinite(self.beta) or self.beta < 0:
                raise ValueError(f"beta must be a nonnegative finite real, got {self.beta}")
            if self.values is not None:
                raise ValueError("power-law spec does not take explicit values")
        elif self.kind == EXPLICIT:
            if self.epsilon is not None or self.beta is not None:
                raise ValueError("explicit spec does not take epsilon/beta")
            if not self.values:
                raise ValueError("explicit spec needs at least one value")
            vals = tuple(float(v) for v in self.values)
            if any(not np.isfinite(v) or v <= 0 for v in vals):
                raise ValueError("explicit sigma values must all be positive and finite")
            object.__setattr__(self, "values", vals)
        else:
            raise ValueError(f"unknown spec kind {self.kind!r}")

    @classmethod
    def power_law(cls, epsilon: float, beta: float) -> "SigmaSpec":
        return cls(kind=POWER_LAW, epsilon=float(epsilon), beta=float(beta))

    @classmethod
    def explicit(cls, values) -> "SigmaSpec":
        return cls(kind=EXPLICIT, values=tuple(float(v) for v in values))


def max_index(spec: SigmaSpec) -> int | None:
    """Largest queryable index, or None for an unbounded power law."""
    return None if spec.kind == POWER_LAW else len(spec.values)


def _check_index(spec: SigmaSpec, n: int) -> None:
    if n < 1:
        raise ValueError(f"index must be >= 1, got {n}")
    bound = max_index(spec)
    if bound is not None and n > bound:
        raise ValueError(f"index {n} outside explicit sigma table of length {bound}")


def sigma_at(spec: SigmaSpec, k: int) -> float:
    """sigma_k for a single index k >= 1."""
    _check_index(spec, k)
    if spec.kind == POWER_LAW:
        return float(spec.epsilon * float(k) ** spec.beta)
    return spec.values[k - 1]


def sigma_values(spec: SigmaSpec, n: int) -> np.ndarray:
    """Vector (sigma_1, ..., sigma_n) as float64."""
    _check_index(spec, n)
    if spec.kind == POWER_LAW:
        k = np.arange(1, n + 1, dtype=np.float64)
        return spec.epsilon * k**spec.beta
    return np.asarray(spec.values[:n], dtype=np.float64)


def unit_spec(spec: SigmaSpec) -> SigmaSpec:
    """The same spectrum rescaled so that sigma_1 = 1.

    For a power law this only replaces epsilon by 1 (no arithmetic on the
    stored values), which is what makes noise-level invariance of the
    benchmark pipeline exact rather than approximate.
    """
    if spec.kind == POWER_LAW:
        return SigmaSpec.power_law(1.0, spec.beta)
    v0 = spec.values[0]
    return SigmaSpec.explicit(tuple(v / v0 for v in spec.values))


def fingerprint(spec: SigmaSpec) -> str:
    """Stable content digest of a spec, used for hull-cache validation."""
    if spec.kind == POWER_LAW:
        doc = {"kind": spec.kind, "epsilon": float(spec.epsilon).hex(), "beta": float(spec.beta).hex()}
    else:
        doc = {"kind": spec.kind, "values": [float(v).hex() for v in spec.values]}
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def spec_to_dict(spec: SigmaSpec) -> dict:
    """Plain-JSON representation of a spec (floats round-trip exactly)."""
    if spec.kind == POWER_LAW:
        return {"kind": spec.kind, "epsilon": spec.epsilon, "beta": spec.beta}
    return {"kind": spec.kind, "values": list(spec.values)}


def spec_from_dict(doc: dict) -> SigmaSpec:
    kind = doc.get("kind")
    if kind == POWER_LAW:
        return SigmaSpec.power_law(doc["epsilon"], doc["beta"])
    if kind == EXPLICIT:
        return SigmaSpec.explicit(doc["values"])
    raise ValueError(f"unknown spec kind {kind!r}")


@dataclass(frozen=True, eq=False)
class Signal:
    """A square-summable coefficient sequence stored as a finite prefix.

    Indices beyond the stored prefix are implicitly zero; every tail sum
    in this package is therefore taken over the stored entries only.
    """

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.coeffs, dtype=np.float64).reshape(-1).copy()
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("signal coefficients must all be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    def __len__(self) -> int:
        return int(self.coeffs.size)

    @property
    def norm_sq(self) -> float:
        return float(np.sum(self.coeffs**2))

    def padded(self, n: int) -> np.ndarray:
        """First n coefficients, zero-extended past the stored prefix."""
        out = np.zeros(n, dtype=np.float64)
        m = min(n, self.coeffs.size)
        out[:m] = self.coeffs[:m]
        return out


ZERO_SIGNAL = Signal(np.zeros(0))


@dataclass(frozen=True, eq=False)
class Observation:
    """One realization y_1..y_{n_max} of the sequence model."""

    ys: np.ndarray
    n_max: int
    sigma: SigmaSpec
    seed: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.ys, dtype=np.float64).reshape(-1).copy()
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if arr.size != self.n_max:
            raise ValueError(f"ys has length {arr.size}, expected n_max = {self.n_max}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("observation entries must all be finite")
        _check_index(self.sigma, self.n_max)
        if self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed}")
        arr.flags.writeable = False
        object.__setattr__(self, "ys", arr)


def make_observation(spec: SigmaSpec, signal: Signal, xi: np.ndarray, seed: int = 0) -> Observation:
    """Assemble y = theta + sigma * xi from an explicit noise vector."""
    xi = np.asarray(xi, dtype=np.float64).reshape(-1)
    n_max = xi.size
    ys = signal.padded(n_max) + sigma_values(spec, n_max) * xi
    return Observation(ys=ys, n_max=n_max, sigma=spec, seed=seed)


def simulate(spec: SigmaSpec, signal: Signal, n_max: int, seed: int) -> Observation:
    """Draw one observation with xi from the Philox stream of ``seed``.

    Identical seed gives a bit-identical observation no matter how many
    threads or processes are running.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    xi = rng_for(seed).standard_normal(n_max)
    return make_observation(spec, signal, xi, seed=seed)


def signal_family(a: float, W: float, m: float, epsilon: float, n_max: int) -> Signal:
    """Test-signal family theta_i = a * epsilon / (1 + (i/W)**m).

    ``a`` sets the amplitude (signal-to-noise), ``W`` the effective
    bandwidth and ``m`` the smoothness of the roll-off.
    """
    if a < 0:
        raise ValueError(f"amplitude a must be >= 0, got {a}")
    if W <= 0 or m <= 0 or epsilon <= 0:
        raise ValueError(f"W, m, epsilon must be positive, got W={W} m={m} epsilon={epsilon}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    i = np.arange(1, n_max + 1, dtype=np.float64)
    return Signal(a * epsilon / (1.0 + (i / W) ** m))
