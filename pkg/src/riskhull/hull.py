"""Monte Carlo computation of the risk-hull penalty U0(N).

For bandwidth N the penalty is the smallest t > 0 at which the upper-tail
expectation of the centered noise energy

    eta_N = sum_{i<=N} sigma_i^2 * (xi_i^2 - 1),     xi_i ~ N(0, 1),

drops to the one-coefficient noise level:

    U0(N) = inf{ t > 0 : E[eta_N * 1(eta_N >= t)] <= sigma_1^2 }.

The empirical tail expectation over S samples is a nonincreasing step
function of t that jumps at the positive order statistics, so the
infimum is found by a single suffix-sum scan of the sorted samples.

All sampling is coupled: one xi vector per replication serves every N
through cumulative sums, which both saves draws and smooths U0 across N.
Sampling happens in fixed-size blocks with per-block Philox streams, so
tables are bit-identical for a given seed under any worker count.

Internally eta is accumulated in units of sigma_1^2 (weights
sigma_i^2/sigma_1^2, threshold 1).  Scaling every sigma by c then leaves
the normalized problem untouched and multiplies U0 by c^2 through a
single final multiplication, making the quadratic-scaling law exact in
floating point for power-law spectra.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .sequence_model import (
    SigmaSpec,
    fingerprint,
    rng_for,
    sigma_at,
    sigma_values,
    spec_from_dict,
    spec_to_dict,
    unit_spec,
)

__all__ = [
    "McParams",
    "HullTable",
    "HullCacheError",
    "eta_paths_from_noise",
    "sample_eta_paths",
    "eta_samples_at",
    "eta_checkpoint_samples",
    "tail_functional",
    "compute_u0",
    "build_hull_table",
    "gaussian_u0",
    "u1",
    "penalty_ratio",
    "save_hull_table",
    "load_hull_table",
]

MIN_SAMPLES = 10_000
DEFAULT_SAMPLES = 1_000_000
_SAMPLE_BLOCK = 65_536


class HullCacheError(RuntimeError):
    """A hull cache file is unreadable, malformed or inconsistent."""


@dataclass(frozen=True)
class McParams:
    """Monte Carlo parameters for hull construction."""

    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    monotonize: bool = True

    def __post_init__(self) -> None:
        if self.samples < MIN_SAMPLES:
            raise ValueError(f"samples must be >= {MIN_SAMPLES}, got {self.samples}")
        if self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed}")


@dataclass(frozen=True, eq=False)
class HullTable:
    """Tabulated hull penalty U0(N) for N = 1..N_max with provenance.

    ``SigmaFourth[N-1]`` is the running fourth-moment sum of the spectrum,
    sum_{s<=N} sigma_s^4.  ``saturated`` lists the bandwidths where the
    empirical tail expectation stayed above sigma_1^2 even at the largest
    sample, in which case U0 falls back to that largest order statistic
    (a loud sign that ``mc_samples`` was too small for this spectrum).
    """

    N_max: int
    U0: np.ndarray
    SigmaFourth: np.ndarray
    spec_fingerprint: str
    mc_samples: int
    seed: int
    monotonized: bool
    saturated: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        u0 = np.asarray(self.U0, dtype=np.float64).reshape(-1).copy()
        s4 = np.asarray(self.SigmaFourth, dtype=np.float64).reshape(-1).copy()
        if self.N_max < 1 or u0.size != self.N_max or s4.size != self.N_max:
            raise ValueError(f"inconsistent table sizes: N_max={self.N_max}, U0={u0.size}, SigmaFourth={s4.size}")
        if np.any(u0 < 0) or not np.all(np.isfinite(u0)):
            raise ValueError("U0 entries must be finite and >= 0")
        if np.any(s4 <= 0) or np.any(np.diff(s4) <= 0):
            raise ValueError("SigmaFourth must be positive and strictly increasing")
        if self.monotonized and np.any(np.diff(u0) < 0):
            raise ValueError("monotonized table must have nondecreasing U0")
        u0.flags.writeable = False
        s4.flags.writeable = False
        object.__setattr__(self, "U0", u0)
        object.__setattr__(self, "SigmaFourth", s4)
        object.__setattr__(self, "saturated", tuple(int(n) for n in self.saturated))


# ---------------------------------------------------------------------------
# Sampling engine
# ---------------------------------------------------------------------------


def _norm_weights(spec: SigmaSpec, N: int) -> np.ndarray:
    """(sigma_i / sigma_1)^2 for i = 1..N."""
    return sigma_values(unit_spec(spec), N) ** 2


def _fill_paths(spec: SigmaSpec, N_max: int, mc: McParams, threads: int = 1) -> np.ndarray:
    """(N_max, samples) float32 of normalized cumulative eta paths.

    Block b of at most ``_SAMPLE_BLOCK`` replications is generated from
    the Philox stream (mc.seed, b); results are written into disjoint
    slices, so the output is independent of the executor schedule.
    """
    w32 = _norm_weights(spec, N_max).astype(np.float32)[:, None]
    out = np.empty((N_max, mc.samples), dtype=np.float32)
    blocks = [(b, start, min(_SAMPLE_BLOCK, mc.samples - start))
              for b, start in enumerate(range(0, mc.samples, _SAMPLE_BLOCK))]

    def fill(job) -> None:
        b, start, n = job
        x = rng_for(mc.seed, b).standard_normal((N_max, n), dtype=np.float32)
        np.multiply(x, x, out=x)
        x -= np.float32(1.0)
        x *= w32
        np.add.accumulate(x, axis=0, out=x)
        out[:, start:start + n] = x

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, blocks))
    else:
        for job in blocks:
            fill(job)
    return out


def _last_column(spec: SigmaSpec, N: int, mc: McParams) -> np.ndarray:
    """Normalized eta_N samples, float64, shape (samples,)."""
    w32 = _norm_weights(spec, N).astype(np.float32)[:, None]
    out = np.empty(mc.samples, dtype=np.float64)
    for b, start in enumerate(range(0, mc.samples, _SAMPLE_BLOCK)):
        n = min(_SAMPLE_BLOCK, mc.samples - start)
        x = rng_for(mc.seed, b).standard_normal((N, n), dtype=np.float32)
        np.multiply(x, x, out=x)
        x -= np.float32(1.0)
        x *= w32
        np.add.accumulate(x, axis=0, out=x)
        out[start:start + n] = x[N - 1]
    return out


def eta_paths_from_noise(spec: SigmaSpec, xi: np.ndarray) -> np.ndarray:
    """Cumulative eta paths for an explicit noise matrix (testing seam).

    ``xi`` has one replication per row; column k holds xi_k.  Returns the
    matrix of eta_1..eta_N per row, in absolute units.
    """
    xi = np.asarray(xi, dtype=np.float64)
    if xi.ndim != 2 or xi.shape[1] < 1:
        raise ValueError(f"xi must be a (samples, N) matrix, got shape {xi.shape}")
    n = xi.shape[1]
    w = _norm_weights(spec, n)[None, :]
    sigma1_sq = sigma_at(spec, 1) ** 2
    return sigma1_sq * np.cumsum(w * (xi**2 - 1.0), axis=1)


def sample_eta_paths(spec: SigmaSpec, N_max: int, mc: McParams) -> np.ndarray:
    """Monte Carlo eta paths, shape (samples, N_max), absolute units.

    Row r holds eta_1, ..., eta_{N_max} computed from one vector of
    i.i.d. standard normals (cumulative-sum coupling across N).
    Memory scales as samples * N_max; prefer :func:`eta_samples_at` or
    :func:`eta_checkpoint_samples` when only a few columns are needed.
    """
    sigma1_sq = sigma_at(spec, 1) ** 2
    paths = _fill_paths(spec, N_max, mc)
    return sigma1_sq * paths.T.astype(np.float64)


def eta_samples_at(spec: SigmaSpec, N: int, mc: McParams) -> np.ndarray:
    """Monte Carlo samples of eta_N only, shape (samples,), absolute units."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    sigma1_sq = sigma_at(spec, 1) ** 2
    return sigma1_sq * _last_column(spec, N, mc)


def eta_checkpoint_samples(spec: SigmaSpec, Ns, mc: McParams) -> np.ndarray:
    """eta_N samples at several bandwidths in one pass, shape (len(Ns), samples).

    Uses segment sums between checkpoints, which is much cheaper than a
    full cumulative matrix when only a handful of bandwidths matter.
    """
    Ns = sorted(int(n) for n in Ns)
    if not Ns or Ns[0] < 1:
        raise ValueError(f"need a nonempty list of bandwidths >= 1, got {Ns}")
    n_top = Ns[-1]
    w32 = _norm_weights(spec, n_top).astype(np.float32)[:, None]
    bounds = np.array([0] + Ns[:-1], dtype=np.intp)
    sigma1_sq = sigma_at(spec, 1) ** 2
    out = np.empty((len(Ns), mc.samples), dtype=np.float64)
    for b, start in enumerate(range(0, mc.samples, _SAMPLE_BLOCK)):
        n = min(_SAMPLE_BLOCK, mc.samples - start)
        x = rng_for(mc.seed, b).standard_normal((n_top, n), dtype=np.float32)
        np.multiply(x, x, out=x)
        x -= np.float32(1.0)
        x *= w32
        seg = np.add.reduceat(x, bounds, axis=0)
        np.add.accumulate(seg, axis=0, out=seg)
        out[:, start:start + n] = seg
    return sigma1_sq * out


# ---------------------------------------------------------------------------
# Tail expectation and the U0 solver
# ---------------------------------------------------------------------------


def tail_functional(samples, t: float) -> float:
    """Empirical tail expectation (1/n) * sum of all entries >= t."""
    arr = np.asarray(samples, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("tail_functional needs a nonempty sample list")
    return float(np.sum(arr[arr >= t]) / arr.size)


def _u0_scan(col: np.ndarray, n_samples: int) -> tuple[float, bool]:
    """Solve the empirical hull equation at threshold 1 (normalized units).

    ``col`` holds normalized eta samples.  Returns (t, saturated): the
    smallest t > 0 where the suffix mean drops to <= 1, or 0 when the
    positive-part mean is already <= 1; saturated means no crossing
    exists within the sample and the largest order statistic is returned.
    """
    pos = np.sort(col[col > 0].astype(np.float64))
    if pos.size == 0:
        return 0.0, False
    tail = np.cumsum(pos[::-1])[::-1] / n_samples
    idx = int(np.searchsorted(-tail, -1.0, side="left"))
    if idx == 0:
        return 0.0, False
    if idx >= pos.size:
        return float(pos[-1]), True
    return float(pos[idx - 1]), False


def compute_u0(spec: SigmaSpec, N: int, mc: McParams) -> float:
    """Monte Carlo estimate of the hull penalty U0(N).

    U0(1) is 0 for every spectrum: the positive part of a single centered
    chi-square has mean 2*phi(1) ~ 0.484 in units of sigma_1^2, already
    below the threshold.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    col = _last_column(spec, N, mc)
    t_norm, _ = _u0_scan(col, mc.samples)
    return (sigma_at(spec, 1) ** 2) * t_norm


def build_hull_table(spec: SigmaSpec, N_max: int, mc: McParams, threads: int = 1) -> HullTable:
    """Build the full U0 table from one coupled path matrix.

    Every N shares the same xi draws through cumulative sums.  With
    ``mc.monotonize`` a running maximum removes downward Monte Carlo
    wiggle.  Bit-identical output for identical (spec, N_max, mc)
    regardless of ``threads``.
    """
    if N_max < 1:
        raise ValueError(f"N_max must be >= 1, got {N_max}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    paths = _fill_paths(spec, N_max, mc, threads=threads)
    u0_norm = np.empty(N_max, dtype=np.float64)
    saturated = []
    for N in range(1, N_max + 1):
        u0_norm[N - 1], sat = _u0_scan(paths[N - 1], mc.samples)
        if sat:
            saturated.append(N)
    del paths
    U0 = (sigma_at(spec, 1) ** 2) * u0_norm
    if mc.monotonize:
        np.maximum.accumulate(U0, out=U0)
    s4 = np.cumsum(sigma_values(spec, N_max) ** 4)
    return HullTable(
        N_max=N_max,
        U0=U0,
        SigmaFourth=s4,
        spec_fingerprint=fingerprint(spec),
        mc_samples=mc.samples,
        seed=mc.seed,
        monotonized=mc.monotonize,
        saturated=tuple(saturated),
    )


# ---------------------------------------------------------------------------
# Closed-form approximations and diagnostics
# ---------------------------------------------------------------------------


def _sigma_fourth_sum(spec: SigmaSpec, N: int) -> float:
    return float(np.sum(sigma_values(spec, N) ** 4))


def gaussian_u0(spec: SigmaSpec, N: int) -> float:
    """Gaussian-tail closed form sqrt(2*S_N*log(S_N/(pi*sigma_1^4))).

    S_N is the running fourth-moment sum.  The formula is asymptotic in N
    and clamps to 0 where the logarithm would be negative; it understates
    the true penalty at small N, where the chi-square tail is heavier
    than its Gaussian approximation.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    s_n = _sigma_fourth_sum(spec, N)
    arg = s_n / (math.pi * sigma_at(spec, 1) ** 4)
    if arg <= 1.0:
        return 0.0
    return math.sqrt(2.0 * s_n * math.log(arg))


def u1(spec: SigmaSpec, N: int) -> float:
    """Normalized lower envelope sqrt(log(S_N/(2*pi*sigma_1^4))), clamped at 0.

    Compares against u0(N) = U0(N)/sqrt(2*S_N); for all large enough N
    the normalized penalty stays above this envelope.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    arg = _sigma_fourth_sum(spec, N) / (2.0 * math.pi * sigma_at(spec, 1) ** 4)
    if arg <= 1.0:
        return 0.0
    return math.sqrt(math.log(arg))


def penalty_ratio(spec: SigmaSpec, hull: HullTable, alpha: float, N: int) -> tuple[float, float]:
    """(rho, rho_tilde): hull-penalized over URE penalty, MC and Gaussian.

    rho(N) = 1 + (1+alpha) * U0(N) / sum_{k<=N} sigma_k^2, and the same
    with the Gaussian closed form in place of the Monte Carlo U0.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not 1 <= N <= hull.N_max:
        raise ValueError(f"N={N} outside hull table range 1..{hull.N_max}")
    if hull.spec_fingerprint != fingerprint(spec):
        raise ValueError("hull table fingerprint does not match the spec (stale cache)")
    denom = float(np.sum(sigma_values(spec, N) ** 2))
    rho = 1.0 + (1.0 + alpha) * float(hull.U0[N - 1]) / denom
    rho_tilde = 1.0 + (1.0 + alpha) * gaussian_u0(spec, N) / denom
    return rho, rho_tilde


# ---------------------------------------------------------------------------
# On-disk cache
# ---------------------------------------------------------------------------

_HULL_FORMAT = "riskhull-hull-v1"


def save_hull_table(table: HullTable, spec: SigmaSpec, path) -> None:
    """Serialize a hull table to JSON, atomically (write then rename)."""
    if fingerprint(spec) != table.spec_fingerprint:
        raise ValueError("spec does not match the table's fingerprint")
    doc = {
        "format": _HULL_FORMAT,
        "spec": spec_to_dict(spec),
        "spec_fingerprint": table.spec_fingerprint,
        "N_max": table.N_max,
        "mc_samples": table.mc_samples,
        "seed": table.seed,
        "monotonized": table.monotonized,
        "saturated": list(table.saturated),
        "U0": [float(v) for v in table.U0],
        "SigmaFourth": [float(v) for v in table.SigmaFourth],
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_hull_table(path) -> tuple[HullTable, SigmaSpec]:
    """Load and self-validate a hull table; raises HullCacheError when stale."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise HullCacheError(f"cannot read hull cache {path}: {exc}") from exc
    try:
        if doc.get("format") != _HULL_FORMAT:
            raise ValueError(f"unexpected format tag {doc.get('format')!r}")
        spec = spec_from_dict(doc["spec"])
        if fingerprint(spec) != doc["spec_fingerprint"]:
            raise ValueError("stored fingerprint does not match the stored spec")
        table = HullTable(
            N_max=int(doc["N_max"]),
            U0=np.asarray(doc["U0"], dtype=np.float64),
            SigmaFourth=np.asarray(doc["SigmaFourth"], dtype=np.float64),
            spec_fingerprint=doc["spec_fingerprint"],
            mc_samples=int(doc["mc_samples"]),
            seed=int(doc["seed"]),
            monotonized=bool(doc["monotonized"]),
            saturated=tuple(doc.get("saturated", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise HullCacheError(f"hull cache {path} is corrupted: fingerprint/schema mismatch ({exc})") from exc
    return table, spec
