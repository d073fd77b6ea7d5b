"""Monte Carlo estimation of ruin probabilities.

Paths are simulated at claim epochs only: the surplus increases between
claims, so checking ruin when a claim lands is exact and needs no time
discretization.  Claims are drawn in fixed-size blocks of paths with one
generator per block, seeded as ``SeedSequence((seed, block_index))``;
identical seeds therefore reproduce estimates bit for bit, and blocks
could run concurrently without changing the result.

The default horizon is chosen in the claim-count clock: (80 + 8u/E[Y])
divided by eta expected claims per path, where eta is the relative
safety loading and u the starting reserve.  The first term covers the
mixing scale of the surplus walk, the second the longer ruin times of
well-capitalized companies; past that point the remaining ruin mass is
negligible against the Monte Carlo noise, which the horizon-doubling
test in the suite verifies per model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .demand import AcquisitionShares
from .distributions import SeverityModel
from .errors import ValidationError
from .market import Decomposition, MarketSpec, decompose

__all__ = [
    "SimConfig",
    "RuinEstimate",
    "wilson_interval",
    "simulate_ruin",
    "simulate_bivariate_market",
    "stream_claim_counts",
]

_BLOCK = 8192
_CHUNK = 256
_BASE_CLAIMS = 80.0
_CLAIMS_PER_RESERVE = 8.0
_FALLBACK_CLAIMS = 4000.0


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run parameters.

    ``horizon`` is in time units; None picks the claim-count default
    described in the module docstring.  ``antithetic`` mirrors the
    uniform stream over the second half of the paths; severities are
    then drawn by inverse transform, which is slower for mixtures.
    """

    paths: int = 100_000
    horizon: float | None = None
    seed: int = 0
    antithetic: bool = False

    def __post_init__(self):
        if self.paths < 1:
            raise ValidationError(f"need at least one path, got {self.paths}")
        if self.horizon is not None and not 0 < self.horizon < float("inf"):
            raise ValidationError(f"horizon must be positive and finite, got {self.horizon}")


@dataclass(frozen=True)
class RuinEstimate:
    """Point estimate with a 99% Wilson interval."""

    probability: float
    ci_low: float
    ci_high: float
    paths: int
    ruined: int
    horizon: float
    seed: int
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "probability": self.probability,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "paths": self.paths,
            "ruined": self.ruined,
            "horizon": self.horizon,
            "seed": self.seed,
        }


def wilson_interval(successes: int, trials: int, confidence: float = 0.99):
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValidationError("wilson interval needs 0 <= successes <= trials, trials >= 1")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * np.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def _default_horizon(intensity: float, mean_claim: float, premium_rate: float, reserve: float) -> float:
    eta = premium_rate / (intensity * mean_claim) - 1.0
    if eta <= 0:
        return _FALLBACK_CLAIMS / intensity
    claims = _BASE_CLAIMS + _CLAIMS_PER_RESERVE * reserve / mean_claim
    return claims / (eta * intensity)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(block))))


def _estimate(ruined, paths, horizon, seed, diagnostics) -> RuinEstimate:
    lo, hi = wilson_interval(ruined, paths)
    return RuinEstimate(
        probability=ruined / paths, ci_low=lo, ci_high=hi, paths=paths,
        ruined=ruined, horizon=horizon, seed=seed, diagnostics=diagnostics,
    )


def _run_block(n, rng, horizon, premium_rate, reserve, draw, mirror):
    """Simulate one block of paths to ruin or horizon; returns ruin times."""
    t_cur = np.zeros(n)
    l_cur = np.zeros(n)
    ruin_time = np.full(n, np.nan)
    alive = np.arange(n)
    ruined = 0
    while alive.size:
        waits, sizes = draw(rng, (alive.size, _CHUNK), mirror)
        tt = t_cur[alive, None] + np.cumsum(waits, axis=1)
        ll = l_cur[alive, None] + np.cumsum(sizes, axis=1)
        hit = (reserve + premium_rate * tt - ll <= 0.0) & (tt <= horizon)
        any_hit = hit.any(axis=1)
        if any_hit.any():
            rows = np.nonzero(any_hit)[0]
            first = np.argmax(hit[rows], axis=1)
            ruin_time[alive[rows]] = tt[rows, first]
            ruined += rows.size
        t_cur[alive] = tt[:, -1]
        l_cur[alive] = ll[:, -1]
        alive = alive[~any_hit]
        alive = alive[t_cur[alive] < horizon]
    return ruined, ruin_time


def _run_paths(config, horizon, premium_rate, reserve, draw, return_times):
    """Run all paths in seeded blocks; antithetic runs mirror the stream.

    With antithetic on, the second half of the paths replays the same
    per-block generators with mirrored uniforms, pairing paths row by
    row until their lifetimes diverge.
    """
    total = config.paths
    parts = [(total, False)]
    if config.antithetic:
        first = (total + 1) // 2
        parts = [(first, False), (total - first, True)]
    all_times = np.full(total, np.nan) if return_times else None
    ruined_total = 0
    offset = 0
    for count, mirrored in parts:
        for block_start in range(0, count, _BLOCK):
            nb = min(_BLOCK, count - block_start)
            rng = _block_rng(config.seed, block_start // _BLOCK)
            n_ruined, t_ruin = _run_block(nb, rng, horizon, premium_rate, reserve, draw, mirrored)
            ruined_total += n_ruined
            if return_times:
                all_times[offset + block_start : offset + block_start + nb] = t_ruin
        offset += count
    return ruined_total, all_times


def simulate_ruin(
    intensity: float,
    severity: SeverityModel,
    premium_rate: float,
    reserve: float,
    config: SimConfig,
    return_times: bool = False,
) -> RuinEstimate:
    """Estimate the ruin probability of one compound Poisson surplus process.

    ``return_times`` adds per-path ruin times (NaN for survivors) to the
    estimate diagnostics, for distributional tests and CSV dumps.
    """
    if reserve < 0:
        raise ValidationError(f"reserve must be nonnegative, got {reserve}")
    if intensity < 0:
        raise ValidationError(f"intensity must be nonnegative, got {intensity}")
    if intensity == 0.0:
        diags = {"ruin_times": np.full(config.paths, np.nan)} if return_times else {}
        return _estimate(0, config.paths, config.horizon or np.inf, config.seed, diags)
    horizon = config.horizon
    if horizon is None:
        horizon = _default_horizon(intensity, severity.mean, premium_rate, reserve)

    def draw(rng, shape, mirror):
        if not config.antithetic:
            return rng.exponential(1.0 / intensity, shape), severity.sample(rng, shape)
        uw = rng.random(shape)
        uy = rng.random(shape)
        if mirror:
            uw, uy = 1.0 - uw, 1.0 - uy
        waits = -np.log1p(-uw) / intensity
        return waits, np.asarray(severity.isf(1.0 - uy))

    ruined, times = _run_paths(config, horizon, premium_rate, reserve, draw, return_times)
    diags = {"ruin_times": times} if return_times else {}
    return _estimate(ruined, config.paths, horizon, config.seed, diags)


class _StreamSampler:
    """Claim draws for the superposed three-stream company process."""

    def __init__(self, decomp: Decomposition, shares: AcquisitionShares):
        d = decomp
        lam_b = d.lambda_both
        self.decomp = d
        self.rates = np.array([
            shares.p1 * d.lambda1_only + shares.only1 * lam_b,
            shares.p2 * d.lambda2_only + shares.only2 * lam_b,
            shares.both * lam_b,
        ])
        self.total_rate = float(self.rates.sum())
        self.type_cum = np.cumsum(self.rates / self.total_rate) if self.total_rate > 0 else None
        self.w_excl1 = shares.p1 * d.lambda1_only / self.rates[0] if self.rates[0] > 0 else 0.0
        self.w_excl2 = shares.p2 * d.lambda2_only / self.rates[1] if self.rates[1] > 0 else 0.0
        # share-weighted marginal cost rates: exact for any dependence
        self.cost_rate = (
            shares.p1 * d.market.risk1.mean_claim_rate + shares.p2 * d.market.risk2.mean_claim_rate
        )

    def _one_sided(self, rng, m, which):
        d = self.decomp
        if d.lambda_both == 0.0:
            sev = d.market.risk1.severity if which == 1 else d.market.risk2.severity
            return sev.sample(rng, m)
        w_excl = self.w_excl1 if which == 1 else self.w_excl2
        excl = rng.random(m) < w_excl
        vals = np.empty(m)
        n_excl = int(excl.sum())
        if n_excl:
            vals[excl] = d.sample_only1(rng, n_excl) if which == 1 else d.sample_only2(rng, n_excl)
        if m - n_excl:
            vals[~excl] = (
                d.sample_both1(rng, m - n_excl) if which == 1 else d.sample_both2(rng, m - n_excl)
            )
        return vals

    def draw(self, rng, shape, mirror):
        uw = rng.random(shape)
        ut = rng.random(shape)
        if mirror:
            uw, ut = 1.0 - uw, 1.0 - ut
        waits = -np.log1p(-uw) / self.total_rate
        kinds = np.searchsorted(self.type_cum, ut)
        sizes = np.empty(shape)
        for kind in (0, 1):
            mask = kinds == kind
            m = int(mask.sum())
            if m:
                sizes[mask] = self._one_sided(rng, m, kind + 1)
        mask = kinds == 2
        m = int(mask.sum())
        if m:
            y1, y2 = self.decomp.sample_pair_both(rng, m)
            sizes[mask] = y1 + y2
        return waits, sizes


def simulate_bivariate_market(
    market: MarketSpec,
    shares: AcquisitionShares | None,
    premium_rate: float,
    reserve: float,
    config: SimConfig,
    decomposition: Decomposition | None = None,
    return_times: bool = False,
) -> RuinEstimate:
    """Estimate company ruin by simulating the decomposed claim streams.

    Three independent Poisson streams are superposed: exclusive claims of
    each risk and simultaneous claims drawn as exact copula pairs (both
    coordinates added).  Severities come from the continuous copula
    inversion, not from the gridded mixtures, so this estimator is a
    route independent of the grid solvers.  ``shares`` of None means the
    whole market (a monopoly company).
    """
    if shares is None:
        shares = AcquisitionShares.monopoly()
    if decomposition is None:
        step = max(market.risk1.severity.mean, market.risk2.severity.mean) / 500.0
        decomposition = decompose(market, grid_step=step)
    sampler = _StreamSampler(decomposition, shares)
    if sampler.total_rate <= 0:
        diags = {"ruin_times": np.full(config.paths, np.nan)} if return_times else {}
        return _estimate(0, config.paths, config.horizon or np.inf, config.seed, diags)
    horizon = config.horizon
    if horizon is None:
        mean_claim = sampler.cost_rate / sampler.total_rate
        horizon = _default_horizon(sampler.total_rate, mean_claim, premium_rate, reserve)

    ruined, times = _run_paths(
        config, horizon, premium_rate, reserve, sampler.draw, return_times
    )
    diags = {"stream_rates": sampler.rates.tolist()}
    if return_times:
        diags["ruin_times"] = times
    return _estimate(ruined, config.paths, horizon, config.seed, diags)


def stream_claim_counts(
    decomposition: Decomposition,
    shares: AcquisitionShares,
    horizon: float,
    paths: int,
    seed: int = 0,
) -> dict:
    """Count claims per stream over a fixed horizon, ignoring ruin.

    Exercises the superposition and thinning logic end to end: the
    returned counts should be Poisson with means rate * horizon * paths,
    and the claims touching each risk should reproduce the share-thinned
    marginal frequencies.
    """
    sampler = _StreamSampler(decomposition, shares)
    rng = _block_rng(seed, 0)
    counts = np.zeros(3, dtype=np.int64)
    for _ in range(paths):
        t = 0.0
        while True:
            block_w = rng.exponential(1.0 / sampler.total_rate, _CHUNK)
            tt = t + np.cumsum(block_w)
            within = int(np.searchsorted(tt, horizon, side="right"))
            kinds = np.searchsorted(sampler.type_cum, rng.random(within))
            counts += np.bincount(kinds, minlength=3)
            if within < _CHUNK:
                break
            t = tt[-1]
    return {
        "counts": counts.tolist(),
        "expected": (sampler.rates * horizon * paths).tolist(),
        "exposure": horizon * paths,
    }
