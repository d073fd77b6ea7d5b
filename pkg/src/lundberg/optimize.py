"""Security-loading optimization.

Single-risk loadings admit closed forms under logit demand: the
ruin-minimizing loading solves d/dtheta of lambda*p(theta)/c(theta) = 0
directly, and the profit-maximizing loading is the unique positive root
of 1 + e^(b0+b1*t) - b1*t*e^(b0+b1*t).  Joint two-risk loadings have no
closed form; they are found by sweeping the company ruin probability on
a loading grid and polishing the grid argmin with a quasi-Newton
refinement driven by finite differences.

The sweep exploits the structure of the company claim model: the grid
recursion coefficients are linear in the per-component exposure weights,
so one set of component tail integrals serves every loading pair, and
whole batches of loadings advance through the recursion together.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sciopt

from .copulas import OrdinaryCopula
from .demand import DemandSpec, shares_from_take_rates
from .distributions import integrated_tails
from .errors import AccuracyError, InstabilityError, ValidationError
from .market import Decomposition, MarketSpec, _company_claim_model, company_exposure, decompose
from .ruin import SolverConfig, independence_gap_bound, solve_survival

__all__ = [
    "LoadingResult",
    "ruin_optimal_loading",
    "profit_optimal_loading",
    "joint_expected_profit",
    "weighted_average_loading",
    "optimize_joint_ruin",
    "optimize_joint_profit",
    "sweep_common_loading",
    "sweep_separate_loadings",
    "size_scaling_experiment",
]

_SWEEP_CHUNK = 512


@dataclass
class LoadingResult:
    """Outcome of a loading optimization.

    ``loading`` is a scalar for single-risk and common-mode searches and
    a pair for separate loadings.  ``value`` is the criterion value at
    the optimum (ruin probability at the reference reserve, or expected
    profit per unit time).  ``grid_loading`` keeps the pre-refinement
    sweep argmin for grid-step comparisons.
    """

    criterion: str
    mode: str
    loading: float | tuple
    value: float
    reserve: float | None = None
    expected_profit: float | None = None
    grid_loading: float | tuple | None = None
    diagnostics: dict = field(default_factory=dict)


def ruin_optimal_loading(demand: DemandSpec, intensity: float, mean_severity: float) -> LoadingResult:
    """Closed-form ruin-minimizing loading for a single risk.

    theta = (ln(lambda*E[Y] / (r*b1)) - b0) / b1.  The ruin probability
    is strictly increasing in alpha(theta) = lambda*p(theta)/c(theta),
    so minimizing alpha minimizes ruin at every reserve; the returned
    ``value`` is alpha at the optimum.  A local check confirms the
    stationary point is a minimum of alpha.
    """
    lam_mean = intensity * mean_severity
    floor = demand.fixed_cost * demand.beta1 * np.exp(demand.beta0)
    if lam_mean < floor or demand.fixed_cost <= 0:
        raise ValidationError(
            "no interior ruin-optimal loading: need lambda*E[Y] >= r*beta1*exp(beta0) with r > 0"
        )
    theta = (np.log(lam_mean / (demand.fixed_cost * demand.beta1)) - demand.beta0) / demand.beta1

    def alpha(t):
        return intensity * demand.take_rate(t) / demand.premium_rate(intensity, mean_severity, t)

    a_star = float(alpha(theta))
    delta = 1e-4
    if not (a_star <= alpha(theta - delta) and a_star <= alpha(theta + delta)):
        raise AccuracyError(f"loading {theta:g} failed the local minimum check")
    return LoadingResult(
        criterion="ruin", mode="single", loading=float(theta), value=a_star,
        expected_profit=float(theta * intensity * demand.take_rate(theta) * mean_severity
                              - demand.fixed_cost),
    )


def profit_optimal_loading(demand: DemandSpec, intensity: float, mean_severity: float) -> LoadingResult:
    """Profit-maximizing loading for a single risk.

    Solves 1 + w - b1*t*w = 0 with w = e^(b0+b1*t), the stationarity
    condition of t * lambda * p(t) * E[Y]; the root does not depend on
    lambda, E[Y], or the fixed cost, which only shift the profit level.
    """
    b0, b1 = demand.beta0, demand.beta1

    def f(t):
        w = np.exp(b0 + b1 * t)
        return 1.0 + w - b1 * t * w

    lo = 1.0 / b1
    hi = lo + 20.0
    if not (f(lo) > 0 > f(hi)):
        raise AccuracyError(f"no sign change for the profit root in [{lo:g}, {hi:g}]")
    theta = float(sciopt.brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16))
    profit = float(theta * intensity * demand.take_rate(theta) * mean_severity - demand.fixed_cost)
    return LoadingResult(
        criterion="profit", mode="single", loading=theta, value=profit,
        expected_profit=profit, diagnostics={"residual": float(f(theta))},
    )


def joint_expected_profit(theta1, theta2, demands, intensities, mean_severities) -> float:
    """Expected underwriting profit per unit time of a two-risk company.

    theta1*p1*lambda1*E[Y1] + theta2*p2*lambda2*E[Y2]: the value depends
    only on the marginal claim models, never on claim or acquisition
    dependence.  Fixed costs are excluded; they shift the level without
    moving any optimum.
    """
    d1, d2 = demands
    l1, l2 = intensities
    m1, m2 = mean_severities
    return float(
        theta1 * d1.take_rate(theta1) * l1 * m1 + theta2 * d2.take_rate(theta2) * l2 * m2
    )


def weighted_average_loading(theta1: float, theta2: float, p1_ref: float, p2_ref: float) -> float:
    """Exposure-weighted average of two loadings.

    Weights are the take rates at a stated reference loading; a useful
    predictor of the common-loading optimum of an aggregated pair.
    """
    if p1_ref < 0 or p2_ref < 0 or p1_ref + p2_ref <= 0:
        raise ValidationError("reference take rates must be nonnegative with positive sum")
    return (theta1 * p1_ref + theta2 * p2_ref) / (p1_ref + p2_ref)


def _component_model(decomp: Decomposition):
    """Severity components and exposure-weight builder of a company model.

    Returns (components, coefficients(theta_pairs, shares_list)) where the
    recursion inputs of every loading are linear combinations of the
    component tail integrals with these coefficients.
    """
    if decomp.lambda_both == 0.0:
        comps = [decomp.market.risk1.severity, decomp.market.risk2.severity]

        def coefs(shares):
            return np.column_stack([
                shares[:, 0] * decomp.lambda1,
                shares[:, 1] * decomp.lambda2,
            ])
    else:
        comps = [
            decomp.sev1_only, decomp.sev2_only,
            decomp.sev1_both, decomp.sev2_both, decomp.sev_sum_both,
        ]

        def coefs(shares):
            p1, p2, only1, only2, both = shares.T
            return np.column_stack([
                p1 * decomp.lambda1_only,
                p2 * decomp.lambda2_only,
                only1 * decomp.lambda_both,
                only2 * decomp.lambda_both,
                both * decomp.lambda_both,
            ])
    return comps, coefs


def _share_matrix(acquisition: OrdinaryCopula, demands, theta_pairs: np.ndarray) -> np.ndarray:
    d1, d2 = demands
    p1 = np.asarray(d1.take_rate(theta_pairs[:, 0]), dtype=float)
    p2 = np.asarray(d2.take_rate(theta_pairs[:, 1]), dtype=float)
    f1, f2 = 1.0 - p1, 1.0 - p2
    both = 1.0 - f1 - f2 + np.asarray(acquisition.cdf(f1, f2), dtype=float)
    both = np.clip(both, np.maximum(p1 + p2 - 1.0, 0.0), np.minimum(p1, p2))
    return np.column_stack([p1, p2, p1 - both, p2 - both, both])


def _batched_recursion(aw, d, av1, v0, n):
    """Advance a batch of loading points through the grid recursion."""
    m = v0.size
    vbar = np.empty((m, n + 1))
    vbar[:, 0] = v0
    denom = 1.0 - av1
    if np.any(denom <= 0):
        raise InstabilityError("recursion denominator <= 0 in sweep; reduce the grid step")
    for i in range(1, n + 1):
        acc = v0 * (1.0 + aw[:, i - 1])
        if i > 1:
            acc += np.einsum("pm,pm->p", d[:, : i - 1], vbar[:, i - 1 : 0 : -1])
        vbar[:, i] = acc / denom
    return vbar


def company_ruin_at(
    market: MarketSpec,
    demands,
    acquisition: OrdinaryCopula,
    reserve,
    theta_pairs: np.ndarray,
    grid_step: float,
    decomposition: Decomposition | None = None,
):
    """Ruin probability at one or more reserves for a batch of loadings.

    Returns (ruin, profit, feasible) with ruin of shape (P,) for a
    scalar reserve and (P, len(reserve)) otherwise.  Reserves snap to
    the nearest grid node.  Infeasible pairs (premium at or below the
    expected claim rate) carry ruin 1.0, the mathematically certain
    value; pairs that destabilize the recursion return NaN.
    """
    theta_pairs = np.atleast_2d(np.asarray(theta_pairs, dtype=float))
    scalar_reserve = np.isscalar(reserve)
    reserves = [float(reserve)] if scalar_reserve else [float(r) for r in reserve]
    if decomposition is None:
        decomposition = decompose(market, grid_step)
    comps, coefs = _component_model(decomposition)
    d1, d2 = demands
    n = max(int(np.ceil(max(reserves) / grid_step - 1e-9)), 1)
    nodes = grid_step * np.arange(n + 1)
    tails = [integrated_tails(c) for c in comps]
    sb = np.stack([t.sbar(nodes) for t in tails])
    ssb = np.stack([t.ssbar(nodes) for t in tails])
    means = np.array([t.mean for t in tails])
    c1 = np.diff(sb, axis=1)
    c2 = np.diff(ssb, axis=1) - grid_step * sb[:, :-1]
    w_comp = c1 - c2 / grid_step
    v_comp = c2 / grid_step
    d_comp = w_comp[:, :-1] + v_comp[:, 1:]
    v1_comp = v_comp[:, 0]

    shares = _share_matrix(acquisition, demands, theta_pairs)
    coef = coefs(shares)
    premium = np.asarray(
        d1.premium_rate(market.risk1.intensity, market.risk1.severity.mean, theta_pairs[:, 0])
        + d2.premium_rate(market.risk2.intensity, market.risk2.severity.mean, theta_pairs[:, 1]),
        dtype=float,
    )
    claim_rate = coef @ means
    profit = premium - claim_rate
    feasible = profit > 0

    node_idx = [int(round(r / grid_step)) for r in reserves]
    ruin = np.ones((theta_pairs.shape[0], len(reserves)))
    for start in range(0, theta_pairs.shape[0], _SWEEP_CHUNK):
        stop = min(start + _SWEEP_CHUNK, theta_pairs.shape[0])
        live = np.nonzero(feasible[start:stop])[0] + start
        if live.size == 0:
            continue
        a = coef[live] / premium[live, None]
        aw = a @ w_comp
        dmat = a @ d_comp
        av1 = a @ v1_comp
        v0 = 1.0 - a @ means
        vbar = _batched_recursion(aw, dmat, av1, v0, n)
        bad = ~((vbar.min(axis=1) > -1e-9) & (vbar.max(axis=1) < 1.0 + 1e-9))
        vals = 1.0 - np.clip(vbar[:, node_idx], 0.0, 1.0)
        vals[bad] = np.nan
        ruin[live] = vals
    if scalar_reserve:
        ruin = ruin[:, 0]
    return ruin, profit, feasible


def sweep_single_loading(demand, intensity, severity, reserves, thetas, grid_step):
    """Single-risk loading sweep: ruin at each reserve plus expected profit.

    Returns a dict with ``theta``, ``profit``, ``feasible``, and one ruin
    array per reserve under ``ruin`` (keyed by reserve).  The same
    batched recursion as the two-risk sweeps runs with a single severity
    component weighted by the demand-thinned intensity.
    """
    thetas = np.asarray(thetas, dtype=float)
    reserves = sorted(float(r) for r in np.atleast_1d(reserves))
    n = max(int(np.ceil(reserves[-1] / grid_step - 1e-9)), 1)
    nodes = grid_step * np.arange(n + 1)
    tails = integrated_tails(severity)
    sb, ssb = tails.sbar(nodes), tails.ssbar(nodes)
    c1 = np.diff(sb)
    c2 = np.diff(ssb) - grid_step * sb[:-1]
    w_comp = (c1 - c2 / grid_step)[None, :]
    d_comp = (w_comp[0, :-1] + (c2 / grid_step)[1:])[None, :]
    v1_comp = np.array([c2[0] / grid_step])
    means = np.array([tails.mean])

    take = np.asarray(demand.take_rate(thetas), dtype=float)
    coef = (take * intensity)[:, None]
    premium = np.asarray(demand.premium_rate(intensity, tails.mean, thetas), dtype=float)
    profit = premium - coef[:, 0] * tails.mean
    feasible = profit > 0
    idx = [int(round(r / grid_step)) for r in reserves]
    ruin = {r: np.ones(thetas.size) for r in reserves}
    for start in range(0, thetas.size, _SWEEP_CHUNK):
        stop = min(start + _SWEEP_CHUNK, thetas.size)
        live = np.nonzero(feasible[start:stop])[0] + start
        if live.size == 0:
            continue
        a = coef[live] / premium[live, None]
        vbar = _batched_recursion(a @ w_comp, a @ d_comp, a @ v1_comp, 1.0 - a @ means, n)
        for r, j in zip(reserves, idx):
            ruin[r][live] = 1.0 - np.clip(vbar[:, j], 0.0, 1.0)
    return {"theta": thetas, "profit": profit, "feasible": feasible, "ruin": ruin}


def sweep_common_loading(
    market, demands, acquisition, reserve, thetas, grid_step, decomposition=None
):
    """Common-loading ruin/profit sweep; returns a dict of columns."""
    thetas = np.asarray(thetas, dtype=float)
    pairs = np.column_stack([thetas, thetas])
    ruin, profit, feasible = company_ruin_at(
        market, demands, acquisition, reserve, pairs, grid_step, decomposition
    )
    return {"theta": thetas, "ruin": ruin, "profit": profit, "feasible": feasible}


def sweep_separate_loadings(
    market, demands, acquisition, reserve, thetas1, thetas2, grid_step, decomposition=None
):
    """Two-loading sweep over the grid thetas1 x thetas2 (row-major)."""
    t1, t2 = np.meshgrid(np.asarray(thetas1, float), np.asarray(thetas2, float), indexing="ij")
    pairs = np.column_stack([t1.ravel(), t2.ravel()])
    ruin, profit, feasible = company_ruin_at(
        market, demands, acquisition, reserve, pairs, grid_step, decomposition
    )
    return {
        "theta1": pairs[:, 0], "theta2": pairs[:, 1],
        "ruin": ruin, "profit": profit, "feasible": feasible,
    }


def _refine_minimum(objective, x0, bounds, step=1e-3):
    """Quasi-Newton polish with central finite differences."""
    res = sciopt.minimize(
        objective, x0=np.asarray(x0, dtype=float), method="L-BFGS-B", bounds=bounds,
        options={"eps": step, "maxiter": 60, "ftol": 1e-12},
    )
    return res


def optimize_joint_ruin(
    market: MarketSpec,
    demands,
    acquisition: OrdinaryCopula,
    reserve: float,
    mode: str = "separate",
    solver: SolverConfig | None = None,
    box: tuple = (0.05, 1.0),
    sweep_step: float = 0.01,
    refine: bool = True,
    decomposition: Decomposition | None = None,
) -> LoadingResult:
    """Minimize company ruin at a reserve over one or two loadings.

    A coarse sweep over the search box locates the basin (plateau ties
    break toward the smallest loading); a bounded quasi-Newton refinement
    with finite differences then polishes the argmin.  If the refinement
    fails to converge the grid argmin is returned with a diagnostic flag.

    Raises:
        ValidationError: if every point of the box violates net profit.
    """
    if mode not in ("common", "separate"):
        raise ValidationError(f"mode must be 'common' or 'separate', got {mode}")
    solver = solver or SolverConfig(grid_step=2.0, x_max=max(reserve, 2.0))
    h = solver.grid_step
    if decomposition is None:
        decomposition = decompose(market, h)
    thetas = np.arange(box[0], box[1] + sweep_step / 2, sweep_step)

    if mode == "common":
        sweep = sweep_common_loading(market, demands, acquisition, reserve, thetas, h, decomposition)
        pairs = np.column_stack([thetas, thetas])
    else:
        sweep = sweep_separate_loadings(market, demands, acquisition, reserve, thetas, thetas, h, decomposition)
        pairs = np.column_stack([sweep["theta1"], sweep["theta2"]])
    ruin = sweep["ruin"]
    usable = np.asarray(sweep["feasible"]) & np.isfinite(ruin)
    if not usable.any():
        raise ValidationError("net profit condition fails everywhere in the search box")
    masked = np.where(usable, ruin, np.inf)
    best = int(np.argmin(masked))
    grid_pair = (float(pairs[best, 0]), float(pairs[best, 1]))
    grid_value = float(ruin[best])

    def objective(t):
        t1, t2 = (t[0], t[0]) if mode == "common" else (t[0], t[1])
        r, _, feas = company_ruin_at(
            market, demands, acquisition, reserve, [[t1, t2]], h, decomposition
        )
        return float(r[0]) if feas[0] and np.isfinite(r[0]) else 2.0

    loading = grid_pair[0] if mode == "common" else grid_pair
    value = grid_value
    refined = False
    if refine:
        span = 2.0 * sweep_step
        if mode == "common":
            t0 = [grid_pair[0]]
            bounds = [(max(box[0], t0[0] - span), min(box[1], t0[0] + span))]
        else:
            t0 = list(grid_pair)
            bounds = [(max(box[0], v - span), min(box[1], v + span)) for v in t0]
        res = _refine_minimum(objective, t0, bounds)
        if res.success and np.isfinite(res.fun) and res.fun <= grid_value + 1e-12:
            refined = True
            value = float(res.fun)
            loading = float(res.x[0]) if mode == "common" else (float(res.x[0]), float(res.x[1]))

    t1, t2 = (loading, loading) if mode == "common" else loading
    exposure = company_exposure(
        market,
        shares_from_take_rates(acquisition, float(demands[0].take_rate(t1)), float(demands[1].take_rate(t2))),
        (t1, t2), demands, (reserve,), decomposition=decomposition,
    )
    return LoadingResult(
        criterion="ruin", mode=mode, loading=loading, value=value, reserve=reserve,
        expected_profit=exposure.expected_profit,
        grid_loading=grid_pair[0] if mode == "common" else grid_pair,
        diagnostics={
            "refined": refined,
            "sweep_points": int(pairs.shape[0]),
            "feasible_points": int(np.count_nonzero(usable)),
            "grid_value": grid_value,
        },
    )


def optimize_joint_profit(
    demands,
    intensities,
    mean_severities,
    mode: str = "separate",
    box: tuple = (0.05, 1.0),
) -> LoadingResult:
    """Maximize expected profit over one or two loadings.

    Profit separates across risks, so the separate-mode optimum is the
    pair of single-risk roots; the common mode maximizes the summed
    profit curve numerically on the box.
    """
    d1, d2 = demands
    l1, l2 = intensities
    m1, m2 = mean_severities
    fixed = d1.fixed_cost + d2.fixed_cost
    if mode == "separate":
        r1 = profit_optimal_loading(d1, l1, m1)
        r2 = profit_optimal_loading(d2, l2, m2)
        loading = (r1.loading, r2.loading)
        gross = joint_expected_profit(r1.loading, r2.loading, demands, intensities, mean_severities)
        return LoadingResult(
            criterion="profit", mode=mode, loading=loading, value=gross - fixed,
            expected_profit=gross - fixed, grid_loading=loading,
        )
    if mode != "common":
        raise ValidationError(f"mode must be 'common' or 'separate', got {mode}")

    def negative(t):
        return -joint_expected_profit(t, t, demands, intensities, mean_severities)

    res = sciopt.minimize_scalar(negative, bounds=box, method="bounded", options={"xatol": 1e-8})
    theta = float(res.x)
    return LoadingResult(
        criterion="profit", mode=mode, loading=theta, value=-float(res.fun) - fixed,
        expected_profit=-float(res.fun) - fixed, grid_loading=theta,
    )


def size_scaling_experiment(
    market: MarketSpec,
    acquisition: OrdinaryCopula,
    x0: float,
    theta: float,
    shares: np.ndarray,
    nodes_per_solve: int = 2000,
    decomposition: Decomposition | None = None,
) -> list:
    """Dependence error as company size shrinks.

    For each common market share p the company gets reserve
    x = x0 * size and premium (1 + theta) * size, where size is its
    expected claim cost per unit time.  Each row reports the measured
    |V - V_ind| at x, the a-priori dependence bound, and its small-share
    asymptote both * lambda_both * x0 / (1 + theta).
    """
    if x0 <= 0 or theta <= 0:
        raise ValidationError("size scaling needs positive x0 and theta")
    if decomposition is None:
        decomposition = decompose(market, grid_step=min(
            market.risk1.severity.mean, market.risk2.severity.mean) / 500.0)
    rows = []
    for p in np.asarray(shares, dtype=float):
        share = shares_from_take_rates(acquisition, float(p), float(p))
        lam_t, sev_t, lam_h, sev_h = _company_claim_model(decomposition, share)
        size = lam_t * sev_t.mean
        reserve = x0 * size
        premium = (1.0 + theta) * size
        h = reserve / nodes_per_solve
        cfg = SolverConfig(grid_step=h, x_max=reserve)
        v_dep = float(solve_survival(lam_t, sev_t, premium, cfg).ruin[-1])
        v_ind = float(solve_survival(lam_h, sev_h, premium, cfg).ruin[-1])
        gap = abs(v_dep - v_ind)
        bound = float(independence_gap_bound(
            share.both, decomposition.lambda_both, lam_t, premium, reserve))
        rows.append({
            "share": float(p),
            "both": share.both,
            "intensity": lam_t,
            "reserve": reserve,
            "premium_rate": premium,
            "ruin_dep": v_dep,
            "ruin_ind": v_ind,
            "gap": gap,
            "bound": bound,
            "asymptote": share.both * decomposition.lambda_both * x0 / (1.0 + theta),
            "gap_over_share_sum": gap / (2.0 * float(p)),
        })
    return rows
