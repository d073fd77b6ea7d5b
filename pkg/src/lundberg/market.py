"""Market risk models and the market-to-company exposure mapping.

A market risk is a compound Poisson claim process (intensity, severity).
Two dependent risks are coupled through a Clayton Lévy copula acting on
their tail integrals U_i(x) = lambda_i * F̄_i(x); the coupled pair splits
into three independent compound Poisson streams: claims hitting only
risk 1, only risk 2, or both at once.  With

    lambda_both       = C(lambda_1, lambda_2)
    lambda_i_only     = lambda_i - lambda_both
    P(Y_1only >= x)   = (U_1(x) - C(U_1(x), lambda_2)) / lambda_1_only
    P(pair >= (x, y)) = C(U_1(x), U_2(y)) / lambda_both

all recomposition identities hold exactly at the grid nodes, which keeps
the discretized component severities consistent with their inputs and
makes the mean of the company claim distribution match its
independence approximation to rounding error.

A company holding market shares (p1, p2) with joint-policy share
``both`` sees thinned streams and a five-part severity mixture; see
:func:`company_exposure`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .copulas import ClaytonLevyCopula
from .demand import AcquisitionShares, DemandSpec
from .distributions import Gridded, JointGridded, SeverityModel, mixture, sum_distribution
from .errors import ValidationError

__all__ = [
    "CompoundPoissonSpec",
    "MarketSpec",
    "Decomposition",
    "CompanyExposure",
    "aggregate_independent",
    "decompose",
    "company_exposure",
]

_INTENSITY_TOL = 1e-9


@dataclass(frozen=True)
class CompoundPoissonSpec:
    """One market risk: claim intensity and severity distribution."""

    intensity: float
    severity: SeverityModel

    def __post_init__(self):
        if self.intensity < 0:
            raise ValidationError(f"claim intensity must be nonnegative, got {self.intensity}")

    def tail_integral(self, x):
        """U(x) = intensity * P(Y >= x), the jump measure of [x, inf)."""
        return self.intensity * self.severity.sf(x)

    @property
    def mean_claim_rate(self) -> float:
        """Expected claim cost per unit time (the pure premium)."""
        return self.intensity * self.severity.mean


def aggregate_independent(specs: Sequence[CompoundPoissonSpec]) -> CompoundPoissonSpec:
    """Superpose independent compound Poisson risks into one.

    The total intensity is the sum and the severity is the
    intensity-weighted mixture of the component severities.
    """
    specs = list(specs)
    if not specs:
        raise ValidationError("nothing to aggregate")
    total = sum(s.intensity for s in specs)
    if total <= 0:
        raise ValidationError("aggregate intensity must be positive")
    if len(specs) == 1:
        return specs[0]
    weights = [s.intensity / total for s in specs]
    return CompoundPoissonSpec(total, mixture(weights, [s.severity for s in specs]))


@dataclass(frozen=True)
class MarketSpec:
    """Two market risks plus their claim-dependence structure.

    ``levy`` is None for independent risks, otherwise the Clayton Lévy
    copula coupling the two claim processes.
    """

    risk1: CompoundPoissonSpec
    risk2: CompoundPoissonSpec
    levy: ClaytonLevyCopula | None = None

    def __post_init__(self):
        if self.levy is not None and (self.risk1.intensity <= 0 or self.risk2.intensity <= 0):
            raise ValidationError("coupled risks need strictly positive intensities")


class Decomposition:
    """Split of a coupled claim pair into independent component streams.

    Component severities are discretized on a uniform node grid (cells
    carry their mass at the right endpoint).  Exact continuous samplers,
    driven by the copula identities rather than the grid, back the Monte
    Carlo cross-checks.

    Attributes:
        lambda1_only, lambda2_only, lambda_both: component intensities.
        sev1_only, sev2_only: severities of single-risk claims.
        sev1_both, sev2_both: marginal severities of simultaneous claims.
        sev_sum_both: severity of the summed simultaneous claim.
        joint_both: cell masses of the simultaneous pair.
        sev1_gridded, sev2_gridded: the input marginals discretized on
            the same grid (used by the independence approximation).
        degenerate1, degenerate2: True when the matching exclusive
            stream has zero intensity (complete dependence).
    """

    _TABLE_SIZE = 1 << 18

    def __init__(self, market: MarketSpec, grid_step: float, tail_mass: float = 1e-12,
                 extent: float | None = None, chunk: int = 256,
                 joint_step: float | None = None, joint_tail_mass: float | None = None):
        self.market = market
        lam1, lam2 = market.risk1.intensity, market.risk2.intensity
        self.lambda1, self.lambda2 = lam1, lam2
        levy = market.levy
        if levy is None:
            self.lambda_both = 0.0
            self.lambda1_only, self.lambda2_only = lam1, lam2
            self.degenerate1 = self.degenerate2 = False
            self.nodes = None
            self.sev1_only, self.sev2_only = market.risk1.severity, market.risk2.severity
            self.sev1_both = self.sev2_both = self.sev_sum_both = None
            self.joint_both = None
            self.sev1_gridded, self.sev2_gridded = market.risk1.severity, market.risk2.severity
            self._tables = None
            return

        lam_both = float(levy.cdf(lam1, lam2))
        if lam_both > min(lam1, lam2) + _INTENSITY_TOL:
            raise ValidationError("joint intensity exceeds a marginal intensity")
        lam_both = min(lam_both, min(lam1, lam2))
        only1 = lam1 - lam_both
        only2 = lam2 - lam_both
        self.lambda_both = lam_both
        self.degenerate1 = only1 <= _INTENSITY_TOL * lam1
        self.degenerate2 = only2 <= _INTENSITY_TOL * lam2
        self.lambda1_only = 0.0 if self.degenerate1 else only1
        self.lambda2_only = 0.0 if self.degenerate2 else only2

        if extent is None:
            extent = max(
                float(market.risk1.severity.isf(tail_mass)),
                float(market.risk2.severity.isf(tail_mass)),
            )
        n = max(int(np.ceil(extent / grid_step - 1e-9)), 2)
        nodes = grid_step * np.arange(n + 1)
        self.nodes = nodes
        self._chunk = chunk

        u1 = np.asarray(market.risk1.tail_integral(nodes), dtype=float)
        u2 = np.asarray(market.risk2.tail_integral(nodes), dtype=float)
        c1 = np.asarray(levy.cdf(u1, np.full_like(u1, lam2)), dtype=float)
        c2 = np.asarray(levy.cdf(np.full_like(u2, lam1), u2), dtype=float)

        self.sev1_both = Gridded.from_survival(nodes, c1 / lam_both)
        self.sev2_both = Gridded.from_survival(nodes, c2 / lam_both)
        self.sev1_gridded = Gridded.from_survival(nodes, u1 / lam1)
        self.sev2_gridded = Gridded.from_survival(nodes, u2 / lam2)
        if self.degenerate1:
            self.sev1_only = self.sev1_gridded
        else:
            self.sev1_only = Gridded.from_survival(nodes, (u1 - c1) / self.lambda1_only)
        if self.degenerate2:
            self.sev2_only = self.sev2_gridded
        else:
            self.sev2_only = Gridded.from_survival(nodes, (u2 - c2) / self.lambda2_only)

        # Joint cell masses from rectangle increments of the composed tail
        # integral; the final column/row edge is closed at zero so residual
        # mass beyond the grid folds into the last cell, keeping marginal
        # row/column sums exactly equal to the one-dimensional masses.
        # The lattice may use its own (coarser) step and a shorter tail,
        # since the summed severity carries a small mixture weight; with
        # the defaults it shares the component grid and the consistency
        # identities are exact.
        joint_step = grid_step if joint_step is None else joint_step
        jtm = tail_mass if joint_tail_mass is None else joint_tail_mass
        j_extent = max(
            float(market.risk1.severity.isf(jtm)),
            float(market.risk2.severity.isf(jtm)),
        )
        nj = max(int(np.ceil(j_extent / joint_step - 1e-9)), 2)
        jnodes = joint_step * np.arange(nj + 1)
        e1 = np.asarray(market.risk1.tail_integral(jnodes), dtype=float)
        e2 = np.asarray(market.risk2.tail_integral(jnodes), dtype=float)
        e1[-1] = 0.0
        e2[-1] = 0.0
        harmonic = levy.omega == 1.0

        def row_masses(a: int, b: int) -> np.ndarray:
            rows = e1[a : b + 1][:, None]
            if harmonic:
                with np.errstate(invalid="ignore", divide="ignore"):
                    block = np.where(rows + e2 > 0.0, rows * e2 / (rows + e2), 0.0)
            else:
                block = np.asarray(levy.cdf(rows, e2[None, :]), dtype=float)
            rect = np.diff(np.diff(block, axis=0), axis=1) / lam_both
            return np.maximum(rect, 0.0)

        self.joint_both = JointGridded(jnodes, row_masses)
        self.sev_sum_both = sum_distribution(self.joint_both, chunk=chunk)
        self._tables = None

    # ------------------------------------------------------------------
    # Exact continuous samplers (independent of the grid discretization)
    # ------------------------------------------------------------------

    def _inverse_tables(self):
        """Tabulated inverse transforms on a fine abscissa, built lazily."""
        if self.market.levy is None:
            raise ValidationError("independent markets have no simultaneous-claim samplers")
        if self._tables is not None:
            return self._tables
        market, levy = self.market, self.market.levy
        lam1, lam2 = self.lambda1, self.lambda2
        lam_both = self.lambda_both
        extent = max(
            float(market.risk1.severity.isf(1e-14)),
            float(market.risk2.severity.isf(1e-14)),
        )
        xs = np.linspace(0.0, extent, self._TABLE_SIZE)
        u1 = np.asarray(market.risk1.tail_integral(xs), dtype=float)
        u2 = np.asarray(market.risk2.tail_integral(xs), dtype=float)
        c1 = np.asarray(levy.cdf(u1, np.full_like(u1, lam2)), dtype=float)
        c2 = np.asarray(levy.cdf(np.full_like(u2, lam1), u2), dtype=float)
        tables = {
            "xs": xs,
            "u1": u1[::-1].copy(), "u2": u2[::-1].copy(),
            "both1": (c1 / lam_both)[::-1].copy(),
            "both2": (c2 / lam_both)[::-1].copy(),
        }
        if not self.degenerate1:
            tables["only1"] = ((u1 - c1) / self.lambda1_only)[::-1].copy()
        if not self.degenerate2:
            tables["only2"] = ((u2 - c2) / self.lambda2_only)[::-1].copy()
        self._tables = tables
        return tables

    def _interp_inverse(self, key: str, w: np.ndarray) -> np.ndarray:
        t = self._inverse_tables()
        return np.interp(w, t[key], t["xs"][::-1])

    def sample_only1(self, rng, size):
        """Severities of claims hitting only risk 1."""
        if self.degenerate1:
            raise ValidationError("risk 1 has no exclusive claims (complete dependence)")
        return self._interp_inverse("only1", rng.random(size))

    def sample_only2(self, rng, size):
        if self.degenerate2:
            raise ValidationError("risk 2 has no exclusive claims (complete dependence)")
        return self._interp_inverse("only2", rng.random(size))

    def sample_both1(self, rng, size):
        """First-coordinate severities of simultaneous claims."""
        return self._interp_inverse("both1", rng.random(size))

    def sample_both2(self, rng, size):
        return self._interp_inverse("both2", rng.random(size))

    def sample_pair_both(self, rng, size):
        """Simultaneous claim pairs, by conditional inversion of the copula.

        The first coordinate is drawn from its marginal through the tail
        integral; the second from the closed-form conditional of the
        Clayton family.  No gridding is involved, so this sampler is a
        route independent of the discretized joint masses.
        """
        omega = self.market.levy.omega
        lam, lam1, lam2 = self.lambda_both, self.lambda1, self.lambda2
        w1 = 1.0 - rng.random(size)
        w2 = rng.random(size)
        q = lam * w1
        with np.errstate(divide="ignore", over="ignore"):
            s1 = q * np.power(1.0 - np.power(q / lam2, omega), -1.0 / omega)
        s1 = np.minimum(s1, lam1)
        x1 = self._interp_inverse("u1", s1)
        k = q * np.power(w2, 1.0 / (1.0 + omega))
        with np.errstate(divide="ignore", over="ignore"):
            v = k * np.power(1.0 - np.power(k / s1, omega), -1.0 / omega)
        v = np.minimum(v, lam2)
        x2 = self._interp_inverse("u2", v)
        return x1, x2


def decompose(market: MarketSpec, grid_step: float, tail_mass: float = 1e-12,
              extent: float | None = None, joint_step: float | None = None,
              joint_tail_mass: float | None = None) -> Decomposition:
    """Decompose a two-risk market into independent component streams.

    ``grid_step`` sets the severity discretization cell width (by default
    solvers reuse their own reserve step here); ``tail_mass`` fixes how
    much marginal probability may fall beyond the grid before folding.
    ``joint_step``/``joint_tail_mass`` optionally coarsen the quadratic-
    cost lattice of the simultaneous pair; with the defaults the lattice
    shares the component grid and all cross-consistency identities are
    exact.  Independent markets (no Lévy copula) decompose trivially with
    a zero simultaneous intensity.
    """
    return Decomposition(market, grid_step=grid_step, tail_mass=tail_mass, extent=extent,
                         joint_step=joint_step, joint_tail_mass=joint_tail_mass)


@dataclass(frozen=True)
class CompanyExposure:
    """Company-level claim process implied by market shares.

    ``intensity``/``severity`` describe the company claim stream with the
    simultaneous-claim dependence kept; ``intensity_indep``/
    ``severity_indep`` are the marginal-only approximation that prices
    the same mean claim rate but ignores joint jumps.
    """

    intensity: float
    severity: SeverityModel
    premium_rate: float
    reserve: float
    intensity_indep: float
    severity_indep: SeverityModel
    shares: AcquisitionShares
    lambda_both: float
    loadings: tuple
    market: MarketSpec

    @property
    def mean_claim_rate(self) -> float:
        return self.intensity * self.severity.mean

    @property
    def margin(self) -> float:
        """Premium rate in excess of the expected claim rate."""
        return self.premium_rate - self.mean_claim_rate

    @property
    def expected_profit(self) -> float:
        """Expected profit per unit time, net of fixed costs."""
        return self.premium_rate - self.mean_claim_rate

    def simulate(self, config):
        from .simulate import simulate_ruin

        return simulate_ruin(self.intensity, self.severity, self.premium_rate, self.reserve, config)


def _company_claim_model(decomp: Decomposition, shares: AcquisitionShares):
    """Thinned intensity and severity mixtures for a share profile.

    Returns (intensity, severity, intensity_indep, severity_indep).
    """
    lam1, lam2 = decomp.lambda1, decomp.lambda2
    lam_b = decomp.lambda_both
    p1, p2, both = shares.p1, shares.p2, shares.both
    lam_tilde = p1 * lam1 + p2 * lam2 - both * lam_b
    if lam_tilde <= 0:
        raise ValidationError("company claim intensity must be positive; increase shares")
    lam_hat = p1 * lam1 + p2 * lam2
    if lam_b == 0.0:
        sev_hat = mixture(
            [p1 * lam1 / lam_hat, p2 * lam2 / lam_hat],
            [decomp.market.risk1.severity, decomp.market.risk2.severity],
        )
        return lam_tilde, sev_hat, lam_hat, sev_hat
    weights = np.array([
        p1 * decomp.lambda1_only,
        p2 * decomp.lambda2_only,
        shares.only1 * lam_b,
        shares.only2 * lam_b,
        both * lam_b,
    ]) / lam_tilde
    components = [
        decomp.sev1_only,
        decomp.sev2_only,
        decomp.sev1_both,
        decomp.sev2_both,
        decomp.sev_sum_both,
    ]
    sev_tilde = mixture(weights, components)
    sev_hat = mixture(
        [p1 * lam1 / lam_hat, p2 * lam2 / lam_hat],
        [decomp.sev1_gridded, decomp.sev2_gridded],
    )
    return lam_tilde, sev_tilde, lam_hat, sev_hat


def company_exposure(
    market: MarketSpec,
    shares: AcquisitionShares,
    loadings: tuple,
    demands: tuple[DemandSpec, DemandSpec],
    reserves: tuple,
    decomposition: Decomposition | None = None,
    grid_step: float = None,
) -> CompanyExposure:
    """Build the company claim model, premium rate, and reserve.

    The claim stream thins the market decomposition by the acquisition
    shares: intensity p1*lambda1 + p2*lambda2 - both*lambda_both, and a
    five-part severity mixture over exclusive, one-sided simultaneous,
    and summed simultaneous claims.  The premium rate adds the two
    per-risk demand premiums at the given loadings; the reserve adds the
    two per-risk reserves.  The marginal-only approximation (hat model)
    is carried alongside; both have the same mean claim rate.
    """
    if decomposition is None:
        if grid_step is None:
            raise ValidationError("company_exposure needs a decomposition or a grid step")
        decomposition = decompose(market, grid_step)
    theta1, theta2 = loadings
    d1, d2 = demands
    lam_tilde, sev_tilde, lam_hat, sev_hat = _company_claim_model(decomposition, shares)
    premium = float(
        d1.premium_rate(market.risk1.intensity, market.risk1.severity.mean, theta1)
        + d2.premium_rate(market.risk2.intensity, market.risk2.severity.mean, theta2)
    )
    reserve = float(np.sum(reserves))
    if reserve < 0:
        raise ValidationError(f"reserve must be nonnegative, got {reserve}")
    return CompanyExposure(
        intensity=lam_tilde,
        severity=sev_tilde,
        premium_rate=premium,
        reserve=reserve,
        intensity_indep=lam_hat,
        severity_indep=sev_hat,
        shares=shares,
        lambda_both=decomposition.lambda_both,
        loadings=(float(theta1), float(theta2)),
        market=market,
    )
