import numpy as np
import pytest

import lundberg as lb

# Reference market: two gamma(2, 500) risks at intensity 800, logit demand
# with slopes 4.0 / 4.5, fixed cost 64000 per risk, Clayton-coupled claims.

GAMMA_SHAPE = 2.0
GAMMA_SCALE = 500.0
MEAN_CLAIM = GAMMA_SHAPE * GAMMA_SCALE
INTENSITY = 800.0
FIXED_COST = 64_000.0


@pytest.fixture(scope="session")
def gamma_severity():
    return lb.Gamma(GAMMA_SHAPE, GAMMA_SCALE)


@pytest.fixture(scope="session")
def demand1():
    return lb.DemandSpec(beta0=-0.6, beta1=4.0, fixed_cost=FIXED_COST)


@pytest.fixture(scope="session")
def demand2():
    return lb.DemandSpec(beta0=-0.6, beta1=4.5, fixed_cost=FIXED_COST)


@pytest.fixture(scope="session")
def demands(demand1, demand2):
    return (demand1, demand2)


@pytest.fixture(scope="session")
def dep_market(gamma_severity):
    risk = lb.CompoundPoissonSpec(INTENSITY, gamma_severity)
    return lb.MarketSpec(risk, risk, lb.ClaytonLevyCopula(1.0))


@pytest.fixture(scope="session")
def indep_market(gamma_severity):
    risk = lb.CompoundPoissonSpec(INTENSITY, gamma_severity)
    return lb.MarketSpec(risk, risk, None)


@pytest.fixture(scope="session")
def decomposition(dep_market):
    """Reference decomposition on the default uniform 2.0 grid."""
    return lb.decompose(dep_market, grid_step=2.0)


@pytest.fixture(scope="session")
def fine_decomposition(dep_market):
    """Accuracy-tuned decomposition for solver-vs-simulation comparisons."""
    return lb.decompose(dep_market, grid_step=0.0625, joint_step=0.5, joint_tail_mass=1e-8)


@pytest.fixture(scope="session")
def shares_at_04(demands):
    return lb.acquisition_shares(lb.IndependenceCopula(), demands[0], demands[1], 0.4, 0.4)


def pure_premium(intensity, severity):
    return intensity * severity.mean


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
