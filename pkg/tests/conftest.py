import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from qdiff import QContext, SkewOperator, TruncatedPuiseuxSeries  # noqa: E402

settings.register_profile("qdiff", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("qdiff")


@pytest.fixture(scope="session")
def ctx():
    return QContext()


@pytest.fixture(scope="session")
def sqrt2_ctx():
    return QContext("sqrt2m1")


def lam_at(ctx, alpha):
    return ctx.mp.expjpi(2 * ctx.mp.mpf(alpha))


def kummer(ctx, lam):
    """(sigma - 1) o (lam sigma - ((q - 1) x + 1))."""
    x = TruncatedPuiseuxSeries.monomial(ctx, 1, 1)
    right = SkewOperator(ctx, [-((ctx.q - 1) * x + 1), lam])
    return SkewOperator(ctx, [-1, 1]) * right


small = st.integers(min_value=-4, max_value=4)
gaussian = st.tuples(small, small).map(lambda t: complex(*t))
coeff_lists = st.lists(gaussian, min_size=1, max_size=6)


def series_of(ctx, coeffs, val=0, prec=None):
    return TruncatedPuiseuxSeries(ctx, [ctx.mp.mpc(c) for c in coeffs], val, 1, prec)


def random_product(ctx, rng, max_factors=4, slopes=(-1, 0, 1, 2), max_degree=4):
    """Product of rank-one factors (x^mu sigma - lam) o h with polynomial h, h(0) = 1.

    Exponents get independent uniform arguments and moduli in [1/2, 2], so no two are
    related by an integer power of q within any practical horizon.
    """
    mp = ctx.mp
    op = SkewOperator.scalar(ctx, 1)
    parts = []
    for _ in range(rng.randint(1, max_factors)):
        mu = rng.choice(slopes)
        lam = mp.mpf(2) ** rng.uniform(-1, 1) * lam_at(ctx, rng.random())
        h = [1] + [complex(rng.randint(-2, 2), rng.randint(-2, 2)) / 2 for _ in range(rng.randint(0, max_degree))]
        hs = series_of(ctx, h)
        lead = hs.sigma(1).shift(mu)
        op = op * SkewOperator(ctx, [hs.scalar(-lam), lead])
        parts.append((mu, lam, h))
    return op, parts


def random_operator(ctx, rng, order=None):
    order = order or rng.randint(1, 5)
    cs = []
    for i in range(order + 1):
        if i not in (0, order) and rng.random() < 0.25:
            cs.append(TruncatedPuiseuxSeries.zero(ctx))
            continue
        val = rng.randint(-3, 4)
        n = rng.randint(1, 3)
        coeffs = [complex(rng.randint(1, 4), rng.randint(-3, 3))] + [complex(rng.randint(-3, 3)) for _ in range(n - 1)]
        cs.append(TruncatedPuiseuxSeries(ctx, coeffs, val))
    return SkewOperator(ctx, cs)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
