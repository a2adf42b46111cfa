import numpy as np
import pytest

from trapwalk.distributions import Custom, Deterministic, Exponential, PowerLawZeta


def zoo():
    """One instance of every variant, plus a few parameter extremes."""
    return [
        Exponential(0.3), Exponential(0.5), Exponential(0.9),
        PowerLawZeta(1.2), PowerLawZeta(1.5), PowerLawZeta(2.0), PowerLawZeta(2.5),
        PowerLawZeta(3.5), PowerLawZeta(6.0),
        Deterministic(0), Deterministic(1), Deterministic(3),
        Custom(((0, 0.2), (2, 0.5), (5, 0.3))),
    ]


@pytest.fixture(params=zoo(), ids=lambda d: d.spec)
def any_dist(request):
    return request.param


def direct_sigma2(d, n):
    """sigma2 by the plain O(n^2) recurrence, summed in math.fsum."""
    import math
    p = d.pmf_array(n)
    cdf = np.cumsum(p)
    s = [0.0]
    for t in range(n):
        s.append(math.fsum([cdf[t]] + [p[k] * s[t - k] for k in range(t + 1)]))
    return np.array(s)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
