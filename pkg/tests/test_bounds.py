import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from zeroloss.bounds import (
    frac_bound,
    frac_min_n,
    log_vc_bound,
    quartile_eps,
    vc_bound,
    vc_min_n,
    volume_ratio,
)
from zeroloss.errors import PreconditionError


def _vc_oracle(d, eps, delta):
    """Linear scan from the bound's maximiser."""
    n = max(1, math.floor(2 * d / eps))
    while 2 * (2 * math.e * n / d) ** d * math.exp(-eps * n / 2) > delta:
        n += 1
    return n


def test_vc_values():
    assert 0.9 <= vc_bound(3, 410, 0.1) <= 1.1
    assert 0.2 <= vc_bound(65, 8592, 0.1) <= 0.3


@pytest.mark.parametrize("d,eps,delta,target,tol", [(3, 0.1, 1.0, 410, 2), (65, 0.1, 0.25, 8592, 5)])
def test_vc_min_n_reference(d, eps, delta, target, tol):
    assert abs(vc_min_n(d, eps, delta) - target) <= tol


@pytest.mark.parametrize("d,eps,delta", [(1, 0.2, 0.5), (2, 0.1, 0.25), (3, 0.1, 1.0), (10, 0.05, 0.01)])
def test_vc_min_n_oracle(d, eps, delta):
    assert vc_min_n(d, eps, delta) == _vc_oracle(d, eps, delta)


def test_vc_d2_computed():
    assert vc_min_n(2, 0.1, 0.25) == 312


def test_vc_min_n_postcondition():
    n = vc_min_n(65, 0.1, 0.25)
    assert vc_bound(65, n, 0.1) <= 0.25 < vc_bound(65, n - 1, 0.1)


def test_vc_log_space_large():
    assert math.isfinite(log_vc_bound(10_000, 10**9, 0.1))
    assert vc_bound(10_000, 10**5, 0.01) == math.inf


def test_frac_examples():
    assert frac_bound(0, 10, 0.3) == 0
    assert frac_bound(98, 60, 0.1) == pytest.approx(98 * math.exp(-6))
    assert frac_bound(98, 60, 0.1) <= 0.25


def test_frac_min_n():
    assert frac_min_n(98, 0.1, 0.25, "exponential") == 60
    assert frac_min_n(98, 0.1, 0.25, "power") == math.ceil(math.log(0.25 / 98) / math.log(0.9)) == 57
    assert frac_min_n(0.2, 0.1, 0.25) == 0


@given(
    st.floats(0.3, 1e4), st.floats(0.01, 0.9), st.floats(1e-4, 0.25), st.sampled_from(["power", "exponential"])
)
def test_frac_min_n_postcondition(R, eps, delta, form):
    n = frac_min_n(R, eps, delta, form)
    assert frac_bound(R, n, eps, form) <= delta
    if n > 0:
        assert frac_bound(R, n - 1, eps, form) > delta


@given(st.floats(0, 1e3), st.integers(0, 10**6), st.floats(0, 1))
def test_power_below_exponential(R, n, eps):
    assert frac_bound(R, n, eps, "power") <= frac_bound(R, n, eps, "exponential") * (1 + 1e-12)


@given(st.floats(0.1, 1e3), st.integers(1, 10**5), st.floats(0.001, 1))
def test_doubling_halves_eps(R, n, eps):
    assert frac_bound(R, 2 * n, eps / 2) == pytest.approx(frac_bound(R, n, eps), rel=1e-12)


def test_quartile():
    tight, loose = quartile_eps(98, 60, 0.25)
    assert loose == pytest.approx(math.log(392) / 60)
    assert tight <= loose
    assert frac_bound(98, 60, tight, "power") == pytest.approx(0.25)
    t, l = quartile_eps(98, 10**12)
    assert t < 1e-10 and l < 1e-10


def test_volume_ratio():
    assert volume_ratio(360, 7.2) == pytest.approx(49)
    assert volume_ratio(352.8 + 3.6, 3.6) == pytest.approx(98)
    with pytest.raises(PreconditionError):
        volume_ratio(1, 0)


def test_validation():
    with pytest.raises(PreconditionError):
        vc_min_n(3, 0.0, 0.5)
    with pytest.raises(PreconditionError):
        frac_bound(-1, 3, 0.1)
    with pytest.raises(PreconditionError):
        frac_bound(1, 3, 0.1, form="linear")
