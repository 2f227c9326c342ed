import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from chordal_forge.core import TruncationWindow
from chordal_forge.errors import DivergenceError, DomainError
from chordal_forge.kernels import Kernel, parse_kernel


def quad(f, a, b):
    return integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=400)[0]


def test_evaluate_examples():
    k = Kernel.exp_tail(1.0)
    assert k.evaluate(0, 0) == 1.0
    assert k.evaluate(1, 1) == pytest.approx(0.1353352832366127, abs=1e-15)
    assert Kernel.cox_log().evaluate(3.7, 0) == 0.0
    with pytest.raises(DomainError):
        k.evaluate(-1, 0)


def test_parameter_validation():
    with pytest.raises(DomainError):
        Kernel.constant(1.5)
    with pytest.raises(DomainError):
        Kernel.exp_tail(0)
    with pytest.raises(DomainError):
        Kernel.beta_multiplicative(1, -1)


def test_marginal_examples():
    assert Kernel.exp_tail(1).marginal(0) == pytest.approx(1.0, abs=1e-15)
    assert Kernel.constant(0.5).marginal(0.3, 2) == 1.0
    assert Kernel.cox_log().marginal(1, 1) == pytest.approx(math.exp(-1), abs=1e-15)
    assert Kernel.cox_log().marginal(1, 1) == pytest.approx(quad(lambda x: 1 - math.exp(-x), 0, 1), abs=1e-12)
    assert Kernel.cox_log().marginal(0, 5) == 0.0
    with pytest.raises(DivergenceError):
        Kernel.cox_log().marginal(1, math.inf)
    with pytest.raises(DivergenceError):
        Kernel.constant(0.2).marginal(1, math.inf)


def test_total_mass():
    assert Kernel.exp_tail(1).total_mass() == 1.0
    assert Kernel.exp_tail(2).total_mass() == 0.25
    assert Kernel.constant(0.3).total_mass(TruncationWindow(1, 2, 1, 3)) == pytest.approx(6 * 0.3)
    with pytest.raises(DivergenceError):
        Kernel.constant(0.3).total_mass()
    with pytest.raises(DivergenceError):
        Kernel.cox_log().total_mass()
    expect = quad(lambda y: quad(lambda x: math.exp(-(x + y)), 0, math.inf), 0, math.inf)
    assert Kernel.exp_tail(1).total_mass() == pytest.approx(expect, rel=1e-10)


@given(st.floats(0.05, 20))
def test_exp_mass_identity(lam):
    assert abs(Kernel.exp_tail(lam).total_mass() * lam ** 2 - 1) < 1e-10


def test_finiteness_reports():
    r = Kernel.exp_tail(1).finiteness_check()
    assert r.condition_i and r.condition_ii and r.condition_iii and r.total_mass == 1.0
    r = Kernel.constant(0.3).finiteness_check()
    assert not r.condition_ii and math.isinf(r.total_mass)
    r = Kernel.cox_log().finiteness_check()
    assert not r.condition_i
    r = Kernel.beta_multiplicative(2, 3).finiteness_check()
    assert r.locally_finite and r.total_mass == 0.25


def test_custom_kernel_numeric_finiteness():
    k = Kernel.custom(lambda x, y: np.exp(-2 * (np.asarray(x) + np.asarray(y))))
    r = k.finiteness_check()
    assert r.locally_finite
    assert r.total_mass == pytest.approx(0.25, rel=1e-8)
    flat = Kernel.custom(lambda x, y: np.full(np.broadcast(x, y).shape, 0.5))
    assert not flat.finiteness_check().condition_i


BUILTINS = [Kernel.exp_tail(0.7), Kernel.exp_tail(3.0), Kernel.constant(0.4), Kernel.cox_log(),
            Kernel.beta_multiplicative(2.0, 0.5)]


def test_closed_form_marginals_match_quadrature():
    rng = np.random.default_rng(3)
    for k in BUILTINS:
        for _ in range(200):
            y = float(rng.uniform(0, 3))
            upper = float(rng.uniform(0.01, 6))
            got = k.marginal(y, upper)
            ref = quad(lambda x: float(k.evaluate(x, y)), 0, upper) if k.variant != "beta" else \
                quad(lambda x: float(k.evaluate(x, y)), 0, min(upper, 1.0))
            assert got == pytest.approx(ref, rel=1e-8, abs=1e-13), (k, y, upper)


@given(st.sampled_from(BUILTINS), st.floats(0, 5), st.floats(0, 5), st.floats(0, 5))
def test_marginal_monotone_in_upper(k, y, u1, u2):
    lo, hi = sorted((u1, u2))
    assert k.marginal(y, lo) <= k.marginal(y, hi) + 1e-15


@given(st.sampled_from(BUILTINS), st.floats(0, 50), st.floats(0, 50))
def test_evaluate_in_unit_interval(k, x, y):
    v = k.evaluate(x, y)
    assert 0.0 <= v <= 1.0


def test_beta_weights_are_beta_distributed():
    from scipy import stats
    k = Kernel.beta_multiplicative(2.5, 0.7)
    rng = np.random.default_rng(0)
    raw = rng.uniform(0, 3.0, 20000)
    assert stats.kstest(k.effective_weights(raw, 3.0, "clique"), stats.beta(2.5, 1).cdf).pvalue > 0.01
    assert stats.kstest(k.effective_weights(raw, 3.0, "node"), stats.beta(0.7, 1).cdf).pvalue > 0.01


def test_parse_kernel_grammar():
    assert parse_kernel("const:p=0.3") == Kernel.constant(0.3)
    assert parse_kernel("exp:lambda=2") == Kernel.exp_tail(2)
    assert parse_kernel("beta:a1=1,a2=2") == Kernel.beta_multiplicative(1, 2)
    assert parse_kernel("cox") == Kernel.cox_log()
    for bad in ("exp", "exp:lam=1", "gauss:s=1", "const:p=x"):
        with pytest.raises(DomainError):
            parse_kernel(bad)
    for k in BUILTINS:
        assert parse_kernel(k.to_spec()) == k
