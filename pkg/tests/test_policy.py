import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import assignments, oracle_pmf
from netestimands.errors import ZeroProbabilityEvent
from netestimands.graph import biclique
from netestimands.policy import (
    AllOrNone,
    CompletelyRandomized,
    Conditioned,
    HeterogeneousBernoulli,
    HomogeneousBernoulli,
    bernoulli_by_degree,
    substream,
)


def families(n):
    ps = tuple(np.linspace(0.1, 0.9, n).round(3))
    yield HomogeneousBernoulli(n, 0.3), ("bern", 0.3)
    yield HeterogeneousBernoulli(ps), ("hbern", ps)
    for m in range(n + 1):
        yield CompletelyRandomized(n, m), ("cr", m)
    yield AllOrNone(n, 0.3), ("aon", 0.3)


@pytest.mark.parametrize("n", range(1, 11))
def test_pmf_normalized_every_family(n):
    for pi, _ in families(n):
        assert abs(pi.pmf_vector().sum() - 1.0) < 1e-12


@pytest.mark.parametrize("n", [1, 3, 5])
def test_pmf_matches_oracle(n):
    zs = assignments(n)
    for pi, (kind, param) in families(n):
        oracle = np.array([oracle_pmf(kind, n, param)(z) for z in zs])
        assert np.allclose(pi.pmf_vector(), oracle, rtol=0, atol=1e-15)


def test_pmf_examples():
    assert HomogeneousBernoulli(5, 0.5).pmf(0b10110) == pytest.approx(1 / 32, abs=1e-15)
    cr = CompletelyRandomized(5, 2)
    assert cr.pmf(0b00011) == pytest.approx(0.1, abs=1e-15)
    assert cr.pmf(0b00111) == 0.0
    aon = AllOrNone(5, 0.3)
    assert aon.pmf(0b11111) == pytest.approx(0.3)
    assert aon.pmf(0) == pytest.approx(0.7)
    assert aon.pmf(0b00100) == 0.0


@pytest.mark.parametrize(
    "make",
    [lambda: HomogeneousBernoulli(3, 1.5), lambda: HeterogeneousBernoulli((0.2, -0.1)), lambda: CompletelyRandomized(3, 4),
     lambda: AllOrNone(3, 2.0), lambda: CompletelyRandomized(3, -1)],
)
def test_parameters_validated(make):
    with pytest.raises(ValueError):
        make()


def test_degenerate_samplers():
    rng = np.random.default_rng(0)
    assert AllOrNone(4, 1.0).sample_many(rng, 50).all()
    assert not HomogeneousBernoulli(4, 0.0).sample_many(rng, 50).any()
    z = CompletelyRandomized(6, 2).sample_many(rng, 500)
    assert (z.sum(axis=1) == 2).all()
    z = AllOrNone(6, 0.5).sample_many(rng, 500)
    assert set(z.sum(axis=1).tolist()) <= {0, 6}


def test_sample_is_seeded():
    pi = HomogeneousBernoulli(8, 0.4)
    assert np.array_equal(pi.sample(7), pi.sample(7))
    s = substream(3, 1).random(4)
    assert np.array_equal(s, substream(3, 1).random(4))
    assert not np.array_equal(s, substream(3, 2).random(4))


@pytest.mark.parametrize("pi", [
    HomogeneousBernoulli(4, 0.3),
    HeterogeneousBernoulli((0.1, 0.5, 0.8, 0.35)),
    CompletelyRandomized(4, 2),
    AllOrNone(4, 0.25),
    CompletelyRandomized(4, 3).condition({0: 1}),
], ids=lambda p: type(p).__name__)
def test_empirical_frequencies_within_four_se(pi):
    size = 100_000
    z = pi.sample_many(np.random.default_rng(2024), size)
    masks = (z.astype(np.int64) << np.arange(4)).sum(axis=1)
    freq = np.bincount(masks, minlength=16) / size
    p = pi.pmf_vector()
    se = np.sqrt(p * (1 - p) / size)
    assert np.all(np.abs(freq - p) <= 4 * se + 1e-12)


def test_condition_bernoulli_is_bernoulli_on_rest():
    pi = HomogeneousBernoulli(5, 0.3).condition({0: 1})
    rest = pi.rest
    assert isinstance(rest, HomogeneousBernoulli) and rest.n == 4 and rest.p == 0.3
    assert pi.free_units == (1, 2, 3, 4)


def test_condition_cr_gives_smaller_cr():
    pi = CompletelyRandomized(5, 2).condition({0: 1})
    assert isinstance(pi.rest, CompletelyRandomized)
    assert (pi.rest.n, pi.rest.m) == (4, 1)
    assert pi.probability == pytest.approx(0.4)


def test_condition_all_or_none_is_point_mass():
    pi = AllOrNone(5, 0.4).condition({0: 1})
    assert pi.pmf(0b11111) == pytest.approx(1.0)
    assert pi.rest.pmf_vector()[-1] == pytest.approx(1.0)


@pytest.mark.parametrize("pi,fixed", [
    (HomogeneousBernoulli(3, 0.0), {0: 1}),
    (CompletelyRandomized(3, 1), {0: 1, 1: 1}),
    (AllOrNone(3, 0.5), {0: 1, 1: 0}),
])
def test_zero_probability_condition(pi, fixed):
    with pytest.raises(ZeroProbabilityEvent):
        pi.condition(fixed)


def _bayes_check(pi, n, fixed):
    cond = pi.condition(fixed)
    p = pi.pmf_vector()
    event = np.array([all(((k >> i) & 1) == v for i, v in fixed.items()) for k in range(1 << n)])
    prob = p[event].sum()
    expected = np.where(event, p / prob, 0.0)
    assert np.allclose(cond.pmf_vector(), expected, rtol=0, atol=1e-13)
    assert cond.event_probability({}) == pytest.approx(1.0)
    assert pi.event_probability(fixed) == pytest.approx(prob, abs=1e-13)


@pytest.mark.parametrize("n", [2, 5, 8])
def test_condition_is_bayes_ratio(n):
    for pi, _ in families(n):
        for fixed in ({0: 1}, {n - 1: 0}, {0: 0, n - 1: 1} if n > 1 else {0: 0}):
            if pi.event_probability(fixed) > 0:
                _bayes_check(pi, n, fixed)


@given(st.integers(2, 7), st.data())
@settings(max_examples=40, deadline=None)
def test_condition_bayes_property(n, data):
    ps = tuple(data.draw(st.lists(st.floats(0.05, 0.95), min_size=n, max_size=n)))
    m = data.draw(st.integers(1, n - 1))
    units = data.draw(st.lists(st.integers(0, n - 1), unique=True, min_size=1, max_size=n - 1))
    vals = data.draw(st.lists(st.integers(0, 1), min_size=len(units), max_size=len(units)))
    fixed = dict(zip(units, vals))
    for pi in (HeterogeneousBernoulli(ps), CompletelyRandomized(n, m), AllOrNone(n, 0.6)):
        if pi.event_probability(fixed) > 0:
            _bayes_check(pi, n, fixed)


def test_repeated_conditioning_merges():
    pi = CompletelyRandomized(5, 2)
    twice = pi.condition({0: 1}).condition({1: 0})
    once = pi.condition({0: 1, 1: 0})
    assert np.allclose(twice.pmf_vector(), once.pmf_vector(), atol=1e-15)
    with pytest.raises(ZeroProbabilityEvent):
        pi.condition({0: 1}).condition({0: 0})


def test_marginals():
    assert np.allclose(CompletelyRandomized(5, 2).marginals(), 0.4)
    assert np.allclose(AllOrNone(3, 0.2).marginals(), 0.2)
    pi = CompletelyRandomized(4, 2).condition({0: 1})
    assert pi.marginals().tolist() == pytest.approx([1.0, 1 / 3, 1 / 3, 1 / 3])


def test_bernoulli_by_degree():
    g = biclique(2, 3)
    pi = bernoulli_by_degree(g, {3: 0.2, 2: 0.7})
    assert pi.p == (0.2, 0.2, 0.7, 0.7, 0.7)
    with pytest.raises(ValueError):
        bernoulli_by_degree(g, {3: 0.2})


def test_restrict_product_only():
    pi = HeterogeneousBernoulli((0.1, 0.2, 0.3))
    assert pi.restrict([2, 0]).p == (0.3, 0.1)
    with pytest.raises(TypeError):
        CompletelyRandomized(3, 1).restrict([0])


def test_cr_support_size():
    n, m = 6, 3
    assert np.count_nonzero(CompletelyRandomized(n, m).pmf_vector()) == math.comb(n, m)
