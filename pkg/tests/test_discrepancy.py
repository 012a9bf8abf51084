import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowdisc.discrepancy import (BudgetExhausted, IntegerMultiset, disc,
                                 disc_highprec, random_search)

multisets = st.integers(min_value=2, max_value=32).flatmap(
    lambda m: st.lists(st.integers(min_value=0, max_value=4 * m),
                       min_size=1, max_size=12).map(
        lambda els: IntegerMultiset(els, m)))


def test_trivial_set_is_zero():
    for m in (2, 3, 10, 97):
        assert disc(IntegerMultiset(range(m), m)).value <= 1e-12


def test_singleton_has_full_discrepancy():
    assert abs(disc(IntegerMultiset([3], 7)).value - 1.0) < 1e-12


def test_pair_hand_value():
    # {0, 1} mod 2: (1/2)|1 + e^{i pi}| = 0;  {0, 0} mod 2: 1
    assert disc(IntegerMultiset([0, 1], 2)).value <= 1e-12
    assert abs(disc(IntegerMultiset([0, 0], 2)).value - 1.0) < 1e-12


@settings(max_examples=60, deadline=None)
@given(multisets)
def test_reduction_invariance(Z):
    assert abs(disc(Z).value - disc(Z.reduce()).value) < 1e-9


@settings(max_examples=60, deadline=None)
@given(multisets)
def test_negation_invariance(Z):
    assert abs(disc(Z).value - disc(Z.negate()).value) < 1e-9


@settings(max_examples=60, deadline=None)
@given(multisets, st.integers(min_value=1, max_value=4))
def test_duplication_invariance(Z, k):
    assert abs(disc(Z).value - disc(Z.duplicate(k)).value) < 1e-9


@settings(max_examples=40, deadline=None)
@given(multisets)
def test_value_in_unit_interval(Z):
    v = disc(Z).value
    assert 0.0 <= v <= 1.0


@settings(max_examples=30, deadline=None)
@given(multisets)
def test_argmax_attains_value(Z):
    cert = disc(Z)
    k, m, n = cert.argmax_k, Z.m, Z.cardinality
    acc = sum(math.e ** 0j * f * complex(math.cos(2 * math.pi * k * j / m),
                                         math.sin(2 * math.pi * k * j / m))
              for j, f in enumerate(Z.freq))
    assert abs(abs(acc) / n - cert.value) < 1e-6


def test_highprec_cross_check_random():
    import random
    rng = random.Random(5)
    for _ in range(50):
        m = rng.randrange(2, 64)
        els = [rng.randrange(0, m) for _ in range(rng.randrange(1, 10))]
        Z = IntegerMultiset(els, m)
        assert abs(disc(Z).value - float(disc_highprec(Z))) < 1e-9


def test_digest_sensitive_to_elements():
    a = IntegerMultiset([1, 2, 3], 7)
    b = IntegerMultiset([1, 2, 4], 7)
    assert a.digest() != b.digest()
    assert a.digest() == IntegerMultiset([3, 2, 1], 7).digest()


def test_random_search_success_and_exhaustion():
    Z = random_search(997, 64, 0.9, seed=1, budget=50)
    assert disc(Z).value <= 0.9
    with pytest.raises(BudgetExhausted) as exc:
        random_search(97, 2, 1e-6, seed=1, budget=5)
    assert exc.value.best is not None
    assert exc.value.best_value > 1e-6
