import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from scanbench.bestofk import (
    DiscreteDistribution,
    best_of_k_density,
    best_of_k_with_rejection,
)


def enumerate_best_of_k(probs, gains, n):
    """Exact winner distribution by enumerating all candidate tuples.

    The winner of a tuple is the first candidate achieving the maximum
    gain; over i.i.d. draws that tie-break matches any gain-blind rule.
    """
    out = np.zeros(len(probs))
    for combo in itertools.product(range(len(probs)), repeat=n):
        mass = math.prod(probs[i] for i in combo)
        if mass == 0.0:
            continue
        combo_gains = [gains[i] for i in combo]
        winner = combo[combo_gains.index(max(combo_gains))]
        out[winner] += mass
    return out


def enumerate_with_rejection(probs, gains, fallback_by_cell, n):
    """Enumeration oracle where gain -inf candidates are discarded.

    When every candidate is rejected the tuple's mass goes to the
    fallback distribution over the accepted cells.
    """
    out = {cell: 0.0 for cell in fallback_by_cell}
    for combo in itertools.product(range(len(probs)), repeat=n):
        mass = math.prod(probs[i] for i in combo)
        if mass == 0.0:
            continue
        combo_gains = [gains[i] for i in combo]
        best = max(combo_gains)
        if best == -math.inf:
            for cell, fp in fallback_by_cell.items():
                out[cell] += mass * fp
        else:
            out[combo[combo_gains.index(best)]] += mass
    return out


def random_distribution(rng, size, tie_alphabet=None):
    probs = rng.random(size) + 0.05
    probs /= probs.sum()
    if tie_alphabet is None:
        gains = rng.normal(size=size)
    else:
        gains = rng.choice(tie_alphabet, size=size).astype(float)
    return DiscreteDistribution(np.arange(size), probs, gains)


class TestDiscreteDistribution:
    def test_validates_unit_mass(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([0, 1], [0.5, 0.6], [0.0, 1.0])

    def test_validates_unique_support(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([0, 0], [0.5, 0.5], [0.0, 1.0])

    def test_validates_alignment(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([0, 1], [1.0], [0.0, 1.0])

    def test_rejects_negative_probabilities(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([0, 1], [1.2, -0.2], [0.0, 1.0])

    def test_rejects_nan_gains(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([0, 1], [0.5, 0.5], [0.0, math.nan])

    def test_prob_of(self):
        d = DiscreteDistribution([7, 9], [0.25, 0.75], [0.0, 1.0])
        assert d.prob_of(9) == 0.75
        with pytest.raises(KeyError):
            d.prob_of(8)

    def test_arrays_read_only(self):
        d = DiscreteDistribution([0, 1], [0.5, 0.5], [0.0, 1.0])
        with pytest.raises(ValueError):
            d.probabilities[0] = 1.0


class TestAgainstEnumeration:
    def test_unique_gains(self):
        rng = np.random.default_rng(17)
        for _ in range(40):
            size = int(rng.integers(2, 7))
            n = int(rng.integers(1, 5))
            d = random_distribution(rng, size)
            got = best_of_k_density(d, n)
            want = enumerate_best_of_k(d.probabilities, d.gains, n)
            assert np.max(np.abs(got.probabilities - want)) < 1e-12

    def test_tied_gains(self):
        rng = np.random.default_rng(19)
        for _ in range(40):
            size = int(rng.integers(2, 7))
            n = int(rng.integers(1, 5))
            d = random_distribution(rng, size, tie_alphabet=[0.0, 1.0, 2.0])
            got = best_of_k_density(d, n)
            want = enumerate_best_of_k(d.probabilities, d.gains, n)
            assert np.max(np.abs(got.probabilities - want)) < 1e-12

    def test_n_one_returns_the_proposal(self):
        rng = np.random.default_rng(23)
        d = random_distribution(rng, 5)
        got = best_of_k_density(d, 1)
        assert np.max(np.abs(got.probabilities - d.probabilities)) < 1e-15

    def test_output_is_a_distribution(self):
        rng = np.random.default_rng(29)
        for n in (1, 2, 5, 20):
            d = random_distribution(rng, 6, tie_alphabet=[0.0, 1.0])
            out = best_of_k_density(d, n)
            assert abs(out.probabilities.sum() - 1.0) <= 1e-12
            assert (out.probabilities >= 0).all()


class TestRejection:
    def test_against_enumeration(self):
        rng = np.random.default_rng(31)
        for _ in range(40):
            size = int(rng.integers(3, 7))
            n = int(rng.integers(1, 5))
            gains = rng.normal(size=size)
            n_rejected = int(rng.integers(1, size - 1))
            gains[:n_rejected] = -math.inf
            probs = rng.random(size) + 0.05
            probs /= probs.sum()
            d = DiscreteDistribution(np.arange(size), probs, gains)

            accepted = np.arange(n_rejected, size)
            fallback_probs = rng.random(len(accepted)) + 0.05
            fallback_probs /= fallback_probs.sum()
            fallback = DiscreteDistribution(
                accepted, fallback_probs, np.zeros(len(accepted))
            )

            got = best_of_k_with_rejection(d, n, fallback)
            want = enumerate_with_rejection(
                probs, gains, dict(zip(accepted.tolist(), fallback_probs)), n
            )
            assert list(got.support) == accepted.tolist()
            for cell, p in zip(got.support, got.probabilities):
                assert abs(p - want[int(cell)]) < 1e-12

    def test_no_rejection_delegates(self):
        rng = np.random.default_rng(37)
        d = random_distribution(rng, 5)
        fallback = DiscreteDistribution(
            d.support, np.full(5, 0.2), np.zeros(5)
        )
        got = best_of_k_with_rejection(d, 3, fallback)
        want = best_of_k_density(d, 3)
        assert np.array_equal(got.probabilities, want.probabilities)

    def test_fallback_support_must_match(self):
        d = DiscreteDistribution(
            [0, 1, 2], [0.2, 0.3, 0.5], [-math.inf, 0.0, 1.0]
        )
        bad = DiscreteDistribution([0, 1], [0.5, 0.5], [0.0, 0.0])
        with pytest.raises(ValueError, match="fallback support"):
            best_of_k_with_rejection(d, 2, bad)

    def test_everything_rejected_raises(self):
        d = DiscreteDistribution(
            [0, 1], [0.5, 0.5], [-math.inf, -math.inf]
        )
        fb = DiscreteDistribution([0], [1.0], [0.0])
        with pytest.raises(ValueError, match="acceptance"):
            best_of_k_with_rejection(d, 2, fb)

    def test_positive_infinity_rejected(self):
        d = DiscreteDistribution([0, 1], [0.5, 0.5], [math.inf, 0.0])
        fb = DiscreteDistribution([0, 1], [0.5, 0.5], [0.0, 0.0])
        with pytest.raises(ValueError):
            best_of_k_with_rejection(d, 2, fb)

    def test_density_entry_point_requires_finite_gains(self):
        d = DiscreteDistribution([0, 1], [0.5, 0.5], [-math.inf, 0.0])
        with pytest.raises(ValueError):
            best_of_k_density(d, 2)


class TestStructuralProperties:
    def test_top_cell_mass_grows_with_n(self):
        rng = np.random.default_rng(41)
        d = random_distribution(rng, 6)
        top = int(np.argmax(d.gains))
        masses = [
            best_of_k_density(d, n).probabilities[top] for n in (1, 2, 4, 8, 16)
        ]
        assert all(b > a for a, b in zip(masses, masses[1:]))
        # and it converges toward certainty for the unique best cell
        assert best_of_k_density(d, 200).probabilities[top] > 0.999

    def test_gain_relabeling_changes_nothing(self):
        rng = np.random.default_rng(43)
        for _ in range(10):
            d = random_distribution(rng, 6, tie_alphabet=[0.0, 1.5, 4.0])
            ranks = {g: r for r, g in enumerate(sorted(set(d.gains.tolist())))}
            relabeled = DiscreteDistribution(
                d.support,
                d.probabilities,
                np.array([ranks[g] for g in d.gains], dtype=float),
            )
            a = best_of_k_density(d, 3).probabilities
            b = best_of_k_density(relabeled, 3).probabilities
            assert np.array_equal(a, b)

    def test_tiny_class_mass_stays_accurate(self):
        # Adjacent cumulative masses differing by ~1e-12 trigger the
        # factored power-difference path; validate against exact rational
        # arithmetic.  Relative accuracy of a 1e-12 class is limited by
        # the rounding of the running cumulative sum (~ulp(0.5)), so the
        # end-to-end guarantee is absolute.
        tiny = 1e-12
        probs = np.array([0.5 - tiny / 2, tiny, 0.5 - tiny / 2])
        probs = probs / probs.sum()
        gains = np.array([0.0, 1.0, 2.0])
        d = DiscreteDistribution([0, 1, 2], probs, gains)
        n = 3
        got = best_of_k_density(d, n).probabilities

        fprobs = [Fraction(p) for p in probs]
        exact = []
        below = Fraction(0)
        for p in fprobs:
            upto = below + p
            exact.append(upto ** n - below ** n)
            below = upto
        for g, e in zip(got, exact):
            assert abs(g - float(e)) <= 1e-15
        assert got[1] > 0

    def test_power_difference_is_exact_for_near_ties(self):
        from scanbench.bestofk import _power_difference

        lo = 0.5
        hi = lo + 1e-12
        for n in (2, 3, 4, 7):
            exact = Fraction(hi) ** n - Fraction(lo) ** n
            got = _power_difference(hi, lo, n)
            assert got == pytest.approx(float(exact), rel=1e-12)

    def test_rejects_bad_n(self):
        d = DiscreteDistribution([0], [1.0], [0.0])
        with pytest.raises(ValueError):
            best_of_k_density(d, 0)
        with pytest.raises(ValueError):
            best_of_k_density(d, 1.5)
