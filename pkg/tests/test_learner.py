from __future__ import annotations

import numpy as np
import pytest

from freqboost import (
    LearnerState,
    RngStream,
    SourceDistribution,
    balanced_units,
    emit,
    frequency,
    new_learner,
    update,
)
from conftest import ref_update


def test_uniform_init_two_forms():
    state = new_learner(2, 10)
    assert state.units == (5, 5)
    assert state.frequencies() == (0.5, 0.5)


def test_uniform_init_three_forms():
    state = new_learner(3, 3)
    assert state.units == (2, 2, 2)
    assert state.frequencies() == (1 / 3, 1 / 3, 1 / 3)


def test_uniform_init_rejects_indivisible():
    with pytest.raises(ValueError, match="divisible"):
        new_learner(3, 4)


@pytest.mark.parametrize("M,L", [(1, 10), (0, 10), (2, 1), (2, 0), (3, -2)])
def test_rejects_degenerate_sizes(M, L):
    with pytest.raises(ValueError):
        new_learner(M, L)


def test_explicit_init():
    state = new_learner(3, 4, init=(5, 0, 3))
    assert state.units == (5, 0, 3)


def test_explicit_init_rejects_bad_sum():
    with pytest.raises(ValueError, match="sum"):
        new_learner(3, 4, init=(5, 1, 3))


def test_explicit_init_rejects_negative():
    with pytest.raises(ValueError):
        new_learner(2, 4, init=(5, -1))


def test_state_rejects_wrong_length():
    with pytest.raises(ValueError):
        LearnerState(M=3, L=4, units=(4, 4))


def test_update_moves_one_unit_between_two_forms():
    state = LearnerState(M=2, L=10, units=(3, 7))
    assert update(state, 1).units == (4, 6)
    assert update(state, 2).units == (2, 8)


def test_update_saturated_state_is_fixed():
    state = LearnerState(M=2, L=10, units=(10, 0))
    assert update(state, 1).units == (10, 0)


def test_update_three_forms_collects_from_both():
    state = LearnerState(M=3, L=4, units=(4, 2, 2))
    assert update(state, 1).units == (6, 1, 1)


def test_update_three_forms_empty_form_gives_nothing():
    state = LearnerState(M=3, L=4, units=(4, 0, 4))
    assert update(state, 1).units == (5, 0, 3)


@pytest.mark.parametrize("form", [0, -1, 3])
def test_update_rejects_bad_form(form):
    state = new_learner(2, 10)
    with pytest.raises(ValueError, match="form index"):
        update(state, form)


@pytest.mark.parametrize("M,L", [(2, 5), (3, 6), (5, 4)])
def test_conservation_and_nonnegativity(M, L):
    rng = np.random.default_rng(2024)
    state = new_learner(M, L, init=balanced_units(M, L))
    total = state.total_quanta
    for _ in range(500):
        state = update(state, int(rng.integers(1, M + 1)))
        assert sum(state.units) == total
        assert min(state.units) >= 0


def test_two_form_rule_matches_saturating_increment_exhaustively():
    # the general rule restricted to M=2 must be the +1/-1 rule with
    # saturation at 0 and L, for every state and both forms
    for L in range(2, 21):
        for x in range(L + 1):
            state = LearnerState(M=2, L=L, units=(x, L - x))
            up = update(state, 1).units
            assert up == ((x + 1, L - x - 1) if x < L else (x, L - x))
            down = update(state, 2).units
            assert down == ((x - 1, L - x + 1) if x > 0 else (x, L - x))


def test_permutation_equivariance():
    rng = np.random.default_rng(7)
    for _ in range(100):
        M = int(rng.integers(2, 6))
        L = int(rng.integers(2, 8))
        n = L * (M - 1)
        cuts = np.sort(rng.integers(0, n + 1, size=M - 1))
        units = tuple(np.diff(np.concatenate(([0], cuts, [n]))).tolist())
        perm = rng.permutation(M)
        j = int(rng.integers(0, M))
        state = LearnerState(M=M, L=L, units=units)
        direct = update(state, j + 1).units
        permuted_state = LearnerState(M=M, L=L, units=tuple(units[perm[i]] for i in range(M)))
        inv = np.argsort(perm)
        relabeled = update(permuted_state, int(inv[j]) + 1).units
        assert tuple(relabeled[int(inv[i])] for i in range(M)) == direct


@pytest.mark.parametrize("M,L,j", [(2, 6, 1), (3, 6, 2), (4, 3, 4)])
def test_absorption_under_consistent_source(M, L, j):
    state = new_learner(M, L, init=balanced_units(M, L))
    n = state.total_quanta
    for _ in range(n):
        state = update(state, j)
    assert frequency(state, j) == 1.0
    assert update(state, j).units == state.units


def test_update_matches_reference_on_random_states():
    rng = np.random.default_rng(99)
    for _ in range(200):
        M = int(rng.integers(2, 6))
        L = int(rng.integers(2, 10))
        n = L * (M - 1)
        cuts = np.sort(rng.integers(0, n + 1, size=M - 1))
        units = tuple(np.diff(np.concatenate(([0], cuts, [n]))).tolist())
        j = int(rng.integers(0, M))
        state = LearnerState(M=M, L=L, units=units)
        assert update(state, j + 1).units == ref_update(units, j)


def test_emit_degenerate_sources():
    rng = RngStream(3)
    one_hot_first = SourceDistribution((1.0, 0.0))
    assert all(emit(one_hot_first, rng) == 1 for _ in range(50))
    one_hot_last = SourceDistribution((0.0, 0.0, 1.0))
    assert all(emit(one_hot_last, rng) == 3 for _ in range(50))


def test_emit_long_run_fraction():
    source = SourceDistribution((0.7, 0.3))
    rng = RngStream(20240817)
    draws = source.sample_forms(rng, 10**6)
    frac = np.mean(draws == 1)
    assert abs(frac - 0.7) <= 0.002


def test_emit_batch_equals_sequential():
    source = SourceDistribution((0.2, 0.5, 0.3))
    batch = source.sample_forms(RngStream(11, stream=(4,)), 500)
    rng = RngStream(11, stream=(4,))
    seq = [emit(source, rng) for _ in range(500)]
    assert batch.tolist() == seq


def test_rng_stream_determinism():
    a = RngStream(123, stream=(5,)).uniforms(16)
    b = RngStream(123, stream=(5,)).uniforms(16)
    assert np.array_equal(a, b)
    c = RngStream(123, stream=(6,)).uniforms(16)
    assert not np.array_equal(a, c)
    d = RngStream(124, stream=(5,)).uniforms(16)
    assert not np.array_equal(a, d)


def test_frequency_examples():
    assert frequency(LearnerState(M=2, L=10, units=(7, 3)), 1) == 0.7
    assert frequency(LearnerState(M=3, L=4, units=(6, 1, 1)), 1) == 0.75
    uniform = new_learner(4, 4)
    assert all(frequency(uniform, i) == 0.25 for i in range(1, 5))


def test_frequency_sums_to_one_and_rejects_bad_index():
    state = LearnerState(M=3, L=4, units=(5, 2, 1))
    assert sum(frequency(state, i) for i in (1, 2, 3)) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        frequency(state, 4)


def test_balanced_units_properties():
    assert balanced_units(2, 10) == (5, 5)  # divisible case is exactly uniform
    assert balanced_units(3, 3) == (2, 2, 2)
    units = balanced_units(3, 100)
    assert sum(units) == 200
    assert max(units) - min(units) == 1
    assert units[0] == min(units)  # form 1 never starts ahead


def test_source_distribution_validation():
    with pytest.raises(ValueError):
        SourceDistribution((0.7, 0.2))
    with pytest.raises(ValueError):
        SourceDistribution((1.2, -0.2))
    with pytest.raises(ValueError):
        SourceDistribution((1.0,))
    src = SourceDistribution((0.7, 0.3))
    assert sum(src.nu) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(AttributeError):
        src.nu = (0.5, 0.5)
