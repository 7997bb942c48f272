"""Counter-based RNG: exact finalizer values, stream laws, and statistics."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from fddsim.rng import GOLDEN, SplitMix64, child_seed, mix64

# Finalizer reference values computed once with arbitrary-precision Python
# integer arithmetic (the mask-and-multiply chain in the module docstring).
_MASK = (1 << 64) - 1


def _mix64_reference(x: int) -> int:
    z = x & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def test_mix64_known_values():
    # frozen outputs of the reference finalizer for a few fixed inputs
    assert mix64(0) == 0
    assert mix64(1) == _mix64_reference(1)
    assert mix64(GOLDEN) == _mix64_reference(GOLDEN)
    assert mix64(2**64 - 1) == _mix64_reference(2**64 - 1)
    # spot value pinned so a silent constant change cannot pass
    assert mix64(1) == 6238072747940578789


@given(st.integers(min_value=0, max_value=2**70))
def test_mix64_matches_reference(x):
    assert mix64(x) == _mix64_reference(x)


def test_stream_is_counter_based():
    # draw i of seed s must equal mix64(s + (i+1)*GOLDEN mod 2^64)
    seed = 12345
    stream = SplitMix64(seed)
    draws = stream.u64(8)
    for i in range(8):
        expected = mix64((seed + (i + 1) * GOLDEN) & _MASK)
        assert int(draws[i]) == expected


def test_stream_split_independent_of_call_granularity():
    a = SplitMix64(7)
    b = SplitMix64(7)
    one = a.u64(10)
    parts = np.concatenate([b.u64(3), b.u64(4), b.u64(3)])
    assert np.array_equal(one, parts)


def test_uniform_range_and_determinism():
    u = SplitMix64(99).uniform(10_000)
    assert np.all(u >= 0.0) and np.all(u < 1.0)
    assert np.array_equal(u, SplitMix64(99).uniform(10_000))
    # mean of U[0,1) over 10^4 draws: 0.5 +- ~5 sigma
    assert abs(u.mean() - 0.5) < 5 * (1.0 / np.sqrt(12 * len(u)))


def test_uniform_signed_scale():
    u = SplitMix64(5).uniform_signed(1000, 0.25)
    assert np.all(u >= -0.25) and np.all(u < 0.25)


def test_integers_power_of_two_bound():
    v = SplitMix64(3).integers(4096, 16)
    assert v.min() >= 0 and v.max() < 16
    counts = np.bincount(v, minlength=16)
    # multinomial: each bucket 256 +- 5 sigma, sigma = sqrt(n p (1-p))
    sigma = np.sqrt(4096 * (1 / 16) * (15 / 16))
    assert np.all(np.abs(counts - 256) < 5 * sigma)


def test_integers_rejects_non_power_of_two():
    import pytest

    with pytest.raises(ValueError):
        SplitMix64(1).integers(10, 10)


def test_shuffled_indices_is_permutation():
    perm = SplitMix64(11).shuffled_indices(257)
    assert sorted(perm.tolist()) == list(range(257))
    # deterministic and seed-sensitive
    assert np.array_equal(perm, SplitMix64(11).shuffled_indices(257))
    assert not np.array_equal(perm, SplitMix64(12).shuffled_indices(257))


def test_child_streams_differ_from_parent_and_each_other():
    root = SplitMix64(2024)
    c0, c1 = root.child(0), root.child(1)
    assert c0.seed == child_seed(2024, 0)
    assert c1.seed == child_seed(2024, 1)
    assert c0.seed != c1.seed
    assert not np.array_equal(c0.u64(16), c1.u64(16))
    assert not np.array_equal(SplitMix64(2024).u64(16), SplitMix64(c0.seed).u64(16))


@settings(max_examples=25)
@given(st.integers(min_value=0, max_value=2**64 - 1), st.integers(min_value=0, max_value=1000))
def test_child_seed_matches_class_method(seed, tag):
    assert SplitMix64(seed).child(tag).seed == child_seed(seed, tag)
