import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from predband.rng import SplitMix64, mix64, rng_next_uniform

MASK = (1 << 64) - 1


def reference_splitmix(seed):
    """Textbook splitmix64 on Python ints, independent of the package code."""
    s = seed
    while True:
        s = (s + 0x9E3779B97F4A7C15) & MASK
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        yield z ^ (z >> 31)


def test_seed_zero_first_output():
    assert SplitMix64(0).next_u64() == 0xE220A8397B1DCDAF


def test_seed_zero_second_and_third_outputs():
    g = SplitMix64(0)
    g.next_u64()
    assert g.next_u64() == 0x6E789E6AA1B965F4
    assert g.next_u64() == 0x06C45D188009454F


@given(st.integers(min_value=0, max_value=MASK))
def test_scalar_stream_matches_reference(seed):
    ours = SplitMix64(seed)
    ref = reference_splitmix(seed)
    for _ in range(5):
        assert ours.next_u64() == next(ref)


@given(st.integers(min_value=0, max_value=MASK), st.integers(min_value=0, max_value=40))
def test_vectorised_stream_matches_scalar(seed, n):
    a = SplitMix64(seed).u64_array(n)
    g = SplitMix64(seed)
    assert [int(v) for v in a] == [g.next_u64() for _ in range(n)]


def test_vectorised_draw_advances_state():
    g = SplitMix64(3)
    g.u64_array(7)
    h = SplitMix64(3)
    for _ in range(7):
        h.next_u64()
    assert g.next_u64() == h.next_u64()


def test_rng_next_uniform_is_pure():
    s1, u1 = rng_next_uniform(42)
    s2, u2 = rng_next_uniform(42)
    assert (s1, u1) == (s2, u2)
    assert u1 == mix64(s1) / 2.0**64


def test_uniforms_in_unit_interval():
    u = SplitMix64(11).uniforms(10**6)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 3 * np.sqrt(1 / 12 / 10**6)


def test_open_uniforms_exclude_endpoints():
    u = SplitMix64(5).open_uniforms(10**5)
    assert u.min() > 0.0 and u.max() < 1.0


def test_normals_moments():
    z = SplitMix64(9).normals(200_000)
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1.0) < 0.01


@given(st.integers(min_value=0, max_value=MASK), st.integers(min_value=0, max_value=60))
def test_permutation_is_permutation(seed, n):
    p = SplitMix64(seed).permutation(n)
    assert sorted(p.tolist()) == list(range(n))


def test_permutation_deterministic():
    assert np.array_equal(SplitMix64(8).permutation(50), SplitMix64(8).permutation(50))


def test_spawn_differs_from_parent():
    parent = SplitMix64(1)
    child = parent.spawn()
    assert child.next_u64() != SplitMix64(1).next_u64()


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        SplitMix64(-1)
