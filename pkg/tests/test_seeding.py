import numpy as np
import pytest

from padaug.seeding import child_seed, make_rng, randint, spawn


def test_make_rng_deterministic():
    a = make_rng(123).standard_normal(16)
    b = make_rng(123).standard_normal(16)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, make_rng(124).standard_normal(16))


def test_randint_inclusive_bounds():
    rng = make_rng(0)
    seen = {randint(rng, 2, 5) for _ in range(400)}
    assert seen == {2, 3, 4, 5}
    assert randint(rng, 7, 7) == 7


def test_randint_empty_range():
    with pytest.raises(ValueError):
        randint(make_rng(0), 3, 2)


def test_child_seed_depends_on_every_part():
    base = child_seed(1, "utt")
    assert base == child_seed(1, "utt")
    assert base != child_seed(2, "utt")
    assert base != child_seed(1, "utt2")
    assert child_seed(1, "a", 2) != child_seed(1, "a2")  # no concatenation ambiguity
    assert child_seed(1, 12) != child_seed(1, "12")


def test_child_seed_in_range():
    for parts in (("x",), (0,), ("a", 1, "b"), (2**62, "long" * 50)):
        s = child_seed(99, *parts)
        assert 0 <= s < 2**64


def test_spawn_stream():
    rng = make_rng(5)
    seeds = [spawn(rng) for _ in range(4)]
    assert len(set(seeds)) == 4
    rng2 = make_rng(5)
    assert seeds == [spawn(rng2) for _ in range(4)]
