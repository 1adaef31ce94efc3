import numpy as np

from cobrnn._rng import SplitMix64, Xoshiro256pp, derive_seed, fnv1a64


def test_splitmix64_reference_vectors():
    sm = SplitMix64(0)
    assert [sm.next() for _ in range(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
    sm = SplitMix64(1234567)
    assert [sm.next() for _ in range(2)] == [6457827717110365317, 3203168211198807973]


def test_xoshiro_first_output_from_known_state():
    # rotl(1 + 4, 23) + 1
    assert Xoshiro256pp.from_state([1, 2, 3, 4]).next_u64() == (5 << 23) + 1


def test_streams_are_reproducible_and_distinct():
    a = Xoshiro256pp.for_stream(7, "x").random_array(10)
    b = Xoshiro256pp.for_stream(7, "x").random_array(10)
    c = Xoshiro256pp.for_stream(7, "y").random_array(10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert derive_seed(7, "x") != derive_seed(8, "x")


def test_fnv1a_known_value():
    assert fnv1a64("") == 0xCBF29CE484222325
    assert fnv1a64("a") == 0xAF63DC4C8601EC8C


def test_uniform_and_normal_moments():
    rng = Xoshiro256pp(3)
    u = rng.random_array(20000)
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 3 * np.sqrt(1 / 12 / u.size)
    z = rng.normal_array(20000)
    assert abs(z.mean()) < 3 / np.sqrt(z.size)
    assert abs(z.std() - 1) < 0.03


def test_permutation_is_a_permutation():
    perm = Xoshiro256pp(1).permutation(50)
    assert sorted(perm.tolist()) == list(range(50))
