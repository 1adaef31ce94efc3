import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cobrnn.exceptions import NumericError, UsageError
from cobrnn.preprocess import PatchPreprocessor, PreprocessConfig, denoise, normalize_patch

unit_patches = arrays(np.float64, st.tuples(st.integers(3, 8), st.integers(3, 8)),
                      elements=st.floats(0, 1))


def test_minmax_spanning_patch_unchanged():
    p = np.array([[0.0, 0.5], [1.0, 0.5]])
    assert np.array_equal(normalize_patch(p, "minmax"), p)


@pytest.mark.parametrize("mode", ["minmax", "zscore"])
def test_constant_patch_maps_to_half(mode):
    assert np.all(normalize_patch(np.full((3, 4), 0.7), mode) == 0.5)


def test_zscore_range_against_direct_recomputation():
    rng = np.random.default_rng(0)
    for _ in range(100):
        p = rng.uniform(0, 1, (5, 6))
        out = normalize_patch(p, "zscore")
        z = (p - p.mean()) / p.std()
        expected = (z - z.min()) / (z.max() - z.min())
        assert np.allclose(out, expected, atol=1e-12)
        assert out.min() == 0.0 and abs(out.max() - 1.0) < 1e-12


def test_non_finite_rejected():
    with pytest.raises(NumericError):
        normalize_patch(np.array([[0.0, np.nan]]))


def test_denoise_window_one_is_identity():
    p = np.random.default_rng(1).uniform(size=(4, 5))
    assert np.array_equal(denoise(p, 1), p)


def test_denoise_constant():
    assert np.allclose(denoise(np.full((5, 5), 0.3), 3), 0.3)


def test_denoise_hand_enumerated_impulse():
    p = np.zeros((3, 3))
    p[1, 1] = 0.9
    # every clamped 3x3 window contains the centre exactly once
    assert np.allclose(denoise(p, 3), 0.1)


def test_denoise_clamps_edges():
    p = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    # corner window rows {0,0,1} x cols {0,0,1}: four copies of the corner
    assert denoise(p, 3)[0, 0] == pytest.approx(4 / 9)


@pytest.mark.parametrize("window", [2, 0])
def test_denoise_rejects_bad_window(window):
    with pytest.raises(UsageError):
        denoise(np.zeros((4, 4)), window)


def test_denoise_window_larger_than_patch():
    with pytest.raises(UsageError):
        denoise(np.zeros((3, 5)), 5)


@settings(max_examples=60, deadline=None)
@given(unit_patches, st.sampled_from(["none", "minmax", "zscore"]), st.sampled_from([1, 3]))
def test_shape_and_range_preserved(p, mode, window):
    out = normalize_patch(denoise(p, window), mode)
    assert out.shape == p.shape
    assert out.min() >= -1e-12 and out.max() <= 1 + 1e-12


@settings(max_examples=60, deadline=None)
@given(unit_patches)
def test_denoise_does_not_increase_variance(p):
    assert denoise(p, 3).var() <= p.var() + 1e-12


def test_config_validation():
    with pytest.raises(UsageError):
        PreprocessConfig("median", 1)
    with pytest.raises(UsageError):
        PreprocessConfig("minmax", 4)


def test_transformer_applies_per_patch():
    X = np.random.default_rng(2).uniform(0.2, 0.6, (3, 4, 4))
    out = PatchPreprocessor("minmax", 3).fit_transform(X)
    assert out.shape == X.shape
    assert np.allclose(out.min(axis=(1, 2)), 0) and np.allclose(out.max(axis=(1, 2)), 1)
