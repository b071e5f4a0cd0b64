import numpy as np
import pytest

from fpengine.codecs import (CategoricalCodecSpec, ImageCodecSpec, decode_categorical,
                             decode_image, encode_categorical, encode_image)
from fpengine.core import binarize, similarity
from fpengine.errors import ArgumentError, DimensionError


def test_encode_image_example():
    spec = ImageCodecSpec(2, 2, 0.5)
    assert encode_image([0, 255, 128, 0], spec).tolist() == [0, 1, 1, 0]
    assert encode_image([0, 0, 0, 0], spec).tolist() == [0, 0, 0, 0]
    with pytest.raises(DimensionError):
        encode_image([0, 0, 0], spec)


def test_decode_image_example():
    spec = ImageCodecSpec(2, 2, 0.5)
    assert decode_image([0, 1, 0.5, 0.25], spec).tolist() == [0, 255, 128, 64]
    assert decode_image([0, 0, 0, 0], spec).tolist() == [0, 0, 0, 0]
    with pytest.raises(DimensionError):
        decode_image([0, 1], spec)


def test_image_round_trip_on_binary_vectors():
    rng = np.random.default_rng(3)
    spec = ImageCodecSpec(8, 8, 0.5)
    for _ in range(100):
        v = (rng.random(64) < 0.3).astype(float)
        assert np.array_equal(encode_image(decode_image(v, spec), spec), binarize(v, 0.5))


@pytest.mark.mnist
def test_mnist_encoding_matches_pixel_loop(mnist):
    images, _ = mnist
    spec = ImageCodecSpec(28, 28, 0.5)
    for img in images[:100]:
        oracle = []
        for row in range(28):
            for col in range(28):
                oracle.append(1.0 if img[row * 28 + col] / 255 >= 0.5 else 0.0)
        v = encode_image(img, spec)
        assert v.tolist() == oracle
        assert 1 <= v.sum() <= 784
        back = decode_image(v, spec)
        assert set(np.flatnonzero(back)) == set(np.flatnonzero(np.array(oracle)))


def test_categorical_examples():
    spec = CategoricalCodecSpec(3, 2)
    assert encode_categorical(0, spec).tolist() == [1, 1, 0, 0, 0, 0]
    assert encode_categorical(2, spec).tolist() == [0, 0, 0, 0, 1, 1]
    assert similarity(encode_categorical(0, spec), encode_categorical(1, spec)) == 0.0
    with pytest.raises(ArgumentError):
        encode_categorical(3, spec)


def test_categorical_decode():
    spec = CategoricalCodecSpec(2, 2)
    assert decode_categorical([0.2, 0.2, 0.9, 0.9], spec) == (1, pytest.approx(0.9))
    assert decode_categorical([0, 0, 0, 0], spec) == (0, 0.0)
    big = CategoricalCodecSpec(5, 3)
    for k in range(5):
        v = encode_categorical(k, big)
        assert v.sum() == 3
        assert decode_categorical(v, big) == (k, 1.0)
    with pytest.raises(DimensionError):
        decode_categorical([0, 1], big)


def test_codec_spec_validation():
    with pytest.raises(ArgumentError):
        CategoricalCodecSpec(1, 2)
    with pytest.raises(ArgumentError):
        ImageCodecSpec(2, 2, 1.5)


def test_encoders_deterministic():
    spec = ImageCodecSpec(3, 1, 0.4)
    px = [10, 200, 102]
    assert encode_image(px, spec).tolist() == encode_image(px, spec).tolist()
