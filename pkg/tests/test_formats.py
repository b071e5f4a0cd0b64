import struct

import numpy as np
import pytest

from fpengine.errors import DimensionError, FormatError
from fpengine.formats import (load_idx, parse_idx, pgm_bytes, read_pgm, write_idx_images,
                              write_idx_labels, write_pgm)

# two 2x2 images, built byte by byte
IMAGES = (b"\x00\x00\x08\x03" b"\x00\x00\x00\x02" b"\x00\x00\x00\x02" b"\x00\x00\x00\x02"
          b"\x00\xff\x80\x01" b"\x10\x20\x30\x40")
LABELS = b"\x00\x00\x08\x01" b"\x00\x00\x00\x03" b"\x07\x00\x09"


def test_idx_images_fixture():
    x = parse_idx(IMAGES)
    assert x.dtype == np.uint8 and x.shape == (2, 4)
    assert x.tolist() == [[0, 255, 128, 1], [16, 32, 48, 64]]


def test_idx_labels_fixture():
    assert parse_idx(LABELS).tolist() == [7, 0, 9]


def test_idx_errors():
    with pytest.raises(FormatError):
        parse_idx(b"\x00\x00\x08\x02" + IMAGES[4:])
    with pytest.raises(FormatError):
        parse_idx(IMAGES[:-1])
    with pytest.raises(FormatError):
        parse_idx(IMAGES[:12])
    with pytest.raises(FormatError):
        parse_idx(LABELS[:-1])
    with pytest.raises(FormatError):
        parse_idx(b"")


def test_idx_writers_round_trip(tmp_path):
    write_idx_images(tmp_path / "i", parse_idx(IMAGES), 2, 2)
    write_idx_labels(tmp_path / "l", [7, 0, 9])
    assert (tmp_path / "i").read_bytes() == IMAGES
    assert (tmp_path / "l").read_bytes() == LABELS
    assert load_idx(tmp_path / "i", limit=1).tolist() == [[0, 255, 128, 1]]


def test_pgm_header_exact(tmp_path):
    data = pgm_bytes([0, 255, 128, 64, 1, 2], 3, 2)
    assert data == b"P5\n3 2\n255\n\x00\xff\x80\x40\x01\x02"
    write_pgm(tmp_path / "x.pgm", [0, 255, 128, 64, 1, 2], 3, 2)
    w, h, px = read_pgm(tmp_path / "x.pgm")
    assert (w, h) == (3, 2) and px.tolist() == [0, 255, 128, 64, 1, 2]
    with pytest.raises(DimensionError):
        pgm_bytes([0, 1], 3, 2)


@pytest.mark.mnist
def test_official_mnist_train_set(mnist_paths):
    with open(mnist_paths[0], "rb") as f:
        head = f.read(16)
    assert struct.unpack(">IIII", head) == (0x803, 60000, 28, 28)
    images = load_idx(mnist_paths[0])
    labels = load_idx(mnist_paths[1])
    assert images.shape == (60000, 784) and labels.shape == (60000,)
    assert labels[:5].tolist() == [5, 0, 4, 1, 9]
