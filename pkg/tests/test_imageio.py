import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from spinpat.imageio import ImageFormatError, format_grid, format_pbm, parse_grid, parse_pbm, read_image, write_image

images = arrays(np.uint8, st.tuples(st.integers(1, 9), st.integers(1, 9)), elements=st.integers(0, 1))


@given(images)
def test_grid_roundtrip(img):
    assert np.array_equal(parse_grid(format_grid(img)), img)


@given(images)
def test_pbm_roundtrip(img):
    assert np.array_equal(parse_pbm(format_pbm(img)), img)


def test_grid_bad_character():
    with pytest.raises(ImageFormatError):
        parse_grid("101\n1x1\n")


def test_grid_ragged():
    with pytest.raises(ImageFormatError):
        parse_grid("101\n10\n")


def test_file_roundtrip(tmp_path):
    img = np.array([[1, 0, 1], [0, 1, 0]], dtype=np.uint8)
    for name in ("a.txt", "a.pbm"):
        write_image(tmp_path / name, img)
        assert np.array_equal(read_image(tmp_path / name), img)


def test_missing_file(tmp_path):
    with pytest.raises(ImageFormatError):
        read_image(tmp_path / "nope.txt")
