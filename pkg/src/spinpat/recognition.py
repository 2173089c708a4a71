"""Logic-level golden model for binary image recognition.

Images are 2-D arrays of 0/1 (1 = black).  Everything here is exact integer
logic; the device simulations in :mod:`spinpat.detector` are checked against
:func:`logic_oracle_detect`.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class RecognitionError(ValueError):
    pass


class DimensionError(RecognitionError):
    pass


class InvalidTrainingSetError(RecognitionError):
    pass


class PartitionError(RecognitionError):
    pass


def as_image(bits) -> np.ndarray:
    """Validate and return ``bits`` as a 2-D uint8 array of 0/1."""
    a = np.asarray(bits)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"an image must be a non-empty 2-D grid, got shape {a.shape}")
    if not np.all((a == 0) | (a == 1)):
        raise RecognitionError("image entries must be 0 or 1")
    return a.astype(np.uint8)


def _bits(x) -> np.ndarray:
    a = np.asarray(x).reshape(-1)
    if not np.all((a == 0) | (a == 1)):
        raise RecognitionError("bit vectors must contain only 0 and 1")
    return a.astype(np.uint8)


def hamming(x, y) -> int:
    """Number of positions where two equal-length bit vectors differ."""
    a, b = _bits(x), _bits(y)
    if a.size != b.size:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    return int(np.count_nonzero(a != b))


def row_match_count(a, b) -> int:
    """Number of agreeing positions, ``n - hamming(a, b)``."""
    return _bits(a).size - hamming(a, b)


def mainly_similar(B, Bp) -> bool:
    """True when every row pair differs in fewer than ``floor(n/2)`` pixels.

    This is the strict row-wise criterion; for ``n = 1`` the bound is 0 and
    the result is always False (a warning is emitted).
    """
    A, C = as_image(B), as_image(Bp)
    if A.shape != C.shape:
        raise DimensionError(f"dimension mismatch: {A.shape} vs {C.shape}")
    n = A.shape[1]
    if n == 1:
        warnings.warn("mainly_similar with n = 1 is always False (bound floor(1/2) = 0)", stacklevel=2)
        return False
    bound = n // 2
    return all(hamming(A[k], C[k]) < bound for k in range(A.shape[0]))


def _check_p(P: int) -> None:
    if P < 1 or P % 2 == 0:
        raise InvalidTrainingSetError(f"the number of training images must be odd, got {P}")


def nint_vote(total, P: int):
    """Nearest integer of ``total / P`` for 0/1 votes (round half up on ties)."""
    if P % 2 == 0:
        warnings.warn("even vote count: ties are rounded half up", stacklevel=2)
    return (2 * np.asarray(total) >= P).astype(np.uint8)


def mean_image(images: Sequence) -> np.ndarray:
    """Per-pixel majority vote over an odd number of equally sized images."""
    imgs = [as_image(b) for b in images]
    _check_p(len(imgs))
    shape = imgs[0].shape
    if any(i.shape != shape for i in imgs):
        raise DimensionError("training images must share one shape")
    total = np.sum(imgs, axis=0)
    return nint_vote(total, len(imgs))


def prop1_check(P: int) -> bool:
    """Exhaustively check ``x ^ nint(mean(y)) == nint(mean(x ^ y))`` for all bit assignments."""
    _check_p(P)
    if P > 15:
        raise InvalidTrainingSetError("exhaustive check limited to P <= 15")
    # rows: all 2^(P+1) assignments of (x, y1..yP)
    grid = np.array(list(itertools.product((0, 1), repeat=P + 1)), dtype=np.uint8)
    x, y = grid[:, 0], grid[:, 1:]
    lhs = x ^ nint_vote(y.sum(axis=1), P)
    rhs = nint_vote((x[:, None] ^ y).sum(axis=1), P)
    return bool(np.array_equal(lhs, rhs))


@dataclass(frozen=True, order=True)
class ClusterIndex:
    """Row ``i`` and column block ``j`` (both 1-based)."""

    i: int
    j: int

    def __str__(self) -> str:
        return f"C{self.i}{self.j}"

    @classmethod
    def parse(cls, text: str) -> "ClusterIndex":
        if not (text.startswith("C") and len(text) == 3 and text[1:].isdigit()):
            raise ValueError(f"bad cluster label {text!r}")
        return cls(int(text[1]), int(text[2]))

    def columns(self, block_cols: int = 3) -> range:
        """0-based column indices covered by this cluster."""
        return range(block_cols * (self.j - 1), block_cols * self.j)


def partition_clusters(image, block_cols: int = 3) -> list[tuple[ClusterIndex, np.ndarray]]:
    """Split every row into consecutive ``block_cols``-wide pieces, row-major."""
    img = as_image(image)
    m, n = img.shape
    if block_cols < 1 or n % block_cols:
        raise PartitionError(f"{n} columns cannot be split into blocks of {block_cols}")
    out = []
    for i in range(m):
        for j in range(n // block_cols):
            c = ClusterIndex(i + 1, j + 1)
            out.append((c, img[i, block_cols * j:block_cols * (j + 1)].copy()))
    return out


def xnor_image(a, b) -> np.ndarray:
    A, B = as_image(a), as_image(b)
    if A.shape != B.shape:
        raise DimensionError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return (A == B).astype(np.uint8)


def logic_oracle_detect(training: Sequence, image, block_cols: int = 3) -> dict:
    """Expected detector outputs per cluster.

    Returns ``{ClusterIndex: {"match_count": int, "switch_expected": bool}}``
    where a cluster switches on a strict majority of matching pixels.
    """
    mean = mean_image(training)
    match = xnor_image(mean, image)
    return {c: {"match_count": int(bits.sum()), "switch_expected": bool(2 * int(bits.sum()) > block_cols)}
            for c, bits in partition_clusters(match, block_cols)}


def compare_then_vote(training: Sequence, image) -> np.ndarray:
    """Per-pixel majority of ``xnor(train_k, input)``: the comparator-first ordering."""
    imgs = [as_image(b) for b in training]
    _check_p(len(imgs))
    votes = np.sum([xnor_image(t, image) for t in imgs], axis=0)
    return nint_vote(votes, len(imgs))


def match_class(count: int, block_cols: int = 3) -> str:
    """Class label for a match count: ``match-<k>`` or ``no-switch`` below a majority."""
    if 2 * count > block_cols:
        return f"match-{count}"
    return "no-switch"
