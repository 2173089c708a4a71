"""Bundled image fixtures against the logic-level oracle."""
import numpy as np
import pytest

from spinpat.experiments import load_fixture
from spinpat.recognition import ClusterIndex, logic_oracle_detect, mean_image, row_match_count


@pytest.fixture(scope="module")
def spin_set():
    return [load_fixture(f"spin_user{k}.txt") for k in (1, 2, 3)]


def test_3x3_pair_rows():
    pat, img = load_fixture("cell3x3_pattern.txt"), load_fixture("cell3x3_input.txt")
    out = logic_oracle_detect([pat], img)
    sw = [out[ClusterIndex(r, 1)]["switch_expected"] for r in (1, 2, 3)]
    assert sw == [True, False, True]
    assert row_match_count(pat[0], img[0]) == 3
    assert row_match_count(pat[1], img[1]) < 2


def test_spin_set_strays_removed(spin_set):
    mean = mean_image(spin_set)
    for r, c in ((1, 5), (3, 8)):     # P26, P49 (0-based indices)
        votes = [int(t[r, c]) for t in spin_set]
        assert sum(v != mean[r, c] for v in votes) == 1


def test_swim_cluster_groups(spin_set):
    out = logic_oracle_detect(spin_set, load_fixture("swim_input.txt"))
    count = {str(c): v["match_count"] for c, v in out.items()}
    assert all(count[c] == 3 for c in ("C11", "C22", "C41"))
    assert all(count[c] == 2 for c in ("C52", "C42", "C32"))
    assert all(count[c] <= 1 for c in ("C43", "C72"))
    assert len(count) == 27


def test_fixture_shapes(spin_set):
    assert all(t.shape == (9, 9) for t in spin_set)
    assert load_fixture("cell3x3_pattern.txt").shape == (3, 3)
    assert set(np.unique(load_fixture("swim_input.txt"))) <= {0, 1}
