import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pu_active.data import Label
from pu_active.loop import RoundRecord
from pu_active.metrics import aggregate_runs, compute_metrics, gain, sign_test

P, N = int(Label.POSITIVE), int(Label.NEGATIVE)


def test_half_and_half():
    # tp=1, fp=1, fn=1
    m = compute_metrics([P, P, N], [P, N, P])
    assert (m.tp, m.fp, m.fn, m.tn) == (1, 1, 1, 0)
    assert m.precision == m.recall == m.f1 == 0.5


def test_perfect():
    m = compute_metrics([P, N, P], [P, N, P])
    assert m.precision == m.recall == m.f1 == 1.0


def test_no_positive_predictions():
    m = compute_metrics([N, N], [P, N])
    assert m.precision == 0.0 and m.recall == 0.0 and m.f1 == 0.0


@pytest.mark.parametrize("pred,truth", [([P], [P, N]), ([], [])])
def test_bad_input(pred, truth):
    with pytest.raises(ValueError):
        compute_metrics(pred, truth)


labels = st.lists(st.sampled_from([P, N]), min_size=1, max_size=40)


@given(st.data())
def test_invariants(data):
    truth = data.draw(labels)
    pred = data.draw(st.lists(st.sampled_from([P, N]), min_size=len(truth), max_size=len(truth)))
    m = compute_metrics(pred, truth)
    assert m.tp + m.fp + m.fn + m.tn == len(truth)
    if m.precision == 0 or m.recall == 0:
        assert m.f1 == 0
    else:
        assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))
    if m.precision == m.recall:
        assert m.f1 == pytest.approx(m.precision)
    perm = np.random.default_rng(len(truth)).permutation(len(truth))
    assert compute_metrics(np.array(pred)[perm], np.array(truth)[perm]) == m


def _trace(f1):
    rec = compute_metrics([P], [P])
    metrics = rec.__class__(1, 0, 0, 0, f1, f1, f1)
    return [RoundRecord(1, 0, Label.POSITIVE, 1, 0, metrics)]


def test_gain():
    base = compute_metrics([P], [P]).__class__(0, 0, 0, 0, 0.5, 0.5, 0.50)
    assert gain(_trace(0.54), base) == pytest.approx(4.0)
    assert gain(_trace(0.50), base) == 0.0
    assert gain(_trace(0.40), base) < 0
    with pytest.raises(ValueError):
        gain([], base)


def test_aggregate():
    a = aggregate_runs([2.0, 4.0], "margin")
    assert a.mean_gain == 3.0
    assert a.std_gain == pytest.approx(math.sqrt(2))
    assert a.table_cell() == "3.00±1.41"
    assert aggregate_runs([1.5, 1.5, 1.5], "random").std_gain == 0.0
    with pytest.raises(ValueError):
        aggregate_runs([1.0], "random")


def test_sign_test():
    assert sign_test([1] * 10, [0] * 10) == pytest.approx(0.5**10)
    assert sign_test([0] * 4, [0] * 4) == 1.0
