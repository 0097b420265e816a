import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deccs import metrics
from oracles import agreement as agreement_oracle
from oracles import anmi as anmi_oracle
from oracles import ari_pairs, contingency as contingency_oracle, nmi as nmi_oracle


def partitions(n_min=2, n_max=60, k_max=6):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.tuples(
            st.lists(st.integers(0, k_max - 1), min_size=n, max_size=n),
            st.lists(st.integers(0, k_max - 1), min_size=n, max_size=n),
        )
    )


def test_nmi_identical_and_permuted():
    a = np.array([0, 0, 1, 1, 2, 2])
    assert metrics.nmi(a, a) == 1.0
    assert metrics.nmi(a, np.array([5, 5, 3, 3, 0, 0])) == 1.0


def test_nmi_independent_is_zero():
    a = np.repeat([0, 1], 4)
    b = np.tile([0, 1], 4)
    assert metrics.nmi(a, b) == pytest.approx(0.0, abs=1e-15)


def test_nmi_degenerate_single_cluster():
    one = np.zeros(5, int)
    assert metrics.nmi(one, one) == 1.0
    assert metrics.nmi(one, np.arange(5)) == 0.0


def test_nmi_known_value():
    a = [0, 0, 0, 1, 1, 1]
    b = [0, 0, 1, 1, 1, 1]
    assert metrics.nmi(a, b) == pytest.approx(nmi_oracle(a, b), abs=1e-12)


def test_ari_known_values():
    assert metrics.ari([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    # checked by pair counting
    a = [0, 0, 0, 1, 1, 1]
    b = [0, 0, 1, 1, 2, 2]
    assert metrics.ari(a, b) == pytest.approx(ari_pairs(a, b), abs=1e-12)


def test_input_validation():
    with pytest.raises(ValueError):
        metrics.nmi([0, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        metrics.nmi([], [])
    with pytest.raises(ValueError):
        metrics.nmi([-1, 0], [0, 0])
    with pytest.raises(ValueError):
        metrics.agreement([[0, 1]])
    with pytest.raises(ValueError):
        metrics.ari([0], [0])


def test_canonical_labels():
    assert metrics.canonical_labels([7, 7, 3, 9, 3]).tolist() == [0, 0, 1, 2, 1]


def test_effective_k():
    labels = np.array([0] * 99 + [1])
    assert metrics.effective_k(labels) == 2
    assert metrics.effective_k(labels, min_fraction=0.02) == 1


@given(partitions())
@settings(max_examples=200, deadline=None)
def test_contingency_matches_counter(pair):
    a, b = pair
    table = metrics.contingency(a, b).counts
    ref = contingency_oracle(a, b)
    assert table.sum() == len(a)
    for (x, y), c in ref.items():
        assert table[x, y] == c
    assert int(table.sum()) == sum(ref.values())


@given(partitions())
@settings(max_examples=300, deadline=None)
def test_nmi_matches_oracle_and_bounds(pair):
    a, b = pair
    v = metrics.nmi(a, b)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(nmi_oracle(a, b), abs=1e-10)
    assert metrics.nmi(b, a) == v


@given(partitions())
@settings(max_examples=300, deadline=None)
def test_ari_matches_pair_enumeration(pair):
    a, b = pair
    assert metrics.ari(a, b) == pytest.approx(ari_pairs(a, b), abs=1e-10)
    assert metrics.ari(a, b) == pytest.approx(metrics.ari(b, a), abs=1e-12)


@given(partitions(), st.permutations(range(6)))
@settings(max_examples=100, deadline=None)
def test_metrics_invariant_to_relabelling(pair, perm):
    a, b = pair
    relabelled = np.asarray(perm)[np.asarray(a)]
    assert metrics.nmi(relabelled, b) == pytest.approx(metrics.nmi(a, b), abs=1e-12)
    assert metrics.ari(relabelled, b) == pytest.approx(metrics.ari(a, b), abs=1e-12)


@given(st.integers(2, 40).flatmap(lambda n: st.lists(
    st.lists(st.integers(0, 4), min_size=n, max_size=n), min_size=2, max_size=5)))
@settings(max_examples=100, deadline=None)
def test_agreement_objective_lambda_anmi(parts):
    a = metrics.agreement(parts)
    assert a == pytest.approx(agreement_oracle(parts), abs=1e-10)
    assert a == pytest.approx(metrics.consensus_objective(parts), abs=1e-12)
    lam = metrics.lambda_weights(parts)
    mat = metrics.pairwise_nmi(parts)
    assert np.allclose(mat, mat.T)
    assert lam.mean() == pytest.approx(a, abs=1e-12)
    assert metrics.anmi(parts[0], parts) == pytest.approx(anmi_oracle(parts[0], parts), abs=1e-10)
