"""Tensor kernels against brute-force oracles."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from functensor import (
    DenseTensor,
    ShapeError,
    embed_parafac_as_tucker,
    mode_contract,
    parafac_eval,
    tucker_eval,
)


def naive_tucker(core: np.ndarray, rows) -> float:
    """Literal nested-loop sum over every rank index tuple."""
    total = 0.0
    for idx in itertools.product(*(range(d) for d in core.shape)):
        term = core[idx]
        for row, r in zip(rows, idx):
            term *= row[r]
        total += term
    return total


class TestDenseTensor:
    def test_round_trip(self):
        arr = np.arange(24.0).reshape(2, 3, 4)
        t = DenseTensor.from_array(arr)
        assert t.dims == (2, 3, 4)
        np.testing.assert_array_equal(t.array, arr)

    def test_row_major_layout(self):
        t = DenseTensor(dims=(2, 2), values=np.array([1.0, 2.0, 3.0, 4.0]))
        assert t.array[0, 1] == 2.0 and t.array[1, 0] == 3.0

    def test_rejects_wrong_length(self):
        with pytest.raises(ShapeError):
            DenseTensor(dims=(2, 3), values=np.zeros(5))

    def test_rejects_empty_dims(self):
        with pytest.raises(ShapeError):
            DenseTensor(dims=(), values=np.zeros(1))
        with pytest.raises(ShapeError):
            DenseTensor(dims=(0, 2), values=np.zeros(0))


class TestTuckerEval:
    def test_rank_one_product(self):
        core = DenseTensor.from_array(np.ones((1, 1, 1)))
        assert tucker_eval(core, [[2.0], [3.0], [4.0]]) == pytest.approx(24.0)

    def test_diagonal_core_reduces_to_parafac(self):
        core = embed_parafac_as_tucker(np.array([1.0, 1.0]), 3)
        rows = [np.array([1.0, 2.0]), np.array([1.0, 1.0]), np.array([1.0, 0.5])]
        assert tucker_eval(core, rows) == pytest.approx(2.0)

    def test_matches_nested_loop_oracle(self):
        rng = np.random.default_rng(42)
        core = DenseTensor.from_array(rng.normal(size=(2, 2, 2)))
        rows = [rng.normal(size=2) for _ in range(3)]
        assert tucker_eval(core, rows) == pytest.approx(
            naive_tucker(core.array, rows), abs=1e-12
        )

    def test_random_orders_and_ranks(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            order = int(rng.integers(2, 5))
            rank = int(rng.integers(1, 6))
            core = DenseTensor.from_array(rng.uniform(-1, 1, (rank,) * order))
            rows = [rng.uniform(-1, 1, rank) for _ in range(order)]
            assert abs(tucker_eval(core, rows) - naive_tucker(core.array, rows)) <= 1e-12

    def test_multilinear_in_each_row(self):
        rng = np.random.default_rng(3)
        core = DenseTensor.from_array(rng.normal(size=(3, 3, 3)))
        rows = [rng.normal(size=3) for _ in range(3)]
        base = tucker_eval(core, rows)
        for i in range(3):
            scaled = [r.copy() for r in rows]
            scaled[i] = scaled[i] * 2.5
            assert tucker_eval(core, scaled) == pytest.approx(2.5 * base, rel=1e-12)

    def test_shape_errors(self):
        core = DenseTensor.from_array(np.zeros((2, 2, 2)))
        with pytest.raises(ShapeError):
            tucker_eval(core, [np.zeros(2), np.zeros(3), np.zeros(2)])
        with pytest.raises(ShapeError):
            tucker_eval(core, [np.zeros(2), np.zeros(2)])
        with pytest.raises(ShapeError):
            tucker_eval(DenseTensor.from_array(np.zeros((2, 3, 2))),
                        [np.zeros(2), np.zeros(3), np.zeros(2)])


class TestParafacEval:
    def test_rank_one(self):
        assert parafac_eval([1.0], [[2.0], [3.0], [4.0]]) == pytest.approx(24.0)

    def test_zero_weights(self):
        rng = np.random.default_rng(1)
        rows = [rng.normal(size=4) for _ in range(3)]
        assert parafac_eval(np.zeros(4), rows) == 0.0

    def test_diagonal_embedding_identity(self):
        rng = np.random.default_rng(7)
        g = rng.normal(size=4)
        rows = [rng.normal(size=4) for _ in range(3)]
        emb = embed_parafac_as_tucker(g, 3)
        assert parafac_eval(g, rows) == pytest.approx(
            tucker_eval(emb, rows), abs=1e-12
        )

    def test_embedding_identity_many_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            order = int(rng.integers(2, 5))
            rank = int(rng.integers(1, 6))
            g = rng.uniform(-1, 1, rank)
            rows = [rng.uniform(-1, 1, rank) for _ in range(order)]
            emb = embed_parafac_as_tucker(g, order)
            assert abs(parafac_eval(g, rows) - tucker_eval(emb, rows)) <= 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            parafac_eval(np.ones(3), [np.ones(3), np.ones(2), np.ones(3)])


class TestEmbedParafacAsTucker:
    def test_scalar_weight(self):
        t = embed_parafac_as_tucker([5.0], 3)
        assert t.dims == (1, 1, 1)
        assert t.values[0] == 5.0

    def test_two_weights(self):
        t = embed_parafac_as_tucker(np.array([1.0, 2.0]), 3)
        arr = t.array
        assert arr[0, 0, 0] == 1.0 and arr[1, 1, 1] == 2.0
        assert np.count_nonzero(arr) == 2

    def test_superdiagonal_only(self):
        rng = np.random.default_rng(5)
        g = rng.normal(size=3)
        t = embed_parafac_as_tucker(g, 4)
        assert t.dims == (3, 3, 3, 3)
        assert np.count_nonzero(t.array) == 3
        for r in range(3):
            assert t.array[r, r, r, r] == g[r]

    def test_parameter_validation(self):
        with pytest.raises(ShapeError):
            embed_parafac_as_tucker(np.ones(2), 1)
        with pytest.raises(ShapeError):
            embed_parafac_as_tucker(np.ones(0), 3)


class TestModeContract:
    def test_identity_matrix(self):
        t = DenseTensor.from_array(np.eye(2))
        out = mode_contract(t, np.array([1.0, 1.0]), 0)
        np.testing.assert_allclose(out.array, [1.0, 1.0])

    def test_all_ones_tensor(self):
        t = DenseTensor.from_array(np.ones((2, 3, 2)))
        out = mode_contract(t, np.array([1.0, 2.0, 3.0]), 1)
        assert out.dims == (2, 2)
        np.testing.assert_allclose(out.array, 6.0)

    def test_every_mode_matches_direct_sum(self):
        rng = np.random.default_rng(9)
        t = DenseTensor.from_array(rng.normal(size=(3, 3, 3)))
        v = rng.normal(size=3)
        for mode in range(3):
            out = mode_contract(t, v, mode)
            direct = np.tensordot(t.array, v, axes=(mode, 0))
            np.testing.assert_allclose(out.array, direct, atol=1e-12)

    def test_basis_vector_extracts_slice(self):
        rng = np.random.default_rng(13)
        t = DenseTensor.from_array(rng.normal(size=(4, 3, 2)))
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1.0
            out = mode_contract(t, e, 1)
            np.testing.assert_array_equal(out.array, t.array[:, k, :])

    def test_order_one_wraps_scalar(self):
        t = DenseTensor.from_array(np.array([1.0, 2.0, 3.0]))
        out = mode_contract(t, np.array([1.0, 1.0, 1.0]), 0)
        assert out.dims == (1,)
        assert out.values[0] == pytest.approx(6.0)

    def test_errors(self):
        t = DenseTensor.from_array(np.ones((2, 2)))
        with pytest.raises(ShapeError):
            mode_contract(t, np.ones(2), 2)
        with pytest.raises(ShapeError):
            mode_contract(t, np.ones(3), 0)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(min_value=2, max_value=4),
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=0, max_value=2**31 - 1),
)
def test_sequential_contraction_equals_nested_loops(order, rank, seed):
    rng = np.random.default_rng(seed)
    core = DenseTensor.from_array(rng.uniform(-1, 1, (rank,) * order))
    rows = [rng.uniform(-1, 1, rank) for _ in range(order)]
    assert abs(tucker_eval(core, rows) - naive_tucker(core.array, rows)) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(
    st.integers(min_value=2, max_value=4),
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=0, max_value=2**31 - 1),
)
def test_parafac_is_tucker_special_case(order, rank, seed):
    rng = np.random.default_rng(seed)
    g = rng.uniform(-1, 1, rank)
    rows = [rng.uniform(-1, 1, rank) for _ in range(order)]
    emb = embed_parafac_as_tucker(g, order)
    assert abs(parafac_eval(g, rows) - tucker_eval(emb, rows)) <= 1e-12
