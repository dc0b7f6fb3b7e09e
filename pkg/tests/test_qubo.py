import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sparsequbo.qubo import (
    QuboInstance,
    ShapeError,
    build_qubo,
    format_qubo,
    load_qubo,
    dump_qubo,
    objective_energy,
    parse_qubo,
    qubo_energy,
    reconstruct,
    sparsity,
)


def plain_objective(d, x, lam, a):
    # independent of numpy linear algebra: explicit loops
    m, n = len(d), len(d[0])
    err = 0.0
    for r in range(m):
        s = x[r] - sum(d[r][k] * a[k] for k in range(n))
        err += s * s
    return 0.5 * err + lam * sum(a)


class TestBuildQubo:
    def test_single_atom(self):
        inst = build_qubo([[1.0]], [1.0], 0.1)
        assert inst.h == pytest.approx([-0.4])
        assert inst.q.shape == (1, 1) and inst.q[0, 0] == 0.0
        assert inst.couplings() == {}
        assert inst.offset == 0.5

    def test_identity_zero_signal(self):
        inst = build_qubo(np.eye(2), [0.0, 0.0], 0.0)
        assert inst.h.tolist() == [0.5, 0.5]
        assert inst.q[0, 1] == 0.0
        assert inst.offset == 0.0

    def test_coefficients(self):
        rng = np.random.default_rng(3)
        d = rng.standard_normal((5, 4))
        x = rng.uniform(0, 1, 5)
        inst = build_qubo(d, x, 0.2)
        for i in range(4):
            assert inst.h[i] == pytest.approx(-d[:, i] @ x + 0.2 + 0.5 * d[:, i] @ d[:, i])
            for j in range(4):
                expected = d[:, i] @ d[:, j] if i < j else 0.0
                assert inst.q[i, j] == pytest.approx(expected)

    def test_seed7_matches_objective_on_all_states(self):
        rng = np.random.default_rng(7)
        d = rng.standard_normal((4, 6))
        x = rng.uniform(0, 1, 4)
        inst = build_qubo(d, x, 0.3)
        dl, xl = d.tolist(), x.tolist()
        for bits in itertools.product((0, 1), repeat=6):
            assert abs(plain_objective(dl, xl, 0.3, bits) - (inst.offset + qubo_energy(inst, bits))) <= 1e-9

    def test_half_gram_couplings_break_equivalence(self):
        # the literal 1/2 D^T D reading of the couplings is not equivalent
        rng = np.random.default_rng(7)
        d = rng.standard_normal((4, 6))
        x = rng.uniform(0, 1, 4)
        inst = build_qubo(d, x, 0.3)
        halved = QuboInstance(inst.h, 0.5 * inst.q, inst.offset)
        diffs = [abs(objective_energy(d, x, 0.3, b) - halved.offset - qubo_energy(halved, b))
                 for b in itertools.product((0, 1), repeat=6)]
        assert max(diffs) > 1e-3

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            build_qubo(np.ones((3, 2)), [1.0, 2.0], 0.1)

    def test_negative_penalty(self):
        with pytest.raises(ValueError):
            build_qubo(np.ones((1, 1)), [1.0], -0.1)

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        d, x = rng.standard_normal((6, 9)), rng.uniform(0, 1, 6)
        a, b = build_qubo(d, x, 0.4), build_qubo(d, x, 0.4)
        assert a == b
        assert a.h.tobytes() == b.h.tobytes() and a.q.tobytes() == b.q.tobytes()

    def test_immutable(self):
        inst = build_qubo(np.eye(2), [1.0, 0.0], 0.1)
        with pytest.raises(ValueError):
            inst.h[0] = 3.0


class TestEnergies:
    def test_zero_state(self):
        inst = build_qubo(np.random.default_rng(1).standard_normal((3, 5)), [0.2, 0.4, 0.9], 0.5)
        assert qubo_energy(inst, np.zeros(5, dtype=int)) == 0.0

    def test_single_variable(self):
        assert qubo_energy(QuboInstance([-0.4], [[0.0]]), [1]) == pytest.approx(-0.4)

    def test_pair(self):
        inst = QuboInstance.from_dicts([1.0, 1.0], {(0, 1): -3.0})
        assert qubo_energy(inst, [1, 1]) == -1.0

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            qubo_energy(QuboInstance([1.0, 2.0], np.zeros((2, 2))), [1])

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            qubo_energy(QuboInstance([1.0, 2.0], np.zeros((2, 2))), [1, 2])

    def test_objective_zero_state(self):
        x = np.array([0.3, 0.4])
        assert objective_energy(np.eye(2), x, 0.7, [0, 0]) == pytest.approx(0.5 * 0.25)

    def test_objective_perfect_reconstruction(self):
        assert objective_energy([[1.0]], [1.0], 0.1, [1]) == pytest.approx(0.1)

    def test_vectorised_energies(self):
        rng = np.random.default_rng(5)
        inst = build_qubo(rng.standard_normal((4, 7)), rng.uniform(0, 1, 4), 0.2)
        states = rng.integers(0, 2, (30, 7))
        expected = [qubo_energy(inst, s) for s in states]
        assert inst.energies(states) == pytest.approx(expected, abs=1e-12)

    def test_lower_triangle_rejected(self):
        with pytest.raises(ValueError):
            QuboInstance([0.0, 0.0], [[0.0, 0.0], [1.0, 0.0]])

    def test_from_dicts_folds_pairs(self):
        inst = QuboInstance.from_dicts([0.0, 0.0, 0.0], {(2, 0): 1.5, (0, 2): 0.5})
        assert inst.couplings() == {(0, 2): 2.0}


class TestReconstruct:
    d = np.arange(12.0).reshape(3, 4)

    def test_zero(self):
        assert reconstruct(self.d, [0, 0, 0, 0]).tolist() == [0.0, 0.0, 0.0]

    def test_unit(self):
        assert reconstruct(self.d, [0, 0, 1, 0]).tolist() == self.d[:, 2].tolist()

    def test_two_columns(self):
        assert reconstruct(self.d, [1, 0, 0, 1]).tolist() == (self.d[:, 0] + self.d[:, 3]).tolist()

    def test_shape(self):
        with pytest.raises(ShapeError):
            reconstruct(self.d, [1, 0])


def test_sparsity_counts_ones():
    assert sparsity([0, 1, 1, 0, 1]) == 3
    a = np.array([1, 0, 1])
    assert sparsity(a) == int(np.abs(a).sum()) == int(np.count_nonzero(a))


small_problem = st.integers(1, 8).flatmap(
    lambda n: st.tuples(
        arrays(np.float64, (3, n), elements=st.floats(-2, 2)),
        arrays(np.float64, 3, elements=st.floats(0, 1)),
        st.floats(0, 2),
        arrays(np.int8, n, elements=st.integers(0, 1)),
    )
)


@settings(max_examples=200, deadline=None)
@given(small_problem)
def test_exactness_property(problem):
    d, x, lam, a = problem
    inst = build_qubo(d, x, lam)
    assert abs(objective_energy(d, x, lam, a) - inst.offset - qubo_energy(inst, a)) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(small_problem, st.floats(0, 3))
def test_penalty_shift_is_linear_in_sparsity(problem, dlam):
    d, x, lam, a = problem
    diff = objective_energy(d, x, lam + dlam, a) - objective_energy(d, x, lam, a)
    assert diff == pytest.approx(dlam * a.sum(), abs=1e-9)


class TestSerialisation:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(11)
        inst = build_qubo(rng.standard_normal((5, 8)), rng.uniform(0, 1, 5), 0.37)
        dump_qubo(inst, tmp_path / "q.txt")
        assert load_qubo(tmp_path / "q.txt") == inst

    def test_format(self):
        text = format_qubo(QuboInstance.from_dicts([-0.5, 2.0], {(0, 1): 0.25}, offset=1.5))
        assert text.splitlines() == ["n 2 offset 1.5", "h 0 -0.5", "h 1 2.0", "q 0 1 0.25"]

    def test_rejects_lower_pair(self):
        with pytest.raises(ValueError, match="i < j"):
            parse_qubo("n 2 offset 0.0\nh 0 1.0\nh 1 1.0\nq 1 0 2.0\n")

    def test_rejects_bad_header(self):
        with pytest.raises(ValueError):
            parse_qubo("h 0 1.0\n")
