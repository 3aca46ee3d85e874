"""Rule-table compilation to MPO/MPS and the annealing-Hamiltonian MPO."""

import numpy as np
import pytest

from qkptn.automata import (
    KET0,
    KET1,
    PAULI,
    Rule,
    RuleTable,
    annealing_mpo,
    load_tables,
    mpo_from_tables,
    mps_from_tables,
)
from qkptn.encoding import IsingModel
from qkptn.errors import DuplicateRuleError, ShapeError, TableChainError
from qkptn.mps import mpo_to_dense, mps_to_dense

I2, X, Z = PAULI["I"], PAULI["X"], PAULI["Z"]


def kron_chain(ops):
    out = np.array([[1.0]], dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def pauli_sum_dense(ising: IsingModel, s: float) -> np.ndarray:
    """Independent dense oracle built term by term with Kronecker products."""
    n = ising.n
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        h += -(1 - s) * kron_chain([X if k == i else I2 for k in range(n)])
        h += s * ising.h[i] * kron_chain([Z if k == i else I2 for k in range(n)])
    for (i, j), v in ising.j.items():
        h += s * v * kron_chain([Z if k in (i - 1, j - 1) else I2 for k in range(n)])
    return h


def random_ising(n, rng):
    h = rng.uniform(-2, 2, n)
    j = {
        (i, k): float(rng.uniform(-2, 2))
        for i in range(1, n + 1)
        for k in range(i + 1, n + 1)
    }
    return IsingModel(n=n, h=h, j=j)


class TestMpoFromTables:
    def test_identity_chain(self):
        tables = [RuleTable(1, 1, [Rule(1, 1, I2)]) for _ in range(3)]
        np.testing.assert_allclose(mpo_to_dense(mpo_from_tables(tables)), np.eye(8))

    def test_cross_coupled_chain(self):
        # O = sum_i (Z_i X_{i+1} + X_i Z_{i+1}) on n=3 via a 4-state automaton
        def table():
            return RuleTable(4, 4, [
                Rule(1, 1, I2), Rule(-1, -1, I2),
                Rule(1, 2, Z), Rule(1, 3, X),
                Rule(2, -1, X), Rule(3, -1, Z),
            ])

        dense = mpo_to_dense(mpo_from_tables([table() for _ in range(3)]))
        ref = (
            kron_chain([Z, X, I2]) + kron_chain([X, Z, I2])
            + kron_chain([I2, Z, X]) + kron_chain([I2, X, Z])
        )
        np.testing.assert_allclose(dense, ref, atol=1e-14)

    def test_nearest_neighbor_zz(self):
        def table():
            return RuleTable(3, 3, [
                Rule(1, 1, I2), Rule(-1, -1, I2),
                Rule(1, 2, Z), Rule(2, -1, Z),
            ])

        dense = mpo_to_dense(mpo_from_tables([table() for _ in range(4)]))
        ref = sum(
            kron_chain([Z if k in (i, i + 1) else I2 for k in range(4)])
            for i in range(3)
        )
        np.testing.assert_allclose(dense, ref, atol=1e-14)

    def test_chain_mismatch_rejected(self):
        with pytest.raises(TableChainError):
            mpo_from_tables([
                RuleTable(2, 3, [Rule(1, 1, I2)]),
                RuleTable(2, 2, [Rule(1, 1, I2)]),
            ])

    def test_duplicate_rule_rejected(self):
        with pytest.raises(DuplicateRuleError):
            RuleTable(2, 2, [Rule(1, 2, I2), Rule(1, -1, Z)])

    def test_index_out_of_range(self):
        with pytest.raises(ShapeError):
            RuleTable(2, 2, [Rule(3, 1, I2)])


class TestMpsFromTables:
    @staticmethod
    def run_of_two_tables(n):
        # accepts strings with exactly one run of exactly two consecutive 1s
        def table():
            return RuleTable(3, 3, [
                Rule(1, 1, KET0), Rule(1, 2, KET1),
                Rule(2, -1, KET1), Rule(-1, -1, KET0),
            ])

        return [table() for _ in range(n)]

    def test_two_consecutive_ones_n4(self):
        v = mps_to_dense(mps_from_tables(self.run_of_two_tables(4)))
        expected = np.zeros(16)
        for idx in (0b0011, 0b0110, 0b1100):
            expected[idx] = 1.0
        np.testing.assert_allclose(v, expected, atol=1e-14)

    def test_single_path(self):
        tables = [
            RuleTable(1, 1, [Rule(1, 1, KET1)]),
            RuleTable(1, 1, [Rule(1, 1, KET0)]),
            RuleTable(1, 1, [Rule(1, 1, KET1)]),
        ]
        np.testing.assert_allclose(mps_to_dense(mps_from_tables(tables)), np.eye(8)[5])

    def test_n5_matches_language_enumeration(self):
        v = mps_to_dense(mps_from_tables(self.run_of_two_tables(5)))
        for idx in range(32):
            bits = f"{idx:05b}"
            accepted = bits.count("1") == 2 and "11" in bits
            assert v[idx] == pytest.approx(1.0 if accepted else 0.0, abs=1e-14)


class TestAnnealingMpo:
    def test_s_zero_is_transverse_field(self):
        rng = np.random.default_rng(3)
        for n in (2, 4, 5):
            ising = random_ising(n, rng)
            dense = mpo_to_dense(annealing_mpo(ising, 0.0))
            ref = -sum(
                kron_chain([X if k == i else I2 for k in range(n)]) for i in range(n)
            )
            np.testing.assert_allclose(dense, ref, atol=1e-12)

    def test_n3_diagonal_case(self):
        ising = IsingModel(
            n=3, h=[1.0, 0.0, -1.0],
            j={(1, 2): 2.0, (1, 3): -1.0, (2, 3): 0.5},
        )
        dense = mpo_to_dense(annealing_mpo(ising, 1.0))
        np.testing.assert_allclose(dense, pauli_sum_dense(ising, 1.0), atol=1e-12)

    def test_n6_interior_bond_dims(self):
        ising = random_ising(6, np.random.default_rng(0))
        mpo = annealing_mpo(ising, 0.5)
        left_dims = [a.shape[0] for a in mpo.sites]
        assert left_dims[1:] == [4, 5, 5, 4, 3]
        expected = [min(k + 2, 6 - k + 3) for k in range(2, 7)]
        assert mpo.bond_dims() == expected

    def test_dense_equivalence_sweep(self):
        rng = np.random.default_rng(17)
        for n in range(2, 9):
            for _ in range(5):
                ising = random_ising(n, rng)
                for s in (0.0, 0.3, 0.7, 1.0):
                    dense = mpo_to_dense(annealing_mpo(ising, s))
                    assert np.max(np.abs(dense - pauli_sum_dense(ising, s))) < 1e-11

    def test_hermitian_and_real(self):
        ising = random_ising(5, np.random.default_rng(1))
        dense = mpo_to_dense(annealing_mpo(ising, 0.6))
        np.testing.assert_array_equal(dense, dense.conj().T)
        assert np.max(np.abs(dense.imag)) == 0.0

    def test_linearity_in_s(self):
        ising = random_ising(4, np.random.default_rng(2))
        h0 = mpo_to_dense(annealing_mpo(ising, 0.0))
        h1 = mpo_to_dense(annealing_mpo(ising, 1.0))
        for s in (0.2, 0.5, 0.9):
            hs = mpo_to_dense(annealing_mpo(ising, s))
            np.testing.assert_allclose(hs, (1 - s) * h0 + s * h1, atol=1e-12)

    def test_n1_special_case(self):
        ising = IsingModel(n=1, h=[1.0])
        np.testing.assert_allclose(
            mpo_to_dense(annealing_mpo(ising, 1.0)), np.diag([1.0, -1.0])
        )
        np.testing.assert_allclose(mpo_to_dense(annealing_mpo(ising, 0.0)), -X)

    def test_s_out_of_range(self):
        with pytest.raises(ShapeError):
            annealing_mpo(IsingModel(n=2, h=[0.0, 0.0]), 1.5)


class TestLoadTables:
    def test_json_round_trip_by_dense(self):
        doc = """
        {"sites": [
          {"left_dim": 3, "right_dim": 3, "rules": [
            {"left": 1, "right": 1, "op": "I"},
            {"left": -1, "right": -1, "op": "I"},
            {"left": 1, "right": 2, "op": "Z"},
            {"left": 2, "right": -1, "op": "Z", "coeff": 0.5}
          ]},
          {"left_dim": 3, "right_dim": 3, "rules": [
            {"left": 1, "right": 1, "op": "I"},
            {"left": -1, "right": -1, "op": "I"},
            {"left": 1, "right": 2, "op": "Z"},
            {"left": 2, "right": -1, "op": "Z", "coeff": 0.5}
          ]}
        ]}
        """
        dense = mpo_to_dense(mpo_from_tables(load_tables(doc)))
        np.testing.assert_allclose(dense, 0.5 * kron_chain([Z, Z]), atol=1e-14)

    def test_matrix_valued_op(self):
        doc = """
        {"sites": [{"left_dim": 1, "right_dim": 1, "rules": [
            {"left": 1, "right": 1, "op": [[0, 1], [1, 0]]}
        ]}]}
        """
        dense = mpo_to_dense(mpo_from_tables(load_tables(doc)))
        np.testing.assert_allclose(dense, X)

    def test_unknown_name_rejected(self):
        with pytest.raises(ShapeError):
            load_tables(
                '{"sites": [{"left_dim": 1, "right_dim": 1,'
                ' "rules": [{"left": 1, "right": 1, "op": "Q"}]}]}'
            )
