import numpy as np
import pytest

from qsep.errors import NotSectorial, ZeroMatrix
from qsep.phase import (
    classify_and_phases,
    is_quasi_strictly_accretive,
    is_strictly_accretive,
    phase_sum_condition,
    sectorial_factorize,
)

from conftest import conditioned_invertible, random_sectorial


class TestClassification:
    def test_diagonal_sectorial(self):
        p = classify_and_phases(np.diag([np.exp(1j * np.pi / 4), np.exp(-1j * np.pi / 6)]))
        assert p.sectorial.tag == "sectorial"
        assert np.allclose(p.phases, [np.pi / 4, -np.pi / 6], atol=1e-9)
        assert p.phi_max == pytest.approx(np.pi / 4, abs=1e-9)
        assert p.phi_min == pytest.approx(-np.pi / 6, abs=1e-9)

    def test_nilpotent_none(self):
        p = classify_and_phases(np.array([[0, 1], [0, 0]], dtype=complex))
        assert p.sectorial.tag == "none"
        assert p.sectorial.opening_angle == pytest.approx(2 * np.pi)
        assert p.phases is None

    def test_rank_deficient_quasi(self):
        p = classify_and_phases(np.diag([1.0, 0.0]))
        assert p.sectorial.tag == "quasi_sectorial"
        assert len(p.phases) == 1
        assert p.phases[0] == pytest.approx(0.0, abs=1e-9)

    def test_indefinite_hermitian_semi(self):
        # canonical representative has phase sum pi
        p = classify_and_phases(np.diag([1.0, -1.0]))
        assert p.sectorial.tag == "semi_sectorial"
        assert np.allclose(p.phases, [np.pi, 0.0], atol=1e-7)
        assert p.phi_max + p.phi_min == pytest.approx(np.pi, abs=1e-7)

    def test_jordan_block_semi(self):
        p = classify_and_phases(np.array([[1.0, 2.0], [0.0, 1.0]]))
        assert p.sectorial.tag == "semi_sectorial"
        assert p.center == pytest.approx(0.0, abs=1e-8)
        assert p.phi_max == pytest.approx(np.pi / 2, abs=1e-3)

    def test_zero_matrix(self):
        with pytest.raises(ZeroMatrix):
            classify_and_phases(np.zeros((2, 2)))

    def test_inclusion_chain_invariants(self, rng):
        # sectorial implies opening below pi; semi caps at pi
        for _ in range(20):
            a, _ = random_sectorial(rng, 3)
            p = classify_and_phases(a)
            assert p.sectorial.tag == "sectorial"
            assert p.sectorial.opening_angle < np.pi
            assert p.phi_max - p.phi_min == pytest.approx(p.sectorial.opening_angle, abs=1e-9)


class TestFactorization:
    def test_identity(self):
        f = sectorial_factorize(np.eye(2))
        assert np.allclose(f.D, np.eye(2))
        assert f.residual < 1e-12

    def test_accretive_nonnormal(self):
        a = np.array([[2.0, 1.0], [0.0, 1.0]])
        # strictly accretive: A + A* = [[4,1],[1,2]] > 0
        assert np.all(np.linalg.eigvalsh(a + a.T) > 0)
        f = sectorial_factorize(a)
        assert f.residual < 1e-9
        d = np.diag(f.D)
        assert np.allclose(np.abs(d), 1, atol=1e-12)
        assert np.all(np.abs(np.angle(d)) < np.pi / 2)

    def test_not_sectorial(self):
        with pytest.raises(NotSectorial):
            sectorial_factorize(np.diag([1.0, -1.0]))

    def test_soundness_random(self, rng):
        for _ in range(50):
            a, _ = random_sectorial(rng, int(rng.integers(2, 5)))
            f = sectorial_factorize(a)
            assert f.residual < 1e-9
            assert np.allclose(np.abs(np.diag(f.D)), 1, atol=1e-12)
            assert np.allclose(f.T.conj().T @ f.D @ f.T, a, atol=1e-8 * np.linalg.norm(a))


class TestPhaseProperties:
    def test_congruence_invariance(self, rng):
        # sorted phases survive congruence within 1e-7 over 200 trials
        for _ in range(200):
            n = int(rng.integers(2, 5))
            a, phases = random_sectorial(rng, n)
            t = conditioned_invertible(rng, n, 1e3)
            p1 = classify_and_phases(a)
            p2 = classify_and_phases(t.conj().T @ a @ t)
            assert np.allclose(p1.phases, p2.phases, atol=1e-7)

    def test_construction_phases_recovered(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 5))
            a, phases = random_sectorial(rng, n)
            p = classify_and_phases(a)
            assert np.allclose(p.phases, phases, atol=1e-7)

    def test_strictly_accretive_phases_in_open_half(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 4))
            a, _ = random_sectorial(rng, n, spread_max=2.0, center_range=0.4)
            if not is_strictly_accretive(a):
                continue
            p = classify_and_phases(a)
            assert np.all(p.phases < np.pi / 2)
            assert np.all(p.phases > -np.pi / 2)

    def test_eigenvalue_phase_sandwich(self, rng):
        # eigenvalue angles of AB sit between the summed extreme phases
        done = 0
        while done < 60:
            n = int(rng.integers(2, 4))
            a, _ = random_sectorial(rng, n)
            b, _ = random_sectorial(rng, n)
            res = phase_sum_condition(a, b)
            if not res.feasible:
                continue
            done += 1
            lo = res.profile_a.phi_min + res.profile_b.phi_min
            hi = res.profile_a.phi_max + res.profile_b.phi_max
            center = (lo + hi) / 2
            for lam in np.linalg.eigvals(a @ b):
                ang = center + np.angle(lam * np.exp(-1j * center))
                assert lo - 1e-7 <= ang <= hi + 1e-7

    def test_canonicalization_idempotent(self, rng):
        from qsep.phase import _canonical_offset

        for _ in range(50):
            a, _ = random_sectorial(rng, 3)
            p = classify_and_phases(a)
            k, _ = _canonical_offset(p.phi_max + p.phi_min)
            assert k == 0

    def test_quasi_strict_predicate(self):
        assert is_quasi_strictly_accretive(np.eye(2))
        assert is_quasi_strictly_accretive(np.diag([1.0, 0.0]))
        assert not is_quasi_strictly_accretive(np.diag([1.0, -1.0]))
        assert not is_quasi_strictly_accretive(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestPhaseSumCondition:
    def test_rotated_identity_feasible(self):
        a = np.exp(1j * np.pi / 3) * np.eye(2)
        res = phase_sum_condition(a, a)
        assert res.feasible
        assert res.offset == 0
        assert res.sum_hi == pytest.approx(2 * np.pi / 3, abs=1e-9)

    def test_boundary_infeasible(self):
        a = 1j * np.eye(2)
        res = phase_sum_condition(a, a)
        assert res.class_ok
        assert not res.feasible

    def test_negated_identity_offset(self):
        a = -np.eye(2)
        res = phase_sum_condition(a, a)
        assert res.feasible
        assert res.offset == -1
        # spot-check with random congruences: the loop never closes at -1
        rng = np.random.default_rng(3)
        for _ in range(100):
            t = conditioned_invertible(rng, 2, 1e3)
            s = conditioned_invertible(rng, 2, 1e3)
            loop = np.eye(2) + (t.conj().T @ a @ t) @ (s.conj().T @ a @ s)
            assert abs(np.linalg.det(loop)) > 1e-10

    def test_class_violation(self):
        nilp = np.array([[0, 1], [0, 0]], dtype=complex)
        res = phase_sum_condition(nilp, np.eye(2, dtype=complex))
        assert not res.class_ok
        assert not res.feasible
