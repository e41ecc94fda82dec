import numpy as np
import pytest

from qsep.errors import (
    DefectiveZeroEigenvalue,
    NegativeRealEigenvalue,
    NonSquare,
    TargetOutsideRange,
    UnitCircleEigenvalue,
)
from qsep.matcore import (
    DEFAULT_TOL,
    Tolerances,
    accretivity_classify,
    nr_witness,
    numerical_range_boundary,
    principal_sqrt,
    spectral_norm,
    stein_split,
)

from conftest import complex_normal, conditioned_invertible


class TestTolerances:
    def test_defaults(self):
        t = Tolerances()
        assert t.psd_margin == 1e-9
        assert t.rank_rel == 1e-8
        assert t.det_zero_rel == 1e-8
        assert t.eig_cond_max == 1e6

    def test_validation(self):
        with pytest.raises(ValueError):
            Tolerances(psd_margin=0)
        with pytest.raises(ValueError):
            Tolerances(rank_rel=1.5)


class TestAccretivity:
    def test_identity(self):
        cls = accretivity_classify(np.eye(2))
        assert cls.tag == "strictly_accretive"
        assert cls.margin == pytest.approx(1.0)

    def test_nilpotent_indefinite(self):
        # Hermitian part has eigenvalues +-1/2
        cls = accretivity_classify(np.array([[0, 1], [0, 0]], dtype=complex))
        assert cls.tag == "none"
        assert cls.margin == pytest.approx(-0.5)

    def test_marginal(self):
        # A + A* = diag(0, 2)
        cls = accretivity_classify(np.diag([1j, 1]))
        assert cls.tag == "accretive"
        assert cls.margin == pytest.approx(0.0, abs=1e-15)

    def test_quasi_strict(self):
        # accretive with a sharp singular origin
        cls = accretivity_classify(np.diag([1.0, 0.0]))
        assert cls.tag == "quasi_strictly_accretive"

    def test_nonsquare(self):
        with pytest.raises(NonSquare):
            accretivity_classify(np.ones((2, 3)))

    def test_agrees_with_direct_eigensolve(self, rng):
        for _ in range(50):
            a = complex_normal(rng, (4, 4))
            cls = accretivity_classify(a)
            direct = float(np.linalg.eigvalsh((a + a.conj().T) / 2)[0])
            assert cls.margin == direct


class TestNumericalRange:
    def test_segment_outside(self):
        nrb = numerical_range_boundary(np.diag([1, 1j]))
        assert nrb.origin == "outside"
        # every boundary point inside the hull of {1, j}
        for p in nrb.points:
            assert -1e-12 <= p.real <= 1 + 1e-12
            assert -1e-12 <= p.imag <= 1 + 1e-12
            assert p.real + p.imag <= 1 + 1e-9

    def test_nilpotent_disk(self):
        # supports are the eigenvalues +-1/2 of the rotated Hermitian part
        nrb = numerical_range_boundary(np.array([[0, 1], [0, 0]], dtype=complex))
        assert nrb.origin == "interior"
        assert np.allclose(nrb.supports, 0.5, atol=1e-12)
        assert np.allclose(np.abs(nrb.points), 0.5, atol=1e-12)

    def test_real_segment_interior_on_offset_grid(self):
        # a grid avoiding the exact tangency directions keeps the tag interior
        nrb = numerical_range_boundary(np.diag([2.0, -1.0]), num_angles=30)
        assert nrb.origin == "interior"
        th = nrb.angles
        assert np.allclose(nrb.supports, np.maximum(2 * np.cos(th), -np.cos(th)))

    def test_min_angles(self):
        with pytest.raises(ValueError):
            numerical_range_boundary(np.eye(2), num_angles=4)

    def test_points_inside_range(self, rng):
        # re-check returned points against support functions on a 4x finer grid
        for _ in range(20):
            a = complex_normal(rng, (4, 4))
            nrb = numerical_range_boundary(a, num_angles=64)
            fine = numerical_range_boundary(a, num_angles=256)
            scale = spectral_norm(a)
            for p in nrb.points:
                proj = np.cos(fine.angles) * p.real + np.sin(fine.angles) * p.imag
                assert np.all(proj <= fine.supports + 1e-8 * scale)

    def test_origin_tag_monotone_under_refinement(self, rng):
        order = {"interior": 0, "boundary": 1, "outside": 2}
        mats = [complex_normal(rng, (3, 3)) for _ in range(15)]
        mats += [np.diag([2.0, -1.0]), np.diag([1.0, 0.0]), np.eye(3) + 0j]
        for a in mats:
            coarse = numerical_range_boundary(a, num_angles=16)
            fine = numerical_range_boundary(a, num_angles=64)
            assert order[fine.origin] >= order[coarse.origin]


class TestPrincipalSqrt:
    def test_identity(self):
        assert np.allclose(principal_sqrt(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        s = principal_sqrt(np.diag([4.0, 9.0]))
        assert np.allclose(s, np.diag([2.0, 3.0]))

    def test_defective_zero(self):
        with pytest.raises(DefectiveZeroEigenvalue):
            principal_sqrt(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_negative_real(self):
        with pytest.raises(NegativeRealEigenvalue):
            principal_sqrt(np.array([[-4.0]]))

    def test_semi_simple_zero(self):
        s = principal_sqrt(np.diag([4.0, 0.0, 1.0]))
        assert np.allclose(s, np.diag([2.0, 0.0, 1.0]))

    def test_random_spectra_off_negative_axis(self, rng):
        # residual below 1e-10 relative on spectra sampled away from the cut
        for _ in range(500):
            n = int(rng.integers(2, 5))
            moduli = rng.uniform(0.1, 3.0, n)
            angles = rng.uniform(-2.7, 2.7, n)
            x = conditioned_invertible(rng, n, 1e2)
            m = x @ np.diag(moduli * np.exp(1j * angles)) @ np.linalg.inv(x)
            s = principal_sqrt(m)
            resid = np.linalg.norm(s @ s - m, "fro") / np.linalg.norm(m, "fro")
            assert resid <= 1e-10
            assert np.all(np.linalg.eigvals(s).real >= -1e-9 * spectral_norm(s))

    def test_real_input_real_output(self, rng):
        for _ in range(20):
            a = rng.standard_normal((3, 3))
            m = a @ a.T + 0.1 * np.eye(3)  # spd, clearly off the cut
            s = principal_sqrt(m)
            assert np.allclose(s.imag, 0)


class TestSteinSplit:
    def test_scalar_stable_matches_series(self):
        # independent oracle: partial geometric series sum
        series = sum(0.25**k for k in range(200))
        assert series == pytest.approx(4 / 3, abs=1e-15)
        sol = stein_split(np.array([[0.5]]))
        assert sol.M[0, 0] == pytest.approx(4 / 3, abs=1e-12)
        assert sol.Q[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_scalar_antistable_matches_series(self):
        series = -sum(0.25**k for k in range(1, 200))
        assert series == pytest.approx(-1 / 3, abs=1e-15)
        sol = stein_split(np.array([[2.0]]))
        assert sol.M[0, 0] == pytest.approx(-1 / 3, abs=1e-12)
        # substitution: M - 4M = 1
        assert sol.M[0, 0] - 4 * sol.M[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_blockwise(self):
        sol = stein_split(np.diag([0.5, 2.0]))
        assert np.allclose(np.diag(sol.M), [4 / 3, -1 / 3])
        assert np.allclose(sol.Q, np.eye(2))

    def test_unit_circle(self):
        f = np.diag([np.exp(1j * np.pi / 7), 0.5])
        with pytest.raises(UnitCircleEigenvalue):
            stein_split(f)

    def test_random_split_spectra(self, rng):
        for _ in range(500):
            n = int(rng.integers(1, 5))
            k = int(rng.integers(0, n + 1))
            moduli = np.concatenate([rng.uniform(0.05, 0.9, k), rng.uniform(1.1, 3.0, n - k)])
            angles = rng.uniform(0, 2 * np.pi, n)
            x = conditioned_invertible(rng, n, 1e2)
            f = x @ np.diag(moduli * np.exp(1j * angles)) @ np.linalg.inv(x)
            sol = stein_split(f)
            assert sol.residual < 1e-9
            assert np.linalg.eigvalsh(sol.Q)[0] > 0


class TestNrWitness:
    def test_vertex(self):
        x = nr_witness(np.diag([1, 1j]), 1.0)
        assert abs(x.conj() @ np.diag([1, 1j]) @ x - 1.0) < 1e-8

    def test_segment_midpoint(self):
        a = np.diag([1, 1j])
        x = nr_witness(a, (1 + 1j) / 2)
        assert abs(np.linalg.norm(x) - 1) < 1e-12
        assert abs(x.conj() @ a @ x - (1 + 1j) / 2) < 1e-8
        # equal-weight combination of the two coordinate directions
        assert abs(abs(x[0]) ** 2 - 0.5) < 1e-7
        assert abs(abs(x[1]) ** 2 - 0.5) < 1e-7

    def test_disk_interior_point(self):
        a = np.array([[0, 1], [0, 0]], dtype=complex)
        x = nr_witness(a, -0.5)
        assert abs(np.linalg.norm(x) - 1) < 1e-12
        assert abs(x.conj() @ a @ x - (-0.5)) < 1e-8 * 1.5

    def test_outside_raises(self):
        with pytest.raises(TargetOutsideRange):
            nr_witness(np.diag([1, 1j]), 5.0)

    def test_random_interior_targets(self, rng):
        for _ in range(40):
            a = complex_normal(rng, (3, 3))
            nrb = numerical_range_boundary(a, num_angles=64)
            # convex combination of two boundary values lies in the range
            i, j = rng.integers(0, 64, 2)
            t = rng.uniform(0.1, 0.9)
            target = (1 - t) * nrb.points[i] + t * nrb.points[j]
            x = nr_witness(a, target)
            assert abs(np.linalg.norm(x) - 1) < 1e-12
            assert abs(x.conj() @ a @ x - target) < 1e-8 * (1 + abs(target))
