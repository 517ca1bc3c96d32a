"""Tests for structure constants and the eigenvalue classification of 3-dimensional Lie algebras."""

import random
from fractions import Fraction

import pytest

import nullforms
from liealg import (
    JacobiViolationError,
    NotClosedError,
    StructureConstants,
    abelian_ideal_2d,
    classify_adjoint,
    classify_algebra,
    structure_constants,
)
from symmetry import SymmetryBasis
from vectorfield import VectorField

E2 = StructureConstants.from_relations({(0, 2): {1: -1}, (1, 2): {0: 1}})
P11 = StructureConstants.from_relations({(0, 2): {1: 1}, (1, 2): {0: 1}})
L322 = StructureConstants.from_relations({(0, 2): {0: 2}, (1, 2): {1: 1}})
HEISENBERG = StructureConstants.from_relations({(0, 1): {2: 1}})


class TestStructureConstants:

    def test_dubins(self):
        sc = structure_constants(nullforms.symmetry_generators('E'))
        assert sc.nonzero_entries() == {(0, 2, 1): -1, (1, 2, 0): 1}
        assert sc == E2

    def test_hyperbolic(self):
        sc = structure_constants(nullforms.symmetry_generators('H'))
        assert sc.nonzero_entries() == {(0, 2, 1): 1, (1, 2, 0): 1}

    def test_parabolic(self):
        sc = structure_constants(nullforms.symmetry_generators('P'))
        assert sc.nonzero_entries() == {(0, 2, 0): 2, (1, 2, 1): 1}
        assert sc.relations() == ['[v1, v2] = 0', '[v1, v3] = 2*v1', '[v2, v3] = v2']

    def test_antisymmetric_completion(self):
        assert L322.vector(2, 0) == (-2, 0, 0)
        assert L322.coefficient(0, 2, 0) == 2

    def test_not_closed(self):
        with pytest.raises(NotClosedError):
            structure_constants(SymmetryBasis([VectorField(0, 0, 1), VectorField('w^2', 0, 0)]))

    def test_jacobi_rejects_corruption(self):
        # [e0, e1] = e2 with [e0, e2] = e0 breaks Jacobi on (e0, e1, e2)
        with pytest.raises(JacobiViolationError):
            StructureConstants.from_relations({(0, 1): {2: 1}, (0, 2): {0: 1}})

    def test_diagonal_entries_must_vanish(self):
        with pytest.raises(JacobiViolationError):
            StructureConstants({(1, 1): (1, 0, 0)})


class TestIdeal:

    @pytest.mark.parametrize('sc', [E2, P11, L322])
    def test_derived_ideal(self, sc):
        assert abelian_ideal_2d(sc) == ((1, 0, 0), (0, 1, 0))

    def test_abelian_algebra(self):
        assert abelian_ideal_2d(StructureConstants({})) is None

    def test_heisenberg(self):
        assert abelian_ideal_2d(HEISENBERG) is None


class TestClassification:

    def test_parabolic(self):
        cls = classify_algebra(L322)
        assert cls.matrix == ((2, 0), (0, 1))
        assert (cls.trace, cls.det) == (3, 2)
        assert cls.tag == 'ParabolicL322'
        assert cls.eigenvalue_ratio() == pytest.approx(2.0)

    def test_elliptic(self):
        cls = classify_algebra(E2)
        assert cls.matrix == ((0, 1), (-1, 0))
        assert (cls.trace, cls.det) == (0, 1)
        assert cls.tag == 'EllipticE2'
        assert cls.discriminant == -4

    def test_hyperbolic(self):
        cls = classify_algebra(P11)
        assert cls.matrix == ((0, 1), (1, 0))
        assert (cls.trace, cls.det) == (0, -1)
        assert cls.tag == 'HyperbolicP11'
        assert cls.label == 'VI_0 / L(3,2,-1)'

    def test_heisenberg_is_other(self):
        assert classify_algebra(HEISENBERG).tag == 'Other'

    def test_other_eigenvalue_ratios(self):
        assert classify_adjoint(((1, 0), (0, 1))) == 'Other'
        assert classify_adjoint(((3, 0), (0, 1))) == 'Other'
        assert classify_adjoint(((1, 0), (0, 2))) == 'ParabolicL322'

    @pytest.mark.parametrize('sc,tag', [(E2, 'EllipticE2'), (P11, 'HyperbolicP11'), (L322, 'ParabolicL322')])
    def test_choice_independence(self, sc, tag):
        rng = random.Random(5)
        for _ in range(100):
            a, b = (Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(2))
            ell = (a, b, Fraction(rng.choice([-3, -1, 1, 2])))
            while True:
                m = [[Fraction(rng.randint(-3, 3)) for _ in range(2)] for _ in range(2)]
                if m[0][0] * m[1][1] - m[0][1] * m[1][0]:
                    break
            ideal = (
                (m[0][0], m[0][1], Fraction(0)),
                (m[1][0], m[1][1], Fraction(0)),
            )
            assert classify_algebra(sc, ideal, ell).tag == tag

    def test_solved_bases_classify(self):
        for kind, tag in (('E', 'EllipticE2'), ('H', 'HyperbolicP11'), ('P', 'ParabolicL322')):
            assert classify_algebra(structure_constants(nullforms.symmetry_generators(kind))).tag == tag
