"""
Abstract 3-dimensional real Lie algebras given by structure constants.

The three conic classes are recognized through a 2-dimensional abelian ideal I
(the derived subalgebra) and the 2x2 matrix M of X -> [X, l] on I for a
complement element l:

    trace 0, det > 0            -> EllipticE2     (e(2), Bianchi VII_0)
    trace 0, det < 0            -> HyperbolicP11  (p(1,1), Bianchi VI_0)
    det > 0, 2 trace^2 = 9 det  -> ParabolicL322  (eigenvalue ratio 2)

All arithmetic is exact.
"""

from dataclasses import dataclass, field
from fractions import Fraction

from sympy import Matrix, Rational

from symmetry import bracket_table


ALGEBRA_TAGS = ('EllipticE2', 'HyperbolicP11', 'ParabolicL322', 'Other')

ALGEBRA_LABELS = {
    'EllipticE2': 'VII_0 / L(3,4,0)',
    'HyperbolicP11': 'VI_0 / L(3,2,-1)',
    'ParabolicL322': 'L(3,2,2)',
    'Other': 'not in L_Q',
}


class NotClosedError(ValueError):
    """A bracket of basis fields is not a linear combination of the basis."""


class JacobiViolationError(ValueError):
    """Structure constants violate antisymmetry or the Jacobi identity."""


def _fraction_vector(values, dim):
    vec = tuple(Fraction(v) for v in values)
    if len(vec) != dim:
        raise ValueError(f'Expected {dim} coefficients, got {len(vec)}.')
    return vec


def _to_sympy(rows):
    return Matrix([[Rational(v.numerator, v.denominator) for v in row] for row in rows])


def _from_sympy(value):
    value = Rational(value)
    return Fraction(int(value.p), int(value.q))


def _rank(rows):
    rows = [r for r in rows]
    if not rows:
        return 0
    return _to_sympy(rows).rank()


# ============================================================================
# StructureConstants
# ============================================================================

class StructureConstants:
    """
    [e_i, e_j] = sum_k c[i][j][k] e_k for a real Lie algebra of dimension dim.

    Indices are 0-based. Only i < j is stored; antisymmetry is implied.

    Raises:
        JacobiViolationError: if the Jacobi identity fails
    """

    def __init__(self, table, dim=3):
        self.dim = dim
        self._table = {}
        zero = (Fraction(0),) * dim
        for (i, j), vec in dict(table).items():
            if not (0 <= i < dim and 0 <= j < dim):
                raise ValueError(f'Index pair {(i, j)} out of range for dimension {dim}.')
            vec = _fraction_vector(vec, dim)
            if i == j:
                if any(vec):
                    raise JacobiViolationError(f'[e_{i}, e_{i}] must vanish, got {vec}.')
                continue
            if i > j:
                i, j, vec = j, i, tuple(-v for v in vec)
            if (i, j) in self._table and self._table[(i, j)] != vec:
                raise JacobiViolationError(f'Inconsistent entries for [e_{i}, e_{j}].')
            self._table[(i, j)] = vec
        for i in range(dim):
            for j in range(i + 1, dim):
                self._table.setdefault((i, j), zero)
        violation = self.jacobi_defect()
        if violation is not None:
            raise JacobiViolationError(
                f'Jacobi identity fails for (e_{violation[0]}, e_{violation[1]}, e_{violation[2]}).')

    @classmethod
    def from_relations(cls, relations, dim=3):
        """Build from {(i, j): {k: coef}} sparse relations."""
        table = {}
        for (i, j), coeffs in relations.items():
            vec = [Fraction(0)] * dim
            for k, c in coeffs.items():
                vec[k] = Fraction(c)
            table[(i, j)] = vec
        return cls(table, dim)

    def vector(self, i, j):
        """Coefficient vector of [e_i, e_j]."""
        if i == j:
            return (Fraction(0),) * self.dim
        if i < j:
            return self._table[(i, j)]
        return tuple(-v for v in self._table[(j, i)])

    def coefficient(self, i, j, k):
        return self.vector(i, j)[k]

    def bracket(self, a, b):
        """[a, b] for coefficient vectors a, b."""
        out = [Fraction(0)] * self.dim
        for i in range(self.dim):
            if not a[i]:
                continue
            for j in range(self.dim):
                if i == j or not b[j]:
                    continue
                w = Fraction(a[i]) * Fraction(b[j])
                for k, c in enumerate(self.vector(i, j)):
                    if c:
                        out[k] += w * c
        return tuple(out)

    def basis_vector(self, i):
        return tuple(Fraction(1 if k == i else 0) for k in range(self.dim))

    def jacobi_defect(self):
        """First (i, j, k) violating the Jacobi identity, or None."""
        e = [self.basis_vector(i) for i in range(self.dim)]
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                for k in range(j + 1, self.dim):
                    total = [Fraction(0)] * self.dim
                    for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                        term = self.bracket(e[a], self.bracket(e[b], e[c]))
                        total = [t + v for t, v in zip(total, term)]
                    if any(total):
                        return (i, j, k)
        return None

    def is_abelian(self):
        return not any(any(v) for v in self._table.values())

    def nonzero_entries(self):
        """{(i, j, k): c} for i < j and c != 0."""
        return {(i, j, k): c
                for (i, j), vec in sorted(self._table.items())
                for k, c in enumerate(vec) if c}

    def to_dict(self):
        return {f'[v{i + 1},v{j + 1}]': [str(c) for c in vec]
                for (i, j), vec in sorted(self._table.items())}

    def relations(self, names=None):
        """Human-readable relation lines such as '[v1, v3] = 2*v1'."""
        names = names or [f'v{i + 1}' for i in range(self.dim)]
        lines = []
        for (i, j), vec in sorted(self._table.items()):
            terms = []
            for k, c in enumerate(vec):
                if not c:
                    continue
                mag = abs(c)
                body = names[k] if mag == 1 else f'{mag}*{names[k]}'
                if not terms:
                    terms.append(f'-{body}' if c < 0 else body)
                else:
                    terms.append(f' - {body}' if c < 0 else f' + {body}')
            lines.append(f'[{names[i]}, {names[j]}] = {"".join(terms) or "0"}')
        return lines

    def __eq__(self, other):
        if not isinstance(other, StructureConstants):
            return NotImplemented
        return self.dim == other.dim and self._table == other._table

    def __repr__(self):
        return f'StructureConstants({self.nonzero_entries()})'


def structure_constants(b):
    """
    Exact structure constants of a closed symmetry basis.

    Raises:
        NotClosedError: if some [v_i, v_j] leaves span(b)
    """
    table = bracket_table(b)
    if table is None:
        raise NotClosedError('The symmetry basis is not closed under the Lie bracket.')
    return StructureConstants(table, b.dim)


# ============================================================================
# Ideal and classification
# ============================================================================

def derived_subalgebra(sc):
    """Reduced echelon basis of [L, L]."""
    vectors = [sc.vector(i, j) for i in range(sc.dim) for j in range(i + 1, sc.dim)]
    vectors = [v for v in vectors if any(v)]
    if not vectors:
        return []
    reduced, pivots = _to_sympy(vectors).rref()
    return [tuple(_from_sympy(v) for v in reduced.row(r)) for r in range(len(pivots))]


def _in_span(vector, basis):
    return _rank(list(basis) + [vector]) == _rank(basis)


def abelian_ideal_2d(sc):
    """
    The derived subalgebra [L, L] if it is 2-dimensional, abelian and an ideal.

    Returns:
        tuple of two coefficient vectors, or None
    """
    ideal = derived_subalgebra(sc)
    if len(ideal) != 2:
        return None
    d0, d1 = ideal
    if any(sc.bracket(d0, d1)):
        return None
    for k in range(sc.dim):
        e = sc.basis_vector(k)
        for d in ideal:
            if not _in_span(sc.bracket(e, d), ideal):
                return None
    return (d0, d1)


def _plane_coordinates(v, d0, d1):
    """(a, b) with v = a d0 + b d1, exact."""
    n = len(v)
    for r in range(n):
        for s in range(r + 1, n):
            minor = d0[r] * d1[s] - d0[s] * d1[r]
            if minor:
                a = (v[r] * d1[s] - v[s] * d1[r]) / minor
                b = (d0[r] * v[s] - d0[s] * v[r]) / minor
                if any(a * x + b * y != z for x, y, z in zip(d0, d1, v)):
                    raise NotClosedError(f'{v} is not in the span of the ideal.')
                return a, b
    raise ValueError('Ideal basis vectors are dependent.')


def default_complement(sc, ideal):
    """The last basis vector e_k not in span(ideal)."""
    for k in reversed(range(sc.dim)):
        e = sc.basis_vector(k)
        if not _in_span(e, ideal):
            return e
    raise ValueError('The ideal spans the whole algebra.')


def adjoint_on_ideal(sc, ideal, ell):
    """
    M[i][j] = coefficient of d_i in [d_j, ell] (the map X -> [X, ell] on I).
    """
    d0, d1 = ideal
    cols = [_plane_coordinates(sc.bracket(d, ell), d0, d1) for d in (d0, d1)]
    return ((cols[0][0], cols[1][0]), (cols[0][1], cols[1][1]))


def classify_adjoint(matrix):
    """Tag of the 2x2 adjoint matrix by exact trace and determinant."""
    (a, b), (c, d) = matrix
    trace = a + d
    det = a * d - b * c
    if trace == 0 and det > 0:
        return 'EllipticE2'
    if trace == 0 and det < 0:
        return 'HyperbolicP11'
    if trace != 0 and det > 0 and 2 * trace * trace == 9 * det:
        return 'ParabolicL322'
    return 'Other'


@dataclass
class AlgebraClass:
    """
    Result of classify_algebra.

    Attributes:
        tag: one of ALGEBRA_TAGS
        trace, det, discriminant: eigen data of the adjoint matrix (None for no ideal)
        matrix: 2x2 adjoint matrix on the ideal
        ideal: the two ideal basis vectors
        complement: the complement element l
    """
    tag: str
    trace: Fraction = None
    det: Fraction = None
    discriminant: Fraction = None
    matrix: tuple = None
    ideal: tuple = None
    complement: tuple = None
    notes: list = field(default_factory=list)

    @property
    def label(self):
        return ALGEBRA_LABELS[self.tag]

    def eigenvalue_ratio(self):
        """lambda_1 / lambda_2 for real eigenvalues with |lambda_1| >= |lambda_2|, else None."""
        if self.discriminant is None or self.discriminant < 0 or self.det == 0:
            return None
        root = float(self.discriminant) ** 0.5
        lam = sorted(((float(self.trace) + root) / 2, (float(self.trace) - root) / 2), key=abs, reverse=True)
        return lam[0] / lam[1]

    def to_dict(self):
        def s(v):
            return None if v is None else str(v)

        return {
            'tag': self.tag,
            'label': self.label,
            'trace': s(self.trace),
            'det': s(self.det),
            'discriminant': s(self.discriminant),
            'matrix': None if self.matrix is None else [[str(v) for v in row] for row in self.matrix],
            'ideal': None if self.ideal is None else [[str(v) for v in row] for row in self.ideal],
            'complement': None if self.complement is None else [str(v) for v in self.complement],
            'notes': list(self.notes),
        }


def classify_algebra(sc, ideal=None, ell=None):
    """
    Classify a Lie algebra as EllipticE2, HyperbolicP11, ParabolicL322 or Other.

    ideal and ell may be given to use another basis of I or complement
    element; the tag does not depend on them.
    """
    if sc.dim != 3:
        return AlgebraClass('Other', notes=[f'dimension {sc.dim}'])
    if ideal is None:
        ideal = abelian_ideal_2d(sc)
    if ideal is None:
        return AlgebraClass('Other', notes=['no 2-dimensional abelian ideal'])
    ideal = tuple(tuple(Fraction(v) for v in d) for d in ideal)
    if ell is None:
        ell = default_complement(sc, ideal)
    ell = tuple(Fraction(v) for v in ell)
    if _in_span(ell, ideal):
        raise ValueError('The complement element lies in the ideal.')
    matrix = adjoint_on_ideal(sc, ideal, ell)
    (a, b), (c, d) = matrix
    trace = a + d
    det = a * d - b * c
    return AlgebraClass(
        tag=classify_adjoint(matrix),
        trace=trace,
        det=det,
        discriminant=trace * trace - 4 * det,
        matrix=matrix,
        ideal=ideal,
        complement=ell,
    )


__all__ = [
    'ALGEBRA_TAGS', 'ALGEBRA_LABELS', 'StructureConstants', 'AlgebraClass',
    'NotClosedError', 'JacobiViolationError',
    'structure_constants', 'derived_subalgebra', 'abelian_ideal_2d', 'adjoint_on_ideal',
    'default_complement', 'classify_adjoint', 'classify_algebra',
]
