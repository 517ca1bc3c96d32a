"""
Infinitesimal symmetries of control-affine systems.

A vector field v is a symmetry of xi' = f + g u iff [v, g] and [v, f] both lie
in the line field G = span{g}, i.e. the wedges [v, g] ^ g and [v, f] ^ g vanish.
Both conditions are linear in the coefficients of v, so inside a finite ansatz
they become a homogeneous linear system over the rationals, solved exactly.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from expr_core import VARIABLES, Expr, Monomial, TRIG_COS, TRIG_NONE, TRIG_SIN, differentiate
from vectorfield import VectorField, lie_bracket, wedge


MAX_UNKNOWNS = 100000


class AnsatzTooLargeError(ValueError):
    """The ansatz would produce more unknowns than the solver accepts."""


# ============================================================================
# Ansatz
# ============================================================================

@dataclass(frozen=True)
class Ansatz:
    """
    Search space for symmetry components: polynomials of total degree <= degree
    in (x, y, w), each times one factor from 1, cos(m w), sin(m w) (m <= trig_max)
    or exp(n w) (1 <= |n| <= exp_range).
    """
    degree: int = 2
    trig_max: int = 2
    exp_range: int = 2

    def __post_init__(self):
        for name in ('degree', 'trig_max', 'exp_range'):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f'Ansatz {name} must be a non-negative integer, got {value!r}.')

    @classmethod
    def parse(cls, text):
        """'D,T,E' -> Ansatz(D, T, E)."""
        try:
            parts = [int(p) for p in str(text).split(',')]
        except ValueError as e:
            raise ValueError(f'Ansatz must look like "2,2,2", got {text!r}.') from e
        if len(parts) != 3:
            raise ValueError(f'Ansatz must have 3 comma-separated integers, got {text!r}.')
        return cls(*parts)

    def escalated(self):
        return Ansatz(self.degree + 1, self.trig_max + 1, self.exp_range + 1)

    def factors(self):
        out = [(TRIG_NONE, 0, 0)]
        for m in range(1, self.trig_max + 1):
            out += [(TRIG_COS, m, 0), (TRIG_SIN, m, 0)]
        for n in range(1, self.exp_range + 1):
            out += [(TRIG_NONE, 0, n), (TRIG_NONE, 0, -n)]
        return out

    def powers(self):
        """Exponent triples (px, py, pw) ordered by total degree."""
        out = []
        for total in range(self.degree + 1):
            for px in range(total, -1, -1):
                for py in range(total - px, -1, -1):
                    out.append((px, py, total - px - py))
        return out

    def basis_functions(self):
        return [Expr._make({Monomial(px, py, pw, trig, freq, expk): Fraction(1)})
                for trig, freq, expk in self.factors()
                for px, py, pw in self.powers()]

    def unknown_count(self):
        return 3 * len(self.factors()) * len(self.powers())

    def to_dict(self):
        return {'degree': self.degree, 'trig_max': self.trig_max, 'exp_range': self.exp_range}

    def __str__(self):
        return f'degree={self.degree}, trig_max={self.trig_max}, exp_range={self.exp_range}'


# ============================================================================
# SymmetryBasis
# ============================================================================

class SymmetryBasis:
    """
    Linearly independent symmetry fields v_1, ..., v_dim.

    Attributes:
        fields (tuple): the VectorFields
        ansatz (Ansatz or None): search space the basis was solved in
        source (str): 'solved' or 'supplied'
    """

    def __init__(self, fields, ansatz=None, source='solved'):
        self.fields = tuple(fields)
        self.ansatz = ansatz
        self.source = source

    @property
    def dim(self):
        return len(self.fields)

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def __getitem__(self, i):
        return self.fields[i]

    def combine(self, coeffs):
        """sum_i coeffs[i] * v_i for rational coefficients."""
        out = VectorField.zero()
        for c, v in zip(coeffs, self.fields):
            if c:
                out = out + v * Fraction(c)
        return out

    def coefficient_rank(self):
        """Rank of the exact coefficient vectors (== dim for a valid basis)."""
        columns = [_field_coefficients(v) for v in self.fields]
        return len(_rref(columns)[1])

    def to_strings(self):
        return [v.to_strings() for v in self.fields]

    def __repr__(self):
        return f'SymmetryBasis(dim={self.dim}, source={self.source!r})'


# ============================================================================
# Exact linear algebra
# ============================================================================

def _field_coefficients(v, tag=None):
    """Sparse coefficient map {(tag, component, monomial): Fraction} of a field."""
    out = {}
    for i, comp in enumerate(v.components):
        for mono, c in comp.terms.items():
            out[(tag, i, mono)] = c
    return out


def _to_fraction(value):
    return Fraction(int(value.numerator), int(value.denominator))


def _rref(columns):
    """
    Reduced row echelon form of the sparse matrix whose j-th column is columns[j].

    Returns:
        (rows, pivots): rows as {col: Fraction} dicts in pivot order, pivot columns
    """
    row_index = {}
    entries = {}
    for j, col in enumerate(columns):
        for key, value in col.items():
            if not value:
                continue
            i = row_index.setdefault(key, len(row_index))
            entries.setdefault(i, {})[j] = QQ(value.numerator, value.denominator)
    ncols = len(columns)
    if not entries or ncols == 0:
        return [], ()
    matrix = DomainMatrix(entries, (len(row_index), ncols), QQ)
    reduced, pivots = matrix.rref()
    sparse = reduced.to_sparse().rep
    rows = []
    for i in sorted(sparse):
        row = {j: _to_fraction(v) for j, v in sparse[i].items() if v}
        if row:
            rows.append(row)
    rows.sort(key=min)
    return rows, tuple(pivots)


def exact_nullspace(columns):
    """Basis of {c : sum_j c_j columns[j] = 0}, one vector per free column."""
    ncols = len(columns)
    rows, pivots = _rref(columns)
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for row in rows:
            lead = min(row)
            vec[lead] = -row.get(free, Fraction(0))
        basis.append(vec)
    return basis


def exact_solve(columns, rhs):
    """
    Unique-or-particular exact solution of sum_j c_j columns[j] = rhs.

    Returns:
        list of Fraction, or None if the system is inconsistent
    """
    n = len(columns)
    rows, pivots = _rref(list(columns) + [rhs])
    if n in pivots:
        return None
    solution = [Fraction(0)] * n
    for row in rows:
        lead = min(row)
        solution[lead] = row.get(n, Fraction(0))
    return solution


def _canonical_span(vectors):
    """Reduced echelon basis of the row space of the given coefficient vectors."""
    if not vectors:
        return []
    columns = [{i: vec[j] for i, vec in enumerate(vectors) if vec[j]} for j in range(len(vectors[0]))]
    rows, _ = _rref_transpose(columns, len(vectors))
    return rows


def _rref_transpose(columns, nvectors):
    """rref of the matrix whose rows are the vectors (columns indexed by unknowns)."""
    ncols = len(columns)
    entries = {}
    for j, col in enumerate(columns):
        for i, value in col.items():
            entries.setdefault(i, {})[j] = QQ(value.numerator, value.denominator)
    if not entries:
        return [], ()
    matrix = DomainMatrix(entries, (nvectors, ncols), QQ)
    reduced, pivots = matrix.rref()
    sparse = reduced.to_sparse().rep
    rows = []
    for i in sorted(sparse):
        vec = [Fraction(0)] * ncols
        for j, v in sparse[i].items():
            vec[j] = _to_fraction(v)
        if any(vec):
            rows.append(vec)
    rows.sort(key=lambda r: next(j for j, v in enumerate(r) if v))
    return rows, tuple(pivots)


# ============================================================================
# Operations
# ============================================================================

def is_symmetry(v, s):
    """True iff [v, g] ^ g == 0 and [v, f] ^ g == 0 exactly."""
    if not wedge(lie_bracket(v, s.g), s.g).is_zero():
        return False
    return wedge(lie_bracket(v, s.f), s.g).is_zero()


def _bracket_with_basis_element(phi, grad_phi, i, h, jac_h):
    """[phi * e_i, h] = phi * d_i h - (h . grad phi) e_i."""
    comps = [phi * jac_h[r][i] for r in range(3)]
    directional = Expr.zero()
    for hc, dphi in zip(h.components, grad_phi):
        if not hc.is_zero() and not dphi.is_zero():
            directional = directional + hc * dphi
    comps[i] = comps[i] - directional
    return VectorField(*comps)


def solve_symmetries(s, ansatz=None, verbose=False):
    """
    Exact basis of the symmetries of s inside the ansatz.

    Every returned field satisfies is_symmetry; the basis is the reduced echelon
    basis of the solution space, so it does not depend on elimination order.

    Raises:
        AnsatzTooLargeError: if the ansatz has more than MAX_UNKNOWNS unknowns
    """
    ansatz = ansatz or Ansatz()
    n_unknowns = ansatz.unknown_count()
    if n_unknowns > MAX_UNKNOWNS:
        raise AnsatzTooLargeError(
            f'Ansatz ({ansatz}) has {n_unknowns} unknowns; the limit is {MAX_UNKNOWNS}.')
    f, g = s.f, s.g
    jac_f, jac_g = f.jacobian(), g.jacobian()

    candidates = []
    columns = []
    for phi in ansatz.basis_functions():
        grad = tuple(differentiate(phi, v) for v in VARIABLES)
        for i in range(3):
            comps = [Expr.zero()] * 3
            comps[i] = phi
            candidates.append(VectorField(*comps))
            bracket_g = _bracket_with_basis_element(phi, grad, i, g, jac_g)
            bracket_f = _bracket_with_basis_element(phi, grad, i, f, jac_f)
            col = _field_coefficients(wedge(bracket_g, g), 'g')
            col.update(_field_coefficients(wedge(bracket_f, g), 'f'))
            columns.append(col)

    if verbose:
        print(f'  Solving symmetry conditions: {n_unknowns} unknowns ({ansatz})')
    null_vectors = exact_nullspace(columns)
    fields = []
    for vec in _canonical_span(null_vectors):
        field = VectorField.zero()
        for c, cand in zip(vec, candidates):
            if c:
                field = field + cand * c
        fields.append(field)
    if verbose:
        print(f'  ✓ Symmetry dimension at ansatz: {len(fields)}')
    return SymmetryBasis(fields, ansatz, 'solved')


def express_in_basis(v, fields):
    """Exact coefficients of v in the given fields, or None if v is not in their span."""
    columns = [_field_coefficients(u) for u in fields]
    return exact_solve(columns, _field_coefficients(v))


def bracket_table(b):
    """
    {(i, j): coefficients of [v_i, v_j]} for i < j, or None if some bracket
    leaves the span of the basis.
    """
    table = {}
    for i in range(b.dim):
        for j in range(i + 1, b.dim):
            coeffs = express_in_basis(lie_bracket(b[i], b[j]), b.fields)
            if coeffs is None:
                return None
            table[(i, j)] = tuple(coeffs)
    return table


def closed_under_bracket(b):
    """True iff every [v_i, v_j] is an exact rational combination of the basis."""
    return bracket_table(b) is not None


def same_span(a, b):
    """Mutual-membership test of two families of vector fields."""
    a, b = list(a), list(b)
    return (all(express_in_basis(v, b) is not None for v in a)
            and all(express_in_basis(v, a) is not None for v in b))


__all__ = [
    'MAX_UNKNOWNS', 'Ansatz', 'SymmetryBasis', 'AnsatzTooLargeError',
    'is_symmetry', 'solve_symmetries', 'closed_under_bracket', 'bracket_table',
    'express_in_basis', 'exact_nullspace', 'exact_solve', 'same_span',
]
