"""
Vector fields and single-input control-affine systems on an open subset of R^3.

A VectorField holds three canonical Expr components in the frame (dx, dy, dw).
A ControlSystem is the pair (f, g) of  xi' = f(xi) + g(xi) u  with an optional
base point. FeedbackTransform carries an affine (phi, alpha, beta).

Usage:
    from vectorfield import VectorField, lie_bracket

    f = VectorField('cos(w)', 'sin(w)', 0)
    g = VectorField(0, 0, 1)
    print(lie_bracket(f, g))       # sin(w), -cos(w), 0
"""

import math
import os
import random
from fractions import Fraction

import numpy as np

from expr_core import (
    VARIABLES,
    Expr,
    Point,
    as_expr,
    differentiate,
    format_expr,
    make_point,
    substitute_affine,
)


DEFAULT_TOL = 1e-9
TOL_ENV_VAR = 'CONIC_FORMS_TOL'

SYSTEM_KINDS = ('E', 'H', 'P')


# ============================================================================
# Errors
# ============================================================================

class DegenerateGError(ValueError):
    """The control field vanishes (within tolerance) at the point of interest."""


class NonInvertiblePhiError(ValueError):
    """The affine part of a feedback transform is singular."""


class BetaVanishesAtBaseError(ValueError):
    """The feedback scaling beta vanishes at the system's base point."""


class ZeroControlFieldError(ValueError):
    """The control field g is identically zero."""


class SystemDocumentError(ValueError):
    """A JSON system document violates the schema or names an unknown field."""


# ============================================================================
# Configuration
# ============================================================================

def default_tol():
    """
    Tolerance for pointwise tests: CONIC_FORMS_TOL if set and valid, else DEFAULT_TOL.
    """
    value = os.environ.get(TOL_ENV_VAR)
    if not value:
        return DEFAULT_TOL
    try:
        tol = float(value)
        if not math.isfinite(tol) or tol <= 0:
            raise ValueError(value)
    except ValueError:
        print(f'\033[33mWarning: ignoring invalid {TOL_ENV_VAR}={value!r}, using {DEFAULT_TOL:g}\033[0m')
        return DEFAULT_TOL
    return tol


def _resolve_tol(tol):
    if tol is None:
        return default_tol()
    if tol <= 0:
        raise ValueError(f'Tolerance must be positive, got {tol}.')
    return tol


# ============================================================================
# VectorField
# ============================================================================

class VectorField:
    """
    Immutable vector field cx*dx + cy*dy + cw*dw with Expr components.

    Components may be given as Expr, int, Fraction or expression strings.
    Scalars multiply with *, fields add with + and -.
    """

    __slots__ = ('cx', 'cy', 'cw', '_jacobian')

    def __init__(self, cx=0, cy=0, cw=0):
        object.__setattr__(self, 'cx', as_expr(cx))
        object.__setattr__(self, 'cy', as_expr(cy))
        object.__setattr__(self, 'cw', as_expr(cw))
        object.__setattr__(self, '_jacobian', None)

    def __setattr__(self, name, value):
        raise AttributeError('VectorField is immutable')

    @classmethod
    def from_strings(cls, triple):
        triple = list(triple)
        if len(triple) != 3:
            raise ValueError(f'A vector field needs 3 components, got {len(triple)}.')
        return cls(*triple)

    @classmethod
    def coordinate(cls, var):
        """The coordinate field d/dvar."""
        comps = [1 if v == var else 0 for v in VARIABLES]
        if not any(comps):
            raise ValueError(f'Unknown coordinate "{var}".')
        return cls(*comps)

    @classmethod
    def zero(cls):
        return cls(0, 0, 0)

    @property
    def components(self):
        return (self.cx, self.cy, self.cw)

    def is_zero(self):
        return all(c.is_zero() for c in self.components)

    # -- algebra -------------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return VectorField(*(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return VectorField(*(a - b for a, b in zip(self.components, other.components)))

    def __neg__(self):
        return VectorField(*(-a for a in self.components))

    def __mul__(self, h):
        h = as_expr(h)
        return VectorField(*(a * h for a in self.components))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return f'VectorField({", ".join(repr(str(c)) for c in self.components)})'

    def __str__(self):
        return ', '.join(format_expr(c) for c in self.components)

    def to_strings(self):
        return [format_expr(c) for c in self.components]

    # -- calculus ------------------------------------------------------------

    def apply(self, h):
        """Directional derivative of the scalar Expr h along this field."""
        h = as_expr(h)
        out = Expr.zero()
        for comp, var in zip(self.components, VARIABLES):
            if comp.is_zero():
                continue
            dh = differentiate(h, var)
            if not dh.is_zero():
                out = out + comp * dh
        return out

    def jacobian(self):
        """J[i][j] = d(component i)/d(var j), cached."""
        if self._jacobian is None:
            jac = tuple(tuple(differentiate(c, v) for v in VARIABLES) for c in self.components)
            object.__setattr__(self, '_jacobian', jac)
        return self._jacobian

    # -- numerics ------------------------------------------------------------

    def at(self, p):
        """Components at a single point as a length-3 float array."""
        return np.array([c.evaluate(p) for c in self.components])

    def values(self, points):
        """Components at an (N, 3) array of points, shape (N, 3)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x, y, w = points[:, 0], points[:, 1], points[:, 2]
        return np.stack([c.evaluate_array(x, y, w) for c in self.components], axis=-1)

    def jacobian_values(self, points):
        """Jacobian at an (N, 3) array of points, shape (N, 3, 3)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x, y, w = points[:, 0], points[:, 1], points[:, 2]
        rows = [np.stack([d.evaluate_array(x, y, w) for d in row], axis=-1) for row in self.jacobian()]
        return np.stack(rows, axis=-2)


def as_field(value):
    if isinstance(value, VectorField):
        return value
    return VectorField.from_strings(value)


# ============================================================================
# Brackets and pointwise tests
# ============================================================================

def lie_bracket(u, v):
    """[u, v] = Dv.u - Du.v, computed exactly."""
    return VectorField(*(u.apply(vc) - v.apply(uc) for uc, vc in zip(u.components, v.components)))


def ad_power(g, f, k):
    """ad_g^k f with ad^0 = f and ad^k = [g, ad^(k-1)]."""
    if k < 0:
        raise ValueError(f'k must be >= 0, got {k}.')
    out = f
    for _ in range(k):
        out = lie_bracket(g, out)
    return out


def wedge(u, v):
    """The three 2x2 minors of (u | v), arranged as the cross product u x v."""
    ux, uy, uw = u.components
    vx, vy, vw = v.components
    return VectorField(uy * vw - uw * vy, uw * vx - ux * vw, ux * vy - uy * vx)


def vectors_independent(a, b, tol=None):
    """Numeric 2-vector independence test on evaluated columns a, b."""
    tol = _resolve_tol(tol)
    minors = np.cross(a, b)
    scale = 1.0 + np.linalg.norm(a) * np.linalg.norm(b)
    return bool(np.max(np.abs(minors)) > tol * scale)


def independent_at(u, v, p, tol=None):
    """
    True iff u(p), v(p) are linearly independent: the largest 2x2 minor of the
    3x2 evaluation matrix exceeds tol * (1 + |u(p)| |v(p)|).
    """
    return vectors_independent(u.at(p), v.at(p), tol)


def in_span_at(v, g, p, tol=None):
    """
    True iff v(p) lies on the line G(p) spanned by g(p).

    Raises:
        DegenerateGError: if |g(p)| <= tol
    """
    tol = _resolve_tol(tol)
    gp = g.at(p)
    if np.linalg.norm(gp) <= tol:
        raise DegenerateGError(f'g vanishes at {tuple(p)} (|g| <= {tol:g}); G(p) is not a line.')
    vp = v.at(p)
    return bool(np.linalg.norm(np.cross(vp, gp)) <= tol * (1.0 + np.linalg.norm(vp) * np.linalg.norm(gp)))


# ============================================================================
# ControlSystem and documents
# ============================================================================

class ControlSystem:
    """
    Control-affine system  xi' = f(xi) + g(xi) u.

    Attributes:
        f (VectorField): drift
        g (VectorField): control field, not identically zero
        base (Point or None): base point xi_0
        name (str or None): document name
        kind (str or None): declared null-form class ('E', 'H' or 'P'), used for reports
        fields (dict): extra named vector fields carried by the document
    """

    def __init__(self, f, g, base=None, name=None, kind=None, fields=None):
        self.f = as_field(f)
        self.g = as_field(g)
        if self.g.is_zero():
            raise ZeroControlFieldError('The control field g is identically zero.')
        self.base = None if base is None else make_point(base)
        self.name = name
        if kind is not None and kind not in SYSTEM_KINDS:
            raise ValueError(f'kind must be one of {SYSTEM_KINDS}, got {kind!r}.')
        self.kind = kind
        self.fields = {k: as_field(v) for k, v in (fields or {}).items()}

    def with_base(self, base):
        return ControlSystem(self.f, self.g, base, self.name, self.kind, self.fields)

    def field(self, name):
        """Look up 'f', 'g' or an extra named field."""
        if name == 'f':
            return self.f
        if name == 'g':
            return self.g
        if name in self.fields:
            return self.fields[name]
        known = ', '.join(['f', 'g'] + sorted(self.fields))
        raise SystemDocumentError(f'Unknown field "{name}". Known fields: {known}.')

    def velocity_values(self, points, u):
        """f + g*u at an (N, 3) array of points for scalar or (N,) controls."""
        u = np.asarray(u, dtype=float).reshape(-1, 1)
        return self.f.values(points) + self.g.values(points) * u

    def __eq__(self, other):
        if not isinstance(other, ControlSystem):
            return NotImplemented
        return (self.f, self.g, self.base) == (other.f, other.g, other.base)

    def __repr__(self):
        return f'ControlSystem(f=[{self.f}], g=[{self.g}], base={self.base})'

    def to_document(self):
        doc = {'f': self.f.to_strings(), 'g': self.g.to_strings()}
        if self.name is not None:
            doc['name'] = self.name
        if self.kind is not None:
            doc['kind'] = self.kind
        if self.base is not None:
            doc['base'] = [float(c) for c in self.base]
        if self.fields:
            doc['fields'] = {k: v.to_strings() for k, v in sorted(self.fields.items())}
        return doc

    @classmethod
    def from_document(cls, doc):
        return system_from_document(doc)


def system_from_document(doc, tol=None):
    """
    Build a ControlSystem from a JSON system document.

    Schema: {"name": str, "kind": "E"|"H"|"P", "f": [3 expr strings],
    "g": [3 expr strings], "base": [x, y, w], "fields": {name: [3 strings]},
    "metadata": {...}}. Only f and g are required.

    Raises:
        SystemDocumentError: on schema violations or if g vanishes at base
        ExprError: if an expression does not parse
    """
    if not isinstance(doc, dict):
        raise SystemDocumentError(f'A system document must be a JSON object, got {type(doc).__name__}.')
    for key in ('f', 'g'):
        if key not in doc:
            raise SystemDocumentError(f'System document is missing "{key}".')
        if not isinstance(doc[key], list) or len(doc[key]) != 3:
            raise SystemDocumentError(f'"{key}" must be a list of 3 expression strings.')
    extra = doc.get('fields', {})
    if not isinstance(extra, dict):
        raise SystemDocumentError('"fields" must be an object of name -> 3 expression strings.')
    for name, comps in extra.items():
        if name in ('f', 'g'):
            raise SystemDocumentError(f'Extra field name "{name}" is reserved.')
        if not isinstance(comps, list) or len(comps) != 3:
            raise SystemDocumentError(f'Field "{name}" must be a list of 3 expression strings.')
    kind = doc.get('kind')
    if kind is not None and kind not in SYSTEM_KINDS:
        raise SystemDocumentError(f'"kind" must be one of {SYSTEM_KINDS}, got {kind!r}.')
    base = doc.get('base')
    if base is not None:
        try:
            base = make_point(base)
        except (TypeError, ValueError) as e:
            raise SystemDocumentError(f'Invalid "base": {e}') from e
    try:
        system = ControlSystem(doc['f'], doc['g'], base, doc.get('name'), kind, extra)
    except ZeroControlFieldError as e:
        raise SystemDocumentError(str(e)) from e
    if base is not None and np.linalg.norm(system.g.at(base)) <= _resolve_tol(tol):
        raise SystemDocumentError(f'g vanishes at the base point {tuple(base)}.')
    return system


# ============================================================================
# Feedback transformations
# ============================================================================

def _det3(m):
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def _inverse3(m):
    det = _det3(m)
    cof = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            c = [k for k in range(3) if k != j]
            minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]
            cof[i][j] = (-1) ** (i + j) * minor
    return tuple(tuple(cof[j][i] / det for j in range(3)) for i in range(3))


def _matmul3(a, b):
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)) for i in range(3))


class FeedbackTransform:
    """
    Feedback transformation with affine phi(xi) = A xi + b and feedback (alpha, beta).

    The transformed system is f~ = phi_*(f + g alpha), g~ = phi_*(g beta).
    """

    def __init__(self, matrix=None, translation=None, alpha=0, beta=1):
        if matrix is None:
            matrix = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
        if translation is None:
            translation = [0, 0, 0]
        try:
            self.matrix = tuple(tuple(Fraction(v) for v in row) for row in matrix)
            self.translation = tuple(Fraction(v) for v in translation)
        except (TypeError, ValueError) as e:
            raise ValueError(f'Feedback matrix and translation must be rational: {e}') from e
        if len(self.matrix) != 3 or any(len(r) != 3 for r in self.matrix) or len(self.translation) != 3:
            raise ValueError('Feedback matrix must be 3x3 and translation of length 3.')
        self.determinant = _det3(self.matrix)
        if self.determinant == 0:
            raise NonInvertiblePhiError('The affine map phi has a singular matrix (determinant 0).')
        self.alpha = as_expr(alpha)
        self.beta = as_expr(beta)
        if self.beta.is_zero():
            raise BetaVanishesAtBaseError('beta is identically zero.')

    @property
    def inverse_matrix(self):
        return _inverse3(self.matrix)

    def map_point(self, p):
        a, b = self.matrix, self.translation
        return make_point([sum(float(a[i][j]) * p[j] for j in range(3)) + float(b[i]) for i in range(3)])

    def inverse_map(self, p):
        inv = self.inverse_matrix
        shifted = [p[i] - float(self.translation[i]) for i in range(3)]
        return make_point([sum(float(inv[i][j]) * shifted[j] for j in range(3)) for i in range(3)])

    def forward_rows(self):
        """Rows of phi for substitute_affine: old coordinates in terms of phi."""
        return [(self.matrix[i], self.translation[i]) for i in range(3)]

    def inverse_rows(self):
        """Rows of phi^-1: old coordinates as affine functions of the new ones."""
        inv = self.inverse_matrix
        return [(inv[i], -sum(inv[i][j] * self.translation[j] for j in range(3))) for i in range(3)]

    def to_dict(self):
        return {
            'matrix': [[str(v) for v in row] for row in self.matrix],
            'translation': [str(v) for v in self.translation],
            'alpha': format_expr(self.alpha),
            'beta': format_expr(self.beta),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d.get('matrix'), d.get('translation'), d.get('alpha', 0), d.get('beta', 1))

    def __repr__(self):
        return f'FeedbackTransform({self.to_dict()})'


def _push_forward(matrix, field, rows):
    """A * (field o phi^-1) for the affine phi whose inverse rows are given."""
    pulled = [substitute_affine(c, rows) for c in field.components]
    return VectorField(*(sum((c * matrix[i][j] for j, c in enumerate(pulled) if matrix[i][j]), Expr.zero())
                         for i in range(3)))


def apply_feedback(s, t, tol=None):
    """
    Apply (phi, alpha, beta) to s exactly; the base point moves to phi(base).

    Raises:
        BetaVanishesAtBaseError: if |beta(base)| <= tol
        ExpressionClassError, NonIntegerFrequencyError: if phi^-1 does not keep
            the trig/exp factors in class (its w-row must only rescale and shift w)
    """
    tol = _resolve_tol(tol)
    if s.base is not None and abs(t.beta.evaluate(s.base)) <= tol:
        raise BetaVanishesAtBaseError(f'beta = {t.beta} vanishes at the base point {tuple(s.base)}.')
    drift = s.f + s.g * t.alpha
    control = s.g * t.beta
    rows = t.inverse_rows()
    f_new = _push_forward(t.matrix, drift, rows)
    g_new = _push_forward(t.matrix, control, rows)
    base = None if s.base is None else t.map_point(s.base)
    fields = {k: _push_forward(t.matrix, v, rows) for k, v in s.fields.items()}
    return ControlSystem(f_new, g_new, base, s.name, s.kind, fields)


def compose_feedback(t2, t1):
    """
    The transform equivalent to applying t1 first and t2 second.

    phi = phi2 o phi1, alpha = alpha1 + beta1 (alpha2 o phi1), beta = beta1 (beta2 o phi1).
    """
    a2, b2 = t2.matrix, t2.translation
    matrix = _matmul3(a2, t1.matrix)
    translation = [sum(a2[i][j] * t1.translation[j] for j in range(3)) + b2[i] for i in range(3)]
    rows1 = t1.forward_rows()
    alpha = t1.alpha + t1.beta * substitute_affine(t2.alpha, rows1)
    beta = t1.beta * substitute_affine(t2.beta, rows1)
    return FeedbackTransform(matrix, translation, alpha, beta)


SCRAMBLE_BETAS = (Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3))

_ALPHA_MONOMIALS = ('1', 'x', 'y', 'w', 'x^2', 'x*y', 'y^2', 'x*w', 'y*w', 'w^2')


def random_scramble(rng=None):
    """
    Draw a random in-class feedback transform.

    Integer matrix with determinant +-1 and last row (0, 0, +-1); translation
    with entries in {-2, -3/2, ..., 2}; alpha a polynomial of degree <= 2 with
    small integer coefficients; beta in {1/2, 1, 2, 3}.

    Args:
        rng: random.Random instance, or an int seed
    """
    if rng is None or isinstance(rng, int):
        rng = random.Random(rng)
    top = [[1, 0], [0, 1]]
    for _ in range(rng.randint(1, 3)):
        i = rng.randrange(2)
        shear = rng.choice([-2, -1, 1, 2])
        top[i] = [top[i][0] + shear * top[1 - i][0], top[i][1] + shear * top[1 - i][1]]
    if rng.random() < 0.5:
        top = [top[1], top[0]]
    if rng.random() < 0.5:
        top[0] = [-v for v in top[0]]
    matrix = [
        [top[0][0], top[0][1], rng.randint(-2, 2)],
        [top[1][0], top[1][1], rng.randint(-2, 2)],
        [0, 0, rng.choice([-1, 1])],
    ]
    translation = [Fraction(rng.randint(-4, 4), 2) for _ in range(3)]
    alpha = Expr.zero()
    for mono in rng.sample(_ALPHA_MONOMIALS, rng.randint(0, 3)):
        alpha = alpha + as_expr(mono) * rng.choice([-2, -1, 1, 2])
    beta = rng.choice(SCRAMBLE_BETAS)
    return FeedbackTransform(matrix, translation, alpha, beta)


__all__ = [
    'DEFAULT_TOL', 'TOL_ENV_VAR', 'default_tol',
    'VectorField', 'ControlSystem', 'FeedbackTransform', 'Point',
    'lie_bracket', 'ad_power', 'wedge', 'independent_at', 'in_span_at', 'vectors_independent',
    'apply_feedback', 'compose_feedback', 'random_scramble', 'system_from_document', 'as_field',
    'DegenerateGError', 'NonInvertiblePhiError', 'BetaVanishesAtBaseError',
    'ZeroControlFieldError', 'SystemDocumentError',
]
