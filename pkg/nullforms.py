"""
Conic null-forms, their symmetry generators, negative controls and the system database.

Null-forms (g = dw in every case):

    Sigma_E       x' = cos w,      y' = sin w
    Sigma_H       x' = cosh w,     y' = sinh w
    Sigma_P       x' = w^2,        y' = w
    Sigma_P^1     x' = (w+1)^2,    y' = w+1          (Sigma_P shifted to w0 = 1)
    Sigma_P^{0,k} x' = w^(2k),     y' = w^k

The database file (nullforms_database.json) maps names to JSON system documents.
"""

import json
import os
from fractions import Fraction

import numpy as np

from expr_core import Expr
from numerics import CallbackField, CallbackSystem, flat_derivative
from symmetry import SymmetryBasis
from vectorfield import ControlSystem, SystemDocumentError, VectorField


DEFAULT_DB_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'nullforms_database.json')

ORIGIN = (0.0, 0.0, 0.0)

DW = VectorField(0, 0, 1)


# ============================================================================
# Null-forms
# ============================================================================

def sigma_e(base=ORIGIN):
    return ControlSystem(['cos(w)', 'sin(w)', 0], DW, base, 'sigma_e', 'E')


def sigma_h(base=ORIGIN):
    return ControlSystem(['cosh(w)', 'sinh(w)', 0], DW, base, 'sigma_h', 'H')


def sigma_p(base=(0.0, 0.0, 1.0)):
    return ControlSystem(['w^2', 'w', 0], DW, base, 'sigma_p', 'P')


def sigma_p0(base=ORIGIN):
    """Sigma_P at an equilibrium (w0 = 0)."""
    return ControlSystem(['w^2', 'w', 0], DW, base, 'sigma_p0', 'P')


def sigma_p1(base=ORIGIN):
    """Non-equilibrium parabolic normal form: Sigma_P with w shifted by 1."""
    return ControlSystem(['(w+1)^2', 'w+1', 0], DW, base, 'sigma_p1', 'P')


def sigma_p0k(k, base=ORIGIN):
    if k < 1:
        raise ValueError(f'k must be >= 1, got {k}.')
    return ControlSystem([f'w^{2 * k}', f'w^{k}', 0], DW, base, f'sigma_p0k_{k}', 'P')


def zero_drift_system(base=ORIGIN):
    return ControlSystem([0, 0, 0], DW, base, 'zero_drift')


def linear_drift_system(base=ORIGIN):
    return ControlSystem(['w', 0, 0], DW, base, 'linear_drift')


def flat_system(base=ORIGIN):
    """
    Drift e(w)^2 dx + e(w) dy with e(w) = exp(-1/w^2), g = dw.

    Parabolic symmetry algebra, equilibrium at w = 0 and every ad_g^k f
    vanishing there, so no finite k exists.
    """
    def values(points):
        w = points[:, 2]
        return np.column_stack([flat_derivative(0, w, 2), flat_derivative(0, w, 1), np.zeros_like(w)])

    def jacobian(points):
        w = points[:, 2]
        jac = np.zeros((len(w), 3, 3))
        jac[:, 0, 2] = flat_derivative(1, w, 2)
        jac[:, 1, 2] = flat_derivative(1, w, 1)
        return jac

    def ad_power(k, points):
        w = points[:, 2]
        return np.column_stack([flat_derivative(k, w, 2), flat_derivative(k, w, 1), np.zeros_like(w)])

    drift = CallbackField(values, jacobian, 'exp(-2/w^2), exp(-1/w^2), 0')
    symmetries = (
        VectorField(1, 0, 0),
        VectorField(0, 1, 0),
        VectorField('2*x', 'y', '1/2*w^3'),
    )
    return CallbackSystem(drift, DW, ad_power, symmetries, base, 'flat', 'P')


# ============================================================================
# Symmetry generators
# ============================================================================

def symmetry_generators(kind, k=1):
    """
    Generator list of the symmetry algebra of a null-form.

    kind: 'E', 'H', 'P' (Sigma_P), 'P1' (Sigma_P^1) or 'P0k' (Sigma_P^{0,k})
    """
    dx, dy = VectorField(1, 0, 0), VectorField(0, 1, 0)
    if kind == 'E':
        third = VectorField('y', '-x', -1)
    elif kind == 'H':
        third = VectorField('y', 'x', 1)
    elif kind == 'P':
        third = VectorField('2*x', 'y', 'w')
    elif kind == 'P1':
        third = VectorField('2*x', 'y', 'w+1')
    elif kind == 'P0k':
        third = VectorField('2*x', 'y', Expr.variable('w') * Fraction(1, k))
    else:
        raise ValueError(f'Unknown generator list {kind!r}.')
    return SymmetryBasis((dx, dy, third), source='supplied')


def normal_form_for(verdict, base=ORIGIN):
    """The null-form a definite conic verdict names, or None."""
    if verdict.tag == 'Elliptic':
        return sigma_e(base)
    if verdict.tag == 'Hyperbolic':
        return sigma_h(base)
    if verdict.tag == 'ParabolicNonEq':
        return sigma_p1(base)
    if verdict.tag == 'ParabolicEq':
        return sigma_p0k(verdict.k, base)
    return None


def corpus():
    """Symbolic null-forms and negative controls, keyed by name."""
    systems = [sigma_e(), sigma_h(), sigma_p(), sigma_p0(), sigma_p1(),
               sigma_p0k(2), sigma_p0k(3), zero_drift_system(), linear_drift_system()]
    return {s.name: s for s in systems}


# ============================================================================
# Database
# ============================================================================

def builtin_documents():
    return {name: s.to_document() for name, s in corpus().items()}


def load_system_database(db_path=DEFAULT_DB_PATH):
    """
    Load a system database (name -> system document) from JSON.

    Returns an empty database if the file is missing or unreadable.
    """
    if os.path.exists(db_path):
        try:
            with open(db_path, 'r') as f:
                db = json.load(f)
            if not isinstance(db, dict):
                raise ValueError('top level is not an object')
            return db
        except Exception as e:
            print(f'\033[33mWarning: Could not load system database: {e}\033[0m')
            return {}
    return {}


def save_system_database(db, db_path=DEFAULT_DB_PATH, verbose=False):
    """Save a system database to JSON (sorted keys)."""
    with open(db_path, 'w') as f:
        json.dump(db, f, indent=2, sort_keys=True)
        f.write('\n')
    if verbose:
        print(f'\n✓ System database saved to: {db_path}')


def is_database(data):
    """A database maps names to documents; a single document has 'f' and 'g'."""
    return isinstance(data, dict) and not ('f' in data and 'g' in data)


def load_system_document(path, name=None):
    """
    Read one system document from a document file or a database file.

    Raises:
        OSError, json.JSONDecodeError: on unreadable files
        SystemDocumentError: if a database needs a name or the name is unknown
    """
    with open(path, 'r') as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise SystemDocumentError(f'{path} must hold a JSON object.')
    if not is_database(data):
        if name is not None and data.get('name') not in (None, name):
            raise SystemDocumentError(f'{path} holds "{data.get("name")}", not "{name}".')
        return data
    if name is None:
        if len(data) == 1:
            return next(iter(data.values()))
        raise SystemDocumentError(
            f'{path} is a database of {len(data)} systems; pick one with --name ({", ".join(sorted(data))}).')
    if name not in data:
        raise SystemDocumentError(f'No system "{name}" in {path}. Known: {", ".join(sorted(data))}.')
    doc = dict(data[name])
    doc.setdefault('name', name)
    return doc


__all__ = [
    'DEFAULT_DB_PATH', 'sigma_e', 'sigma_h', 'sigma_p', 'sigma_p0', 'sigma_p1', 'sigma_p0k',
    'zero_drift_system', 'linear_drift_system', 'flat_system', 'symmetry_generators',
    'normal_form_for', 'corpus', 'builtin_documents', 'load_system_database',
    'save_system_database', 'load_system_document', 'is_database',
]
