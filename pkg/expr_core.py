"""
Exact symbolic expressions in the state variables x, y, w.

An Expr is a finite sum of monomials

    c * x^a * y^b * w^p * T(m*w) * exp(n*w)

with exact rational coefficients c, where T is cos, sin or absent (m >= 1) and
n is an integer. The family is closed under sums, products (product-to-sum for
the trig factors, additive merging of the exponential frequencies) and partial
derivatives, and its monomials are linearly independent over the reals, so an
expression is identically zero exactly when its canonical term map is empty.

cosh and sinh are rewritten into the exp(+-n*w) basis on construction.

Usage:
    from expr_core import parse, differentiate

    e = parse('w^2 + 3*x*y')
    de = differentiate(e, 'w')     # 2*w
    print(de)
"""

import math
import re
from collections import namedtuple
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType

import numpy as np


VARIABLES = ('x', 'y', 'w')

TRIG_NONE = 0
TRIG_COS = 1
TRIG_SIN = 2
_TRIG_NAMES = {TRIG_COS: 'cos', TRIG_SIN: 'sin'}

_HALF = Fraction(1, 2)

# Denominator bound of the rational constants a w-shift introduces.
SHIFT_MAX_DENOMINATOR = 256

# Field order is the canonical (printing and storage) order of monomials.
Monomial = namedtuple('Monomial', ['px', 'py', 'pw', 'trig', 'freq', 'expk'])
Point = namedtuple('Point', ['x', 'y', 'w'])

ONE = Monomial(0, 0, 0, TRIG_NONE, 0, 0)


# ============================================================================
# Errors
# ============================================================================

class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    """Malformed expression text. ``position`` is the 0-based character offset."""

    def __init__(self, message, text=None, position=None):
        self.text = text
        self.position = position
        if text is not None and position is not None:
            message = f'{message} at position {position}\n  {text}\n  {" " * position}^'
        super().__init__(message)


class UnsupportedFunctionError(ExprError):
    """Function outside cos, sin, cosh, sinh, exp, or an argument not of the form q*w."""


class NonIntegerFrequencyError(ExprError):
    """Trig or exponential frequency that is not an integer multiple of w."""


class ExpressionClassError(ExprError):
    """A substitution would leave the supported expression class."""


class ExprOverflowError(OverflowError):
    """Numeric evaluation exceeded the double range."""


# ============================================================================
# Points
# ============================================================================

def make_point(x, y=None, w=None):
    """
    Build a finite Point from three numbers or from one 3-sequence.

    Raises:
        ValueError: if a coordinate is missing or not finite
    """
    if y is None and w is None:
        coords = list(x)
    else:
        coords = [x, y, w]
    if len(coords) != 3:
        raise ValueError(f'A point needs exactly 3 coordinates (x, y, w), got {len(coords)}.')
    coords = [float(c) for c in coords]
    if not all(math.isfinite(c) for c in coords):
        raise ValueError(f'Point coordinates must be finite, got {coords}.')
    return Point(*coords)


# ============================================================================
# Trig product tables
# ============================================================================

def _trig_factor(kind, m):
    """Normalize T(m*w) to (sign, kind, freq) with freq >= 1, or None if it vanishes."""
    if kind == TRIG_COS:
        if m == 0:
            return (1, TRIG_NONE, 0)
        return (1, TRIG_COS, abs(m))
    if m == 0:
        return None
    if m < 0:
        return (-1, TRIG_SIN, -m)
    return (1, TRIG_SIN, m)


@lru_cache(maxsize=None)
def _trig_product(k1, m1, k2, m2):
    """Product-to-sum: T1(m1 w) * T2(m2 w) as a tuple of (coef, kind, freq)."""
    if k1 == TRIG_NONE:
        return ((Fraction(1), k2, m2),)
    if k2 == TRIG_NONE:
        return ((Fraction(1), k1, m1),)
    if k1 == TRIG_COS and k2 == TRIG_COS:
        parts = [(_HALF, TRIG_COS, m1 - m2), (_HALF, TRIG_COS, m1 + m2)]
    elif k1 == TRIG_SIN and k2 == TRIG_SIN:
        parts = [(_HALF, TRIG_COS, m1 - m2), (-_HALF, TRIG_COS, m1 + m2)]
    elif k1 == TRIG_SIN:
        parts = [(_HALF, TRIG_SIN, m1 + m2), (_HALF, TRIG_SIN, m1 - m2)]
    else:
        parts = [(_HALF, TRIG_SIN, m1 + m2), (-_HALF, TRIG_SIN, m1 - m2)]
    merged = {}
    for coef, kind, m in parts:
        norm = _trig_factor(kind, m)
        if norm is None:
            continue
        sign, kind, m = norm
        merged[(kind, m)] = merged.get((kind, m), 0) + sign * coef
    return tuple((c, kind, m) for (kind, m), c in sorted(merged.items()) if c)


# ============================================================================
# Expr
# ============================================================================

def _as_fraction(value):
    if isinstance(value, bool):
        raise TypeError('Booleans are not expression coefficients.')
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    raise TypeError(
        f'Exact coefficients only (int or Fraction), got {type(value).__name__}. '
        'Use parse() or Fraction for rational constants.')


class Expr:
    """
    Immutable canonical expression: a sorted map Monomial -> nonzero Fraction.

    Supports +, -, * with other Expr, int and Fraction, and ** with
    non-negative integer exponents.
    """

    __slots__ = ('_terms', '_hash')

    def __init__(self, terms=None):
        cleaned = {}
        for key, coef in (terms or {}).items():
            key = Monomial(*key)
            _check_monomial(key)
            coef = _as_fraction(coef)
            if coef:
                cleaned[key] = cleaned.get(key, 0) + coef
        self._terms = {k: c for k, c in sorted(cleaned.items()) if c}
        self._hash = None

    @classmethod
    def _make(cls, terms):
        """Build from Monomial keys without validation; drops zero coefficients."""
        e = cls.__new__(cls)
        e._terms = {k: c for k, c in sorted(terms.items()) if c}
        e._hash = None
        return e

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls):
        return cls._make({})

    @classmethod
    def constant(cls, value):
        return cls._make({ONE: _as_fraction(value)})

    @classmethod
    def variable(cls, name):
        if name not in VARIABLES:
            raise ExprError(f'Unknown variable "{name}". Use one of {", ".join(VARIABLES)}.')
        powers = [1 if v == name else 0 for v in VARIABLES]
        return cls._make({Monomial(*powers, TRIG_NONE, 0, 0): Fraction(1)})

    @classmethod
    def cos(cls, m=1):
        return cls._trig(TRIG_COS, m)

    @classmethod
    def sin(cls, m=1):
        return cls._trig(TRIG_SIN, m)

    @classmethod
    def _trig(cls, kind, m):
        norm = _trig_factor(kind, int(m))
        if norm is None:
            return cls.zero()
        sign, kind, m = norm
        return cls._make({Monomial(0, 0, 0, kind, m, 0): Fraction(sign)})

    @classmethod
    def exp(cls, n=1):
        return cls._make({Monomial(0, 0, 0, TRIG_NONE, 0, int(n)): Fraction(1)})

    @classmethod
    def cosh(cls, n=1):
        return (cls.exp(n) + cls.exp(-n)) * _HALF

    @classmethod
    def sinh(cls, n=1):
        return (cls.exp(n) - cls.exp(-n)) * _HALF

    @classmethod
    def affine(cls, coeffs, offset=0):
        """a*x + b*y + c*w + offset for exact coefficients (a, b, c)."""
        out = cls.constant(offset)
        for name, coef in zip(VARIABLES, coeffs):
            if coef:
                out = out + cls.variable(name) * _as_fraction(coef)
        return out

    # -- inspection ----------------------------------------------------------

    @property
    def terms(self):
        """Read-only view of the canonical term map."""
        return MappingProxyType(self._terms)

    def is_zero(self):
        return not self._terms

    def is_constant(self):
        return all(k == ONE for k in self._terms)

    def constant_value(self):
        """The constant term (Fraction); 0 if absent."""
        return self._terms.get(ONE, Fraction(0))

    def degree(self):
        """Total polynomial degree in x, y, w (-1 for the zero expression)."""
        return max((k.px + k.py + k.pw for k in self._terms), default=-1)

    # -- arithmetic ----------------------------------------------------------

    @staticmethod
    def _coerce(other):
        if isinstance(other, Expr):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Expr.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0) + c
        return Expr._make(out)

    __radd__ = __add__

    def __neg__(self):
        return Expr._make({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            c = Fraction(other)
            return Expr._make({k: v * c for k, v in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = {}
        for ka, ca in self._terms.items():
            for kb, cb in other._terms.items():
                c = ca * cb
                px, py, pw = ka.px + kb.px, ka.py + kb.py, ka.pw + kb.pw
                expk = ka.expk + kb.expk
                for tc, kind, m in _trig_product(ka.trig, ka.freq, kb.trig, kb.freq):
                    key = Monomial(px, py, pw, kind, m, expk)
                    out[key] = out.get(key, 0) + c * tc
        return Expr._make(out)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ExprError(f'Only non-negative integer powers are supported, got {n!r}.')
        result = Expr.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- identity ------------------------------------------------------------

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._terms == other._terms

    def __hash__(self):
        # Constants compare equal to int/Fraction, so they hash like them.
        if self._hash is None:
            if all(k == ONE for k in self._terms):
                self._hash = hash(self._terms.get(ONE, Fraction(0)))
            else:
                self._hash = hash(tuple(self._terms.items()))
        return self._hash

    def __repr__(self):
        return f"Expr('{self}')"

    def __str__(self):
        return format_expr(self)

    # -- calculus and evaluation ----------------------------------------------

    def diff(self, var):
        return differentiate(self, var)

    def evaluate(self, p):
        return evaluate(self, p)

    def evaluate_array(self, x, y, w):
        """Vectorized evaluation on numpy arrays of equal shape."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        w = np.asarray(w, dtype=float)
        total = np.zeros(np.broadcast(x, y, w).shape)
        trig_cache = {}
        with np.errstate(over='ignore', invalid='ignore'):
            for k, c in self._terms.items():
                v = np.full_like(total, float(c))
                if k.px:
                    v = v * x ** k.px
                if k.py:
                    v = v * y ** k.py
                if k.pw:
                    v = v * w ** k.pw
                if k.trig:
                    key = (k.trig, k.freq)
                    if key not in trig_cache:
                        fn = np.cos if k.trig == TRIG_COS else np.sin
                        trig_cache[key] = fn(k.freq * w)
                    v = v * trig_cache[key]
                if k.expk:
                    v = v * np.exp(k.expk * w)
                total = total + v
        if not np.all(np.isfinite(total)):
            raise ExprOverflowError(f'Evaluation of {self} exceeded the double range.')
        return total


def _check_monomial(key):
    if min(key.px, key.py, key.pw) < 0:
        raise ExprError(f'Negative powers are not supported: {key}.')
    if key.trig not in (TRIG_NONE, TRIG_COS, TRIG_SIN):
        raise ExprError(f'Unknown trig kind {key.trig}.')
    if key.trig == TRIG_NONE and key.freq != 0:
        raise ExprError(f'Frequency without trig factor: {key}.')
    if key.trig != TRIG_NONE and key.freq < 1:
        raise ExprError(f'Trig frequency must be >= 1: {key}.')


# ============================================================================
# Module-level operations
# ============================================================================

def add(a, b):
    return a + b


def mul(a, b):
    return a * b


def negate(e):
    return -e


def is_zero(e):
    """Exact identity test: true iff the canonical term map is empty."""
    return e.is_zero()


def differentiate(e, var):
    """
    Exact partial derivative of e with respect to var ('x', 'y' or 'w').

    Args:
        e (Expr): expression
        var (str): differentiation variable

    Returns:
        Expr: canonical derivative
    """
    if var not in VARIABLES:
        raise ExprError(f'Unknown variable "{var}". Use one of {", ".join(VARIABLES)}.')
    out = {}

    def bump(key, coef):
        out[key] = out.get(key, 0) + coef

    for k, c in e._terms.items():
        if var == 'x':
            if k.px:
                bump(k._replace(px=k.px - 1), c * k.px)
        elif var == 'y':
            if k.py:
                bump(k._replace(py=k.py - 1), c * k.py)
        else:
            if k.pw:
                bump(k._replace(pw=k.pw - 1), c * k.pw)
            if k.trig == TRIG_COS:
                bump(k._replace(trig=TRIG_SIN), -c * k.freq)
            elif k.trig == TRIG_SIN:
                bump(k._replace(trig=TRIG_COS), c * k.freq)
            if k.expk:
                bump(k, c * k.expk)
    return Expr._make(out)


def evaluate(e, p):
    """
    Evaluate e at the point p = (x, y, w) in double precision.

    Raises:
        ExprOverflowError: if a term or the sum leaves the double range
    """
    x, y, w = (float(c) for c in p)
    total = 0.0
    try:
        for k, c in e._terms.items():
            v = float(c)
            if k.px:
                v *= x ** k.px
            if k.py:
                v *= y ** k.py
            if k.pw:
                v *= w ** k.pw
            if k.trig == TRIG_COS:
                v *= math.cos(k.freq * w)
            elif k.trig == TRIG_SIN:
                v *= math.sin(k.freq * w)
            if k.expk:
                v *= math.exp(k.expk * w)
            if not math.isfinite(v):
                raise OverflowError
            total += v
    except OverflowError as err:
        raise ExprOverflowError(f'Evaluation of {e} at {tuple(p)} exceeded the double range.') from err
    if not math.isfinite(total):
        raise ExprOverflowError(f'Evaluation of {e} at {tuple(p)} exceeded the double range.')
    return total


# ============================================================================
# Printing
# ============================================================================

def _frequency_argument(n):
    if n == 1:
        return 'w'
    if n == -1:
        return '-w'
    return f'{n}*w'


def _format_monomial(k):
    factors = []
    for name, power in (('x', k.px), ('y', k.py), ('w', k.pw)):
        if power == 1:
            factors.append(name)
        elif power > 1:
            factors.append(f'{name}^{power}')
    if k.trig:
        factors.append(f'{_TRIG_NAMES[k.trig]}({_frequency_argument(k.freq)})')
    if k.expk:
        factors.append(f'exp({_frequency_argument(k.expk)})')
    return '*'.join(factors)


def format_expr(e):
    """Deterministic text form: sorted monomials, coefficients as p/q."""
    if e.is_zero():
        return '0'
    pieces = []
    for i, (k, c) in enumerate(e._terms.items()):
        body = _format_monomial(k)
        mag = abs(c)
        if not body:
            text = str(mag)
        elif mag == 1:
            text = body
        else:
            text = f'{mag}*{body}'
        if i == 0:
            pieces.append(f'-{text}' if c < 0 else text)
        else:
            pieces.append(f' - {text}' if c < 0 else f' + {text}')
    return ''.join(pieces)


# ============================================================================
# Parsing
# ============================================================================

_TOKEN_RE = re.compile(
    r'\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^()]))')

_FUNCTIONS = ('cos', 'sin', 'cosh', 'sinh', 'exp')


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip() == '':
                break
            raise ExprSyntaxError(f'Unexpected character {text[pos]!r}', text, pos)
        if m.end() == pos or m.lastgroup is None:
            if text[pos:].strip() == '':
                break
            raise ExprSyntaxError(f'Unexpected character {text[pos]!r}', text, pos)
        kind = m.lastgroup
        start = m.start(kind)
        value = m.group(kind)
        if value == '**':
            value = '^'
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(('end', None, len(text)))
    return tokens


class _Parser:
    """
    Recursive descent over the grammar

        expr   := term (('+' | '-') term)*
        term   := unary (('*' | '/') unary)*
        unary  := ('-' | '+') unary | power
        power  := atom ('^' integer)?
        atom   := number | x | y | w | func '(' expr ')' | '(' expr ')'
    """

    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, got, pos = self.take()
        if got != value:
            shown = 'end of input' if kind == 'end' else repr(got)
            raise ExprSyntaxError(f'Expected {value!r} but found {shown}', self.text, pos)

    def parse(self):
        if self.peek()[0] == 'end':
            raise ExprSyntaxError('Empty expression', self.text, 0)
        e = self.expr()
        kind, value, pos = self.peek()
        if kind != 'end':
            raise ExprSyntaxError(f'Unexpected {value!r}', self.text, pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ('+', '-'):
            _, op, _ = self.take()
            rhs = self.term()
            e = e + rhs if op == '+' else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ('*', '/'):
            _, op, pos = self.take()
            rhs = self.unary()
            if op == '*':
                e = e * rhs
            else:
                if not rhs.is_constant() or rhs.is_zero():
                    raise ExprSyntaxError('Division is only allowed by nonzero constants', self.text, pos)
                e = e * (1 / rhs.constant_value())
        return e

    def unary(self):
        if self.peek()[1] in ('-', '+'):
            _, op, _ = self.take()
            e = self.unary()
            return -e if op == '-' else e
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == '^':
            self.take()
            if self.peek()[1] == '+':
                self.take()
            kind, value, pos = self.take()
            if kind != 'num' or not value.isdigit():
                raise ExprSyntaxError('Exponent must be a non-negative integer literal', self.text, pos)
            return base ** int(value)
        return base

    def atom(self):
        kind, value, pos = self.take()
        if kind == 'num':
            return Expr.constant(Fraction(value))
        if kind == 'name':
            if value in VARIABLES:
                return Expr.variable(value)
            if value in _FUNCTIONS:
                self.expect('(')
                arg_pos = self.peek()[2]
                arg = self.expr()
                self.expect(')')
                return _apply_function(value, arg, self.text, arg_pos)
            if self.peek()[1] == '(':
                raise UnsupportedFunctionError(
                    f'Unsupported function "{value}" at position {pos}. '
                    f'Supported: {", ".join(_FUNCTIONS)}.')
            raise ExprSyntaxError(f'Unknown symbol "{value}"', self.text, pos)
        if value == '(':
            e = self.expr()
            self.expect(')')
            return e
        shown = 'end of input' if kind == 'end' else repr(value)
        raise ExprSyntaxError(f'Unexpected {shown}', self.text, pos)


def _frequency_of(name, arg, text, pos):
    if arg.is_zero():
        return 0
    items = list(arg.terms.items())
    if len(items) != 1 or items[0][0] != Monomial(0, 0, 1, TRIG_NONE, 0, 0):
        raise UnsupportedFunctionError(
            f'{name}({arg}) at position {pos}: only arguments of the form q*w are supported.')
    q = items[0][1]
    if q.denominator != 1:
        raise NonIntegerFrequencyError(
            f'{name}({arg}) at position {pos}: frequency {q} is not an integer.')
    return int(q)


def _apply_function(name, arg, text, pos):
    n = _frequency_of(name, arg, text, pos)
    if name == 'cos':
        return Expr.cos(n)
    if name == 'sin':
        return Expr.sin(n)
    if name == 'exp':
        return Expr.exp(n)
    if name == 'cosh':
        return Expr.cosh(n)
    return Expr.sinh(n)


def parse(text):
    """
    Parse an expression string into its canonical Expr.

    Grammar: integer/decimal literals, x, y, w, + - * / ^ (or **), parentheses
    and cos, sin, cosh, sinh, exp applied to q*w with integer q. Division is
    only by nonzero constants, so '1/2*cos(2*w)' denotes a rational coefficient.

    Raises:
        ExprSyntaxError, UnsupportedFunctionError, NonIntegerFrequencyError
    """
    if isinstance(text, Expr):
        return text
    if isinstance(text, (int, Fraction)) and not isinstance(text, bool):
        return Expr.constant(text)
    if not isinstance(text, str):
        raise ExprSyntaxError(f'Expected an expression string, got {type(text).__name__}')
    return _Parser(text.replace('−', '-')).parse()


def as_expr(value):
    """Coerce Expr, int, Fraction or expression text to Expr."""
    return parse(value)


# ============================================================================
# Affine substitution
# ============================================================================

@lru_cache(maxsize=None)
def _unit_rotation(t):
    """
    Rational point (c, s) on the unit circle close to (cos t, sin t).

    Rational parametrization from tau ~ tan(t/2) with a small denominator,
    so c^2 + s^2 == 1 holds exactly.
    """
    theta = math.remainder(float(t), 2 * math.pi)
    flip = abs(theta) > math.pi / 2
    if flip:
        theta -= math.copysign(math.pi, theta)
    tau = Fraction(math.tan(theta / 2)).limit_denominator(SHIFT_MAX_DENOMINATOR)
    c = (1 - tau * tau) / (1 + tau * tau)
    s = 2 * tau / (1 + tau * tau)
    return (-c, -s) if flip else (c, s)


def _shift_constants(m, t):
    """cos(m*t'), sin(m*t') for the rational rotation angle t' ~ t (exact for t == 0)."""
    if t == 0:
        return Fraction(1), Fraction(0)
    c1, s1 = _unit_rotation(t)
    c, s = Fraction(1), Fraction(0)
    for _ in range(m):
        c, s = c * c1 - s * s1, s * c1 + c * s1
    return c, s


@lru_cache(maxsize=None)
def _exp_shift(t):
    """Rational E > 0 near exp(t); E**n stands for exp(n*t)."""
    if t < 0:
        return 1 / _exp_shift(-t)
    return Fraction(math.exp(float(t))).limit_denominator(SHIFT_MAX_DENOMINATOR)


def substitute_affine(e, rows):
    """
    Pull e back through an affine change of variables.

    Each old variable is replaced by an affine expression of the new ones:
    rows[i] = ((a, b, c), offset) means var_i = a*x + b*y + c*w + offset.

    Polynomial parts substitute exactly. Trig and exponential factors require
    the w-row to be w = s*w + t with s an integer. For a nonzero t the trig
    factors are rotated by a rational point of the unit circle near (cos t, sin t)
    and the exp factors scaled by powers of a rational E near exp(t). Both come
    from rationals with denominators at most SHIFT_MAX_DENOMINATOR, and
    cos^2 + sin^2 = 1 and exp(n*t) * exp(-n*t) = 1 stay exact.

    Raises:
        ExpressionClassError: if a trig/exp factor meets a w-row that mixes in x or y
        NonIntegerFrequencyError: if a frequency times s is not an integer
    """
    rows = [(tuple(Fraction(c) for c in coeffs), Fraction(offset)) for coeffs, offset in rows]
    linear = [Expr.affine(coeffs, offset) for coeffs, offset in rows]
    (wa, wb, s), t = rows[2]
    power_cache = {}

    def power(i, n):
        if (i, n) not in power_cache:
            power_cache[(i, n)] = linear[i] ** n
        return power_cache[(i, n)]

    def transcendental(k):
        if wa or wb:
            raise ExpressionClassError(
                f'Cannot substitute into {_format_monomial(k)}: the new w-coordinate must not mix in x or y.')
        factor = Expr.constant(1)
        if k.trig:
            scaled = k.freq * s
            if scaled.denominator != 1:
                raise NonIntegerFrequencyError(
                    f'Substitution gives non-integer frequency {scaled} in {_format_monomial(k)}.')
            c, sn = _shift_constants(k.freq, t)
            m = int(scaled)
            if k.trig == TRIG_COS:
                factor = Expr.cos(m) * c - Expr.sin(m) * sn
            else:
                factor = Expr.sin(m) * c + Expr.cos(m) * sn
        if k.expk:
            scaled = k.expk * s
            if scaled.denominator != 1:
                raise NonIntegerFrequencyError(
                    f'Substitution gives non-integer frequency {scaled} in {_format_monomial(k)}.')
            shift = Fraction(1) if t == 0 else _exp_shift(t) ** k.expk
            factor = factor * Expr.exp(int(scaled)) * shift
        return factor

    out = Expr.zero()
    for k, c in e.terms.items():
        part = Expr.constant(c) * power(0, k.px) * power(1, k.py) * power(2, k.pw)
        if k.trig or k.expk:
            part = part * transcendental(k)
        out = out + part
    return out
