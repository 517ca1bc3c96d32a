"""
Numeric flows, trajectories and normalizing charts.

- integrate_flow: classical RK4 for a vector field jointly with its variational
  equation, batched over arrays of start points with per-point times
- simulate: RK4 trajectories of f + g u(t) under a piecewise-constant control
- constraint_residual: conic constraint S(xdot, ydot) along a trajectory
- flow_pushforward_residual: numeric check that a flow preserves the affine
  line field A = f + G
- build_chart / chart_invariant: rectifying chart from the flows of the ideal
  generators and g, and the class invariant of the pulled-back drift

Fields are anything with values(points) -> (N, 3) and
jacobian_values(points) -> (N, 3, 3): symbolic VectorFields or CallbackFields.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from liealg import abelian_ideal_2d, classify_algebra, structure_constants
from vectorfield import DegenerateGError, default_tol, lie_bracket


DEFAULT_STEP = 1e-3
BLOWUP_NORM = 1e9
CHART_BOX = 0.5
CHART_SAMPLES = 5
CHART_MIN_DET = 1e-6
DIVISION_FLOOR = 1e-8


class FlowBlowUpError(ArithmeticError):
    """The integrated state left the ball of radius BLOWUP_NORM."""


class TooShortError(ValueError):
    """Fewer samples than central differences need."""


class NotCommutingError(ValueError):
    """The ideal generators do not commute."""


class NotIndependentError(ValueError):
    """The ideal generators and g are dependent at the chart center."""


class ChartSingularError(ValueError):
    """The chart Jacobian determinant falls below CHART_MIN_DET on the box."""


class DivisionNearZeroError(ArithmeticError):
    """A denominator of the parabolic invariant is below DIVISION_FLOOR."""


# ============================================================================
# Callback fields (outside the symbolic class)
# ============================================================================

class CallbackField:
    """
    Vector field given by numeric callbacks.

    Args:
        values: callable (N, 3) -> (N, 3)
        jacobian: callable (N, 3) -> (N, 3, 3)
        name: display name
    """

    def __init__(self, values, jacobian, name=None):
        self._values = values
        self._jacobian = jacobian
        self.name = name or 'callback field'

    def values(self, points):
        return np.asarray(self._values(np.atleast_2d(np.asarray(points, dtype=float))), dtype=float)

    def jacobian_values(self, points):
        return np.asarray(self._jacobian(np.atleast_2d(np.asarray(points, dtype=float))), dtype=float)

    def at(self, p):
        return self.values(np.asarray(p, dtype=float).reshape(1, 3))[0]

    def __str__(self):
        return self.name


class CallbackSystem:
    """
    Control-affine system whose drift is a CallbackField.

    Attributes:
        f (CallbackField): drift
        g (VectorField): symbolic control field
        ad_power_callback: callable (k, points) -> ad_g^k f at the points, (N, 3)
        symmetries (tuple of VectorField): supplied in-class symmetry generators
        base, name, kind: as for ControlSystem
    """

    def __init__(self, f, g, ad_power_callback, symmetries=(), base=None, name=None, kind=None):
        self.f = f
        self.g = g
        self.ad_power_callback = ad_power_callback
        self.symmetries = tuple(symmetries)
        self.base = None if base is None else tuple(float(c) for c in base)
        self.name = name
        self.kind = kind
        self.fields = {}

    def ad_power_at(self, k, p):
        return np.asarray(self.ad_power_callback(k, np.asarray(p, dtype=float).reshape(1, 3)))[0]

    def with_base(self, base):
        return CallbackSystem(self.f, self.g, self.ad_power_callback, self.symmetries, base, self.name, self.kind)

    def velocity_values(self, points, u):
        u = np.asarray(u, dtype=float).reshape(-1, 1)
        return self.f.values(points) + self.g.values(points) * u


def flat_derivative(k, w, a=1):
    """
    k-th derivative of exp(-a / w^2), with value 0 at w = 0.

    d^k/dw^k exp(-a/w^2) = P_k(1/w) exp(-a/w^2) with P_0 = 1 and
    P_{k+1}(u) = -u^2 P_k'(u) + 2 a u^3 P_k(u).
    """
    poly = np.polynomial.Polynomial([1.0])
    minus_u2 = np.polynomial.Polynomial([0.0, 0.0, -1.0])
    two_a_u3 = np.polynomial.Polynomial([0.0, 0.0, 0.0, 2.0 * a])
    for _ in range(k):
        poly = minus_u2 * poly.deriv() + two_a_u3 * poly
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    # exp underflows to 0 well before P_k(1/w) overflows for the k used here
    mask = np.abs(w) > 0
    mask &= a / np.where(mask, w, 1.0) ** 2 < 700.0
    u = 1.0 / w[mask]
    out[mask] = poly(u) * np.exp(-a * u * u)
    return out


# ============================================================================
# Flows
# ============================================================================

def _check_state(state):
    norms = np.linalg.norm(state, axis=-1)
    if not np.all(np.isfinite(norms)) or np.any(norms > BLOWUP_NORM):
        raise FlowBlowUpError(f'Flow left the ball of radius {BLOWUP_NORM:g}.')


def flow_batch(v, points, times, step=DEFAULT_STEP, jacobian=True):
    """
    RK4 flow of v from each row of points for the matching entry of times.

    Every point takes the same number of steps n = ceil(max|t| / step), with its
    own step t_i / n.

    Returns:
        (states (N, 3), jacobians (N, 3, 3) or None)
    """
    if step <= 0:
        raise ValueError(f'step must be > 0, got {step}.')
    state = np.array(np.atleast_2d(points), dtype=float)
    n_points = state.shape[0]
    times = np.broadcast_to(np.asarray(times, dtype=float), (n_points,))
    n_steps = max(1, int(math.ceil(np.max(np.abs(times)) / step))) if n_points else 1
    if n_points == 0 or not np.any(times):
        eye = np.broadcast_to(np.eye(3), (n_points, 3, 3)).copy()
        return state, (eye if jacobian else None)
    h = (times / n_steps)[:, None]
    hj = h[:, :, None]
    jac = np.broadcast_to(np.eye(3), (n_points, 3, 3)).copy() if jacobian else None

    def rhs(x, j):
        dx = v.values(x)
        if j is None:
            return dx, None
        return dx, v.jacobian_values(x) @ j

    with np.errstate(over='raise', invalid='raise'):
        try:
            for _ in range(n_steps):
                k1, m1 = rhs(state, jac)
                k2, m2 = rhs(state + 0.5 * h * k1, None if jac is None else jac + 0.5 * hj * m1)
                k3, m3 = rhs(state + 0.5 * h * k2, None if jac is None else jac + 0.5 * hj * m2)
                k4, m4 = rhs(state + h * k3, None if jac is None else jac + hj * m3)
                state = state + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
                if jac is not None:
                    jac = jac + hj / 6.0 * (m1 + 2 * m2 + 2 * m3 + m4)
                _check_state(state)
        except (FloatingPointError, OverflowError) as e:
            raise FlowBlowUpError(f'Flow overflowed: {e}') from e
    return state, jac


def integrate_flow(v, p0, t, step=DEFAULT_STEP):
    """
    Flow point gamma^v_t(p0) and Jacobian D gamma^v_t(p0) by RK4.

    Raises:
        FlowBlowUpError: if the state norm exceeds BLOWUP_NORM
    """
    states, jacs = flow_batch(v, np.asarray(p0, dtype=float).reshape(1, 3), [t], step)
    return tuple(float(c) for c in states[0]), jacs[0]


# ============================================================================
# Controls and trajectories
# ============================================================================

class ControlSchedule:
    """
    Piecewise-constant control u(t) = values[i] on [breakpoints[i], breakpoints[i+1]).

    The first breakpoint must be 0; the last value holds for all later times.
    """

    def __init__(self, breakpoints, values):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.breakpoints.ndim != 1 or self.breakpoints.shape != self.values.shape or not len(self.values):
            raise ValueError('Control schedule needs equally many breakpoints and values (at least one).')
        if self.breakpoints[0] != 0:
            raise ValueError(f'Control schedule must start at t=0, got {self.breakpoints[0]}.')
        if np.any(np.diff(self.breakpoints) <= 0):
            raise ValueError('Control schedule breakpoints must be strictly increasing.')
        if not np.all(np.isfinite(self.values)):
            raise ValueError('Control values must be finite.')

    @classmethod
    def constant(cls, u):
        return cls([0.0], [u])

    @classmethod
    def parse(cls, text):
        """
        Parse '1' (constant) or 't0:u0,t1:u1,...' into a schedule.
        """
        text = str(text).strip()
        if ':' not in text:
            try:
                return cls.constant(float(text))
            except ValueError as e:
                raise ValueError(f'Invalid control schedule {text!r}.') from e
        times, values = [], []
        for item in text.split(','):
            try:
                t, u = item.split(':')
                times.append(float(t))
                values.append(float(u))
            except ValueError as e:
                raise ValueError(f'Invalid control schedule entry {item!r}; expected "t:u".') from e
        return cls(times, values)

    @classmethod
    def random(cls, rng, T, pieces=4, bound=1.0):
        """Random schedule with `pieces` segments on [0, T] and values in [-bound, bound]."""
        cuts = np.sort(rng.uniform(0.0, T, size=pieces - 1))
        return cls(np.concatenate([[0.0], cuts]), rng.uniform(-bound, bound, size=pieces))

    def __call__(self, t):
        idx = np.searchsorted(self.breakpoints, t, side='right') - 1
        return self.values[np.clip(idx, 0, len(self.values) - 1)]

    def __str__(self):
        return ','.join(f'{t:g}:{u:g}' for t, u in zip(self.breakpoints, self.values))


@dataclass
class Trajectory:
    """Sampled solution: times (N,), states (N, 3), controls (N,)."""
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float).reshape(-1, 3)
        self.controls = np.asarray(self.controls, dtype=float)
        if not (len(self.times) == len(self.states) == len(self.controls)):
            raise ValueError('Trajectory times, states and controls must have equal lengths.')
        if np.any(np.diff(self.times) <= 0):
            raise ValueError('Trajectory times must be strictly increasing.')

    def __len__(self):
        return len(self.times)

    @property
    def endpoint(self):
        return tuple(float(c) for c in self.states[-1])

    def to_frame(self):
        frame = pd.DataFrame(self.states, columns=['x', 'y', 'w'])
        frame.insert(0, 't', self.times)
        frame['u'] = self.controls
        return frame

    def to_csv(self, path=None):
        """CSV with header t,x,y,w,u; returns the text when path is None."""
        return self.to_frame().to_csv(path, index=False, float_format='%.12g')

    def to_json(self):
        return json.dumps(self.to_frame().to_dict(orient='records'))


def simulate(s, schedule, p0, T, step=DEFAULT_STEP):
    """
    RK4 trajectory of f + g u(t) on [0, T].

    The control is held at its value at each step's midpoint, so schedules
    switching on step boundaries are integrated exactly piecewise.

    Raises:
        FlowBlowUpError
    """
    if step <= 0:
        raise ValueError(f'step must be > 0, got {step}.')
    if T <= 0:
        raise ValueError(f'T must be > 0, got {T}.')
    if not callable(schedule):
        schedule = ControlSchedule.constant(schedule)
    n = max(1, int(math.ceil(T / step - 1e-9)))
    h = T / n
    times = np.linspace(0.0, T, n + 1)
    states = np.empty((n + 1, 3))
    states[0] = np.asarray(p0, dtype=float)
    x = states[:1].copy()
    with np.errstate(over='raise', invalid='raise'):
        try:
            for i in range(n):
                u = float(schedule(times[i] + 0.5 * h))
                k1 = s.velocity_values(x, u)
                k2 = s.velocity_values(x + 0.5 * h * k1, u)
                k3 = s.velocity_values(x + 0.5 * h * k2, u)
                k4 = s.velocity_values(x + h * k3, u)
                x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
                _check_state(x)
                states[i + 1] = x[0]
        except (FloatingPointError, OverflowError) as e:
            raise FlowBlowUpError(f'Trajectory overflowed: {e}') from e
    controls = np.array([float(schedule(t)) for t in times])
    return Trajectory(times, states, controls)


CONIC_CONSTRAINTS = {
    'E': lambda xd, yd: xd ** 2 + yd ** 2 - 1.0,
    'H': lambda xd, yd: xd ** 2 - yd ** 2 - 1.0,
    'P': lambda xd, yd: yd ** 2 - xd,
}


def constraint_residual(tr, kind):
    """
    max |S(xdot, ydot)| over interior samples, derivatives by central differences.

    Raises:
        TooShortError: if the trajectory has fewer than 3 samples
    """
    if kind not in CONIC_CONSTRAINTS:
        raise ValueError(f'kind must be one of {sorted(CONIC_CONSTRAINTS)}, got {kind!r}.')
    if len(tr) < 3:
        raise TooShortError(f'Central differences need at least 3 samples, got {len(tr)}.')
    velocity = np.gradient(tr.states, tr.times, axis=0)[1:-1]
    residual = CONIC_CONSTRAINTS[kind](velocity[:, 0], velocity[:, 1])
    return float(np.max(np.abs(residual)))


def flow_pushforward_residual(v, s, p, t, step=DEFAULT_STEP):
    """
    Defect of (gamma^v_t)_* A(p) = A(q) at q = gamma^v_t(p), M = D gamma^v_t(p).

    Sum of the sine of the angle between M g(p) and g(q) and the normalized
    distance |(M f(p) - f(q)) x g(q)| / (|g(q)| (1 + |f(q)|)) of M f(p) from
    the line f(q) + G(q).
    """
    q, jac = integrate_flow(v, p, t, step)
    gp, gq = s.g.at(p), s.g.at(q)
    fp, fq = s.f.at(p), s.f.at(q)
    ng = np.linalg.norm(gq)
    if ng == 0:
        raise DegenerateGError(f'g vanishes at {q}.')
    mg = jac @ gp
    angle = np.linalg.norm(np.cross(mg, gq)) / max(np.linalg.norm(mg) * ng, np.finfo(float).tiny)
    drift = np.linalg.norm(np.cross(jac @ fp - fq, gq)) / (ng * (1.0 + np.linalg.norm(fq)))
    return float(angle + drift)


# ============================================================================
# Charts
# ============================================================================

@dataclass
class Chart:
    """
    Chart Phi(a, b, c) = gamma^{v1}_a o gamma^{v2}_b o gamma^g_c(center).

    Attributes:
        center: chart origin
        generators: (v1, v2, g)
        step, box, samples: integration step and sample grid (per-axis count over [-box, box])
        ad_matrix: 2x2 float matrix of X -> [X, l] on span{v1, v2}
        algebra_tag: liealg tag of the symmetry algebra
        grid: (N, 3) chart coordinates of the sample grid
        points, jacobians: Phi and D Phi on the grid
        residuals: rectification residuals on the grid
    """
    center: tuple
    generators: tuple
    step: float
    box: float
    samples: int
    ad_matrix: np.ndarray
    algebra_tag: str
    grid: np.ndarray = None
    points: np.ndarray = None
    jacobians: np.ndarray = None
    residuals: dict = field(default_factory=dict)

    def forward(self, abc):
        """Phi and D Phi at an (N, 3) array of chart coordinates."""
        abc = np.atleast_2d(np.asarray(abc, dtype=float))
        v1, v2, g = self.generators
        start = np.broadcast_to(np.asarray(self.center, dtype=float), abc.shape)
        q1, _ = flow_batch(g, start, abc[:, 2], self.step, jacobian=False)
        q2, m2 = flow_batch(v2, q1, abc[:, 1], self.step)
        q3, m1 = flow_batch(v1, q2, abc[:, 0], self.step)
        col_a = v1.values(q3)
        col_b = np.einsum('nij,nj->ni', m1, v2.values(q2))
        col_c = np.einsum('nij,njk,nk->ni', m1, m2, g.values(q1))
        return q3, np.stack([col_a, col_b, col_c], axis=-1)

    def pull_back(self, fld, abc=None):
        """Chart components J^-1 X(Phi) of a field, on the grid or at given coordinates."""
        if abc is None:
            points, jacs = self.points, self.jacobians
        else:
            points, jacs = self.forward(abc)
        return np.linalg.solve(jacs, fld.values(points)[..., None])[..., 0]

    def c_axis(self, samples=21):
        c = np.linspace(-self.box, self.box, samples)
        return np.column_stack([np.zeros_like(c), np.zeros_like(c), c])

    def report(self):
        v1, v2, g = self.generators
        return {
            'center': [float(c) for c in self.center],
            'generators': {'v1': v1.to_strings(), 'v2': v2.to_strings(), 'g': g.to_strings()},
            'step': self.step,
            'box': self.box,
            'samples': self.samples,
            'algebra': self.algebra_tag,
            'ad_matrix': np.asarray(self.ad_matrix).tolist(),
            'min_abs_det': float(np.min(np.abs(np.linalg.det(self.jacobians)))),
            'residuals': {k: float(v) for k, v in sorted(self.residuals.items())},
            'grid': self.grid_frame().to_dict(orient='records'),
        }

    def grid_frame(self):
        """One row per grid node: chart coordinates a, b, c, the image x, y, w and det D Phi."""
        frame = pd.DataFrame(self.grid, columns=['a', 'b', 'c'])
        frame[['x', 'y', 'w']] = self.points
        frame['det'] = np.linalg.det(self.jacobians)
        return frame


def build_chart(s, b, p, box=CHART_BOX, step=DEFAULT_STEP, samples=CHART_SAMPLES, tol=None):
    """
    Rectifying chart from the abelian-ideal generators of b and the control field.

    Raises:
        NotCommutingError: if b has no 2-dimensional abelian ideal or its
            generators do not commute exactly
        NotIndependentError: if v1, v2, g are dependent at p
        ChartSingularError: if |det D Phi| < CHART_MIN_DET on the grid
    """
    tol = default_tol() if tol is None else tol
    sc = structure_constants(b)
    ideal = abelian_ideal_2d(sc)
    if ideal is None:
        raise NotCommutingError('The symmetry algebra has no 2-dimensional abelian ideal.')
    algebra = classify_algebra(sc, ideal)
    v1, v2 = b.combine(ideal[0]), b.combine(ideal[1])
    if not lie_bracket(v1, v2).is_zero():
        raise NotCommutingError(f'[v1, v2] = {lie_bracket(v1, v2)} is not zero.')
    frame = np.column_stack([v1.at(p), v2.at(p), s.g.at(p)])
    scale = 1.0 + np.prod(np.linalg.norm(frame, axis=0))
    if abs(np.linalg.det(frame)) <= tol * scale:
        raise NotIndependentError(f'v1, v2 and g are dependent at {tuple(p)}.')

    chart = Chart(
        center=tuple(float(c) for c in p),
        generators=(v1, v2, s.g),
        step=step,
        box=box,
        samples=samples,
        ad_matrix=np.array([[float(v) for v in row] for row in algebra.matrix]),
        algebra_tag=algebra.tag,
    )
    axis = np.linspace(-box, box, samples)
    a, bb, c = np.meshgrid(axis, axis, axis, indexing='ij')
    chart.grid = np.column_stack([a.ravel(), bb.ravel(), c.ravel()])
    chart.points, chart.jacobians = chart.forward(chart.grid)
    dets = np.abs(np.linalg.det(chart.jacobians))
    if np.min(dets) < CHART_MIN_DET:
        raise ChartSingularError(
            f'Chart Jacobian determinant {np.min(dets):.3g} < {CHART_MIN_DET:g} on the box.')

    eye = np.eye(3)
    chart.residuals['v1'] = float(np.max(np.abs(chart.pull_back(v1) - eye[0])))
    chart.residuals['v2'] = float(np.max(np.abs(chart.pull_back(v2) - eye[1])))
    g_hat = chart.pull_back(s.g)
    ratios = g_hat[:, :2] / g_hat[:, 2:3]
    spread = 0.0
    for ci in np.unique(chart.grid[:, 2]):
        mask = chart.grid[:, 2] == ci
        spread = max(spread, float(np.max(np.ptp(ratios[mask], axis=0))))
    chart.residuals['g_ratio_spread'] = spread
    chart.residuals['g_c_min'] = float(np.min(np.abs(g_hat[:, 2])))
    return chart


def _invariant_form(m):
    """Symmetric Q with M^T Q + Q M = 0, normalized to |det Q| = 1."""
    basis = [np.array([[1.0, 0.0], [0.0, 0.0]]),
             np.array([[0.0, 1.0], [1.0, 0.0]]),
             np.array([[0.0, 0.0], [0.0, 1.0]])]
    columns = []
    for e in basis:
        r = m.T @ e + e @ m
        columns.append([r[0, 0], r[0, 1], r[1, 1]])
    _, _, vt = np.linalg.svd(np.array(columns).T)
    q11, q12, q22 = vt[-1]
    q = np.array([[q11, q12], [q12, q22]])
    det = np.linalg.det(q)
    if abs(det) < 1e-12:
        raise ValueError('The adjoint action has no nondegenerate invariant form.')
    return q / math.sqrt(abs(det))


def chart_invariant(s, ch, kind, samples=21):
    """
    Class invariant of the pulled-back drift along the chart's c-axis.

    E, H: the quadratic form Q invariant under the adjoint action, evaluated
    on the (a, b)-components of the drift. P: z1 / z2^2 in the eigenbasis of
    the adjoint action (z1 for the larger eigenvalue).

    Returns:
        (mean value, max deviation from the mean)

    Raises:
        DivisionNearZeroError: for P when |z2| < DIVISION_FLOOR at a sample
    """
    if kind not in ('E', 'H', 'P'):
        raise ValueError(f'kind must be E, H or P, got {kind!r}.')
    ab = ch.pull_back(s.f, ch.c_axis(samples))[:, :2]
    m = np.asarray(ch.ad_matrix, dtype=float)
    if kind in ('E', 'H'):
        q = _invariant_form(m)
        values = np.einsum('ni,ij,nj->n', ab, q, ab)
        if np.mean(values) < 0:
            values = -values
    else:
        eigvals, eigvecs = np.linalg.eig(m)
        if np.any(np.abs(np.imag(eigvals)) > 1e-12):
            raise ValueError('Parabolic invariant needs a real eigenbasis.')
        eigvals, eigvecs = np.real(eigvals), np.real(eigvecs)
        order = np.argsort(-np.abs(eigvals))
        eigvecs = eigvecs[:, order]
        for j in range(2):
            lead = np.argmax(np.abs(eigvecs[:, j]))
            if eigvecs[lead, j] < 0:
                eigvecs[:, j] = -eigvecs[:, j]
        z = np.linalg.solve(eigvecs, ab.T).T
        if np.any(np.abs(z[:, 1]) < DIVISION_FLOOR):
            raise DivisionNearZeroError(
                f'Parabolic invariant denominator below {DIVISION_FLOOR:g} on the c-axis.')
        values = z[:, 0] / z[:, 1] ** 2
    mean = float(np.mean(values))
    return mean, float(np.max(np.abs(values - mean)))


__all__ = [
    'DEFAULT_STEP', 'BLOWUP_NORM', 'CONIC_CONSTRAINTS',
    'CallbackField', 'CallbackSystem', 'ControlSchedule', 'Trajectory', 'Chart',
    'flat_derivative', 'flow_batch', 'integrate_flow', 'simulate',
    'constraint_residual', 'flow_pushforward_residual', 'build_chart', 'chart_invariant',
    'FlowBlowUpError', 'TooShortError', 'NotCommutingError', 'NotIndependentError',
    'ChartSingularError', 'DivisionNearZeroError',
]
