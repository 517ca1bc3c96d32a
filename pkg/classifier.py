"""
Decision procedure: from a control-affine system and a base point to a conic verdict.

Pipeline
    1. symmetries: solved at the ansatz and at one escalated ansatz (or supplied
       and flow-verified for callback systems)
    2. algebra: bracket closure, structure constants, eigenvalue class
    3. transversality: the abelian ideal I and g span R^3 at the base point
    4. verdict: Elliptic, Hyperbolic, or for the parabolic class the
       equilibrium test f(p) in G(p) and the smallest k with g ^ ad_g^k f != 0
"""

import json
from dataclasses import dataclass, field

import numpy as np

from liealg import NotClosedError, classify_algebra, structure_constants
from numerics import DEFAULT_STEP, CallbackSystem, flow_pushforward_residual
from symmetry import Ansatz, SymmetryBasis, solve_symmetries
from vectorfield import (
    DegenerateGError,
    default_tol,
    in_span_at,
    lie_bracket,
    vectors_independent,
)


DEFAULT_KMAX = 8

VERDICT_TAGS = ('Elliptic', 'Hyperbolic', 'ParabolicNonEq', 'ParabolicEq', 'NotConic', 'Inconclusive')

REASON_ANSATZ_UNSTABLE = 'ansatz unstable'
REASON_DIMENSION = 'symmetry dimension ≠ 3'
REASON_NOT_CLOSED = 'symmetries not closed under bracket'
REASON_ALGEBRA = 'algebra not in L_Q'
REASON_TRANSVERSALITY = 'I(ξ₀) ⊕ G(ξ₀) fails'
REASON_K_NOT_FOUND = 'k not found ≤ kmax'
REASON_SYMMETRY_UNVERIFIED = 'supplied symmetry fails flow check'

REASONS = (
    REASON_ANSATZ_UNSTABLE, REASON_DIMENSION, REASON_NOT_CLOSED, REASON_ALGEBRA,
    REASON_TRANSVERSALITY, REASON_K_NOT_FOUND, REASON_SYMMETRY_UNVERIFIED,
)

NORMAL_FORM_NAMES = {
    'Elliptic': 'Σ_E',
    'Hyperbolic': 'Σ_H',
    'ParabolicNonEq': 'Σ_P¹',
    'ParabolicEq': 'Σ_P^{0,k}',
}

# Flow check of supplied symmetries: offsets from the base point and flow times.
FLOW_CHECK_OFFSETS = ((0.0, 0.0, 0.5), (0.3, -0.2, 0.8), (-0.4, 0.1, -0.6))
FLOW_CHECK_TIMES = (0.1, 0.3)
FLOW_CHECK_TOL = 1e-6


@dataclass(frozen=True)
class ClassifyOptions:
    ansatz: Ansatz = field(default_factory=Ansatz)
    kmax: int = DEFAULT_KMAX
    tol: float = None
    escalate: bool = True

    def __post_init__(self):
        if not isinstance(self.kmax, int) or self.kmax < 1:
            raise ValueError(f'kmax must be an integer >= 1, got {self.kmax!r}.')
        if self.tol is not None and self.tol <= 0:
            raise ValueError(f'tol must be > 0, got {self.tol}.')

    @property
    def effective_tol(self):
        return default_tol() if self.tol is None else self.tol


@dataclass
class Verdict:
    """
    Classification result.

    Attributes:
        tag: one of VERDICT_TAGS
        k: ParabolicEq order (>= 1), else None
        reason: one of REASONS for NotConic / Inconclusive, else None
        evidence: algebra class, eigen data, transversality, equilibrium,
            g1_rank, k search trace, ansatz and symmetry source
    """
    tag: str
    k: int = None
    reason: str = None
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in VERDICT_TAGS:
            raise ValueError(f'Unknown verdict tag {self.tag!r}.')
        if self.tag == 'ParabolicEq' and (self.k is None or self.k < 1):
            raise ValueError('ParabolicEq needs k >= 1.')
        if self.tag in ('NotConic', 'Inconclusive') and self.reason not in REASONS:
            raise ValueError(f'{self.tag} needs a reason from {REASONS}, got {self.reason!r}.')

    @property
    def is_definite(self):
        return self.tag != 'Inconclusive'

    def summary(self):
        if self.tag == 'ParabolicEq':
            return f'ParabolicEq k={self.k} (feedback equivalent to Σ_P^{{0,{self.k}}})'
        if self.tag in NORMAL_FORM_NAMES:
            return f'{self.tag} (feedback equivalent to {NORMAL_FORM_NAMES[self.tag]})'
        return f'{self.tag}: {self.reason}'

    def to_dict(self):
        return {'tag': self.tag, 'k': self.k, 'reason': self.reason, 'evidence': self.evidence}

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True, ensure_ascii=False)

    def __str__(self):
        return self.summary()


def _point_of(s, p):
    if p is None:
        p = s.base
    if p is None:
        raise ValueError('No point given and the system has no base point.')
    return tuple(float(c) for c in p)


def _check_g(s, p, tol):
    gp = s.g.at(p)
    if np.linalg.norm(gp) <= tol:
        raise DegenerateGError(f'g vanishes at {p} (|g| <= {tol:g}).')
    return gp


def _ad_vector(s, p, k, cache):
    """ad_g^k f at p; symbolic fields are cached in `cache` between calls."""
    if isinstance(s, CallbackSystem):
        return s.ad_power_at(k, p)
    while len(cache) <= k:
        cache.append(lie_bracket(s.g, cache[-1]) if cache else s.f)
    return cache[k].at(p)


def _search_k(s, p, kmax, tol):
    gp = _check_g(s, p, tol)
    trace = []
    cache = []
    for k in range(1, kmax + 1):
        vec = _ad_vector(s, p, k, cache)
        minor = float(np.max(np.abs(np.cross(gp, vec))))
        independent = vectors_independent(gp, vec, tol)
        trace.append({'k': k, 'max_minor': minor, 'independent': independent})
        if independent:
            return k, trace
    return None, trace


def smallest_k(s, p=None, kmax=DEFAULT_KMAX, tol=None):
    """
    Least k in [1, kmax] with g(p) ^ ad_g^k f(p) != 0, or None.

    Raises:
        DegenerateGError: if g(p) vanishes
    """
    tol = default_tol() if tol is None else tol
    return _search_k(s, _point_of(s, p), kmax, tol)[0]


def verify_supplied_symmetries(s, basis, p, step=DEFAULT_STEP):
    """Largest flow_pushforward_residual of the supplied generators at sample points near p."""
    worst = 0.0
    for offset in FLOW_CHECK_OFFSETS:
        q = tuple(a + b for a, b in zip(p, offset))
        for t in FLOW_CHECK_TIMES:
            for v in basis:
                worst = max(worst, flow_pushforward_residual(v, s, q, t, step))
    return worst


def _symmetry_stage(s, opt, basis, evidence, verbose):
    """Returns (basis, None) to continue or (None, Verdict) to stop."""
    if basis is None and isinstance(s, CallbackSystem):
        basis = SymmetryBasis(s.symmetries, source='supplied')
    if basis is not None:
        evidence['symmetry_source'] = 'supplied'
        evidence['dimensions'] = [basis.dim]
        return basis, None

    evidence['symmetry_source'] = 'solved'
    first = solve_symmetries(s, opt.ansatz)
    dims = [first.dim]
    if opt.escalate:
        second = solve_symmetries(s, opt.ansatz.escalated())
        dims.append(second.dim)
        evidence['escalated_ansatz'] = opt.ansatz.escalated().to_dict()
    evidence['dimensions'] = dims
    if verbose:
        print(f'  Symmetry dimensions: {dims} (ansatz {opt.ansatz})')
    if max(dims) > 3:
        return None, Verdict('NotConic', reason=REASON_DIMENSION, evidence=evidence)
    if len(set(dims)) > 1:
        return None, Verdict('Inconclusive', reason=REASON_ANSATZ_UNSTABLE, evidence=evidence)
    if dims[0] != 3:
        return None, Verdict('NotConic', reason=REASON_DIMENSION, evidence=evidence)
    return first, None


def classify(s, p=None, opt=None, basis=None, verbose=False):
    """
    Classify s at p (default: its base point) against the conic null-forms.

    Args:
        s: ControlSystem, or CallbackSystem with supplied symmetries
        p: base point
        opt: ClassifyOptions
        basis: optional SymmetryBasis to use instead of solving
        verbose: print each pipeline stage

    Returns:
        Verdict

    Raises:
        DegenerateGError: if g(p) vanishes
    """
    opt = opt or ClassifyOptions()
    tol = opt.effective_tol
    p = _point_of(s, p)
    gp = _check_g(s, p, tol)
    evidence = {'point': list(p), 'ansatz': opt.ansatz.to_dict(), 'kmax': opt.kmax, 'tol': tol}
    if verbose:
        print('=' * 70)
        print(f'Classifying {getattr(s, "name", None) or "system"} at {p}')
        print('=' * 70)

    basis, verdict = _symmetry_stage(s, opt, basis, evidence, verbose)
    if verdict is not None:
        return verdict
    evidence['symmetries'] = basis.to_strings()
    if evidence['symmetry_source'] == 'supplied' and isinstance(s, CallbackSystem):
        worst = verify_supplied_symmetries(s, basis, p)
        evidence['flow_check_residual'] = worst
        if verbose:
            print(f'  Flow check of supplied symmetries: residual {worst:.3g}')
        if worst > FLOW_CHECK_TOL:
            return Verdict('Inconclusive', reason=REASON_SYMMETRY_UNVERIFIED, evidence=evidence)

    try:
        sc = structure_constants(basis)
    except NotClosedError:
        return Verdict('NotConic', reason=REASON_NOT_CLOSED, evidence=evidence)
    evidence['structure_constants'] = sc.relations()
    algebra = classify_algebra(sc)
    evidence['algebra'] = algebra.to_dict()
    if verbose:
        print(f'  Algebra: {algebra.tag} ({algebra.label}), trace={algebra.trace}, det={algebra.det}')
    if algebra.tag == 'Other':
        return Verdict('NotConic', reason=REASON_ALGEBRA, evidence=evidence)

    v1, v2 = basis.combine(algebra.ideal[0]), basis.combine(algebra.ideal[1])
    frame = np.column_stack([v1.at(p), v2.at(p), gp])
    det = float(np.linalg.det(frame))
    scale = 1.0 + float(np.prod(np.linalg.norm(frame, axis=0)))
    transversal = abs(det) > tol * scale
    evidence['transversality'] = {'holds': transversal, 'det': det}
    if verbose:
        print(f'  Transversality I + G: {"✓" if transversal else "✗"} (det={det:.6g})')
    if not transversal:
        return Verdict('NotConic', reason=REASON_TRANSVERSALITY, evidence=evidence)

    equilibrium = in_span_at(s.f, s.g, p, tol)
    evidence['equilibrium'] = equilibrium
    cache = []
    evidence['g1_rank'] = 2 if vectors_independent(gp, _ad_vector(s, p, 1, cache), tol) else 1

    if algebra.tag == 'EllipticE2':
        return Verdict('Elliptic', evidence=evidence)
    if algebra.tag == 'HyperbolicP11':
        return Verdict('Hyperbolic', evidence=evidence)
    if not equilibrium:
        return Verdict('ParabolicNonEq', evidence=evidence)
    k, trace = _search_k(s, p, opt.kmax, tol)
    evidence['k_trace'] = trace
    if verbose:
        print(f'  Equilibrium: k search -> {k}')
    if k is None:
        return Verdict('Inconclusive', reason=REASON_K_NOT_FOUND, evidence=evidence)
    return Verdict('ParabolicEq', k=k, evidence=evidence)


__all__ = [
    'DEFAULT_KMAX', 'VERDICT_TAGS', 'REASONS', 'ClassifyOptions', 'Verdict',
    'smallest_k', 'classify', 'verify_supplied_symmetries',
    'REASON_ANSATZ_UNSTABLE', 'REASON_DIMENSION', 'REASON_NOT_CLOSED', 'REASON_ALGEBRA',
    'REASON_TRANSVERSALITY', 'REASON_K_NOT_FOUND', 'REASON_SYMMETRY_UNVERIFIED',
]
