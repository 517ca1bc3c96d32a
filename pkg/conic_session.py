"""
ConicSession - a class-based interface around one control-affine system document.

Loads a JSON system document (or picks one out of a system database), runs the
symmetry / classification / simulation / chart pipeline on it and saves reports.

Usage:
    from conic_session import ConicSession

    with ConicSession('systems/sigma_e.json') as session:
        verdict = session.classify()
        print(verdict.summary())
        session.save_report(verdict.to_dict(), 'sigma_e_verdict.json')
"""

import datetime
import json
import os
import random

from classifier import ClassifyOptions, classify
from liealg import structure_constants
from nullforms import load_system_document
from numerics import (
    CHART_BOX,
    CHART_SAMPLES,
    DEFAULT_STEP,
    ControlSchedule,
    build_chart,
    chart_invariant,
    constraint_residual,
    simulate,
)
from symmetry import Ansatz, solve_symmetries
from vectorfield import apply_feedback, lie_bracket, random_scramble, system_from_document


class ConicSession:
    """
    Main class for analysing one control-affine system.

    Attributes:
        document_file (str or None): path of the loaded document
        document (dict): the JSON system document
        system (ControlSystem): the parsed system
        options (ClassifyOptions): ansatz, kmax and tolerance
        verdict (Verdict or None): last classification result
    """

    def __init__(self, document_file=None, name=None, ansatz=None, kmax=8, tol=None, document=None):
        """
        Initialize the session from a file or an in-memory document.

        Args:
            document_file: path to a system document or system database
            name: system name inside a database file
            ansatz: Ansatz for the symmetry solver (default 2,2,2)
            kmax: largest k searched for equilibrium parabolic systems
            tol: pointwise tolerance (default: CONIC_FORMS_TOL or 1e-9)
            document: system document dict, used instead of document_file
        """
        if document is None:
            if document_file is None:
                raise ValueError('Either document_file or document is required.')
            document = load_system_document(document_file, name)
        self.document_file = document_file
        self.document = document
        self.system = system_from_document(document, tol)
        self.options = ClassifyOptions(ansatz=ansatz or Ansatz(), kmax=kmax, tol=tol)
        self.verdict = None
        self._symmetries = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
        return False

    def close(self):
        """Drop cached results."""
        self._symmetries = None
        self.verdict = None

    @property
    def name(self):
        return self.document.get('name') or (
            os.path.splitext(os.path.basename(self.document_file))[0] if self.document_file else 'system')

    def bracket(self, u_name, v_name):
        """Symbolic [u, v] of two named fields ('f', 'g' or a document field)."""
        return lie_bracket(self.system.field(u_name), self.system.field(v_name))

    def symmetries(self):
        if self._symmetries is None:
            self._symmetries = solve_symmetries(self.system, self.options.ansatz)
        return self._symmetries

    def structure(self):
        """Structure constants of the solved symmetries (raises NotClosedError)."""
        return structure_constants(self.symmetries())

    def classify(self, point=None, verbose=False):
        self.verdict = classify(self.system, point, self.options, verbose=verbose)
        return self.verdict

    def simulate(self, schedule, T, step=DEFAULT_STEP, p0=None):
        """
        Simulate from p0 (default: base point or origin).

        Returns:
            (Trajectory, residual) where residual is the conic constraint residual
            for a document declaring its kind, else None
        """
        if not isinstance(schedule, ControlSchedule):
            schedule = ControlSchedule.parse(schedule)
        if p0 is None:
            p0 = self.system.base or (0.0, 0.0, 0.0)
        trajectory = simulate(self.system, schedule, p0, T, step)
        residual = None
        if self.system.kind is not None and len(trajectory) >= 3:
            residual = constraint_residual(trajectory, self.system.kind)
        return trajectory, residual

    def chart(self, box=CHART_BOX, samples=CHART_SAMPLES, step=DEFAULT_STEP, point=None):
        """
        Rectifying chart at the base point, plus the class invariant when the kind is declared.

        Returns:
            (Chart, (value, spread) or None)
        """
        point = point or self.system.base or (0.0, 0.0, 0.0)
        chart = build_chart(self.system, self.symmetries(), point, box, step, samples, self.options.tol)
        invariant = None
        if self.system.kind is not None:
            invariant = chart_invariant(self.system, chart, self.system.kind)
        return chart, invariant

    def scramble(self, seed=None):
        """Document of the system under a seeded random feedback transformation."""
        transform = random_scramble(random.Random(seed))
        scrambled = apply_feedback(self.system, transform, self.options.tol)
        doc = scrambled.to_document()
        doc['name'] = f'{self.name}-scrambled-{seed}'
        doc['metadata'] = {'source': self.name, 'seed': seed, 'transform': transform.to_dict()}
        return doc

    def save_report(self, data, output_file=None):
        """
        Write a JSON report; a timestamped name next to the document is used by default.

        Returns:
            str: path of the written file
        """
        if output_file is None:
            timestamp = datetime.datetime.now().strftime('%Y%m%d_%H%M%S')
            folder = os.path.dirname(os.path.abspath(self.document_file)) if self.document_file else os.getcwd()
            output_file = os.path.join(folder, f'{self.name}_report_{timestamp}.json')
        with open(output_file, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write('\n')
        return output_file
