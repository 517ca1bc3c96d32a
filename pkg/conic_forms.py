"""
conic-forms command line

Classify single-input control-affine systems on R^3 against the conic
null-forms and inspect their symmetries, trajectories and rectifying charts.

Usage:
    conic-forms classify systems/sigma_e.json
    conic-forms classify nullforms_database.json --name sigma_p0 --json
    conic-forms bracket systems/sigma_e.json --u f --v g
    conic-forms symmetries systems/sigma_p.json --ansatz 1,0,0
    conic-forms simulate systems/sigma_e.json --u 1 --T 6.2832 --out circle.csv
    conic-forms chart systems/sigma_e.json --box 0.5 --out chart.json
    conic-forms scramble systems/sigma_e.json --seed 7 --out scrambled.json
    conic-forms list

Exit codes: 0 success or definite verdict, 2 input error, 3 inconclusive verdict.
"""

import argparse
import json
import sys

from conic_session import ConicSession
from liealg import NotClosedError
from nullforms import DEFAULT_DB_PATH, is_database, load_system_database
from numerics import CHART_BOX, CHART_SAMPLES, DEFAULT_STEP, ControlSchedule
from symmetry import Ansatz


EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_INCONCLUSIVE = 3


def _error(message):
    print(f'\033[31m✗ Error: {message}\033[0m', file=sys.stderr)


def _point(text):
    try:
        values = [float(v) for v in text.split(',')]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f'expected "x,y,w", got {text!r}') from e
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f'expected 3 coordinates "x,y,w", got {text!r}')
    return tuple(values)


def _ansatz(text):
    try:
        return Ansatz.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _session(args):
    return ConicSession(args.file, name=args.name, ansatz=getattr(args, 'ansatz', None),
                        kmax=getattr(args, 'kmax', 8), tol=getattr(args, 'tol', None))


# ============================================================================
# Commands
# ============================================================================

def cmd_bracket(args):
    session = _session(args)
    print(session.bracket(args.u, args.v))
    return EXIT_OK


def cmd_symmetries(args):
    session = _session(args)
    basis = session.symmetries()
    names = [f'v{i + 1}' for i in range(basis.dim)]
    try:
        relations = session.structure().relations(names)
    except NotClosedError:
        relations = None
    if args.json:
        print(json.dumps({
            'name': session.name,
            'ansatz': basis.ansatz.to_dict(),
            'dim': basis.dim,
            'fields': basis.to_strings(),
            'structure_constants': relations,
        }, indent=2, sort_keys=True))
        return EXIT_OK
    print(f'Symmetry algebra of {session.name} (dim {basis.dim} at ansatz {basis.ansatz})')
    for name, v in zip(names, basis):
        print(f'  {name} = {v}')
    if relations is None:
        print('\033[33m⚠️  Basis is not closed under the bracket.\033[0m')
    else:
        print('Structure constants:')
        for line in relations:
            print(f'  {line}')
    return EXIT_OK


def cmd_classify(args):
    session = _session(args)
    verdict = session.classify(point=args.point, verbose=args.verbose)
    print(verdict.summary())
    if args.json:
        print(verdict.to_json())
    return EXIT_OK if verdict.is_definite else EXIT_INCONCLUSIVE


def cmd_simulate(args):
    session = _session(args)
    schedule = ControlSchedule.parse(args.u)
    trajectory, residual = session.simulate(schedule, args.T, args.step, args.start)
    if args.out:
        trajectory.to_csv(args.out)
        x, y, w = trajectory.endpoint
        print(f'✓ {len(trajectory)} samples written to: {args.out}')
        print(f'  Endpoint: x={x:.9g}, y={y:.9g}, w={w:.9g}')
        if residual is not None:
            print(f'  Constraint residual (S_{session.system.kind}): {residual:.3g}')
    else:
        sys.stdout.write(trajectory.to_csv())
    return EXIT_OK


def cmd_chart(args):
    session = _session(args)
    chart, invariant = session.chart(args.box, args.samples, args.step)
    report = chart.report()
    if invariant is not None:
        report['invariant'] = {'kind': session.system.kind, 'value': invariant[0], 'spread': invariant[1]}
    if args.out:
        session.save_report(report, args.out)
        print(f'✓ Chart report written to: {args.out}')
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_scramble(args):
    session = _session(args)
    doc = session.scramble(args.seed)
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, 'w') as f:
            f.write(text + '\n')
        print(f'✓ Scrambled system written to: {args.out}')
    else:
        print(text)
    return EXIT_OK


def cmd_list(args):
    db = load_system_database(args.database)
    if not is_database(db) or not db:
        print(f'No systems in {args.database}.')
        return EXIT_OK
    print('=' * 70)
    print(f'Systems in {args.database}')
    print('=' * 70)
    for name in sorted(db):
        doc = db[name]
        kind = doc.get('kind') or '-'
        print(f'  {name:<16} kind={kind}  f=[{", ".join(doc.get("f", []))}]')
    return EXIT_OK


# ============================================================================
# Entry point
# ============================================================================

def build_parser():
    parser = argparse.ArgumentParser(
        prog='conic-forms',
        description='Feedback classification of control-affine systems against the conic null-forms',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  conic-forms classify systems/sigma_e.json
  conic-forms classify nullforms_database.json --name sigma_p0 --json
  conic-forms simulate systems/sigma_e.json --u 0:1,3.14:-1 --T 6.2832 --out traj.csv
  conic-forms scramble systems/sigma_h.json --seed 7 --out scrambled.json

Environment:
  CONIC_FORMS_TOL   default tolerance of pointwise tests (1e-9)
        """
    )
    sub = parser.add_subparsers(dest='command', required=True)

    def with_file(p):
        p.add_argument('file', help='System document or system database (.json)')
        p.add_argument('--name', default=None, help='System name inside a database file')
        return p

    def with_ansatz(p):
        p.add_argument('--ansatz', type=_ansatz, default=Ansatz(),
                       help='Symmetry ansatz as degree,trig_max,exp_range (default: 2,2,2)')
        p.add_argument('--tol', type=float, default=None, help='Pointwise tolerance (default: 1e-9)')
        return p

    p = with_file(sub.add_parser('bracket', help='Symbolic Lie bracket of two named fields'))
    p.add_argument('--u', required=True, help='First field name (f, g or a document field)')
    p.add_argument('--v', required=True, help='Second field name')
    p.set_defaults(func=cmd_bracket)

    p = with_ansatz(with_file(sub.add_parser('symmetries', help='Solve the symmetry algebra')))
    p.add_argument('--json', action='store_true', help='Print JSON instead of text')
    p.set_defaults(func=cmd_symmetries)

    p = with_ansatz(with_file(sub.add_parser('classify', help='Classify against the conic null-forms')))
    p.add_argument('--kmax', type=int, default=8, help='Largest k searched (default: 8)')
    p.add_argument('--point', type=_point, default=None, help='Point x,y,w (default: document base)')
    p.add_argument('--json', action='store_true', help='Also print the verdict with evidence as JSON')
    p.add_argument('-v', '--verbose', action='store_true', help='Print each pipeline stage')
    p.set_defaults(func=cmd_classify)

    p = with_file(sub.add_parser('simulate', help='Simulate under a piecewise-constant control'))
    p.add_argument('--u', default='0', help='Control: constant "1" or schedule "t0:u0,t1:u1,..."')
    p.add_argument('--T', type=float, required=True, help='Final time')
    p.add_argument('--step', type=float, default=DEFAULT_STEP, help=f'RK4 step (default: {DEFAULT_STEP:g})')
    p.add_argument('--start', type=_point, default=None, help='Start point x,y,w (default: document base)')
    p.add_argument('--out', default=None, help='CSV output file (default: stdout)')
    p.set_defaults(func=cmd_simulate)

    p = with_file(sub.add_parser('chart', help='Build a rectifying chart and measure the class invariant'))
    p.add_argument('--box', type=float, default=CHART_BOX, help=f'Half-width of the chart box (default: {CHART_BOX:g})')
    p.add_argument('--samples', type=int, default=CHART_SAMPLES, help='Samples per axis (default: 5)')
    p.add_argument('--step', type=float, default=DEFAULT_STEP, help=f'RK4 step (default: {DEFAULT_STEP:g})')
    p.add_argument('--out', default=None, help='JSON report file (default: stdout)')
    p.set_defaults(func=cmd_chart)

    p = with_file(sub.add_parser('scramble', help='Apply a seeded random feedback transformation'))
    p.add_argument('--seed', type=int, default=0, help='Random seed (default: 0)')
    p.add_argument('--out', default=None, help='Output document file (default: stdout)')
    p.set_defaults(func=cmd_scramble)

    p = sub.add_parser('list', help='List the systems in a database')
    p.add_argument('database', nargs='?', default=DEFAULT_DB_PATH, help='System database file')
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None):
    """Main entry point; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, ValueError, ArithmeticError) as e:
        _error(e)
        return EXIT_INPUT_ERROR
    except KeyboardInterrupt:
        print('\n\n⚠️  Cancelled by user.', file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == '__main__':
    sys.exit(main())
