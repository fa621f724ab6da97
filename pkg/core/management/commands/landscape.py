from core.exceptions import ProblemFormatError
from core.management.base import BrexCommand, add_relaxation_arguments
from core.services import (
    MINIMIZER_HEADER, build_relaxation, landscape, minimizer_rows, parse_vector, run_solve,
    trajectory_rows, write_csv,
)


class Command(BrexCommand):
    help = 'Exporta J_0 e J_Psi numa grade densa (N <= 2) para plotagem externa'

    def add_arguments(self, parser):
        self.add_problem_argument(parser)
        add_relaxation_arguments(parser)
        parser.add_argument('--points', type=int, default=201)
        parser.add_argument('--bounds', default=None, help='lo,hi')
        parser.add_argument('--out', default=None, help='CSV da grade (padrão: stdout)')
        parser.add_argument('--minimizers', default=None, help='CSV com os minimizadores enumerados')
        parser.add_argument('--trajectory', default=None, help='CSV com as iterações do PGA a partir de --x0')
        parser.add_argument('--x0', default=None)

    def run(self, **options):
        problem = self.load(options)
        relaxation, _ = build_relaxation(problem, options['psi'], options['gamma'])
        bounds = parse_vector(options['bounds'], 2) if options['bounds'] else None
        if bounds is not None and not bounds[0] < bounds[1]:
            raise ProblemFormatError('--bounds needs lo < hi')
        grid = landscape(problem, relaxation, options['points'], None if bounds is None else tuple(bounds))
        write_csv(options['out'] or self.stdout, grid.header, (tuple(map(float, row)) for row in grid.rows))
        if options['minimizers']:
            write_csv(options['minimizers'], MINIMIZER_HEADER, minimizer_rows(grid.minimizers))
        if options['trajectory']:
            solved = run_solve(
                problem, 'brex', options['psi'], options['gamma'], x0=options['x0'], keep_iterates=True,
            )
            header = ['iter'] + grid.header
            write_csv(options['trajectory'], header, trajectory_rows(problem, solved.relaxation, solved.result.iterates))
