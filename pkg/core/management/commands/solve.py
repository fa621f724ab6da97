from core.management.base import BrexCommand, add_relaxation_arguments
from core.services import run_solve, write_trace


class Command(BrexCommand):
    help = 'Resolve o problema com PGA sobre J_Psi (brex) ou J_0 (l0) e certifica o ponto final'

    def add_arguments(self, parser):
        self.add_problem_argument(parser)
        parser.add_argument('--penalty', default='brex', choices=['brex', 'l0'])
        add_relaxation_arguments(parser)
        parser.add_argument('--step', default='backtracking', help='backtracking | fixed[:<fração de 1/L>]')
        parser.add_argument('--x0', default=None, help='ponto inicial v1,v2,...')
        parser.add_argument('--max-iter', type=int, default=None)
        parser.add_argument('--trace', default=None, help='CSV iter,J_Psi,J_0,step,delta')
        parser.add_argument('--out', default=None)

    def run(self, **options):
        problem = self.load(options)
        solved = run_solve(
            problem, options['penalty'], options['psi'], options['gamma'], options['step'],
            options['x0'], options['max_iter'],
        )
        if options['trace']:
            write_trace(options['trace'], solved.result.trace)
        self.emit(solved.payload(), options['out'])
