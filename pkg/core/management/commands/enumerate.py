from core.management.base import BrexCommand
from core.services import MINIMIZER_HEADER, enumerate_payload, minimizer_rows, run_enumerate, write_csv


class Command(BrexCommand):
    help = 'Enumera todos os minimizadores locais de J_0 por suporte (N pequeno)'

    def add_arguments(self, parser):
        self.add_problem_argument(parser)
        parser.add_argument('--max-support', type=int, default=None)
        parser.add_argument('--psi', default=None, help='relaxação para marcar minimizadores preservados')
        parser.add_argument('--gamma', default='thr')
        parser.add_argument('--out', default=None)
        parser.add_argument('--csv', default=None)

    def run(self, **options):
        problem = self.load(options)
        minimizers = run_enumerate(problem, options['max_support'], options['psi'], options['gamma'])
        if options['csv']:
            write_csv(options['csv'], MINIMIZER_HEADER, minimizer_rows(minimizers))
        self.emit(enumerate_payload(minimizers), options['out'])
