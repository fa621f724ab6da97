from core.management.base import BrexCommand, add_relaxation_arguments
from core.services import build_relaxation, calibration_payload


class Command(BrexCommand):
    help = 'Calcula os limiares gamma_hat_n e o relatório de exatidão da relaxação'

    def add_arguments(self, parser):
        self.add_problem_argument(parser)
        add_relaxation_arguments(parser)
        parser.add_argument('--out', default=None)

    def run(self, **options):
        problem = self.load(options)
        relaxation, report = build_relaxation(problem, options['psi'], options['gamma'])
        self.emit({'schema': 1, **calibration_payload(relaxation, report)}, options['out'])
