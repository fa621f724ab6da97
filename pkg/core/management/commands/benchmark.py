from core.management.base import BrexCommand, add_generation_arguments, generation_config
from core.services import BENCHMARK_HEADER, run_benchmark, write_csv


class Command(BrexCommand):
    help = 'Ranking dos métodos pelo J_0 final sobre instâncias sintéticas com sementes derivadas'

    def add_arguments(self, parser):
        add_generation_arguments(parser)
        parser.add_argument('--instances', type=int, default=20)
        parser.add_argument('--methods', default='l0,power:2,power:3/2,power:4/3')
        parser.add_argument('--workers', type=int, default=None)
        parser.add_argument('--out', default=None)
        parser.add_argument('--csv', default=None)

    def run(self, **options):
        methods = [m.strip() for m in options['methods'].split(',') if m.strip()]
        report = run_benchmark(
            generation_config(options), methods, options['instances'],
            options['lambda0_scale'], options['lambda2'], options['workers'],
        )
        if options['csv']:
            write_csv(options['csv'], BENCHMARK_HEADER, report.csv_rows())
        self.emit(report.to_dict(), options['out'])
