from django.core.management.base import BaseCommand, CommandError

from core.exceptions import BrexError
from core.schemas import dump_json, load_problem
from datagen.services import DataGenConfig


class BrexCommand(BaseCommand):
    """Comando base: erros da biblioteca viram CommandError com o código de saída da exceção."""

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except BrexError as exc:
            raise CommandError(f'{type(exc).__name__}: {exc}', returncode=exc.exit_code) from exc

    def run(self, **options):
        raise NotImplementedError

    def add_problem_argument(self, parser):
        parser.add_argument('problem', help='arquivo JSON do problema')

    def load(self, options):
        return load_problem(options['problem'])

    def emit(self, data, out=None):
        text = dump_json(data, out)
        if out is None:
            self.stdout.write(text)
        else:
            self.stdout.write(self.style.SUCCESS(f'written {out}'))


def add_relaxation_arguments(parser, psi='power:2'):
    parser.add_argument('--psi', default=psi, help='power:<p> | shannon | kl[:<y>] | fidelity')
    parser.add_argument('--gamma', default='thr', help='thr | thrx<factor> | list:<v1,...>')


def add_generation_arguments(parser):
    parser.add_argument('--kind', default='LS', choices=['LS', 'LR', 'KL'])
    parser.add_argument('--M', type=int, default=100)
    parser.add_argument('--N', type=int, default=300)
    parser.add_argument('--k', type=int, default=10)
    parser.add_argument('--eta', type=float, default=0.9)
    parser.add_argument('--tau', type=float, default=8.0, help='SNR em dB (LS)')
    parser.add_argument('--s', type=float, default=1.0, help='escala do sinal (LR)')
    parser.add_argument('--gain', type=float, default=50.0, help='ganho Poisson (KL)')
    parser.add_argument('--b', type=float, default=0.1, help='fundo (KL)')
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--lambda0-scale', type=float, default=1.0, help='lambda0 = escala * F_y(0)')
    parser.add_argument('--lambda2', type=float, default=0.0)


def generation_config(options):
    return DataGenConfig(
        kind=options['kind'], M=options['M'], N=options['N'], k=options['k'], eta=options['eta'],
        tau=options['tau'], s=options['s'], gain=options['gain'], b=options['b'],
        seed=options['seed'],
    )
