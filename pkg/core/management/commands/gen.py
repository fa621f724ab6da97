from core.management.base import BrexCommand, add_generation_arguments, generation_config
from core.schemas import ProblemFile
from datagen.services import generate


class Command(BrexCommand):
    help = 'Gera uma instância sintética (LS, LR ou KL) no formato de arquivo de problema'

    def add_arguments(self, parser):
        add_generation_arguments(parser)
        parser.add_argument('--out', default=None)

    def run(self, **options):
        instance = generate(generation_config(options))
        problem = instance.to_problem(options['lambda0_scale'], options['lambda2'])
        text = ProblemFile.from_problem(problem).dumps()
        if options['out']:
            with open(options['out'], 'w') as handle:
                handle.write(text + '\n')
            self.stdout.write(self.style.SUCCESS(f'written {options["out"]}'))
        else:
            self.stdout.write(text)
