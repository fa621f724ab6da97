from django.core.management.base import CommandError

from core.management.base import BrexCommand
from core.services import selfcheck


class Command(BrexCommand):
    help = 'Compara as fórmulas fechadas com os oráculos numéricos numa bateria pequena'

    def add_arguments(self, parser):
        parser.add_argument('--points', type=int, default=25)

    def run(self, **options):
        checks = selfcheck(options['points'])
        for check in checks:
            style = self.style.SUCCESS if check.ok else self.style.ERROR
            self.stdout.write(style(f'{"ok  " if check.ok else "FAIL"} {check.name:<28} {check.error:.3e}'))
        failed = [c.name for c in checks if not c.ok]
        if failed:
            raise CommandError(f'{len(failed)} self-checks failed', returncode=1)
