"""
Runs the probtree command-line surface inside the Django project.

Usage:
    python manage.py probtree query prob_tree_app/lib/fixtures/kb_l.cct "(Q R S T U | M)" --trace
    python manage.py probtree oracle prob_tree_app/lib/fixtures/tweety.kb "(ostrich | *)"
    python manage.py probtree bench --topology chain --n 1000

Notes:
- All arguments after `probtree` are handed to `cli_helpers.run()` unchanged.
- A non-zero status is raised as `CommandError` with the same return code.
"""

from argparse import REMAINDER, ArgumentParser

from django.core.management.base import BaseCommand, CommandError

from prob_tree_app.lib.cli_helpers import EXIT_OK, run


class Command(BaseCommand):
    """
    Answers queries on conditional constraint trees and knowledge bases.
    """

    help = 'Tight answers, oracle checks, models and LP dumps for conditional constraint trees'

    def add_arguments(self, parser: ArgumentParser) -> None:
        """
        Adds command-line arguments.

        Called by: Django management command runner
        """
        parser.add_argument(
            'argv',
            nargs=REMAINDER,
            help='subcommand and its arguments, e.g. `query <kb> "(F | E)"`',
        )

    def handle(self, *args: object, **options: object) -> None:
        """
        Executes the command.

        Called by: Django management command runner
        """
        argv_option = options.get('argv')
        argv: list[str] = [str(item) for item in argv_option] if isinstance(argv_option, list) else []
        result = run(argv)
        if result.status != EXIT_OK:
            raise CommandError(result.output.rstrip('\n'), returncode=result.status)
        self.stdout.write(result.output, ending='')

        ## end def handle()

    ## end class Command()
