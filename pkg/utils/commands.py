"""
Shared management-command plumbing for the pipeline stages.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""
import logging
import sys
import time

from django.core.management.base import BaseCommand, CommandError, CommandParser

from analysis.exceptions import AnalysisError
from treebank.exceptions import TreebankError
from .config import (
    ConfigError, build_config, default_values, env_values, read_config_file, resolve_run_dir, CONFIG_FILE,
)
from .tables import TableError

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
DATA_ERROR = 2


class PipelineParser(CommandParser):
    """Report argument errors with the usage exit code instead of argparse's 2"""

    def error(self, message):
        if self.called_from_command_line:
            self.print_usage(sys.stderr)
            self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")
        raise CommandError(f"Error: {message}", returncode=USAGE_ERROR)


class PipelineCommand(BaseCommand):
    # Analysis stages read an existing run directory instead of CoNLL-U input
    reads_run = False

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.__class__ = PipelineParser
        return parser

    def add_arguments(self, parser):
        parser.add_argument('--input', nargs='+', help='CoNLL-U input file(s)')
        parser.add_argument('--out', help='Output directory holding run directories')
        parser.add_argument('--config', help='Flat key=value configuration file')
        parser.add_argument('--seed', type=int, help='Global random seed (falls back to $ORDOLEX_SEED)')
        parser.add_argument('--cap', type=int, help='Maximum number of variants per reference')
        parser.add_argument('--folds', type=int, help='Cross-validation folds')
        parser.add_argument('--max-n', type=int, help='Largest constituent count profiled by stats')
        parser.add_argument('--count-punct', choices=['on', 'off'], help='Count punctuation as words')
        parser.add_argument('--min-preverbal', type=int, help='Minimum number of preverbal constituents')
        parser.add_argument('--root-upos', help='Comma-separated UPOS tags admissible for the root')
        parser.add_argument('--workers', type=int, help='Sentence-level worker threads')
        parser.add_argument('--corpus-label', help='Label printed above the summary')
        if self.reads_run:
            parser.add_argument('--run', help='Run directory (or its hash) to analyse')

    def flag_values(self, options):
        values = {
            'input': [str(p) for p in options['input']] if options.get('input') else None,
            'out': str(options['out']) if options.get('out') else None,
        }
        for key in ('seed', 'cap', 'folds', 'max_n', 'count_punct', 'min_preverbal', 'root_upos',
                    'workers', 'corpus_label'):
            values[key] = options.get(key)
        return values

    def load_config(self, options):
        """Layer defaults, environment, run config, config file and flags; returns (config, run_dir)"""
        file_values = read_config_file(options['config']) if options.get('config') else {}
        flags = self.flag_values(options)
        layers = [{'out': '.'}, default_values(), env_values(), file_values, flags]
        config = build_config(*layers)
        if not self.reads_run:
            return config, None

        run_dir = resolve_run_dir(config, options.get('run'))
        run_file = run_dir / CONFIG_FILE
        if run_file.is_file():
            layers.insert(3, read_config_file(run_file))
            config = build_config(*layers)
        return config, run_dir

    def handle(self, *args, **options):
        started = time.monotonic()
        try:
            config, run_dir = self.load_config(options)
            self.process(config, run_dir, options)
        except ConfigError as e:
            raise CommandError(str(e), returncode=USAGE_ERROR) from e
        except (TreebankError, AnalysisError, TableError, OSError, UnicodeDecodeError) as e:
            raise CommandError(str(e), returncode=DATA_ERROR) from e
        logger.info(f"{self.__module__.rsplit('.', 1)[-1]} finished in {time.monotonic() - started:.2f}s")

    def process(self, config, run_dir, options):
        raise NotImplementedError
