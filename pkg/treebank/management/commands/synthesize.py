"""
Management command writing a synthetic verb-final treebank as CoNLL-U
"""
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from treebank.ingest import serialize_conllu
from treebank.synthetic import synthetic_corpus

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Write a synthetic least-effort SOV treebank for end-to-end runs'

    def add_arguments(self, parser):
        parser.add_argument('--output', required=True, help='Destination .conllu file')
        parser.add_argument('--sentences', type=int, default=1000, help='Number of reference sentences')
        parser.add_argument('--seed', type=int, default=0, help='Generator seed')
        parser.add_argument('--max-length', type=int, default=8, help='Longest constituent in words')
        parser.add_argument('--postverbal-prob', type=float, default=0.25,
                            help='Chance of a postverbal constituent per sentence')

    def handle(self, *args, **options):
        if options['sentences'] < 1 or options['max_length'] < 1:
            raise CommandError('--sentences and --max-length must be positive', returncode=1)
        if not 0 <= options['postverbal_prob'] <= 1:
            raise CommandError('--postverbal-prob must lie in [0, 1]', returncode=1)

        corpus = synthetic_corpus(
            options['sentences'],
            seed=options['seed'],
            max_length=options['max_length'],
            postverbal_prob=options['postverbal_prob'],
        )
        output = Path(options['output'])
        try:
            output.parent.mkdir(parents=True, exist_ok=True)
            output.write_text(serialize_conllu(corpus), encoding='utf-8')
        except OSError as e:
            raise CommandError(f'Cannot write {output}: {e}', returncode=2) from e
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(corpus)} sentences to {output}'))
