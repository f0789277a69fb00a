"""
Management command generating counterfactual variants for every qualifying
reference sentence.
"""
import logging
from concurrent.futures import ThreadPoolExecutor

from django.core.management.base import CommandError

from treebank.ingest import filter_corpus, parse_conllu
from treebank.trees import build_tree, extract_layout
from treebank.variants import SeedPolicy, generate_variants
from utils.commands import PipelineCommand, DATA_ERROR, USAGE_ERROR
from utils.config import CONFIG_FILE, mark_latest, write_config_file
from utils.runs import write_layouts, write_skiplog, write_variants

logger = logging.getLogger(__name__)


def read_conllu_file(path):
    with open(path, encoding='utf-8') as stream:
        return parse_conllu(stream, source=str(path))


class Command(PipelineCommand):
    help = 'Generate reference and counterfactual variant records from CoNLL-U treebanks'

    def process(self, config, run_dir, options):
        if not config.inputs:
            raise CommandError('variants needs at least one --input file', returncode=USAGE_ERROR)

        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            sentences = [s for parsed in pool.map(read_conllu_file, config.inputs) for s in parsed]
            logger.info(f"Read {len(sentences)} sentences from {len(config.inputs)} file(s)")

            kept, skiplog = filter_corpus(sentences, config.filter_policy, config.length_policy)
            if not kept:
                raise CommandError('no-qualifying-sentences', returncode=DATA_ERROR)

            layouts = [
                extract_layout(build_tree(sentence), config.length_policy)
                for sentence in sorted(kept, key=lambda s: s.sent_id)
            ]
            seed_policy = SeedPolicy(config.seed)
            groups = list(pool.map(lambda layout: generate_variants(layout, config.cap, seed_policy), layouts))

        run_dir = config.run_dir()
        run_dir.mkdir(parents=True, exist_ok=True)
        n_records = write_variants(run_dir, groups)
        write_layouts(run_dir, layouts)
        write_skiplog(run_dir, skiplog)
        write_config_file(run_dir / CONFIG_FILE, config)
        mark_latest(config, run_dir)
        logger.info(f"Skipped {len(skiplog)} sentences; wrote {n_records} records to {run_dir}")

        if config.corpus_label:
            self.stdout.write(config.corpus_label)
        self.stdout.write(f"Reference {len(groups)}")
        self.stdout.write(f"Variant {n_records - len(groups)}")
        self.stdout.write(self.style.SUCCESS(f"Run {run_dir.name} written to {run_dir}"))
