"""
Management command concatenating a run's CSV outputs into report.txt
"""
import logging

from utils.commands import PipelineCommand
from utils.runs import read_variants

logger = logging.getLogger(__name__)

SECTIONS = (
    'fig3.csv', 'fig4.csv', 'deprel_profile.csv', 'shortest_last.csv',
    'coefficients.csv', 'accuracy.csv', 'mcnemar.csv', 'collinearity.csv',
)


class Command(PipelineCommand):
    help = 'Summarise a run into report.txt'
    reads_run = True

    def process(self, config, run_dir, options):
        records = read_variants(run_dir)
        n_references = sum(1 for record in records if record.is_reference)

        lines = [f"run {run_dir.name}"]
        if config.corpus_label:
            lines.append(config.corpus_label)
        lines += [f"Reference {n_references}", f"Variant {len(records) - n_references}"]
        for name in SECTIONS:
            path = run_dir / name
            if not path.is_file():
                logger.warning(f"{path} not found; run the producing stage first")
                continue
            lines += ['', f"== {name} ==", path.read_text(encoding='utf-8').rstrip('\n')]

        text = '\n'.join(lines) + '\n'
        (run_dir / 'report.txt').write_text(text, encoding='utf-8')
        self.stdout.write(text, ending='')
