"""
Management command computing the positional-length, normalized-DL and
deprel profiles of a run.
"""
import logging
from concurrent.futures import ThreadPoolExecutor

from django.conf import settings

from analysis.stats import (
    FIRST, LAST, deprel_position_profile, mean_normalized_dl, positional_mean_lengths, shortest_last_rate,
)
from treebank.variants import REFERENCE, SeedPolicy, strategy_records
from utils.commands import PipelineCommand
from utils.runs import read_layouts, read_variants
from utils.tables import write_table

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Aggregate constituent-length and dependency-length statistics for a run'
    reads_run = True

    def process(self, config, run_dir, options):
        layouts = sorted(read_layouts(run_dir, config.length_policy), key=lambda layout: layout.sent_id)
        references = [record for record in read_variants(run_dir) if record.is_reference]
        seed_policy = SeedPolicy(config.seed)
        strategies = [s for s in settings.ORDOLEX['STRATEGIES'] if s != REFERENCE]

        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            per_sentence = list(pool.map(lambda layout: strategy_records(layout, seed_policy), layouts))
        tagged = [(REFERENCE, record) for record in sorted(references, key=lambda r: r.sent_id)]
        tagged.extend((strategy, records[strategy]) for records in per_sentence for strategy in strategies)

        sizes = range(2, config.max_n + 1)

        fig3 = []
        for n in sizes:
            profile = positional_mean_lengths(layouts, n)
            if profile.is_empty:
                continue
            for slot, mean in enumerate(profile.mean_lengths, start=1):
                fig3.append({'n': n, 'slot': slot, 'mean_length': mean, 'count': profile.counts})
        write_table(run_dir / 'fig3.csv', fig3, ('n', 'slot', 'mean_length', 'count'))

        fig4 = []
        for n in sizes:
            for strategy in [REFERENCE, *strategies]:
                count = sum(1 for tag, record in tagged if tag == strategy and record.n_constituents == n)
                if count:
                    fig4.append({
                        'n': n,
                        'strategy': strategy,
                        'mean_normalized_dl': mean_normalized_dl(tagged, strategy, n),
                        'count': count,
                    })
        write_table(run_dir / 'fig4.csv', fig4, ('n', 'strategy', 'mean_normalized_dl', 'count'))

        deprels = []
        for slot in (FIRST, LAST):
            for deprel, proportion in deprel_position_profile(layouts, slot).items():
                deprels.append({'slot': slot, 'deprel': deprel, 'proportion': proportion})
        write_table(run_dir / 'deprel_profile.csv', deprels, ('slot', 'deprel', 'proportion'))

        shortest = []
        for n in sizes:
            rate, count = shortest_last_rate(layouts, n)
            if count:
                shortest.append({'n': n, 'rate': rate, 'count': count})
        write_table(run_dir / 'shortest_last.csv', shortest, ('n', 'rate', 'count'))

        self.stdout.write(f"Profiled {len(layouts)} references for n = 2..{config.max_n}")
        self.stdout.write(self.style.SUCCESS(f"Statistics written to {run_dir}"))
