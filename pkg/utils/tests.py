import io
import os
import tempfile
from pathlib import Path
from unittest import mock

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from treebank.ingest import parse_conllu
from .config import ConfigError, build_config, default_values, env_values, parse_config_text
from .tables import TableError, read_table, write_table

FIXTURE = Path(__file__).resolve().parent.parent / 'treebank' / 'fixtures' / 'hindi_fig2.conllu'


def conllu_block(sent_id, rows):
    lines = [f"# sent_id = {sent_id}"]
    for position, (upos, head) in enumerate(rows, start=1):
        deprel = 'root' if head == 0 else 'dep'
        lines.append(f"{position}\tw{position}\tw{position}\t{upos}\t_\t_\t{head}\t{deprel}\t_\t_")
    return '\n'.join(lines) + '\n\n'


class ConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = build_config({'out': 'runs'}, default_values())
        self.assertEqual(config.cap, 120)
        self.assertEqual(config.seed, 0)
        self.assertEqual(config.folds, 10)
        self.assertEqual(config.max_n, 5)
        self.assertEqual(config.filter_policy.min_preverbal, 2)
        self.assertEqual(config.filter_policy.root_upos_allowed, frozenset({'VERB'}))
        self.assertTrue(config.length_policy.count_punct)

    def test_layer_precedence(self):
        text = "# analysis settings\nseed = 9\ncap=50  # fewer variants\nroot_upos = verb, aux\ncount_punct = off\n"
        with mock.patch.dict(os.environ, {'ORDOLEX_SEED': '7'}):
            from_env = build_config({'out': '.'}, default_values(), env_values())
            layered = build_config({'out': '.'}, default_values(), env_values(), parse_config_text(text),
                                   {'cap': 30, 'seed': None})
        self.assertEqual(from_env.seed, 7)
        self.assertEqual(layered.seed, 9)
        self.assertEqual(layered.cap, 30)
        self.assertEqual(layered.filter_policy.root_upos_allowed, frozenset({'AUX', 'VERB'}))
        self.assertFalse(layered.length_policy.count_punct)

    def test_invalid_values(self):
        for bad in ({'cap': 0}, {'folds': 1}, {'seed': -1}, {'min_preverbal': 0}, {'count_punct': 'maybe'}):
            with self.subTest(bad=bad), self.assertRaises(ConfigError):
                build_config({'out': '.'}, default_values(), bad)

    def test_malformed_config_file(self):
        with self.assertRaises(ConfigError):
            parse_config_text("cap\n")
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text("seed=1\ncolour=blue\n", source='run.cfg')
        self.assertIn('run.cfg:2', str(ctx.exception))

    def test_config_hash(self):
        with tempfile.TemporaryDirectory() as tmp:
            corpus = Path(tmp) / 'a.conllu'
            corpus.write_text(conllu_block('a', [('NOUN', 3), ('NOUN', 3), ('VERB', 0)]), encoding='utf-8')
            base = {'out': tmp, 'input': [str(corpus)]}
            reference = build_config(base, default_values()).config_hash()
            self.assertEqual(build_config(base, default_values(), {'workers': 8, 'out': 'elsewhere'}).config_hash(),
                             reference)
            self.assertNotEqual(build_config(base, default_values(), {'seed': 1}).config_hash(), reference)
            corpus.write_text(conllu_block('b', [('NOUN', 3), ('NOUN', 3), ('VERB', 0)]), encoding='utf-8')
            self.assertNotEqual(build_config(base, default_values()).config_hash(), reference)


class TableTests(SimpleTestCase):
    def test_malformed_row_is_reported(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 't.tsv'
            write_table(path, [{'a': 1, 'b': 2}, {'a': 3, 'b': 4}], ('a', 'b'), sep='\t')
            self.assertEqual(read_table(path, ('a', 'b'), {'a': int, 'b': int}, sep='\t'),
                             [{'a': 1, 'b': 2}, {'a': 3, 'b': 4}])
            with open(path, 'a', encoding='utf-8') as stream:
                stream.write('x\t5\n')
            with self.assertRaises(TableError) as ctx:
                read_table(path, ('a', 'b'), {'a': int, 'b': int}, sep='\t')
            self.assertEqual(ctx.exception.row, 4)


class PipelineCommandTests(SimpleTestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)
        self.out = self.tmp / 'runs'

    def run_command(self, name, *args, **options):
        stdout = io.StringIO()
        call_command(name, *args, stdout=stdout, stderr=io.StringIO(), **options)
        return stdout.getvalue()

    def write_corpus(self, name, text):
        path = self.tmp / name
        path.write_text(text, encoding='utf-8')
        return str(path)

    def synthetic_file(self, sentences, seed=0):
        path = self.tmp / f"synthetic-{sentences}-{seed}.conllu"
        self.run_command('synthesize', output=str(path), sentences=sentences, seed=seed)
        return str(path)

    def latest_run(self, out=None):
        out = out or self.out
        return out / (out / 'LATEST').read_text(encoding='utf-8').strip()

    def test_fig2_variants(self):
        output = self.run_command('variants', input=[str(FIXTURE)], out=str(self.out))
        self.assertIn('Reference 1\nVariant 23\n', output)
        run = self.latest_run()
        variants = pd.read_csv(run / 'variants.tsv', sep='\t')
        self.assertEqual(len(variants), 24)
        self.assertEqual(variants['is_reference'].sum(), 1)
        self.assertEqual(sorted(variants['root_arc_dl'])[0], 13)
        self.assertEqual(sorted(variants['root_arc_dl'])[-1], 23)
        self.assertEqual(len(run.name), 12)
        self.assertTrue((run / 'config.txt').is_file())

    def test_two_constituent_corpus(self):
        text = ''.join(conllu_block(s, [('NOUN', 3), ('NOUN', 3), ('VERB', 0)]) for s in 'abc')
        output = self.run_command('variants', input=[self.write_corpus('two.conllu', text)], out=str(self.out),
                                  corpus_label='Toy')
        self.assertIn('Toy\nReference 3\nVariant 3\n', output)

    def test_variants_are_byte_identical(self):
        corpus = self.synthetic_file(40, seed=2)
        outputs = []
        for workers, name in ((1, 'one'), (1, 'again'), (4, 'threads')):
            out = self.tmp / name
            self.run_command('variants', input=[corpus], out=str(out), workers=workers, cap=10)
            outputs.append(self.latest_run(out))
        self.assertEqual(len({run.name for run in outputs}), 1)
        for filename in ('variants.tsv', 'layouts.tsv', 'skiplog.tsv', 'config.txt'):
            contents = {(run / filename).read_bytes() for run in outputs}
            self.assertEqual(len(contents), 1, filename)

    def test_punctuation_left_out(self):
        rows = [('NOUN', 4), ('PUNCT', 4), ('NOUN', 2), ('VERB', 0), ('PUNCT', 4)]
        corpus = self.write_corpus('punct.conllu', ''.join(conllu_block(s, rows) for s in 'ab'))
        self.run_command('variants', input=[corpus], out=str(self.out), count_punct='off')
        run = self.latest_run()
        layouts = pd.read_csv(run / 'layouts.tsv', sep='\t', dtype=str)
        self.assertEqual(list(layouts['lengths']), ['1-1', '1-1'])
        self.assertEqual(list(layouts['upos']), ['NOUN-PUNCT-NOUN-VERB'] * 2)
        variants = pd.read_csv(run / 'variants.tsv', sep='\t')
        self.assertEqual(sorted(variants['total_dl']), [0, 0, 1, 1])
        self.assertEqual(set(variants['n_words']), {3})
        self.run_command('stats', out=str(self.out))
        fig3 = pd.read_csv(run / 'fig3.csv')
        self.assertEqual(list(fig3[fig3['n'] == 2]['mean_length']), [1, 1])

    def test_seed_from_environment(self):
        corpus = self.synthetic_file(20, seed=3)
        with mock.patch.dict(os.environ, {'ORDOLEX_SEED': '5'}):
            self.run_command('variants', input=[corpus], out=str(self.out), cap=3)
        run = self.latest_run()
        self.assertIn('seed=5\n', (run / 'config.txt').read_text(encoding='utf-8'))
        self.run_command('variants', input=[corpus], out=str(self.out), cap=3, seed=6)
        other = self.latest_run()
        self.assertNotEqual(run, other)
        self.assertNotEqual((run / 'variants.tsv').read_bytes(), (other / 'variants.tsv').read_bytes())

    def test_data_errors(self):
        noun_root = self.write_corpus('noun.conllu', conllu_block('n', [('NOUN', 3), ('NOUN', 3), ('NOUN', 0)]))
        bad_head = self.write_corpus('bad.conllu', '# sent_id = x\n1\ta\ta\tNOUN\t_\t_\tx\tdep\t_\t_\n')
        cases = {
            noun_root: 'no-qualifying-sentences',
            bad_head: 'bad.conllu:2',
            str(self.tmp / 'missing.conllu'): 'missing.conllu',
        }
        for path, message in cases.items():
            with self.subTest(path=path):
                with self.assertRaises(CommandError) as ctx:
                    self.run_command('variants', input=[path], out=str(self.out))
                self.assertEqual(ctx.exception.returncode, 2)
                self.assertIn(message, str(ctx.exception))

    def test_usage_errors(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_command('variants', '--cap=many')
        self.assertEqual(ctx.exception.returncode, 1)
        with self.assertRaises(CommandError) as ctx:
            self.run_command('variants', input=[str(FIXTURE)], out=str(self.out), cap=0)
        self.assertEqual(ctx.exception.returncode, 1)
        with self.assertRaises(CommandError) as ctx:
            self.run_command('stats', out=str(self.out))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_fig2_stats(self):
        self.run_command('variants', input=[str(FIXTURE)], out=str(self.out))
        self.run_command('stats', out=str(self.out))
        run = self.latest_run()
        fig4 = pd.read_csv(run / 'fig4.csv').set_index('strategy')['mean_normalized_dl'] * 11
        self.assertAlmostEqual(fig4['reference'], 21, places=6)
        self.assertAlmostEqual(fig4['ascending'], 24, places=6)
        self.assertAlmostEqual(fig4['descending'], 14, places=6)
        self.assertGreaterEqual(fig4['ascending'], fig4['random'])
        self.assertGreaterEqual(fig4['random'], fig4['least_effort'])
        self.assertGreaterEqual(fig4['least_effort'], fig4['descending'])
        fig3 = pd.read_csv(run / 'fig3.csv')
        self.assertEqual(list(fig3['mean_length']), [2, 3, 1, 4])
        self.assertEqual(set(fig3['n']), {4})
        profile = pd.read_csv(run / 'deprel_profile.csv')
        self.assertEqual(profile[profile['slot'] == 'first']['deprel'].tolist(), ['nsubj'])

    def test_stats_resolves_run_by_input(self):
        self.run_command('variants', input=[str(FIXTURE)], out=str(self.out))
        self.run_command('stats', input=[str(FIXTURE)], out=str(self.out))
        self.assertTrue((self.latest_run() / 'fig3.csv').is_file())

    def test_malformed_variant_row(self):
        self.run_command('variants', input=[str(FIXTURE)], out=str(self.out))
        with open(self.latest_run() / 'variants.tsv', 'a', encoding='utf-8') as stream:
            stream.write('broken\tnot-an-order\t0\t4\t11\t1\t1\t1\n')
        with self.assertRaises(CommandError) as ctx:
            self.run_command('stats', out=str(self.out))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('row 26', str(ctx.exception))

    def test_classify_needs_enough_references(self):
        self.run_command('variants', input=[str(FIXTURE)], out=str(self.out))
        with self.assertRaises(CommandError) as ctx:
            self.run_command('classify', out=str(self.out))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_synthesize(self):
        path = self.synthetic_file(25, seed=9)
        with open(path, encoding='utf-8') as stream:
            self.assertEqual(len(parse_conllu(stream)), 25)

    def test_full_pipeline(self):
        corpus = self.synthetic_file(150, seed=4)
        runs = []
        for workers, name in ((1, 'serial'), (3, 'parallel')):
            out = self.tmp / name
            self.run_command('variants', input=[corpus], out=str(out), workers=workers)
            self.run_command('stats', out=str(out), workers=workers)
            output = self.run_command('classify', out=str(out))
            self.assertIn('cl_last:', output)
            runs.append(self.latest_run(out))

        for filename in ('fig3.csv', 'fig4.csv', 'coefficients.csv', 'accuracy.csv', 'mcnemar.csv',
                         'collinearity.csv'):
            self.assertEqual((runs[0] / filename).read_bytes(), (runs[1] / filename).read_bytes(), filename)

        coefficients = pd.read_csv(runs[0] / 'coefficients.csv')
        cl_last = coefficients[(coefficients['model'] == 'cl_last') & (coefficients['feature'] == 'cl_last')]
        self.assertLess(cl_last['coef'].iloc[0], 0)
        self.assertLess(cl_last['p'].iloc[0], 0.001)
        self.assertEqual(cl_last['separated'].iloc[0], 1)
        self.assertFalse(coefficients[['se', 'z', 'p']].isna().any().any())

        accuracy = pd.read_csv(runs[0] / 'accuracy.csv', dtype={'fold': str})
        self.assertEqual(len(accuracy), 3 * 11)
        self.assertTrue(accuracy['accuracy'].between(0, 100).all())

        mcnemar = pd.read_csv(runs[0] / 'mcnemar.csv')
        self.assertEqual(len(mcnemar), 3)
        collinearity = pd.read_csv(runs[0] / 'collinearity.csv')
        self.assertEqual(list(collinearity['statistic']), ['vif', 'vif', 'pearson'])

        report = self.run_command('report', out=str(self.tmp / 'serial'))
        self.assertIn('Reference 150', report)
        self.assertIn('== coefficients.csv ==', report)
        self.assertEqual((runs[0] / 'report.txt').read_text(encoding='utf-8'), report)
