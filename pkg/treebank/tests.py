import io
import itertools
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from .exceptions import ConlluParseError, ConlluStructureError, DomainError, LayoutError, TreeError
from .ingest import (
    FilterPolicy, Sentence, Token, filter_corpus, parse_conllu, serialize_conllu,
    SKIP_DUPLICATE, SKIP_NON_PROJECTIVE, SKIP_ROOT_UPOS, SKIP_STRADDLING, SKIP_TOO_FEW,
)
from .synthetic import synthetic_corpus
from .trees import (
    ClauseLayout, LengthPolicy, arc_length, build_tree, extract_layout, is_projective, root_arc_total,
    total_dependency_length,
)
from .variants import (
    Permutation, SeedPolicy, enumerate_or_sample, generate_variants, least_effort_transform, realize,
    strategy_order, strategy_records,
)

FIXTURE = Path(__file__).resolve().parent / 'fixtures' / 'hindi_fig2.conllu'


def row(position, form, upos, head, deprel):
    return f"{position}\t{form}\t{form}\t{upos}\t_\t_\t{head}\t{deprel}\t_\t_"


def sentence(heads, upos=None, sent_id='s'):
    upos = upos or ['VERB' if h == 0 else 'NOUN' for h in heads]
    tokens = tuple(
        Token(position=i, form=f"w{i}", lemma=f"w{i}", upos=tag, head=h, deprel='root' if h == 0 else 'dep')
        for i, (h, tag) in enumerate(zip(heads, upos), start=1)
    )
    return Sentence(sent_id=sent_id, tokens=tokens)


def make_layout(lengths, offsets, sent_id='t'):
    """Flat constituents: every word attaches to its constituent head"""
    verb = sum(lengths) + 1
    heads = []
    start = 1
    for length, offset in zip(lengths, offsets):
        head = start + length - 1 - offset
        heads.extend(verb if p == head else head for p in range(start, start + length))
        start += length
    heads.append(0)
    return ClauseLayout.rebuild(sent_id, heads, verb, lengths, offsets, ['dep'] * len(lengths))


def fig2_layout():
    with open(FIXTURE, encoding='utf-8') as stream:
        [fig2] = parse_conllu(stream, source='fig2')
    return extract_layout(build_tree(fig2))


def random_layout(rng, max_n=6):
    n = int(rng.integers(2, max_n + 1))
    lengths = [int(rng.integers(1, 9)) for _ in range(n)]
    offsets = [int(rng.integers(0, length)) for length in lengths]
    return make_layout(lengths, offsets)


class ParseConlluTests(SimpleTestCase):
    def test_two_word_sentence(self):
        text = row(1, 'dog', 'NOUN', 2, 'nsubj') + '\n' + row(2, 'barks', 'VERB', 0, 'root') + '\n\n'
        [parsed] = parse_conllu(io.StringIO(text), source='dog.conllu')
        self.assertEqual(len(parsed), 2)
        self.assertEqual(parsed.heads, (2, 0))
        self.assertEqual(build_tree(parsed).root, 2)

    def test_multiword_token_is_not_a_word(self):
        text = '\n'.join([
            '# sent_id = mwt',
            '1-2\tdu\t_\t_\t_\t_\t_\t_\t_\t_',
            row(1, 'de', 'ADP', 2, 'case'),
            row(2, 'le', 'DET', 3, 'det'),
            row(3, 'chat', 'NOUN', 0, 'root'),
        ]) + '\n\n'
        [parsed] = parse_conllu(io.StringIO(text))
        self.assertEqual(parsed.sent_id, 'mwt')
        self.assertEqual(len(parsed), 3)
        self.assertEqual(len(parsed.extra_lines), 1)

    def test_malformed_head_names_line(self):
        text = '# sent_id = bad\n' + row(1, 'a', 'NOUN', 'x', 'dep') + '\n\n'
        with self.assertRaises(ConlluParseError) as ctx:
            parse_conllu(io.StringIO(text), source='bad.conllu')
        self.assertEqual(ctx.exception.line, 2)
        self.assertIn('bad.conllu:2', str(ctx.exception))

    def test_word_ids_out_of_sequence(self):
        text = row(1, 'a', 'NOUN', 3, 'dep') + '\n' + row(3, 'b', 'VERB', 0, 'root') + '\n'
        with self.assertRaises(ConlluStructureError):
            parse_conllu(io.StringIO(text))

    def test_wrong_column_count(self):
        with self.assertRaises(ConlluParseError):
            parse_conllu(io.StringIO('1\ta\ta\tNOUN\t_\n'))

    def test_sent_id_fallback_and_bom(self):
        text = '\ufeff' + row(1, 'a', 'VERB', 0, 'root') + '\n\n' + row(1, 'b', 'VERB', 0, 'root') + '\n'
        parsed = parse_conllu(io.StringIO(text), source='f.conllu')
        self.assertEqual([s.sent_id for s in parsed], ['f.conllu:1', 'f.conllu:2'])

    def test_round_trip(self):
        text = '\n'.join([
            '# sent_id = rt',
            '# text = du chat',
            '1-2\tdu\t_\t_\t_\t_\t_\t_\t_\t_',
            row(1, 'de', 'ADP', 3, 'case'),
            row(2, 'le', 'DET', 3, 'det'),
            row(3, 'chat', 'NOUN', 0, 'root'),
        ]) + '\n\n'
        with open(FIXTURE, encoding='utf-8') as stream:
            original = parse_conllu(stream) + parse_conllu(io.StringIO(text))
        again = parse_conllu(io.StringIO(serialize_conllu(original)))
        self.assertEqual([s.tokens for s in again], [s.tokens for s in original])
        self.assertEqual(again[1].extra_lines, original[1].extra_lines)
        self.assertEqual(dict(again[1].metadata)['text'], 'du chat')


class FilterCorpusTests(SimpleTestCase):
    policy = FilterPolicy(min_corpus_sentences=0)

    def test_fig2_fixture_is_kept(self):
        with open(FIXTURE, encoding='utf-8') as stream:
            kept, skiplog = filter_corpus(parse_conllu(stream), self.policy)
        self.assertEqual(len(kept), 1)
        self.assertEqual(skiplog, [])

    def test_skip_reasons(self):
        corpus = [
            sentence([3, 3, 0], upos=['NOUN', 'NOUN', 'NOUN'], sent_id='noun-root'),
            sentence([3, 0, 2, 2], sent_id='crossing'),
            sentence([2, 0], sent_id='one-constituent'),
            sentence([2, 3, 0, 0], sent_id='two-roots'),
            sentence([2, 1], sent_id='mutual'),
        ]
        kept, skiplog = filter_corpus(corpus, self.policy)
        self.assertEqual(kept, [])
        self.assertEqual(dict(skiplog), {
            'noun-root': SKIP_ROOT_UPOS,
            'crossing': SKIP_NON_PROJECTIVE,
            'one-constituent': SKIP_TOO_FEW,
            'two-roots': TreeError.BAD_ROOT,
            'mutual': TreeError.CYCLIC,
        })

    def test_straddling_when_projectivity_not_required(self):
        policy = FilterPolicy(require_projective=False, min_corpus_sentences=0)
        kept, skiplog = filter_corpus([sentence([3, 0, 2, 2], sent_id='x')], policy)
        self.assertEqual(skiplog, [('x', SKIP_STRADDLING)])

    def test_duplicate_sent_ids(self):
        corpus = [sentence([3, 3, 0], sent_id='a'), sentence([3, 3, 0], sent_id='a')]
        kept, skiplog = filter_corpus(corpus, self.policy)
        self.assertEqual(len(kept), 1)
        self.assertEqual(skiplog, [('a', SKIP_DUPLICATE)])

    def test_partition_and_monotonicity(self):
        corpus = synthetic_corpus(60, seed=3) + [sentence([2, 1], sent_id='mutual')]
        previous = None
        for min_preverbal in range(1, 7):
            policy = FilterPolicy(min_preverbal=min_preverbal, min_corpus_sentences=0)
            kept, skiplog = filter_corpus(corpus, policy)
            self.assertEqual(len(kept) + len(skiplog), len(corpus))
            if previous is not None:
                self.assertLessEqual(len(kept), previous)
            previous = len(kept)

    def test_small_corpus_only_warns(self):
        with self.assertLogs('treebank.ingest', level='WARNING'):
            kept, _ = filter_corpus([sentence([3, 3, 0])], FilterPolicy())
        self.assertEqual(len(kept), 1)

    def test_min_preverbal_must_be_positive(self):
        with self.assertRaises(ValueError):
            FilterPolicy(min_preverbal=0)


class TreeTests(SimpleTestCase):
    def test_build_tree(self):
        tree = build_tree(sentence([2, 0]))
        self.assertEqual(tree.root, 2)
        self.assertEqual(tree.children[2], (1,))

    def test_tree_errors(self):
        cases = {
            (2, 1): TreeError.CYCLIC,
            (0, 0): TreeError.BAD_ROOT,
            (2, 3, 1): TreeError.CYCLIC,
            (5, 0): TreeError.DANGLING_HEAD,
        }
        for heads, reason in cases.items():
            with self.subTest(heads=heads):
                with self.assertRaises(TreeError) as ctx:
                    build_tree(sentence(list(heads)))
                self.assertEqual(ctx.exception.reason, reason)

    def test_projectivity(self):
        self.assertTrue(is_projective(build_tree(sentence([2, 3, 0]))))
        self.assertFalse(is_projective(build_tree(sentence([3, 0, 2, 2]))))

    def test_fig2_tree(self):
        with open(FIXTURE, encoding='utf-8') as stream:
            [fig2] = parse_conllu(stream)
        tree = build_tree(fig2)
        self.assertEqual(tree.root, 11)
        self.assertEqual(tree.children[11], (1, 4, 6, 9))
        self.assertTrue(is_projective(tree))


class LayoutTests(SimpleTestCase):
    def test_fig2_layout(self):
        layout = fig2_layout()
        self.assertEqual(layout.lengths, (2, 3, 1, 4))
        self.assertEqual(layout.right_offsets, (1, 1, 0, 1))
        self.assertEqual(layout.deprels, ('nsubj', 'advcl', 'obj', 'iobj'))
        self.assertEqual(layout.verb_position, 11)
        self.assertEqual(len(layout.postverbal_suffix), 0)

    def test_non_contiguous_subtree(self):
        with self.assertRaises(LayoutError):
            extract_layout(build_tree(sentence([3, 0, 2, 2])))

    def test_lengths_cover_sentence(self):
        for s in synthetic_corpus(30, seed=5):
            layout = extract_layout(build_tree(s))
            self.assertEqual(sum(layout.lengths) + 1 + len(layout.postverbal_suffix), len(s))

    def test_punctuation_policy(self):
        s = sentence([3, 1, 0, 3], upos=['NOUN', 'PUNCT', 'VERB', 'PUNCT'])
        self.assertEqual(extract_layout(build_tree(s)).lengths, (2,))
        projected = extract_layout(build_tree(s), LengthPolicy(count_punct=False))
        self.assertEqual(projected.lengths, (1,))
        self.assertEqual(projected.verb_position, 2)
        self.assertEqual(projected.n_words, 2)

    def test_rebuild_matches_extracted(self):
        layout = fig2_layout()
        rebuilt = ClauseLayout.rebuild(layout.sent_id, layout.heads, layout.verb_position,
                                       layout.lengths, layout.right_offsets, layout.deprels, layout.upos)
        self.assertEqual(rebuilt, layout)

    def test_governing_punctuation_does_not_count(self):
        s = sentence([4, 4, 2, 0], upos=['NOUN', 'PUNCT', 'NOUN', 'VERB'])
        policy = LengthPolicy(count_punct=False)
        layout = extract_layout(build_tree(s), policy)
        self.assertEqual(layout.lengths, (1, 1))
        self.assertEqual(layout.right_offsets, (0, 1))
        self.assertEqual(layout.n_words, 3)
        self.assertEqual(extract_layout(build_tree(s)).lengths, (1, 2))

        reference = realize(layout, Permutation.identity(2))
        self.assertEqual(reference.total_dl, total_dependency_length(s.heads, policy, s.upos))
        self.assertEqual(reference.total_dl, 1)
        self.assertEqual(reference.root_arc_dl, 1)
        swapped = realize(layout, Permutation((1, 0)))
        self.assertEqual((swapped.total_dl, swapped.root_arc_dl, swapped.cl_last), (0, 0, 1))

        rebuilt = ClauseLayout.rebuild(layout.sent_id, layout.heads, layout.verb_position, layout.lengths,
                                       layout.right_offsets, layout.deprels, layout.upos, policy)
        self.assertEqual(rebuilt, layout)

    def test_decomposition_without_punctuation(self):
        policy = LengthPolicy(count_punct=False)
        rng = np.random.default_rng(8)
        for s in synthetic_corpus(60, seed=12):
            upos = [tag if tag != 'ADJ' or rng.random() < 0.7 else 'PUNCT' for tag in s.upos]
            s = replace(s, tokens=tuple(replace(token, upos=tag) for token, tag in zip(s.tokens, upos)))
            layout = extract_layout(build_tree(s), policy)
            reference, *variants = generate_variants(layout, 20, SeedPolicy(0))
            for variant in variants:
                self.assertEqual(variant.total_dl - reference.total_dl, variant.root_arc_dl - reference.root_arc_dl)


class DependencyLengthTests(SimpleTestCase):
    def test_arc_length(self):
        self.assertEqual(arc_length(11, 10), 0)
        self.assertEqual(arc_length(11, 1), 9)
        self.assertEqual(arc_length(3, 4), 0)
        self.assertEqual(arc_length(2, 7), arc_length(7, 2))
        with self.assertRaises(DomainError):
            arc_length(4, 4)

    def test_arc_length_without_punctuation(self):
        upos = ('NOUN', 'PUNCT', 'ADJ', 'VERB')
        self.assertEqual(arc_length(1, 4), 2)
        self.assertEqual(arc_length(1, 4, LengthPolicy(count_punct=False), upos), 1)
        with self.assertRaises(DomainError):
            arc_length(1, 4, LengthPolicy(count_punct=False))

    def test_total_dependency_length(self):
        self.assertEqual(total_dependency_length([0]), 0)
        self.assertEqual(total_dependency_length([2, 3, 4, 5, 0]), 0)
        self.assertEqual(total_dependency_length([4, 4, 4, 0]), 3)
        upos = ('NOUN', 'PUNCT', 'VERB')
        self.assertEqual(total_dependency_length([3, 3, 0]), 1)
        self.assertEqual(total_dependency_length([3, 3, 0], LengthPolicy(count_punct=False), upos), 0)
        with self.assertRaises(DomainError):
            total_dependency_length([3, 3, 0], LengthPolicy(count_punct=False))

    def test_fig2_root_arc_totals(self):
        layout = fig2_layout()
        self.assertEqual(root_arc_total(layout, (0, 1, 2, 3)), 20)
        self.assertEqual(root_arc_total(layout, strategy_order(layout, 'ascending').order), 23)
        self.assertEqual(root_arc_total(layout, strategy_order(layout, 'descending').order), 13)
        least = least_effort_transform(Permutation.identity(4), layout)
        self.assertEqual(least.order, (0, 1, 3, 2))
        self.assertEqual(root_arc_total(layout, least.order), 17)

    def test_root_arc_total_rejects_non_permutations(self):
        with self.assertRaises(DomainError):
            root_arc_total(fig2_layout(), (0, 0, 1, 2))

    def test_descending_minimises_and_ascending_maximises(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            layout = random_layout(rng)
            totals = [root_arc_total(layout, p) for p in itertools.permutations(layout.identity)]
            self.assertEqual(root_arc_total(layout, strategy_order(layout, 'descending').order), min(totals))
            self.assertEqual(root_arc_total(layout, strategy_order(layout, 'ascending').order), max(totals))

    def test_least_effort_dominance(self):
        rng = np.random.default_rng(12)
        equal_to_base = equal_to_descending = 0
        for _ in range(1000):
            layout = random_layout(rng)
            base = Permutation(rng.permutation(layout.n_constituents))
            least = root_arc_total(layout, least_effort_transform(base, layout).order)
            descending = root_arc_total(layout, strategy_order(layout, 'descending').order)
            self.assertLessEqual(least, root_arc_total(layout, base.order))
            self.assertGreaterEqual(least, descending)
            equal_to_base += least == root_arc_total(layout, base.order)
            equal_to_descending += least == descending
        self.assertGreater(equal_to_base, 0)
        self.assertGreater(equal_to_descending, 0)

    def test_variant_delta_is_root_arc_delta(self):
        seed_policy = SeedPolicy(4)
        for s in synthetic_corpus(500, seed=8):
            layout = extract_layout(build_tree(s))
            reference = realize(layout, Permutation.identity(layout.n_constituents))
            for order in enumerate_or_sample(layout.n_constituents, 20, seed_policy.rng(s.sent_id)):
                variant = realize(layout, order)
                self.assertEqual(variant.total_dl - reference.total_dl,
                                 variant.root_arc_dl - reference.root_arc_dl)


class VariantTests(SimpleTestCase):
    def test_enumeration_sizes(self):
        self.assertEqual(
            [p.order for p in enumerate_or_sample(3)],
            [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)],
        )
        self.assertEqual(len(enumerate_or_sample(5, 120)), 119)

    def test_sampling_is_distinct_and_excludes_reference(self):
        sampled = enumerate_or_sample(6, 120, np.random.default_rng(0))
        orders = {p.order for p in sampled}
        self.assertEqual(len(sampled), 120)
        self.assertEqual(len(orders), 120)
        self.assertNotIn(tuple(range(6)), orders)

    def test_sampling_is_seeded(self):
        first = enumerate_or_sample(7, 30, SeedPolicy(9).rng('s1'))
        second = enumerate_or_sample(7, 30, SeedPolicy(9).rng('s1'))
        other = enumerate_or_sample(7, 30, SeedPolicy(9).rng('s2'))
        self.assertEqual(first, second)
        self.assertNotEqual(first, other)

    def test_enumeration_domain(self):
        for n in (0, 1, 21):
            with self.subTest(n=n), self.assertRaises(DomainError):
                enumerate_or_sample(n, 120, np.random.default_rng(0))

    def test_strategies(self):
        layout = fig2_layout()
        self.assertEqual(strategy_order(layout, 'descending').order, (3, 1, 0, 2))
        self.assertEqual(strategy_order(layout, 'ascending').order, (2, 0, 1, 3))
        with self.assertRaises(DomainError):
            strategy_order(layout, 'alphabetical')
        single = make_layout([3], [0])
        for strategy in ('random', 'ascending', 'descending', 'least_effort'):
            self.assertTrue(strategy_order(single, strategy, np.random.default_rng(1)).is_identity)

    def test_sorting_is_stable(self):
        layout = make_layout([2, 1, 2, 1], [0, 0, 1, 0])
        self.assertEqual(strategy_order(layout, 'ascending').order, (1, 3, 0, 2))
        self.assertEqual(strategy_order(layout, 'descending').order, (0, 2, 1, 3))

    def test_least_effort_transform(self):
        layout = make_layout([1, 3, 1, 2], [0, 1, 0, 1])
        moved = least_effort_transform(Permutation.identity(4), layout)
        self.assertEqual(moved.order, (0, 1, 3, 2))
        self.assertEqual(least_effort_transform(moved, layout), moved)
        already = Permutation((1, 3, 0, 2))
        self.assertEqual(least_effort_transform(already, layout), already)

    def test_realize_fig2(self):
        layout = fig2_layout()
        reference = realize(layout, Permutation.identity(4))
        self.assertTrue(reference.is_reference)
        self.assertEqual(reference.root_arc_dl, 20)
        self.assertEqual(reference.total_dl, 21)
        self.assertEqual(reference.cl_last, 4)
        descending = realize(layout, (3, 1, 0, 2))
        self.assertEqual((descending.cl_last, descending.root_arc_dl), (1, 13))
        self.assertFalse(descending.is_reference)
        ascending = realize(layout, (2, 0, 1, 3))
        self.assertEqual((ascending.cl_last, ascending.root_arc_dl), (4, 23))

    def test_generate_variants(self):
        records = generate_variants(fig2_layout(), 120, SeedPolicy(0))
        self.assertEqual(len(records), 24)
        self.assertEqual(sum(r.is_reference for r in records), 1)
        self.assertTrue(records[0].is_reference)
        self.assertEqual(len(generate_variants(make_layout([2], [0]), 120, SeedPolicy(0))), 1)

    def test_strategy_records_order(self):
        for s in synthetic_corpus(100, seed=2):
            records = strategy_records(extract_layout(build_tree(s)), SeedPolicy(6))
            dl = {strategy: record.root_arc_dl for strategy, record in records.items()}
            self.assertLessEqual(dl['descending'], dl['least_effort'])
            self.assertLessEqual(dl['least_effort'], dl['random'])
            self.assertLessEqual(dl['random'], dl['ascending'])

    def test_permutation_validation(self):
        with self.assertRaises(DomainError):
            Permutation((0, 2))
        self.assertEqual(Permutation.parse('2-0-1').order, (2, 0, 1))
        self.assertEqual(str(Permutation((2, 0, 1))), '2-0-1')


class SyntheticCorpusTests(SimpleTestCase):
    def test_synthetic_sentences_qualify(self):
        corpus = synthetic_corpus(200, seed=1)
        kept, skiplog = filter_corpus(corpus, FilterPolicy(min_corpus_sentences=0))
        self.assertEqual(skiplog, [])
        for s in kept:
            layout = extract_layout(build_tree(s))
            self.assertTrue(2 <= layout.n_constituents <= 5)
            self.assertEqual(layout.lengths[-1], min(layout.lengths))

    def test_generator_is_seeded(self):
        self.assertEqual(synthetic_corpus(20, seed=4), synthetic_corpus(20, seed=4))
