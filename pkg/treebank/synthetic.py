"""
Synthetic verb-final treebank.

Each sentence is a verb preceded by 2..5 projective constituents whose
surface order is the least-effort arrangement of a random base order, so
a classifier trained on it should prefer short-before-verb orders.
"""
import logging

import numpy as np

from .ingest import Sentence, Token
from .trees import ClauseLayout
from .variants import Permutation, least_effort_transform

logger = logging.getLogger(__name__)

CONSTITUENT_DEPRELS = ('nsubj', 'obj', 'obl', 'iobj', 'advmod')


def _block_heads(start, length, right_offset, external_head, rng):
    """Heads for one contiguous projective block attached to ``external_head``"""
    end = start + length - 1
    head = end - right_offset
    heads = {head: external_head}
    for position in range(head - 1, start - 1, -1):
        heads[position] = head if rng.random() < 0.5 else position + 1
    for position in range(head + 1, end + 1):
        heads[position] = head if rng.random() < 0.5 else position - 1
    return head, heads


def synthetic_sentence(sent_id, rng, min_constituents=2, max_constituents=5,
                       max_length=8, postverbal_prob=0.25):
    n = int(rng.integers(min_constituents, max_constituents + 1))
    lengths = [int(rng.integers(1, max_length + 1)) for _ in range(n)]
    offsets = [int(rng.integers(0, length)) for length in lengths]
    deprels = [CONSTITUENT_DEPRELS[int(rng.integers(len(CONSTITUENT_DEPRELS)))] for _ in range(n)]

    # least_effort_transform only reads lengths from the layout
    sizing = ClauseLayout.rebuild(sent_id, [0] * (sum(lengths) + 1), sum(lengths) + 1,
                                  lengths, offsets, deprels)
    base = Permutation(tuple(int(i) for i in rng.permutation(n)))
    order = least_effort_transform(base, sizing).order

    verb = sum(lengths) + 1
    heads = {verb: 0}
    block_heads = set()
    start = 1
    for index in order:
        head, block = _block_heads(start, lengths[index], offsets[index], verb, rng)
        heads.update(block)
        block_heads.add((head, deprels[index]))
        start += lengths[index]

    if rng.random() < postverbal_prob:
        length = int(rng.integers(1, 4))
        head, block = _block_heads(verb + 1, length, int(rng.integers(0, length)), verb, rng)
        heads.update(block)
        block_heads.add((head, 'obl'))

    relation = dict(block_heads)
    tokens = []
    for position in range(1, len(heads) + 1):
        if position == verb:
            upos, deprel = 'VERB', 'root'
        elif position in relation:
            upos, deprel = 'NOUN', relation[position]
        else:
            upos, deprel = 'ADJ', 'dep'
        tokens.append(Token(
            position=position, form=f"w{position}", lemma=f"w{position}",
            upos=upos, head=heads[position], deprel=deprel,
        ))
    return Sentence(sent_id=sent_id, tokens=tuple(tokens), metadata=(('sent_id', sent_id),))


def synthetic_corpus(n_sentences, seed=0, **options):
    """``n_sentences`` synthetic sentences from one seeded generator"""
    rng = np.random.default_rng(seed)
    corpus = [synthetic_sentence(f"syn-{k:05d}", rng, **options) for k in range(1, n_sentences + 1)]
    logger.info(f"Generated {len(corpus)} synthetic sentences (seed {seed})")
    return corpus
