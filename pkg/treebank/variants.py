"""
Counterfactual constituent orders.

Variants permute whole preverbal constituents; words inside a constituent,
the verb and everything after it keep their relative order.
"""
import hashlib
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .trees import check_permutation, root_arc_total, total_dependency_length

logger = logging.getLogger(__name__)

DEFAULT_CAP = 120
MAX_CONSTITUENTS = 20

RANDOM = 'random'
ASCENDING = 'ascending'
DESCENDING = 'descending'
LEAST_EFFORT = 'least_effort'
STRATEGIES = (RANDOM, ASCENDING, DESCENDING, LEAST_EFFORT)
REFERENCE = 'reference'


@dataclass(frozen=True)
class Permutation:
    order: tuple

    def __post_init__(self):
        object.__setattr__(self, 'order', tuple(int(i) for i in self.order))
        check_permutation(self.order, len(self.order))

    @classmethod
    def identity(cls, n):
        return cls(tuple(range(n)))

    @classmethod
    def parse(cls, text):
        return cls(tuple(int(i) for i in text.split('-'))) if text else cls(())

    @property
    def is_identity(self):
        return self.order == tuple(range(len(self.order)))

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def __str__(self):
        return '-'.join(str(i) for i in self.order)


@dataclass(frozen=True)
class VariantRecord:
    sent_id: str
    order: Permutation
    is_reference: bool
    n_constituents: int
    n_words: int
    cl_last: int
    total_dl: int
    root_arc_dl: int

    FIELDS = ('sent_id', 'order', 'is_reference', 'n_constituents', 'n_words',
              'cl_last', 'total_dl', 'root_arc_dl')

    def as_row(self):
        return {
            'sent_id': self.sent_id,
            'order': str(self.order),
            'is_reference': int(self.is_reference),
            'n_constituents': self.n_constituents,
            'n_words': self.n_words,
            'cl_last': self.cl_last,
            'total_dl': self.total_dl,
            'root_arc_dl': self.root_arc_dl,
        }


@dataclass(frozen=True)
class SeedPolicy:
    """Per-sentence random streams derived from one global seed.

    The stream of a sentence depends only on (global_seed, stream name,
    sent_id), so results do not depend on processing order or parallelism.
    """
    global_seed: int = 0

    def seed_for(self, sent_id, stream='variants'):
        digest = hashlib.blake2b(
            f"{self.global_seed}\x1f{stream}\x1f{sent_id}".encode('utf-8'),
            digest_size=8,
        ).digest()
        return int.from_bytes(digest, 'big')

    def rng(self, sent_id, stream='variants'):
        return np.random.default_rng(self.seed_for(sent_id, stream))


def enumerate_or_sample(n, cap=DEFAULT_CAP, rng=None):
    """All non-identity orders of ``n`` constituents, or ``cap`` distinct ones sampled uniformly"""
    if n > MAX_CONSTITUENTS:
        raise DomainError(f"refusing to permute {n} constituents (limit {MAX_CONSTITUENTS})")
    if n < 2:
        raise DomainError(f"need at least 2 constituents to permute, got {n}")
    if cap < 1:
        raise DomainError(f"variant cap must be >= 1, got {cap}")

    identity = tuple(range(n))
    if math.factorial(n) - 1 <= cap:
        return [Permutation(p) for p in itertools.permutations(identity) if p != identity]

    if rng is None:
        raise DomainError("sampling permutations needs a seeded generator")
    seen = {identity}
    sampled = []
    while len(sampled) < cap:
        order = tuple(int(i) for i in rng.permutation(n))
        if order in seen:
            continue
        seen.add(order)
        sampled.append(Permutation(order))
    return sampled


def least_effort_transform(base, layout):
    """Move the shortest constituent (the one nearest the verb on ties) next to the verb"""
    order = list(base.order)
    if not order:
        return base
    lengths = layout.lengths
    shortest = min(lengths[i] for i in order)
    slot = max(s for s, i in enumerate(order) if lengths[i] == shortest)
    order.append(order.pop(slot))
    return Permutation(tuple(order))


def strategy_order(layout, strategy, rng=None):
    n = layout.n_constituents
    if n < 1:
        raise DomainError(f"{layout.sent_id}: no preverbal constituents to order")
    lengths = layout.lengths

    if strategy == ASCENDING:
        return Permutation(tuple(sorted(range(n), key=lambda i: lengths[i])))
    if strategy == DESCENDING:
        return Permutation(tuple(sorted(range(n), key=lambda i: -lengths[i])))
    if strategy in (RANDOM, LEAST_EFFORT):
        if rng is None:
            raise DomainError(f"strategy {strategy!r} needs a seeded generator")
        base = Permutation(tuple(int(i) for i in rng.permutation(n)))
        return base if strategy == RANDOM else least_effort_transform(base, layout)
    raise DomainError(f"unknown ordering strategy {strategy!r}")


def realize(layout, order):
    """Lay the constituents out in ``order`` and measure the resulting sentence"""
    if not isinstance(order, Permutation):
        order = Permutation(tuple(order))
    if len(order) != layout.n_constituents:
        raise DomainError(f"{layout.sent_id}: order of size {len(order)} for {layout.n_constituents} constituents")

    n_positions = len(layout.heads)
    new_position = list(range(n_positions + 1))
    cursor = 1
    for index in order:
        constituent = layout.preverbal[index]
        for position in constituent.members:
            new_position[position] = cursor + position - constituent.start
        cursor += constituent.size

    heads = [0] * n_positions
    upos = [None] * n_positions if layout.upos else None
    for dependent, head in enumerate(layout.heads, start=1):
        heads[new_position[dependent] - 1] = new_position[head] if head else 0
        if upos is not None:
            upos[new_position[dependent] - 1] = layout.upos[dependent - 1]

    return VariantRecord(
        sent_id=layout.sent_id,
        order=order,
        is_reference=order.is_identity,
        n_constituents=layout.n_constituents,
        n_words=layout.n_words,
        cl_last=layout.preverbal[order.order[-1]].length if len(order) else 0,
        total_dl=total_dependency_length(heads, layout.length_policy, upos),
        root_arc_dl=root_arc_total(layout, order.order),
    )


def generate_variants(layout, cap, seed_policy):
    """The reference record followed by up to ``cap`` variant records"""
    records = [realize(layout, Permutation.identity(layout.n_constituents))]
    if layout.n_constituents >= 2:
        orders = enumerate_or_sample(layout.n_constituents, cap, seed_policy.rng(layout.sent_id))
        records.extend(realize(layout, order) for order in orders)
    return records


def strategy_records(layout, seed_policy):
    """One record per ordering strategy, plus the reference.

    ``random`` and ``least_effort`` draw from the same per-sentence stream,
    so the least-effort order is the transform of the random order.
    """
    records = {REFERENCE: realize(layout, Permutation.identity(layout.n_constituents))}
    for strategy in STRATEGIES:
        rng = seed_policy.rng(layout.sent_id, 'strategy')
        records[strategy] = realize(layout, strategy_order(layout, strategy, rng))
    return records
