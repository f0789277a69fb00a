"""
Dependency trees, projectivity and the permutable clause layout.

Dependency length is the number of words *between* a head and its
dependent, so adjacent words are at distance 0.
"""
import logging
from dataclasses import dataclass, field, replace

from .exceptions import TreeError, LayoutError, DomainError
from .ingest import Sentence

logger = logging.getLogger(__name__)

PUNCT = 'PUNCT'


@dataclass(frozen=True)
class LengthPolicy:
    """Which words count towards constituent and dependency lengths"""
    count_punct: bool = True

    def project(self, tree):
        """Drop punctuation that only governs punctuation when punctuation does not count.

        Positions are renumbered so that the projected tree can be measured
        with plain position arithmetic. PUNCT tokens governing real words
        are kept as words.
        """
        if self.count_punct:
            return tree

        punct_only = {}
        for position in reversed(tree.preorder):
            punct_only[position] = (
                tree.sentence.token(position).upos == PUNCT
                and all(punct_only[child] for child in tree.children[position])
            )
        if punct_only[tree.root] or not any(punct_only.values()):
            return tree

        renumber = {}
        for token in tree.sentence.tokens:
            if not punct_only[token.position]:
                renumber[token.position] = len(renumber) + 1
        tokens = tuple(
            replace(token, position=renumber[token.position], head=renumber.get(token.head, 0))
            for token in tree.sentence.tokens
            if token.position in renumber
        )
        projected = Sentence(
            sent_id=tree.sentence.sent_id,
            tokens=tokens,
            source_line=tree.sentence.source_line,
            metadata=tree.sentence.metadata,
        )
        logger.debug(f"{tree.sentence.sent_id}: dropped {len(tree.sentence) - len(tokens)} punctuation tokens")
        return build_tree(projected)


@dataclass(frozen=True)
class DepTree:
    sentence: Sentence
    root: int
    # children[p] lists the dependents of p in surface order; children[0] == (root,)
    children: tuple
    # spans[p] == (leftmost, rightmost, size) of the subtree yield of p
    spans: tuple = field(repr=False)
    preorder: tuple = field(repr=False)

    @property
    def n_words(self):
        return len(self.sentence)

    @property
    def heads(self):
        return self.sentence.heads

    @property
    def root_token(self):
        return self.sentence.token(self.root)


def build_tree(sentence):
    """Check the head structure of ``sentence`` and index it as a tree"""
    heads = sentence.heads
    n = len(heads)

    for position, head in enumerate(heads, start=1):
        if head > n:
            raise TreeError(TreeError.DANGLING_HEAD, f"{sentence.sent_id}: token {position} has head {head} > {n}")

    # 0 = unseen, 1 = on the current walk, 2 = known to reach the root
    state = [0] * (n + 1)
    for start in range(1, n + 1):
        walk = []
        node = start
        while node != 0 and state[node] == 0:
            state[node] = 1
            walk.append(node)
            node = heads[node - 1]
        if node != 0 and state[node] == 1:
            raise TreeError(TreeError.CYCLIC, f"{sentence.sent_id}: cycle through token {node}")
        for visited in walk:
            state[visited] = 2

    roots = [position for position, head in enumerate(heads, start=1) if head == 0]
    if len(roots) != 1:
        raise TreeError(TreeError.BAD_ROOT, f"{sentence.sent_id}: {len(roots)} tokens with HEAD = 0")

    children = [[] for _ in range(n + 1)]
    for position, head in enumerate(heads, start=1):
        children[head].append(position)

    order = []
    stack = [roots[0]]
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(children[node])

    spans = [None] * (n + 1)
    for node in reversed(order):
        lo = hi = node
        size = 1
        for child in children[node]:
            child_lo, child_hi, child_size = spans[child]
            lo = min(lo, child_lo)
            hi = max(hi, child_hi)
            size += child_size
        spans[node] = (lo, hi, size)
    spans[0] = (1, n, n)

    return DepTree(
        sentence=sentence,
        root=roots[0],
        children=tuple(tuple(c) for c in children),
        spans=tuple(spans),
        preorder=tuple(order),
    )


def is_projective(tree):
    """True iff every subtree yield is a contiguous run of words.

    For a tree this is the same as requiring that every word strictly
    between a head and its dependent descends from that head.
    """
    return all(size == hi - lo + 1 for lo, hi, size in tree.spans[1:])


@dataclass(frozen=True)
class Constituent:
    head_position: int
    start: int
    end: int
    length: int
    right_offset: int
    deprel: str = '_'
    # False for a punctuation head that does not count: its arc to the verb is not measured
    counts_arc: bool = True

    def __post_init__(self):
        if not self.start <= self.head_position <= self.end:
            raise LayoutError(f"constituent head {self.head_position} outside {self.start}..{self.end}")
        limit = self.length if self.counts_arc else self.length + 1
        if not 1 <= self.length <= self.size or not 0 <= self.right_offset < limit:
            raise LayoutError(f"bad constituent length {self.length} / right offset {self.right_offset}")

    @property
    def members(self):
        return range(self.start, self.end + 1)

    @property
    def size(self):
        """Positions spanned, counted or not"""
        return self.end - self.start + 1


@dataclass(frozen=True)
class ClauseLayout:
    """Preverbal constituents (in surface order), the verb, and the fixed suffix after it"""
    sent_id: str
    heads: tuple
    preverbal: tuple
    verb_position: int
    postverbal_suffix: range
    upos: tuple = ()
    length_policy: LengthPolicy = LengthPolicy()

    def __post_init__(self):
        if self.upos and len(self.upos) != len(self.heads):
            raise LayoutError(f"{self.sent_id}: {len(self.upos)} UPOS tags for {len(self.heads)} words")
        if not self.length_policy.count_punct and not self.upos:
            raise LayoutError(f"{self.sent_id}: leaving punctuation out needs the UPOS tags")
        cursor = 1
        for constituent in self.preverbal:
            if constituent.start != cursor:
                raise LayoutError(f"{self.sent_id}: preverbal constituents do not tile 1..{self.verb_position - 1}")
            cursor = constituent.end + 1
        if cursor != self.verb_position:
            raise LayoutError(f"{self.sent_id}: preverbal constituents end at {cursor - 1}, verb at {self.verb_position}")

    @classmethod
    def rebuild(cls, sent_id, heads, verb_position, lengths, right_offsets, deprels, upos=(), length_policy=None):
        """Restore a layout from its persisted per-constituent columns.

        When punctuation does not count, lengths say nothing about spans, so
        the spans are recovered from ``heads``.
        """
        policy = length_policy or LengthPolicy()
        upos = tuple(upos)
        if policy.count_punct:
            spans = []
            start = 1
            for length, offset in zip(lengths, right_offsets):
                end = start + length - 1
                spans.append((end - offset, start, end))
                start = end + 1
        else:
            spans = _preverbal_spans(heads, verb_position, sent_id)
            if len(spans) != len(lengths):
                raise LayoutError(f"{sent_id}: {len(lengths)} lengths for {len(spans)} preverbal constituents")

        preverbal = tuple(
            Constituent(
                head_position=head, start=start, end=end, length=length, right_offset=offset, deprel=deprel,
                counts_arc=policy.count_punct or upos[head - 1] != PUNCT,
            )
            for (head, start, end), length, offset, deprel in zip(spans, lengths, right_offsets, deprels)
        )
        return cls(
            sent_id=sent_id,
            heads=tuple(heads),
            preverbal=preverbal,
            verb_position=verb_position,
            postverbal_suffix=range(verb_position + 1, len(heads) + 1),
            upos=upos,
            length_policy=policy,
        )

    @property
    def n_constituents(self):
        return len(self.preverbal)

    @property
    def n_words(self):
        """Words that count under the length policy"""
        if self.length_policy.count_punct:
            return len(self.heads)
        return sum(1 for tag in self.upos if tag != PUNCT)

    @property
    def lengths(self):
        return tuple(c.length for c in self.preverbal)

    @property
    def right_offsets(self):
        return tuple(c.right_offset for c in self.preverbal)

    @property
    def deprels(self):
        return tuple(c.deprel for c in self.preverbal)

    @property
    def identity(self):
        return tuple(range(len(self.preverbal)))


def _preverbal_spans(heads, verb_position, sent_id=''):
    """``(head, start, end)`` of each verb dependent subtree before the verb, in surface order"""
    spans = []
    for position in range(1, verb_position):
        node = position
        for _ in range(len(heads)):
            if heads[node - 1] in (verb_position, 0):
                break
            node = heads[node - 1]
        if heads[node - 1] != verb_position or node > verb_position:
            raise LayoutError(f"{sent_id}: word {position} does not hang from a preverbal dependent of the verb")
        if spans and spans[-1][0] == node:
            spans[-1] = (node, spans[-1][1], position)
        else:
            spans.append((node, position, position))
    return spans


def _count_words(upos, lo, hi, policy):
    """Counted words among positions ``lo..hi``"""
    if policy.count_punct:
        return max(0, hi - lo + 1)
    return sum(1 for position in range(lo, hi + 1) if upos[position - 1] != PUNCT)


def extract_layout(tree, policy=None):
    """Split a projective tree into permutable preverbal constituents and a fixed remainder"""
    policy = policy or LengthPolicy()
    tree = policy.project(tree)
    verb = tree.root
    upos = tree.sentence.upos

    preverbal = []
    for dependent in tree.children[verb]:
        lo, hi, size = tree.spans[dependent]
        if size != hi - lo + 1:
            raise LayoutError(f"{tree.sentence.sent_id}: subtree of {dependent} is not contiguous")
        if hi < verb:
            preverbal.append(Constituent(
                head_position=dependent, start=lo, end=hi,
                length=_count_words(upos, lo, hi, policy),
                right_offset=_count_words(upos, dependent + 1, hi, policy),
                deprel=tree.sentence.token(dependent).deprel,
                counts_arc=policy.count_punct or upos[dependent - 1] != PUNCT,
            ))
        elif lo < verb:
            raise LayoutError(f"{tree.sentence.sent_id}: subtree of {dependent} straddles the verb")

    return ClauseLayout(
        sent_id=tree.sentence.sent_id,
        heads=tree.heads,
        preverbal=tuple(preverbal),
        verb_position=verb,
        postverbal_suffix=range(verb + 1, tree.n_words + 1),
        upos=tuple(upos),
        length_policy=policy,
    )


def _excludes_punct(policy, upos):
    if policy is None or policy.count_punct:
        return False
    if upos is None:
        raise DomainError("leaving punctuation out needs the UPOS of every word")
    return True


def arc_length(a, b, policy=None, upos=None):
    """Number of (counted) words strictly between positions ``a`` and ``b``"""
    if a == b:
        raise DomainError(f"arc_length needs two distinct positions, got {a} twice")
    lo, hi = min(a, b), max(a, b)
    if not _excludes_punct(policy, upos):
        return hi - lo - 1
    return sum(1 for position in range(lo + 1, hi) if upos[position - 1] != PUNCT)


def check_permutation(order, n):
    if sorted(order) != list(range(n)):
        raise DomainError(f"{list(order)} is not a permutation of 0..{n - 1}")


def root_arc_total(layout, order):
    """Sum of verb-to-constituent-head lengths when constituents are placed in ``order``"""
    check_permutation(order, layout.n_constituents)
    total = 0
    between = 0
    for index in reversed(order):
        constituent = layout.preverbal[index]
        if constituent.counts_arc:
            total += constituent.right_offset + between
        between += constituent.length
    return total


def total_dependency_length(heads, policy=None, upos=None):
    """Sum of arc lengths over every non-root word.

    ``heads[i]`` is the head of the word at position ``i + 1`` (0 for the
    root). With punctuation excluded, arcs whose dependent is PUNCT are not
    counted and PUNCT words do not count as intervening.
    """
    if not _excludes_punct(policy, upos):
        return sum(abs(head - dependent) - 1 for dependent, head in enumerate(heads, start=1) if head)

    words_before = [0]
    for tag in upos:
        words_before.append(words_before[-1] + (tag != PUNCT))
    total = 0
    for dependent, head in enumerate(heads, start=1):
        if not head or upos[dependent - 1] == PUNCT:
            continue
        lo, hi = min(head, dependent), max(head, dependent)
        total += words_before[hi - 1] - words_before[lo]
    return total
