"""
CoNLL-U ingestion and corpus filtering.

Sentences are read block by block; multiword-token lines (``1-2``) and
empty nodes (``5.1``) are kept aside so the sentence can be written back,
but only syntactic words enter the token list and the tree.
"""
import logging
import re
from dataclasses import dataclass, field

from conllu.parser import parse_token_and_metadata
from conllu.models import Token as ConlluToken, TokenList

from .exceptions import ConlluParseError, ConlluStructureError, TreeError, LayoutError

logger = logging.getLogger(__name__)

FIELDS = ('id', 'form', 'lemma', 'upos', 'xpos', 'feats', 'head', 'deprel', 'deps', 'misc')

WORD_ID = re.compile(r'[1-9]\d*')
RANGE_ID = re.compile(r'\d+-\d+')
EMPTY_ID = re.compile(r'\d+\.\d+')
HEAD = re.compile(r'\d+')

# Skip reasons written to the skiplog.
SKIP_DUPLICATE = 'duplicate-sent-id'
SKIP_ROOT_UPOS = 'root-not-verb'
SKIP_NON_PROJECTIVE = 'non-projective'
SKIP_STRADDLING = 'straddling-constituent'
SKIP_TOO_FEW = 'too-few-preverbal'


@dataclass(frozen=True, slots=True)
class Token:
    position: int
    form: str
    lemma: str
    upos: str
    head: int
    deprel: str
    xpos: str = '_'
    feats: str = '_'
    deps: str = '_'
    misc: str = '_'

    def __post_init__(self):
        if self.position < 1:
            raise ValueError(f"token position must be >= 1, got {self.position}")
        if self.head < 0:
            raise ValueError(f"token head must be >= 0, got {self.head}")
        if self.head == self.position:
            raise ValueError(f"token {self.position} is its own head")

    def as_row(self):
        return (str(self.position), self.form, self.lemma, self.upos, self.xpos,
                self.feats, str(self.head), self.deprel, self.deps, self.misc)


@dataclass(frozen=True)
class Sentence:
    """An ordered list of syntactic words with its comment metadata.

    ``extra_lines`` holds multiword-token and empty-node rows as
    ``(words_before, columns)`` so serialization can put them back in place.
    """
    sent_id: str
    tokens: tuple
    source_line: int = 0
    metadata: tuple = ()
    extra_lines: tuple = field(default=(), compare=False)

    def __post_init__(self):
        for expected, token in enumerate(self.tokens, start=1):
            if token.position != expected:
                raise ConlluStructureError(
                    f"sentence {self.sent_id}: token positions must run 1..n, "
                    f"found {token.position} at index {expected}",
                    line=self.source_line,
                )

    def __len__(self):
        return len(self.tokens)

    @property
    def heads(self):
        return tuple(token.head for token in self.tokens)

    @property
    def upos(self):
        return tuple(token.upos for token in self.tokens)

    def token(self, position):
        return self.tokens[position - 1]


@dataclass(frozen=True)
class FilterPolicy:
    min_preverbal: int = 2
    require_projective: bool = True
    root_upos_allowed: frozenset = frozenset({'VERB'})
    min_corpus_sentences: int = 2000

    def __post_init__(self):
        if self.min_preverbal < 1:
            raise ValueError(f"min_preverbal must be >= 1, got {self.min_preverbal}")
        object.__setattr__(self, 'root_upos_allowed', frozenset(self.root_upos_allowed))


def iter_conllu(stream, source='<stream>'):
    """Yield one Sentence per blank-line separated block of ``stream``."""
    block = []
    block_index = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip('\r\n')
        if lineno == 1:
            line = line.lstrip("\ufeff")
        if not line.strip():
            if block:
                block_index += 1
                yield _parse_block(block, source, block_index)
                block = []
            continue
        block.append((lineno, line))
    if block:
        block_index += 1
        yield _parse_block(block, source, block_index)


def parse_conllu(stream, source='<stream>'):
    """Parse CoNLL-U text into a list of Sentences"""
    return list(iter_conllu(stream, source=source))


def _parse_block(block, source, block_index):
    comments = [text for _, text in block if text.startswith('#')]
    metadata = {}
    if comments:
        metadata = dict(parse_token_and_metadata('\n'.join(comments)).metadata)

    tokens = []
    extra_lines = []
    for lineno, text in block:
        if text.startswith('#'):
            continue
        columns = text.split('\t')
        if len(columns) != len(FIELDS):
            raise ConlluParseError(
                f"expected {len(FIELDS)} tab-separated columns, found {len(columns)}",
                line=lineno, source=source,
            )
        token_id = columns[0]
        if RANGE_ID.fullmatch(token_id) or EMPTY_ID.fullmatch(token_id):
            extra_lines.append((len(tokens), tuple(columns)))
            continue
        if not WORD_ID.fullmatch(token_id):
            raise ConlluParseError(f"malformed ID field {token_id!r}", line=lineno, source=source)
        if not HEAD.fullmatch(columns[6]):
            raise ConlluParseError(f"malformed HEAD field {columns[6]!r}", line=lineno, source=source)

        position = int(token_id)
        if position != len(tokens) + 1:
            raise ConlluStructureError(
                f"word ID {position} out of sequence (expected {len(tokens) + 1})",
                line=lineno, source=source,
            )
        _, form, lemma, upos, xpos, feats, head, deprel, deps, misc = columns
        try:
            tokens.append(Token(
                position=position, form=form, lemma=lemma, upos=upos, head=int(head),
                deprel=deprel, xpos=xpos, feats=feats, deps=deps, misc=misc,
            ))
        except ValueError as e:
            raise ConlluParseError(str(e), line=lineno, source=source) from e

    first_line = block[0][0]
    if not tokens:
        raise ConlluStructureError("sentence block has no syntactic words", line=first_line, source=source)
    sent_id = metadata.get('sent_id') or f"{source}:{block_index}"
    return Sentence(
        sent_id=sent_id,
        tokens=tuple(tokens),
        source_line=first_line,
        metadata=tuple(metadata.items()),
        extra_lines=tuple(extra_lines),
    )


def serialize_conllu(sentences):
    """Write Sentences back to CoNLL-U text"""
    chunks = []
    for sentence in sentences:
        metadata = dict(sentence.metadata)
        if metadata.get('sent_id') != sentence.sent_id:
            metadata = {'sent_id': sentence.sent_id, **{k: v for k, v in metadata.items() if k != 'sent_id'}}

        extras = {}
        for words_before, columns in sentence.extra_lines:
            extras.setdefault(words_before, []).append(columns)

        rows = list(extras.get(0, []))
        for token in sentence.tokens:
            rows.append(token.as_row())
            rows.extend(extras.get(token.position, []))

        tokenlist = TokenList([ConlluToken(zip(FIELDS, row)) for row in rows], metadata)
        chunks.append(tokenlist.serialize())
    return ''.join(chunks)


def filter_corpus(sentences, policy, length_policy=None):
    """Split sentences into those the analysis can use and a skiplog.

    Returns ``(kept, skiplog)`` where skiplog is a list of
    ``(sent_id, reason)``; every input sentence lands in exactly one of them.
    """
    from .trees import LengthPolicy

    length_policy = length_policy or LengthPolicy()
    kept = []
    skiplog = []
    seen = set()

    for sentence in sentences:
        if sentence.sent_id in seen:
            reason = SKIP_DUPLICATE
        else:
            seen.add(sentence.sent_id)
            reason = _skip_reason(sentence, policy, length_policy)

        if reason is None:
            kept.append(sentence)
        else:
            logger.debug(f"Skipping {sentence.sent_id}: {reason}")
            skiplog.append((sentence.sent_id, reason))

    logger.info(f"Kept {len(kept)} of {len(kept) + len(skiplog)} sentences")
    if len(kept) < policy.min_corpus_sentences:
        logger.warning(
            f"Only {len(kept)} qualifying sentences (advisory minimum is "
            f"{policy.min_corpus_sentences}); continuing"
        )
    return kept, skiplog


def _skip_reason(sentence, policy, length_policy):
    from .trees import build_tree, is_projective, extract_layout

    try:
        tree = length_policy.project(build_tree(sentence))
    except TreeError as e:
        return e.reason

    if tree.root_token.upos not in policy.root_upos_allowed:
        return SKIP_ROOT_UPOS
    if policy.require_projective and not is_projective(tree):
        return SKIP_NON_PROJECTIVE

    try:
        layout = extract_layout(tree, length_policy)
    except LayoutError:
        return SKIP_STRADDLING
    if len(layout.preverbal) < policy.min_preverbal:
        return SKIP_TOO_FEW
    return None
