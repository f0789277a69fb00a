"""Reading and writing the per-run variant and layout tables"""
import logging
from itertools import groupby

from treebank.trees import ClauseLayout
from treebank.variants import Permutation, VariantRecord
from .tables import flag, join_list, read_table, split_ints, split_strs, write_table

logger = logging.getLogger(__name__)

VARIANTS_FILE = 'variants.tsv'
LAYOUTS_FILE = 'layouts.tsv'
SKIPLOG_FILE = 'skiplog.tsv'

LAYOUT_COLUMNS = ('sent_id', 'verb_position', 'lengths', 'right_offsets', 'deprels', 'heads', 'upos')

VARIANT_CONVERTERS = {
    'order': Permutation.parse,
    'is_reference': flag,
    'n_constituents': int,
    'n_words': int,
    'cl_last': int,
    'total_dl': int,
    'root_arc_dl': int,
}

LAYOUT_CONVERTERS = {
    'verb_position': int,
    'lengths': split_ints,
    'right_offsets': split_ints,
    'deprels': split_strs,
    'heads': split_ints,
    'upos': split_strs,
}


def write_variants(run_dir, groups):
    rows = [record.as_row() for group in groups for record in group]
    return write_table(run_dir / VARIANTS_FILE, rows, VariantRecord.FIELDS, sep='\t')


def read_variants(run_dir):
    rows = read_table(run_dir / VARIANTS_FILE, VariantRecord.FIELDS, VARIANT_CONVERTERS, sep='\t')
    return [VariantRecord(**row) for row in rows]


def group_variants(records):
    """Yield ``(sent_id, reference, variants)`` per reference group, in file order"""
    for sent_id, members in groupby(records, key=lambda r: r.sent_id):
        members = list(members)
        references = [r for r in members if r.is_reference]
        if len(references) != 1:
            logger.warning(f"{sent_id}: expected one reference record, found {len(references)}; group ignored")
            continue
        yield sent_id, references[0], [r for r in members if not r.is_reference]


def layout_row(layout):
    return {
        'sent_id': layout.sent_id,
        'verb_position': layout.verb_position,
        'lengths': join_list(layout.lengths),
        'right_offsets': join_list(layout.right_offsets),
        'deprels': join_list(layout.deprels),
        'heads': join_list(layout.heads),
        'upos': join_list(layout.upos),
    }


def write_layouts(run_dir, layouts):
    return write_table(run_dir / LAYOUTS_FILE, (layout_row(layout) for layout in layouts), LAYOUT_COLUMNS, sep='\t')


def read_layouts(run_dir, length_policy=None):
    rows = read_table(run_dir / LAYOUTS_FILE, LAYOUT_COLUMNS, LAYOUT_CONVERTERS, sep='\t')
    return [ClauseLayout.rebuild(**row, length_policy=length_policy) for row in rows]


def write_skiplog(run_dir, skiplog):
    rows = ({'sent_id': sent_id, 'reason': reason} for sent_id, reason in skiplog)
    return write_table(run_dir / SKIPLOG_FILE, rows, ('sent_id', 'reason'), sep='\t')
