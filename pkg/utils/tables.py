"""
TSV/CSV persistence for run artifacts.

Everything is written with a header row, UTF-8, LF line endings and a
fixed float format so identical inputs give identical bytes.
"""
import logging

import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.10g'


class TableError(Exception):
    """A persisted table is missing or has a malformed row"""

    def __init__(self, path, message, row=None):
        self.path = path
        self.row = row
        where = f"{path}, row {row}" if row is not None else str(path)
        super().__init__(f"{where}: {message}")


def write_table(path, rows, columns, sep=','):
    frame = pd.DataFrame(list(rows), columns=list(columns))
    frame.to_csv(path, sep=sep, index=False, lineterminator='\n', float_format=FLOAT_FORMAT, encoding='utf-8')
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return len(frame)


def read_table(path, columns, converters=None, sep=','):
    """Read a table and convert each row; returns a list of dicts.

    Row numbers in errors count the header as row 1, like a text editor.
    """
    converters = converters or {}
    try:
        frame = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False, encoding='utf-8')
    except FileNotFoundError as e:
        raise TableError(path, "no such file") from e
    except pd.errors.ParserError as e:
        raise TableError(path, str(e)) from e
    except pd.errors.EmptyDataError as e:
        raise TableError(path, "empty file") from e

    missing = [name for name in columns if name not in frame.columns]
    if missing:
        raise TableError(path, f"missing columns {missing}")

    records = []
    for offset, row in enumerate(frame[list(columns)].itertuples(index=False, name=None)):
        record = {}
        for name, value in zip(columns, row):
            if pd.isna(value) or value == '':
                raise TableError(path, f"empty {name!r} field", row=offset + 2)
            try:
                record[name] = converters.get(name, str)(value)
            except (ValueError, TypeError) as e:
                raise TableError(path, f"bad {name!r} value {value!r}: {e}", row=offset + 2) from e
        records.append(record)
    return records


def join_list(values):
    return '-'.join(str(v) for v in values)


def split_ints(text):
    return tuple(int(v) for v in text.split('-'))


def split_strs(text):
    return tuple(text.split('-'))


def flag(text):
    if text not in ('0', '1'):
        raise ValueError("expected 0 or 1")
    return text == '1'
