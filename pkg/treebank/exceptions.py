class TreebankError(Exception):
    """Base class for treebank ingestion and tree errors"""


class ConlluParseError(TreebankError):
    """A CoNLL-U line could not be parsed"""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = f"{source or '<stream>'}:{line}" if line is not None else (source or '<stream>')
        super().__init__(f"{where}: {message}")


class ConlluStructureError(ConlluParseError):
    """A sentence block is well-formed line by line but inconsistent as a whole"""


class TreeError(TreebankError):
    """A sentence does not form a rooted dependency tree.

    ``reason`` is machine-readable and ends up in the skiplog.
    """
    BAD_ROOT = 'bad-root'
    CYCLIC = 'cyclic'
    DANGLING_HEAD = 'dangling-head'

    def __init__(self, reason, message=''):
        self.reason = reason
        super().__init__(f"{reason}: {message}" if message else reason)


class LayoutError(TreebankError):
    """The clause layout cannot be extracted (non-projective root dependent)"""


class DomainError(TreebankError, ValueError):
    """An operation was called outside its domain"""
