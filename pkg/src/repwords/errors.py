"""Exception hierarchy shared across the pipeline.

DataError covers problems with user-supplied inputs (exit code 2 at the
CLI); anything else escaping a stage is an internal error (exit code 3).
"""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class DataError(PipelineError):
    """Invalid or inconsistent input data."""


class DuplicateDocumentError(DataError):
    def __init__(self, doc_id: str):
        super().__init__(f"duplicate document id: {doc_id!r}")
        self.doc_id = doc_id


class UnknownTermError(DataError):
    def __init__(self, term_id: int):
        super().__init__(f"term id {term_id} is not in the vocabulary")
        self.term_id = term_id


class UnknownDocumentError(DataError):
    def __init__(self, doc_id: str):
        super().__init__(f"unknown document id: {doc_id!r}")
        self.doc_id = doc_id


class UnsampleableDocumentError(DataError):
    """Document has no in-vocabulary terms to build a distribution from."""

    def __init__(self, doc_id: str):
        super().__init__(f"document {doc_id!r} has no in-vocabulary terms")
        self.doc_id = doc_id


class MisalignedAttentionError(DataError):
    def __init__(self, doc_id: str, doc_len: int, att_len: int):
        super().__init__(
            f"attention record for {doc_id!r} has {att_len} weights "
            f"but the document has {doc_len} words"
        )
        self.doc_id = doc_id
