##Handling the exceptions
import sys
from typing import Iterable

from src.logger import logging


class CustomException(Exception):
    """Wraps an unexpected failure with the script name and line number it came from."""

    def __init__(self, error_message, error_detail: sys = sys):
        super().__init__(error_message)
        self.error_message = self._error_message_detail(error_message, error_detail)

    @staticmethod
    def _error_message_detail(error, error_detail: sys):
        _, _, exc_tb = error_detail.exc_info()
        if exc_tb is None:
            return str(error)
        while exc_tb.tb_next is not None:
            exc_tb = exc_tb.tb_next
        file_name = exc_tb.tb_frame.f_code.co_filename
        error_message = (
            "Error occured in py script name [{0}] line number [{1}] with the error message : [{2}]"
            .format(file_name, exc_tb.tb_lineno, str(error))
        )
        return error_message

    def __str__(self):
        return self.error_message


# ===== DOMAIN ERRORS =====#
# Raised as-is by the components; the API and CLI map them to status and exit codes.

class HamSearchError(Exception):
    """Base class for every expected, user-facing failure."""


class CodeParseError(HamSearchError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class RadiusError(HamSearchError):
    pass


class SampleError(HamSearchError):
    pass


class PartitionError(HamSearchError):
    pass


class CodesFileError(HamSearchError):
    def __init__(self, line_numbers: Iterable[int], reasons: Iterable[str] = ()):
        self.line_numbers = sorted(set(line_numbers))
        self.reasons = list(reasons)
        lines = ", ".join(str(n) for n in self.line_numbers)
        detail = f": {'; '.join(self.reasons)}" if self.reasons else ""
        super().__init__(f"malformed codes at line(s) {lines}{detail}")


class DuplicateDocumentError(HamSearchError):
    def __init__(self, doc_id: int):
        super().__init__(f"document id {doc_id} is already indexed")
        self.doc_id = doc_id


class CodeMismatchError(HamSearchError):
    def __init__(self, doc_id: int):
        super().__init__(f"document {doc_id}: short code does not match the extractor applied to its long code")
        self.doc_id = doc_id


class InvalidQueryError(HamSearchError):
    pass


class ModeUnavailableError(HamSearchError):
    pass


class IndexFormatError(HamSearchError):
    pass


class IndexVersionError(IndexFormatError):
    pass


class IndexTruncatedError(IndexFormatError):
    pass


class IndexChecksumError(IndexFormatError):
    pass


class EvaluationError(HamSearchError):
    pass


class ConfigError(HamSearchError):
    pass


class ConflictingFlagsError(HamSearchError):
    pass


if __name__ == "__main__":
    try:
        a = 1 / 0
    except Exception as e:
        logging.info("Divide by Zero")
        raise CustomException(e, sys)
