"""Report envelope and writers for machine-readable command output.

Usage example:
    writer = get_writer("csv")   # or "json", "lines"
    writer.write(envelope, sys.stdout)
"""
import csv
import json
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, TextIO

from . import __version__
from .errors import ArgumentError


@dataclass
class ReportEnvelope:
    """Self-describing command result: re-running ``parameters`` with
    ``seeds`` reproduces ``result`` exactly."""
    command: str
    parameters: Dict[str, Any]
    result: Any
    seeds: List[Any] = field(default_factory=list)
    modes: Dict[str, Any] = field(default_factory=dict)
    version: str = __version__

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class BaseReportWriter(ABC):
    """Abstract base class for all report writers"""

    @abstractmethod
    def write(self, envelope: ReportEnvelope, stream: TextIO):
        """Serialize the envelope to the stream"""
        pass

    @staticmethod
    def _rows(envelope: ReportEnvelope) -> List[Dict[str, Any]]:
        """Tabular payload: the 'rows' entry, a list of dicts, or one flat dict."""
        result = envelope.result
        if isinstance(result, dict) and 'rows' in result:
            return result['rows']
        if isinstance(result, list) and all(isinstance(r, dict) for r in result):
            return result
        if isinstance(result, dict) and not any(isinstance(v, (dict, list)) for v in result.values()):
            return [result]
        raise ArgumentError(f"'{envelope.command}' output is not tabular")


class JsonReportWriter(BaseReportWriter):
    """Writes the whole envelope as one JSON document"""

    def __init__(self, indent: Optional[int] = 2):
        self.indent = indent

    def write(self, envelope: ReportEnvelope, stream: TextIO):
        json.dump(envelope.to_dict(), stream, indent=self.indent, sort_keys=False)
        stream.write("\n")


class CsvReportWriter(BaseReportWriter):
    """Writes the tabular payload with a header row, LF line endings"""

    def write(self, envelope: ReportEnvelope, stream: TextIO):
        rows = self._rows(envelope)
        if not rows:
            return
        writer = csv.DictWriter(stream, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


class LinesReportWriter(BaseReportWriter):
    """Newline-delimited values, for list payloads such as samples"""

    def write(self, envelope: ReportEnvelope, stream: TextIO):
        values = envelope.result.get('values') if isinstance(envelope.result, dict) else envelope.result
        if not isinstance(values, list):
            raise ArgumentError(f"'{envelope.command}' output is not a list of values")
        for v in values:
            stream.write(f"{v}\n")


WRITERS = {
    'json': JsonReportWriter,
    'csv': CsvReportWriter,
    'lines': LinesReportWriter,
}


def get_writer(fmt: str) -> BaseReportWriter:
    try:
        return WRITERS[fmt]()
    except KeyError:
        raise ArgumentError(f"unknown output format '{fmt}'; expected one of {', '.join(WRITERS)}")
