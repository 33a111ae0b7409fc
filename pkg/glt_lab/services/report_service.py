"""
Report Service
==============

This module provides `ReportService`, which writes run results to disk: a CSV
table for plotting (one row per grid point, 17 significant digits) and a JSON
document with the structured verdicts. Files are written to a temporary path
and then moved over the target, so an interrupted run never leaves a
half-written report behind.
"""

import csv
import io
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from ..models.reports import RunReport

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"


def format_cell(value: Any) -> str:
    """Floats with 17 significant digits; everything else as text."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


class ReportService:
    """
    Provides methods for writing CSV tables and JSON reports.
    """

    def render_csv(self, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        """
        Renders a table as CSV text.

        Raises:
            ValueError: If a row does not match the header length.
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"Row {list(row)} does not match header {list(header)}")
            writer.writerow([format_cell(v) for v in row])
        return buffer.getvalue()

    def write_csv(self, filepath: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        """
        Writes a CSV table.

        Returns:
            The path that was written.

        Raises:
            IOError: If file I/O fails.
        """
        return self._write_text(filepath, self.render_csv(header, rows))

    def write_json(self, filepath: str, data: Dict[str, Any]) -> str:
        """
        Writes a JSON document (indented, sorted keys).

        Raises:
            IOError: If file I/O fails.
        """
        return self._write_text(filepath, json.dumps(data, indent=2, sort_keys=True) + "\n")

    def read_json(self, filepath: str) -> Dict[str, Any]:
        """
        Reads a JSON report.

        Raises:
            ValueError: If the file is not valid JSON.
            FileNotFoundError: If the file does not exist.
        """
        try:
            with open(filepath, "r", encoding="utf-8") as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"Failed to parse report {filepath}: {e}")

    def write_run(self, report: RunReport, output_dir: str) -> List[str]:
        """
        Writes `<output_dir>/report.json` and, when the report carries a
        table, `<output_dir>/<experiment>.csv`.

        Returns:
            The paths that were written.
        """
        Path(output_dir).mkdir(parents=True, exist_ok=True)
        written = []
        table: Optional[Dict[str, Any]] = report.results.get("table")
        if table is not None:
            csv_path = os.path.join(output_dir, f"{report.experiment}.csv")
            written.append(self.write_csv(csv_path, table["header"], table["rows"]))
        written.append(self.write_json(os.path.join(output_dir, REPORT_FILE), report.to_dict()))
        logger.info(f"Wrote {', '.join(written)}")
        return written

    def _write_text(self, filepath: str, text: str) -> str:
        temp_filepath = filepath + ".tmp"

        try:
            with open(temp_filepath, "w", encoding="utf-8", newline="") as f_out:
                f_out.write(text)
            os.replace(temp_filepath, filepath)
            return filepath

        except Exception as e:
            raise IOError(f"Failed to write {filepath}: {e}")
        finally:
            if os.path.exists(temp_filepath):
                try:
                    os.remove(temp_filepath)
                except OSError:
                    pass
