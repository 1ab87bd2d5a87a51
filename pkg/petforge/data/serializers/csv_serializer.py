"""
CSV serializer for training logs and reports.
"""

import csv
import os
from typing import Any, List, Sequence, Tuple

from petforge.core.errors import CorpusIOError, FormatError


class CSVSerializer:
    """Header row plus data rows; floats are written with repr precision."""

    @staticmethod
    def save_to_file(file_path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]):
        CSVSerializer._write(file_path, header, rows, mode='w')

    @staticmethod
    def append_rows(file_path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]):
        """Append rows, writing the header first when the file is new or empty."""
        CSVSerializer._write(file_path, header, rows, mode='a')

    @staticmethod
    def load_from_file(file_path: str) -> Tuple[List[str], List[List[str]]]:
        try:
            with open(file_path, 'r', encoding='utf-8', newline='') as f:
                table = list(csv.reader(f))
        except OSError as e:
            raise CorpusIOError(f"cannot read {file_path}: {e}", path=file_path) from e
        if not table:
            raise FormatError(f"{file_path} has no header row")
        return table[0], table[1:]

    @staticmethod
    def truncate_after(file_path: str, column: str, last_value: int):
        """Drop rows whose integer `column` exceeds `last_value` (used when resuming)."""
        if not os.path.exists(file_path):
            return
        header, rows = CSVSerializer.load_from_file(file_path)
        index = header.index(column)
        kept = [row for row in rows if int(row[index]) <= last_value]
        CSVSerializer.save_to_file(file_path, header, kept)

    @staticmethod
    def _write(file_path: str, header, rows, mode: str):
        directory = os.path.dirname(file_path)
        try:
            if directory:
                os.makedirs(directory, exist_ok=True)
            fresh = mode == 'w' or not os.path.exists(file_path) or os.path.getsize(file_path) == 0
            with open(file_path, mode, encoding='utf-8', newline='') as f:
                writer = csv.writer(f, lineterminator='\n')
                if fresh:
                    writer.writerow(header)
                writer.writerows(rows)
        except OSError as e:
            raise CorpusIOError(f"cannot write {file_path}: {e}", path=file_path) from e
