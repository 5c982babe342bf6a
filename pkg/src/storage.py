import csv
import io
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, List, Optional, Tuple, Union

from filelock import FileLock, Timeout

from src.config import FLOAT_DIGITS, LOCK_TIMEOUT
from src.exceptions import StorageError
from src.models import ResultTable


def _format_cell(value: Any) -> str:
    """Text form of one CSV cell; floats keep every significant digit."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return format(value, f".{FLOAT_DIGITS}g")
    return str(value)


def _parse_cell(text: str) -> Any:
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _json_value(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class ResultWriter:
    """Writes command results to CSV or JSON with file locking for concurrent runs.

    The table is rendered in memory, written to a temporary sibling and moved over the
    target with an atomic replace while the lock is held.

    Attributes:
        file_path: Destination file
        lock_path: Path to the lock file for synchronization
        lock_timeout: Maximum time to wait for file lock acquisition
    """

    def __init__(self, file_path: Union[str, Path], lock_timeout: float = LOCK_TIMEOUT):
        self.file_path = Path(file_path)
        self.lock_path = Path(str(self.file_path) + ".lock")
        self.lock_timeout = lock_timeout
        self._lock = FileLock(self.lock_path, timeout=self.lock_timeout)

    @staticmethod
    def render(table: ResultTable, fmt: str) -> str:
        """Serialize a table; identical tables give identical text."""
        if fmt == "csv":
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(table.header)
            for row in table.rows:
                writer.writerow([_format_cell(cell) for cell in row])
            return buffer.getvalue()
        if fmt == "json":
            document = table.to_dict()
            document["data"] = [
                {key: _json_value(value) for key, value in record.items()}
                for record in document["data"]
            ]
            document["meta"] = {key: _json_value(value) for key, value in document["meta"].items()}
            return json.dumps(document, indent=2, sort_keys=False, allow_nan=False) + "\n"
        raise StorageError(f"unsupported output format {fmt!r}")

    def write(self, table: ResultTable, fmt: str) -> None:
        """Write the table to file_path.

        Raises:
            StorageError: If the lock cannot be acquired or the file cannot be written
        """
        text = self.render(table, fmt)
        try:
            with self._lock:
                self.file_path.parent.mkdir(parents=True, exist_ok=True)
                temp_path = self.file_path.with_name(self.file_path.name + ".tmp")
                with open(temp_path, "w", encoding="utf-8", newline="") as f:
                    f.write(text)
                temp_path.replace(self.file_path)
        except Timeout as e:
            raise StorageError(f"Failed to acquire file lock within {self.lock_timeout}s") from e
        except OSError as e:
            raise StorageError(f"Failed to write result file: {e}") from e


def read_table(file_path: Union[str, Path], fmt: Optional[str] = None) -> ResultTable:
    """Parse a file produced by ResultWriter back into a ResultTable.

    The format defaults to the file suffix. CSV cells come back as int, float, bool,
    str or None; JSON keeps its native types and the meta block.
    """
    path = Path(file_path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            text = f.read()
    except OSError as e:
        raise StorageError(f"Failed to read result file: {e}") from e

    if fmt == "csv":
        records = list(csv.reader(io.StringIO(text)))
        if not records:
            raise StorageError(f"{path} is empty")
        header = tuple(records[0])
        rows: List[Tuple[Any, ...]] = [tuple(_parse_cell(cell) for cell in r) for r in records[1:]]
        return ResultTable(header=header, rows=rows)
    if fmt == "json":
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise StorageError(f"Invalid JSON in result file: {e}") from e
        data = document.get("data", [])
        header = tuple(data[0].keys()) if data else ()
        rows = [tuple(record[key] for key in header) for record in data]
        return ResultTable(header=header, rows=rows, meta=document.get("meta", {}))
    raise StorageError(f"unsupported output format {fmt!r}")
