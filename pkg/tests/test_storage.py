import json
import math
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

from filelock import FileLock

from src.exceptions import StorageError
from src.models import ResultTable, VerdictKind
from src.storage import ResultWriter, read_table


def sample_table() -> ResultTable:
    return ResultTable(
        header=("branch", "value", "a", "b", "verdict", "tau_star", "source"),
        rows=[
            ("x1", 0.0, -2.0, 5.0, VerdictKind.UNSTABLE_ALL_DELAYS, None, "GeneralClassifier"),
            ("x2", 0.1, -2.0244449, -3.9633323, "DelayDependent", 0.63103, "GeneralClassifier"),
        ],
        meta={"command": "classify", "params": {"alpha": 0.95, "q": -2.0}},
    )


class TestRender(unittest.TestCase):
    def test_csv_keeps_every_digit(self):
        table = ResultTable(header=("t", "x"), rows=[(0.0, 0.1), (0.01, 0.2)])
        self.assertEqual(
            ResultWriter.render(table, "csv"),
            "t,x\n0,0.10000000000000001\n0.01,0.20000000000000001\n",
        )

    def test_csv_cells(self):
        text = ResultWriter.render(sample_table(), "csv")
        lines = text.splitlines()
        self.assertEqual(lines[0], "branch,value,a,b,verdict,tau_star,source")
        self.assertEqual(lines[1], "x1,0,-2,5,UnstableAllDelays,,GeneralClassifier")

    def test_json_layout(self):
        document = json.loads(ResultWriter.render(sample_table(), "json"))
        self.assertEqual(document["meta"]["command"], "classify")
        self.assertEqual(document["data"][0]["verdict"], "UnstableAllDelays")
        self.assertIsNone(document["data"][0]["tau_star"])
        self.assertEqual(document["data"][1]["value"], 0.1)

    def test_json_non_finite_becomes_null(self):
        table = ResultTable(header=("tau", "mle"), rows=[(0.5, math.nan), (0.6, math.inf)])
        document = json.loads(ResultWriter.render(table, "json"))
        self.assertEqual([record["mle"] for record in document["data"]], [None, None])

    def test_unknown_format(self):
        with self.assertRaises(StorageError):
            ResultWriter.render(sample_table(), "xml")


class TestResultWriter(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = TemporaryDirectory()
        self.root = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def test_csv_roundtrip(self):
        path = self.root / "classify.csv"
        ResultWriter(path).write(sample_table(), "csv")

        loaded = read_table(path)
        self.assertEqual(loaded.header, sample_table().header)
        self.assertEqual(loaded.rows[0], ("x1", 0, -2, 5, "UnstableAllDelays", None, "GeneralClassifier"))
        self.assertEqual(loaded.rows[1][1], 0.1)
        self.assertEqual(loaded.rows[1][5], 0.63103)

    def test_json_roundtrip_keeps_meta(self):
        path = self.root / "classify.json"
        ResultWriter(path).write(sample_table(), "json")

        loaded = read_table(path)
        self.assertEqual(loaded.meta["params"], {"alpha": 0.95, "q": -2.0})
        self.assertEqual(loaded.rows[1][2], -2.0244449)

    def test_rewrite_is_byte_identical(self):
        path = self.root / "out" / "table.csv"
        ResultWriter(path).write(sample_table(), "csv")
        first = path.read_bytes()
        ResultWriter(path).write(sample_table(), "csv")
        self.assertEqual(path.read_bytes(), first)
        self.assertFalse(path.with_name("table.csv.tmp").exists())

    def test_lock_timeout_raises_storage_error(self):
        path = self.root / "locked.csv"
        writer = ResultWriter(path, lock_timeout=0.1)
        with FileLock(str(path) + ".lock"):
            with self.assertRaises(StorageError):
                writer.write(sample_table(), "csv")
        self.assertFalse(path.exists())

    def test_unwritable_path_raises_storage_error(self):
        blocker = self.root / "blocker"
        blocker.write_text("not a directory", encoding="utf-8")
        with self.assertRaises(StorageError):
            ResultWriter(blocker / "table.csv", lock_timeout=0.2).write(sample_table(), "csv")


class TestReadTable(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = TemporaryDirectory()
        self.root = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def test_missing_file(self):
        with self.assertRaises(StorageError):
            read_table(self.root / "missing.csv")

    def test_invalid_json(self):
        path = self.root / "broken.json"
        path.write_text("{", encoding="utf-8")
        with self.assertRaises(StorageError):
            read_table(path)

    def test_empty_csv(self):
        path = self.root / "empty.csv"
        path.write_text("", encoding="utf-8")
        with self.assertRaises(StorageError):
            read_table(path)

    def test_explicit_format_overrides_suffix(self):
        path = self.root / "table.txt"
        path.write_text("tau,mle\n0.5,true\n", encoding="utf-8")
        self.assertEqual(read_table(path, fmt="csv").rows, [(0.5, True)])
        with self.assertRaises(StorageError):
            read_table(path)


if __name__ == "__main__":
    unittest.main()
