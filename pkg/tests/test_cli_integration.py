import io
import json
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory
from unittest.mock import patch

from src import main as main_module
from src.storage import read_table


class TestCLIIntegration(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = TemporaryDirectory()
        self.root = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def _run(self, *argv: str):
        stdout = io.StringIO()
        stderr = io.StringIO()
        with patch.object(main_module.sys, "stdout", stdout), patch.object(
            main_module.sys, "stderr", stderr
        ):
            code = main_module.main(list(argv))
        return code, stdout.getvalue(), stderr.getvalue()

    def _error_payload(self, stderr: str) -> dict:
        lines = [line for line in stderr.splitlines() if line.startswith("{")]
        self.assertEqual(len(lines), 1)
        return json.loads(lines[0])

    def test_crit_delay_to_stdout(self):
        code, out, _ = self._run("crit-delay", "--a", "-2", "--b", "-3", "--alpha", "1")
        self.assertEqual(code, 0)
        header, row = out.splitlines()
        self.assertEqual(header, "a,b,alpha,tau_star,omega")
        self.assertAlmostEqual(float(row.split(",")[3]), 1.028826, places=5)

    def test_classify_to_json_file(self):
        out = self.root / "classify.json"
        code, stdout, _ = self._run(
            "classify", "--alpha", "0.95", "--delta", "5", "--epsilon", "2", "--p", "0.01",
            "--q", "-2", "--format", "json", "--out", str(out),
        )
        self.assertEqual(code, 0)
        self.assertEqual(stdout, "")
        document = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual([record["branch"] for record in document["data"]], ["x1", "x2", "x3"])
        self.assertEqual(document["data"][0]["verdict"], "UnstableAllDelays")
        self.assertIsNone(document["data"][0]["tau_star"])

    def test_region_csv_file(self):
        out = self.root / "region.csv"
        code, _, _ = self._run(
            "region", "--p", "1", "--epsilon", "1", "--q-range=-1.5,0.8", "--delta-range=-1,4",
            "--grid", "12x8", "--out", str(out),
        )
        self.assertEqual(code, 0)
        table = read_table(out)
        self.assertEqual(table.header, ("q", "delta", "label"))
        self.assertEqual(len(table.rows), 96)

    def test_storage_error_exit_code(self):
        blocker = self.root / "blocker"
        blocker.write_text("file", encoding="utf-8")
        code, _, err = self._run(
            "crit-delay", "--a", "-2", "--b", "-3", "--alpha", "1", "--out", str(blocker / "x.csv")
        )
        self.assertEqual(code, 1)
        self.assertEqual(self._error_payload(err)["error"], "StorageError")

    def test_usage_error_exit_code(self):
        code, out, err = self._run("simulate", "--alpha", "0.9")
        self.assertEqual(code, 2)
        self.assertEqual(out, "")
        payload = self._error_payload(err)
        self.assertEqual(payload["error"], "UsageError")
        self.assertEqual(payload["exit_code"], 2)

    def test_invalid_value_exit_codes(self):
        code, _, err = self._run("crit-delay", "--a", "-2", "--b", "-3", "--alpha", "1.5")
        self.assertEqual(code, 3)
        self.assertEqual(self._error_payload(err)["error"], "ValidationError")

        code, _, err = self._run(
            "classify", "--alpha", "1.5", "--delta", "5", "--epsilon", "2", "--p", "0", "--q", "-2"
        )
        self.assertEqual(code, 3)
        self.assertEqual(self._error_payload(err)["error"], "ValidationError")

    def test_numeric_error_exit_code(self):
        code, out, err = self._run("crit-delay", "--a", "-2", "--b", "1", "--alpha", "0.9")
        self.assertEqual(code, 4)
        self.assertEqual(out, "")
        self.assertEqual(self._error_payload(err)["exit_code"], 4)

    def test_divergence_still_writes_output(self):
        out = self.root / "sim.csv"
        code, _, _ = self._run(
            "simulate", "--alpha", "1", "--tau", "0.1", "--delta", "0", "--epsilon", "0",
            "--p", "0", "--q", "5", "--t-end", "10", "--out", str(out),
        )
        self.assertEqual(code, 5)
        table = read_table(out)
        self.assertGreater(len(table.rows), 100)
        self.assertLess(table.rows[-1][0], 10.0)


if __name__ == "__main__":
    unittest.main()
