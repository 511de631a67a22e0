import unittest
import tempfile
import os
import json

import numpy as np

from chance_presolve.serialization import (TableSerialization, T_table,
                                           NumPyEncoder, json_float,
                                           to_json_string)


class _FixedTable(TableSerialization):
    def to_2d_list(self) -> T_table:
        return [["name", "value", "note"],
                ["a", 1, None],
                ["b", 2.5, "x"]]


class TestSerialization(unittest.TestCase):
    """Regression test for serializers."""

    def setUp(self) -> None:
        self.warnings = []
        self.table = _FixedTable(
            warning_logger=lambda message: self.warnings.append(message))
        # Temporary directory for file exports
        self.working_dir = tempfile.mkdtemp()

    def tearDown(self) -> None:
        """Remove temporary directory content."""
        for file in [
            f for f in os.listdir(self.working_dir)
            if os.path.isfile(os.path.join(self.working_dir, f))
        ]:
            os.remove(os.path.join(self.working_dir, file))

    def test_abstract(self):
        """Test that the table has to define its rows."""
        with self.assertRaises(TypeError):
            TableSerialization()

    def test_to_excel(self):
        """Test if the Excel file is created."""
        file_name = "export.xlsx"
        excel_path = os.path.join(self.working_dir, file_name)
        self.table.to_excel(excel_path, column_width=[12, None, 8])
        self.assertTrue(os.path.exists(excel_path))
        with self.assertRaises(ValueError):
            self.table.to_excel(os.path.join(self.working_dir, "export.xls"))
        with self.assertRaises(ValueError):
            self.table.to_excel(excel_path, sheet_name="")

    def test_to_text(self):
        """Test export to the fixed width text"""
        expected = "name  value  note\n" \
                   "----  -----  ----\n" \
                   "a         1     -\n" \
                   "b       2.5     x"
        self.assertEqual(self.table.to_text(), expected)

    def test_to_csv(self):
        """Test export to CSV"""
        expected = """name,value,note
a,1,
b,2.5,x"""
        self.assertEqual(self.table.to_csv(), expected)
        self.assertEqual(self.table.to_csv(na_rep="NA", sep=";"),
                         "name;value;note\na;1;NA\nb;2.5;x")

    def test_to_markdown(self):
        """MD (Markdown) language export"""
        expected = """| *name* | *value* | *note* |
|----|----|----|
| a | 1 | - |
| b | 2.5 | x |
"""
        self.assertEqual(self.table.to_markdown(), expected)

    def test_to_records(self):
        """Test export of the rows as dictionaries"""
        self.assertListEqual(self.table.to_records(), [
            {"name": "a", "value": 1, "note": None},
            {"name": "b", "value": 2.5, "note": "x"}
        ])

    def test_json_float(self):
        """Test that non-finite values become null"""
        self.assertIsNone(json_float(np.inf))
        self.assertIsNone(json_float(-np.inf))
        self.assertIsNone(json_float(np.nan))
        self.assertIsNone(json_float(None))
        self.assertEqual(json_float(np.float32(0.5)), 0.5)

    def test_numpy_encoder(self):
        """Test the encoding of NumPy values"""
        data = {"a": np.int64(3), "b": np.float32(1.5),
                "c": np.array([1, 2]), "d": {4}}
        self.assertEqual(to_json_string(data),
                         '{"a": 3, "b": 1.5, "c": [1, 2], "d": [4]}')
        self.assertEqual(json.loads(json.dumps(np.arange(3),
                                               cls=NumPyEncoder)),
                         [0, 1, 2])
        self.assertListEqual(self.warnings, [])
