import abc
import json
import math
from typing import List, Dict, Callable, Optional, Union
from types import MappingProxyType

import xlsxwriter
import numpy

# ==== TYPES ====
# Table as the list of rows, the first row holds the column labels
T_table = List[List[Union[str, int, float, None]]]
# ===============


class NumPyEncoder(json.JSONEncoder):
    """Encodes the NumPy variables to export"""
    def default(self, obj):
        if isinstance(obj, numpy.integer):
            return int(obj)
        elif isinstance(obj, numpy.floating):
            return json_float(float(obj))
        elif isinstance(obj, numpy.ndarray):
            return obj.tolist()
        elif isinstance(obj, (tuple, set, frozenset)):
            return list(obj)
        else:
            return super(NumPyEncoder, self).default(obj)


def json_float(value: Optional[float]) -> Optional[float]:
    """Convert the value to float, infinities and NaN become None (null).
    """
    if value is None:
        return None
    value = float(value)
    if math.isinf(value) or math.isnan(value):
        return None
    return value


def to_json_string(data: dict, indent: Optional[int] = None) -> str:
    """Dump the dictionary with NumPy values to the JSON string."""
    return json.dumps(data, cls=NumPyEncoder, indent=indent)


class TableSerialization(abc.ABC):
    """Provides the export of a table to text, CSV, Markdown and Excel.

    Attributes:
        warning_logger (Callable[[str], None]): Function that logs the
            warnings.
    """

    def __init__(self, *,
                 warning_logger: Optional[Callable[[str], None]] = None):
        """Initialise functionality for serialization.

        Args:
            warning_logger (Optional[Callable[[str], None]]): Function that
                logs the warnings (or None if skipped).
        """
        if warning_logger is not None:
            self.warning_logger: Callable[[str], None] = warning_logger
        else:
            # Silent logger
            self.warning_logger: Callable[[str], None] = lambda _mess: _mess

    @abc.abstractmethod
    def to_2d_list(self) -> T_table:
        """Export the table as the list of rows with the header first.

        Returns:
            T_table: Header row followed by the data rows.
        """
        raise NotImplementedError

    def _as_strings(self, na_rep: str) -> List[List[str]]:
        return [[na_rep if value is None else str(value) for value in row]
                for row in self.to_2d_list()]

    def to_text(self, *,
                na_rep: str = '-',
                column_separator: str = '  ') -> str:
        """Export the table to the fixed width text.

        Args:
            na_rep (str): Replacement for the missing data.
            column_separator (str): Spacing between the columns.

        Returns:
            str: Fixed width table, header underlined with dashes.
        """
        rows = self._as_strings(na_rep)
        widths = [max(len(row[col_idx]) for row in rows)
                  for col_idx in range(len(rows[0]))]
        lines = []
        for row_idx, row in enumerate(rows):
            lines.append(column_separator.join(
                value.ljust(widths[col_idx]) if col_idx == 0
                else value.rjust(widths[col_idx])
                for col_idx, value in enumerate(row)
            ).rstrip())
            if row_idx == 0:
                lines.append(column_separator.join('-' * width
                                                   for width in widths))
        return '\n'.join(lines)

    def to_csv(self, *,
               na_rep: str = '',
               sep: str = ',',
               line_terminator: str = '\n') -> str:
        """Export values to the string in the CSV logic

        Args:
            na_rep (str): Replacement for the missing data.
            sep (str): Separator of values in a row.
            line_terminator (str): Ending sequence (character) of a row.

        Returns:
            str: CSV of the values
        """
        return line_terminator.join(sep.join(row)
                                    for row in self._as_strings(na_rep))

    def to_markdown(self, *, na_rep: str = '-') -> str:
        """Export values to the string in the Markdown (MD) file logic

        Args:
            na_rep (str): Replacement for the missing data.

        Returns:
            str: Markdown (MD) compatible table of the values
        """
        rows = self._as_strings(na_rep)
        export = "| " + " | ".join(f"*{label}*" for label in rows[0]) \
            + " |\n"
        export += "|----" * len(rows[0]) + "|\n"
        for row in rows[1:]:
            export += "| " + " | ".join(row) + " |\n"
        return export

    def to_excel(self,
                 file_path: str,
                 /, *,  # noqa: E225, E999
                 sheet_name: str = "Results",
                 label_row_format: dict = MappingProxyType({'bold': True}),
                 column_width: List[float] = ()) -> None:
        """Export the table to the Excel 2010 compatible .xlsx file

        Args:
            file_path (str): Path to the target .xlsx file.
            sheet_name (str): The name of the sheet inside the file.
            label_row_format (dict): Excel styles for the header row,
                documentation: https://xlsxwriter.readthedocs.io/format.html
            column_width (List[float]): List of column widths, or empty for
                the default widths (or None for the default width in the
                series).
        """
        # Quick sanity check
        if ".xlsx" not in file_path[-5:]:
            raise ValueError("Suffix of the file has to be '.xlsx'!")
        if not isinstance(sheet_name, str) or len(sheet_name) < 1:
            raise ValueError("Sheet name has to be non-empty string!")

        workbook = xlsxwriter.Workbook(file_path)
        worksheet = workbook.add_worksheet(name=sheet_name)
        # Register the style for the labels:
        header_format = workbook.add_format(dict(label_row_format))
        for row_idx, row in enumerate(self.to_2d_list()):
            for col_idx, value in enumerate(row):
                if value is None:
                    continue
                if row_idx == 0:
                    worksheet.write(row_idx, col_idx, value, header_format)
                else:
                    worksheet.write(row_idx, col_idx, value)
        # Set the column widths:
        for col_position, s_col_width in enumerate(column_width):
            if s_col_width is not None:
                worksheet.set_column(col_position, col_position, s_col_width)
        # Store results
        workbook.close()

    def to_records(self) -> List[Dict[str, object]]:
        """Export the data rows as dictionaries keyed by the header."""
        table = self.to_2d_list()
        return [dict(zip(table[0], row)) for row in table[1:]]
