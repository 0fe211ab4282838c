"""Rectangular numeric result tables with a metadata block."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..errors import ParameterError

# Metadata keys that legitimately differ between otherwise identical runs.
VOLATILE_KEYS = ("wall_time_s",)


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list[float]]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.columns = list(self.columns)
        self.rows = [[float(v) for v in r] for r in self.rows]
        for i, r in enumerate(self.rows):
            if len(r) != len(self.columns):
                raise ParameterError(f"row {i} has {len(r)} values for {len(self.columns)} columns")
        self.metadata = {str(k): str(v) for k, v in self.metadata.items()}

    def column(self, name: str) -> list[float]:
        try:
            k = self.columns.index(name)
        except ValueError:
            raise ParameterError(f"no column {name!r}; have {self.columns}") from None
        return [r[k] for r in self.rows]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([repr(v) for v in r])
        return buf.getvalue()

    def metadata_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.metadata.items())

    def stable_metadata(self) -> dict[str, str]:
        return {k: v for k, v in self.metadata.items() if k not in VOLATILE_KEYS}

    def write(self, outdir) -> tuple[Path, Path]:
        d = Path(outdir)
        d.mkdir(parents=True, exist_ok=True)
        csv_path, meta_path = d / "result.csv", d / "metadata.txt"
        csv_path.write_text(self.csv_text())
        meta_path.write_text(self.metadata_text())
        return csv_path, meta_path

    @classmethod
    def read(cls, outdir) -> ResultTable:
        d = Path(outdir)
        with open(d / "result.csv", newline="") as fh:
            reader = csv.reader(fh)
            columns = next(reader)
            rows = [[float(v) for v in r] for r in reader if r]
        return cls(columns, rows, read_metadata(d / "metadata.txt"))


def read_metadata(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            k, _, v = line.partition(" = ")
            out[k] = v
    return out


def table_from_columns(named: Sequence[tuple[str, Sequence[float]]], metadata=None) -> ResultTable:
    cols = [n for n, _ in named]
    data = [list(v) for _, v in named]
    if len({len(v) for v in data}) > 1:
        raise ParameterError("columns differ in length")
    return ResultTable(cols, [list(r) for r in zip(*data)], metadata or {})
