"""JSON and CSV serialization helpers for reports, manifests and time series."""

from __future__ import annotations

import csv
import dataclasses
import math
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Sequence

import numpy as np
from pydantic import BaseModel, PlainSerializer, PlainValidator


def _parse_complex(value: Any) -> complex:
    if isinstance(value, complex):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not complex numbers")
    if isinstance(value, (int, float, np.number)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError as exc:
            raise ValueError(f"cannot parse complex number from {value!r}") from exc
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ValueError(f"expected a number, [re, im] or 'a+bj', got {value!r}")


def _dump_complex(value: complex) -> list[float]:
    return [value.real, value.imag]


ComplexValue = Annotated[
    complex,
    PlainValidator(_parse_complex),
    PlainSerializer(_dump_complex, return_type=list, when_used="json"),
]
"""Complex field accepting ``x``, ``[re, im]`` or ``"a+bj"``; dumps to ``[re, im]`` in JSON."""


def _json_float(value: float) -> float | str:
    if math.isfinite(value):
        return value
    return "inf" if value > 0 else ("-inf" if value < 0 else "nan")


def make_json_serializable(obj: Any) -> Any:
    """Recursively convert numpy, complex, pydantic and dataclass values to plain JSON types."""

    if obj is None or isinstance(obj, (str, bool, int)):
        return obj
    if isinstance(obj, float):
        return _json_float(obj)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, complex):
        return [_json_float(obj.real), _json_float(obj.imag)]
    if isinstance(obj, np.generic):
        return make_json_serializable(obj.item())
    if isinstance(obj, np.ndarray):
        return [make_json_serializable(item) for item in obj.tolist()]
    if isinstance(obj, BaseModel):
        return make_json_serializable(obj.model_dump(mode="python", exclude_none=True))
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            "_type": obj.__class__.__name__,
            **{
                f.name: make_json_serializable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)
                if f.repr
            },
        }
    if isinstance(obj, (list, tuple)):
        return [make_json_serializable(item) for item in obj]
    if isinstance(obj, dict):
        return {str(k): make_json_serializable(v) for k, v in obj.items()}
    return str(obj)


@dataclasses.dataclass(kw_only=True)
class Table:
    """Column-named numeric table; complex columns are split into ``name_re``/``name_im``."""

    name: str
    columns: list[str]
    data: np.ndarray

    @classmethod
    def from_columns(cls, name: str, columns: dict[str, Sequence[Any] | np.ndarray]) -> "Table":
        headers: list[str] = []
        blocks: list[np.ndarray] = []
        for key, values in columns.items():
            array = np.asarray(values)
            if np.iscomplexobj(array):
                headers.extend([f"{key}_re", f"{key}_im"])
                blocks.extend([array.real.astype(float), array.imag.astype(float)])
            else:
                headers.append(key)
                blocks.append(array.astype(float))
        lengths = {block.shape[0] for block in blocks}
        if len(lengths) > 1:
            raise ValueError(f"table {name!r} has columns of different lengths: {sorted(lengths)}")
        data = np.column_stack(blocks) if blocks else np.empty((0, 0))
        return cls(name=name, columns=headers, data=data)

    def column(self, key: str) -> np.ndarray:
        return self.data[:, self.columns.index(key)]

    def write_csv(self, path: Path) -> Path:
        """Write with a fixed ``%.17g`` format so identical runs give identical bytes."""

        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(
            path,
            self.data,
            delimiter=",",
            fmt="%.17g",
            header=",".join(self.columns),
            comments="",
        )
        return path

    def as_records(self) -> list[dict[str, float | str]]:
        return [
            {key: _json_float(float(value)) for key, value in zip(self.columns, row)}
            for row in self.data
        ]


def write_records_csv(path: Path, records: Sequence[dict[str, Any]]) -> Path:
    """Write text records (pass/fail rows and the like) with a header from the first record."""

    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        if records:
            writer = csv.DictWriter(handle, fieldnames=list(records[0]))
            writer.writeheader()
            writer.writerows(records)
    return path


__all__ = ["ComplexValue", "Table", "make_json_serializable", "write_records_csv"]
