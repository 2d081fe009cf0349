"""
Loading of solver parameters and field inputs.

Precedence for solver parameters: defaults < --config-file < MONOHAM_TENSOR_CAP < CLI flags.
"""

import json
import logging
import os
import re
from dataclasses import asdict, dataclass, fields as dataclass_fields, replace
from itertools import count as itertools_count
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from MonoHam.core import (DEFAULT_TENSOR_CAP, TENSOR_CAP_ENV, DiscreteDomain, FieldTuple, InputFormatError,
                          tensor_cap)

logger = logging.getLogger(__name__)

MAX_FILE_SIZE_BYTES = 1e8


@dataclass(frozen=True)
class SolverParameters:
    """ Object for setting every numerical knob of a run."""
    tolerance: float = 1e-9                 # defect and claim tolerance
    check_tol: float = 1e-8                 # representation scans
    tensor_cap: int = DEFAULT_TENSOR_CAP    # entries of one dense m^N tensor
    enumeration_cap: int = 10**7            # tuples enumerated by a monotonicity check
    lp_max_variables: int = 50_000
    lp_feasibility_tol: float = 1e-8
    lp_pivot_tol: float = 1e-11
    fixed_point_tol: float = 1e-9
    max_iter: int = 200
    involution_factorial_cap: int = 8
    restarts: int = 20
    seed: int = 0

    def __post_init__(self):
        for name in ("tolerance", "check_tol", "lp_feasibility_tol", "lp_pivot_tol", "fixed_point_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("tensor_cap", "enumeration_cap", "lp_max_variables", "max_iter", "involution_factorial_cap",
                     "restarts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1, got {getattr(self, name)!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "SolverParameters":
        known = {f.name: f.type for f in dataclass_fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise InputFormatError(f"unknown solver parameters: {', '.join(unknown)}")
        values = {}
        for name, value in data.items():
            default = getattr(cls, name)
            try:
                values[name] = int(float(value)) if isinstance(default, int) else float(value)
            except (TypeError, ValueError) as exc:
                raise InputFormatError(f"solver parameter {name}={value!r} is not a number") from exc
        return cls(**values)

    def with_environment(self) -> "SolverParameters":
        if os.environ.get(TENSOR_CAP_ENV):
            return replace(self, tensor_cap=tensor_cap())
        return self

    def with_overrides(self, **overrides) -> "SolverParameters":
        """Apply explicit values; ``None`` means not given."""
        given = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **given) if given else self

    def to_dict(self) -> dict:
        return asdict(self)


class ConfigLoader():
    """
    Loads solver parameters and field inputs from JSON (or CSV) files.
    """
    id_iter = itertools_count()

    def __init__(self, max_file_size_bytes: float = MAX_FILE_SIZE_BYTES):
        self.max_file_size_bytes = max_file_size_bytes
        self.idx = next(ConfigLoader.id_iter)
        self.label = f'{self.__class__.__name__}[{self.idx}]'

    def _check_size(self, path: Path):
        file_size = path.stat().st_size
        if file_size > self.max_file_size_bytes:
            raise InputFormatError(
                f"File size ({file_size} bytes) exceeds maximum size ({self.max_file_size_bytes} bytes).")

    def load(self, config_file, max_file_size_bytes: Optional[float] = None) -> dict:
        """Parse a JSON file after the size guard."""
        path = Path(config_file)
        if max_file_size_bytes is not None:
            self.max_file_size_bytes = max_file_size_bytes
        self._check_size(path)
        with open(path, 'r') as file:
            try:
                data = json.load(file)
            except json.JSONDecodeError as exc:
                raise InputFormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
        logger.debug("%s loaded %s", self.label, path)
        return data

    def load_parameters(self, config_file=None) -> SolverParameters:
        params = SolverParameters()
        if config_file:
            data = self.load(config_file)
            params = SolverParameters.from_dict(data.get("solver", data))
        return params.with_environment()

    def load_fields(self, path, order: Optional[int] = None) -> FieldTuple:
        """Domain and fields from JSON, or from CSV with header ``x1..xd, u1_1..u1_d, ..., [w]``."""
        path = Path(path)
        if path.suffix.lower() == ".csv":
            self._check_size(path)
            return fields_from_frame(pd.read_csv(path), order)
        data = self.load(path)
        if order is not None:
            data = dict(data, order=order) if "order" not in data else data
        return FieldTuple.from_dict(data)


_FIELD_COLUMN = re.compile(r"^u(\d+)_(\d+)$")
_POINT_COLUMN = re.compile(r"^x(\d+)$")


def fields_from_frame(frame: pd.DataFrame, order: Optional[int] = None) -> FieldTuple:
    columns = [str(c).strip() for c in frame.columns]
    frame = frame.set_axis(columns, axis=1)
    point_cols = sorted((c for c in columns if _POINT_COLUMN.match(c)), key=lambda c: int(c[1:]))
    field_cols = [c for c in columns if _FIELD_COLUMN.match(c)]
    extra = set(columns) - set(point_cols) - set(field_cols) - {"w"}
    if extra:
        raise InputFormatError(f"unexpected CSV columns: {', '.join(sorted(extra))}")
    d = len(point_cols)
    if d == 0 or [int(c[1:]) for c in point_cols] != list(range(1, d + 1)):
        raise InputFormatError("CSV needs point columns x1..xd")
    slots = sorted({int(_FIELD_COLUMN.match(c).group(1)) for c in field_cols})
    if order is None:
        order = len(slots) + 1
    if slots and slots != list(range(1, len(slots) + 1)):
        raise InputFormatError("field columns must be numbered u1_*, u2_*, ... without gaps")
    if len(slots) > order - 1:
        raise InputFormatError(f"CSV carries {len(slots)} fields, order {order} takes at most {order - 1}")
    try:
        points = frame[point_cols].to_numpy(dtype=float)
        values = np.zeros((order - 1, points.shape[0], d))
        for ell in slots:
            cols = [f"u{ell}_{e}" for e in range(1, d + 1)]
            missing = [c for c in cols if c not in frame.columns]
            if missing:
                raise InputFormatError(f"missing CSV columns {', '.join(missing)}")
            values[ell - 1] = frame[cols].to_numpy(dtype=float)
        weights = frame["w"].to_numpy(dtype=float) if "w" in frame.columns else None
    except ValueError as exc:
        raise InputFormatError(f"CSV is not numeric: {exc}") from exc
    return FieldTuple(DiscreteDomain(points, weights), values)


def fields_to_frame(fields: FieldTuple) -> pd.DataFrame:
    """Inverse of ``fields_from_frame``."""
    d = fields.domain.dimension
    data = {f"x{e + 1}": fields.domain.points[:, e] for e in range(d)}
    for ell in range(1, fields.order):
        for e in range(d):
            data[f"u{ell}_{e + 1}"] = fields.values[ell - 1, :, e]
    if not fields.domain.is_uniform:
        data["w"] = fields.domain.weights
    return pd.DataFrame(data)
