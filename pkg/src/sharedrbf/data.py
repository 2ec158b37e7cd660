"""Dataset ingestion, validation, and reversible outcome/covariate scaling.

Outcomes are min-max scaled to [-0.5, 0.5] before fitting and mapped back
afterwards; continuous and ordinal covariates are min-max scaled to [0, 1]
on the training data, nominal covariates are expanded into C-1 reference-coded
dummy columns (reference = level 1).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateColumnError,
    DegenerateOutcomeError,
    MissingDataError,
    ParseError,
    SchemaError,
    UnknownLevelError,
)

TREATMENT_COLUMN = "treatment"
OUTCOME_COLUMN = "outcome"


@dataclass(frozen=True)
class ColumnKind:
    """Declared kind of one covariate column.

    kind is one of "continuous", "ordinal", "nominal"; nominal columns carry
    the number of levels C >= 2 and hold integer codes in 1..C.
    """

    kind: str
    levels: int | None = None

    def __post_init__(self):
        if self.kind not in ("continuous", "ordinal", "nominal"):
            raise SchemaError(f"unknown column kind {self.kind!r}")
        if self.kind == "nominal":
            if self.levels is None or self.levels < 2:
                raise SchemaError("nominal columns need levels >= 2")
        elif self.levels is not None:
            raise SchemaError(f"{self.kind} columns do not take levels")

    @staticmethod
    def parse(text: str) -> "ColumnKind":
        """Parse "continuous", "ordinal", or "nominal:C"."""
        parts = text.strip().split(":")
        if parts[0] == "nominal":
            if len(parts) != 2:
                raise SchemaError(f"nominal kind needs a level count: {text!r}")
            try:
                levels = int(parts[1])
            except ValueError:
                raise SchemaError(f"bad nominal level count in {text!r}") from None
            return ColumnKind("nominal", levels)
        if len(parts) != 1:
            raise SchemaError(f"bad column kind {text!r}")
        return ColumnKind(parts[0])


@dataclass(frozen=True)
class Dataset:
    """Complete-case covariates, continuous outcome, and treatment labels.

    X is N x P (raw or transformed, depending on processing stage), y is the
    length-N outcome, z holds integer treatment labels in 1..G with every
    group represented.  Instances are immutable; the arrays are marked
    read-only so they can be shared freely.
    """

    X: np.ndarray
    y: np.ndarray
    z: np.ndarray
    column_kinds: tuple[ColumnKind, ...] | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        z = np.asarray(self.z).ravel()
        if X.ndim != 2:
            raise SchemaError("X must be a 2-d array")
        n = X.shape[0]
        if n < 1:
            raise SchemaError("dataset must have at least one row")
        if y.shape[0] != n or z.shape[0] != n:
            raise SchemaError("X, y, z must have matching lengths")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise MissingDataError("X and y must be finite (complete cases)")
        if not np.all(z == z.astype(int)):
            raise SchemaError("treatment labels must be integers")
        z = z.astype(int)
        if z.min() < 1:
            raise SchemaError("treatment labels must lie in 1..G")
        g_max = int(z.max())
        present = np.unique(z)
        if len(present) != g_max:
            missing = sorted(set(range(1, g_max + 1)) - set(present.tolist()))
            raise SchemaError(f"treatment groups {missing} have no subjects")
        if self.column_kinds is not None:
            if len(self.column_kinds) != X.shape[1]:
                raise SchemaError("column_kinds length must equal number of covariates")
            for j, ck in enumerate(self.column_kinds):
                if ck.kind == "nominal":
                    col = X[:, j]
                    if not np.all(col == col.astype(int)):
                        raise SchemaError(f"nominal column {j} holds non-integer codes")
                    if col.min() < 1 or col.max() > ck.levels:
                        raise SchemaError(
                            f"nominal column {j} has codes outside 1..{ck.levels}"
                        )
        if self.names is not None and len(self.names) != X.shape[1]:
            raise SchemaError("names length must equal number of covariates")
        for arr in (X, y, z):
            arr.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def n_groups(self) -> int:
        return int(self.z.max())

    def covariate_names(self) -> tuple[str, ...]:
        if self.names is not None:
            return self.names
        return tuple(f"x{j + 1}" for j in range(self.p))


def load_dataset(path, schema: dict[str, ColumnKind]) -> Dataset:
    """Read a CSV with `treatment`, `outcome`, and declared covariate columns.

    Row order is preserved.  Every covariate column in the file must appear in
    `schema` and vice versa; cells must be non-empty and parse as numbers.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)
    header = [h.strip() for h in header]
    if TREATMENT_COLUMN not in header:
        raise SchemaError(f"{path}: missing {TREATMENT_COLUMN!r} column")
    if OUTCOME_COLUMN not in header:
        raise SchemaError(f"{path}: missing {OUTCOME_COLUMN!r} column")
    covariate_cols = [h for h in header if h not in (TREATMENT_COLUMN, OUTCOME_COLUMN)]
    declared = set(schema)
    present = set(covariate_cols)
    if declared != present:
        extra = sorted(present - declared)
        absent = sorted(declared - present)
        raise SchemaError(
            f"{path}: header does not match schema"
            f" (undeclared {extra}, missing {absent})"
        )
    if not rows:
        raise SchemaError(f"{path}: no data rows")

    def cell(row_idx, row, col):
        j = header.index(col)
        if j >= len(row) or row[j].strip() == "":
            raise MissingDataError(f"{path}: empty cell at row {row_idx + 1}, column {col!r}")
        return row[j].strip()

    n = len(rows)
    X = np.empty((n, len(covariate_cols)))
    y = np.empty(n)
    z = np.empty(n, dtype=int)
    for i, row in enumerate(rows):
        raw_z = cell(i, row, TREATMENT_COLUMN)
        try:
            zi = int(raw_z)
        except ValueError:
            raise SchemaError(
                f"{path}: treatment label {raw_z!r} at row {i + 1} is not an integer"
            ) from None
        if zi < 1:
            raise SchemaError(f"{path}: treatment label {zi} at row {i + 1} not in 1..G")
        z[i] = zi
        raw_y = cell(i, row, OUTCOME_COLUMN)
        try:
            y[i] = float(raw_y)
        except ValueError:
            raise ParseError(
                f"{path}: non-numeric outcome {raw_y!r} at row {i + 1}"
            ) from None
        for jc, col in enumerate(covariate_cols):
            raw = cell(i, row, col)
            try:
                X[i, jc] = float(raw)
            except ValueError:
                raise ParseError(
                    f"{path}: non-numeric value {raw!r} at row {i + 1}, column {col!r}"
                ) from None
    kinds = tuple(schema[c] for c in covariate_cols)
    return Dataset(X=X, y=y, z=z, column_kinds=kinds, names=tuple(covariate_cols))


@dataclass(frozen=True)
class OutcomeTransform:
    """Affine map of the training outcome onto [-0.5, 0.5] and its inverse."""

    y_min: float
    y_max: float

    def __post_init__(self):
        if not self.y_max > self.y_min:
            raise DegenerateOutcomeError("outcome transform needs y_max > y_min")

    @property
    def scale(self) -> float:
        return self.y_max - self.y_min

    def apply(self, y):
        y = np.asarray(y, dtype=float)
        return (y - self.y_min - 0.5 * self.scale) / self.scale

    def invert(self, f):
        f = np.asarray(f, dtype=float)
        return f * self.scale + self.y_min + 0.5 * self.scale

    def to_dict(self) -> dict:
        return {"y_min": float(self.y_min), "y_max": float(self.y_max)}

    @staticmethod
    def from_dict(d: dict) -> "OutcomeTransform":
        return OutcomeTransform(y_min=d["y_min"], y_max=d["y_max"])


def fit_outcome_transform(y) -> OutcomeTransform:
    y = np.asarray(y, dtype=float)
    lo, hi = float(np.min(y)), float(np.max(y))
    if hi <= lo:
        raise DegenerateOutcomeError("outcome is constant; cannot min-max scale")
    return OutcomeTransform(y_min=lo, y_max=hi)


@dataclass(frozen=True)
class CovariateTransform:
    """Column-wise covariate scaling fitted on training data.

    Continuous/ordinal columns are min-max scaled with the stored training
    (min, max); nominal columns with C levels become C-1 0/1 indicators for
    levels 2..C, placed where the source column was.  Held-out rows are
    transformed with the training statistics and may leave [0, 1].
    """

    kinds: tuple[ColumnKind, ...]
    names: tuple[str, ...]
    mins: tuple[float | None, ...]
    maxs: tuple[float | None, ...]

    @property
    def width(self) -> int:
        """Expanded covariate dimension after dummy coding."""
        total = 0
        for ck in self.kinds:
            total += ck.levels - 1 if ck.kind == "nominal" else 1
        return total

    def expanded_names(self) -> tuple[str, ...]:
        out = []
        for name, ck in zip(self.names, self.kinds):
            if ck.kind == "nominal":
                out.extend(f"{name}_{lvl}" for lvl in range(2, ck.levels + 1))
            else:
                out.append(name)
        return tuple(out)

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.kinds):
            raise SchemaError(
                f"expected {len(self.kinds)} covariate columns, got {X.shape}"
            )
        cols = []
        for j, ck in enumerate(self.kinds):
            col = X[:, j]
            if ck.kind == "nominal":
                codes = col.astype(int)
                if np.any(codes != col) or codes.min() < 1 or codes.max() > ck.levels:
                    raise UnknownLevelError(
                        f"column {self.names[j]!r}: nominal code outside 1..{ck.levels}"
                    )
                for lvl in range(2, ck.levels + 1):
                    cols.append((codes == lvl).astype(float))
            else:
                cols.append((col - self.mins[j]) / (self.maxs[j] - self.mins[j]))
        return np.column_stack(cols)

    def to_dict(self) -> dict:
        return {
            "kinds": [
                {"kind": ck.kind, "levels": ck.levels} for ck in self.kinds
            ],
            "names": list(self.names),
            "mins": [m if m is None else float(m) for m in self.mins],
            "maxs": [m if m is None else float(m) for m in self.maxs],
        }

    @staticmethod
    def from_dict(d: dict) -> "CovariateTransform":
        kinds = tuple(ColumnKind(k["kind"], k["levels"]) for k in d["kinds"])
        return CovariateTransform(
            kinds=kinds,
            names=tuple(d["names"]),
            mins=tuple(d["mins"]),
            maxs=tuple(d["maxs"]),
        )


def fit_covariate_transform(
    X, column_kinds, names=None
) -> CovariateTransform:
    """Fit per-column scaling on training covariates.

    column_kinds defaults to all-continuous when None.
    """
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    if column_kinds is None:
        column_kinds = tuple(ColumnKind("continuous") for _ in range(p))
    column_kinds = tuple(column_kinds)
    if len(column_kinds) != p:
        raise SchemaError("column_kinds length must equal number of covariates")
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(p))
    mins, maxs = [], []
    for j, ck in enumerate(column_kinds):
        if ck.kind == "nominal":
            codes = X[:, j]
            if np.any(codes != codes.astype(int)) or codes.min() < 1 or codes.max() > ck.levels:
                raise SchemaError(
                    f"column {names[j]!r}: nominal codes must lie in 1..{ck.levels}"
                )
            mins.append(None)
            maxs.append(None)
        else:
            lo, hi = float(X[:, j].min()), float(X[:, j].max())
            if hi <= lo:
                raise DegenerateColumnError(
                    f"column {names[j]!r} is constant; cannot min-max scale"
                )
            mins.append(lo)
            maxs.append(hi)
    return CovariateTransform(
        kinds=column_kinds, names=tuple(names), mins=tuple(mins), maxs=tuple(maxs)
    )
