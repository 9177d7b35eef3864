"""CSV ingestion, analysis configuration and tabular output."""

import csv
from dataclasses import asdict, dataclass, field
import json
import math
import os
from pathlib import Path
import warnings

import numpy as np

from simplexreg.composition import close
from simplexreg.errors import DomainError, ParameterError, ParseError, SchemaError
from simplexreg.regression import design_matrix

__all__ = [
    "AnalysisConfig",
    "load_config",
    "Ingested",
    "ingest_csv",
    "write_compositions_csv",
    "Table",
    "OUTPUT_DIR_ENV",
]

OUTPUT_DIR_ENV = "SIMPLEXREG_OUTPUT_DIR"


@dataclass
class AnalysisConfig:
    """Everything a pipeline run needs.

    ``categorical`` maps a covariate to its reference level. ``group``
    names the two-level covariate used for the group comparisons. It
    defaults to the first categorical covariate.
    """

    input: str
    parts: list
    covariates: list = field(default_factory=list)
    categorical: dict = field(default_factory=dict)
    id_column: str = None
    k: int = 5
    weights: object = "average"
    alr_denominator: str = "auto"
    replicates: int = 10000
    seed: int = None
    output_dir: str = None
    formats: list = field(default_factory=lambda: ["json", "csv"])
    group: str = None
    pairwise_ratio: list = None
    slr_numerator: list = None
    slr_denominator: list = None
    subcomposition: list = None
    dirichlet_covariates: list = None
    composite_threshold: float = 40.0
    workers: int = 1

    def __post_init__(self):
        if not self.parts or len(self.parts) < 2:
            raise SchemaError("at least two part columns are required")
        if len(set(self.parts)) != len(self.parts):
            raise SchemaError("duplicate part columns")
        for name in self.categorical:
            if name not in self.covariates:
                raise SchemaError(f"categorical column {name!r} is not a covariate")
        if self.replicates and self.seed is None:
            raise ParameterError("a seed is mandatory when the bootstrap is enabled")
        if self.group is None and self.categorical:
            self.group = next(iter(self.categorical))
        if self.output_dir is None:
            self.output_dir = os.environ.get(OUTPUT_DIR_ENV, "simplexreg-output")
        if isinstance(self.weights, str) and self.weights not in ("average", "uniform"):
            raise ParameterError(f"unknown weights mode {self.weights!r}")
        unknown = set(self.formats) - {"json", "csv", "svg"}
        if unknown:
            raise ParameterError(f"unknown output formats {sorted(unknown)}")
        if self.dirichlet_covariates is None:
            self.dirichlet_covariates = list(self.covariates)

    def to_dict(self):
        return asdict(self)


def load_config(path, **overrides):
    """Read an :class:`AnalysisConfig` from a JSON file; keyword overrides win."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return AnalysisConfig(**data)


@dataclass(frozen=True, eq=False)
class Ingested:
    composition: object
    design: object
    covariates: dict
    report: dict


def _parse_float(text, row, column):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"row {row}, column {column!r}: cannot parse {text!r} as a number",
                         row=row, column=column) from None


def _is_missing(text):
    return text is None or text.strip() in ("", "NA", "NaN", "nan", "null")


def ingest_csv(path, config):
    """Read compositions and covariates from a UTF-8 CSV file.

    Part columns are closed to proportions. Categorical covariates are
    dummy-coded against their reference level and numeric covariates are
    used as they are. A row with a missing covariate is dropped with a
    warning. The ingestion report gives ``n``, ``D``, the zero count per
    part, the dropped rows, and whether the rows looked like percentages.

    Raises
    ------
    SchemaError
        Missing columns or no data rows.
    ParseError
        A part or numeric covariate cell is not a number.
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise SchemaError(f"{path} has no header row")
        needed = list(config.parts) + list(config.covariates)
        if config.id_column:
            needed.append(config.id_column)
        missing = [c for c in needed if c not in header]
        if missing:
            raise SchemaError(f"missing columns in {path.name}: {missing}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path.name} has a header but no data rows")

    values, covs, ids, dropped = [], {c: [] for c in config.covariates}, [], []
    for lineno, rec in enumerate(rows, start=2):
        cov_row = {}
        for c in config.covariates:
            if _is_missing(rec[c]):
                break
            if c in config.categorical:
                cov_row[c] = rec[c].strip()
            else:
                val = _parse_float(rec[c], lineno, c)
                if math.isnan(val):
                    break
                cov_row[c] = val
        else:
            parts = []
            for c in config.parts:
                if _is_missing(rec[c]):
                    raise ParseError(f"row {lineno}, column {c!r}: missing proportion",
                                     row=lineno, column=c)
                parts.append(_parse_float(rec[c], lineno, c))
            values.append(parts)
            for c, val in cov_row.items():
                covs[c].append(val)
            ids.append(rec[config.id_column] if config.id_column else str(lineno - 1))
            continue
        dropped.append(lineno)
    if dropped:
        warnings.warn(f"{len(dropped)} rows dropped for missing covariates: {dropped}",
                      RuntimeWarning, stacklevel=2)
    if not values:
        raise SchemaError("no rows left after dropping missing covariates")

    raw = np.array(values, dtype=float)
    if np.any(raw < 0):
        i, j = np.argwhere(raw < 0)[0]
        raise DomainError(f"negative proportion in sample {ids[i]!r}, column "
                          f"{config.parts[j]!r}")
    sums = raw.sum(axis=1)
    percent = bool(np.allclose(sums, 100.0, rtol=0, atol=1e-3))
    comp = close(raw, config.parts, ids, weights=config.weights)

    design = None
    if config.covariates:
        design = design_matrix({c: np.asarray(covs[c]) for c in config.covariates},
                               categorical=config.categorical)
    report = {
        "n": int(raw.shape[0]),
        "D": int(raw.shape[1]),
        "zero_counts": {p: int(z) for p, z in zip(config.parts, (raw == 0).sum(axis=0))},
        "dropped_rows": dropped,
        "percent_scale": percent,
        "row_sum_range": [float(sums.min()), float(sums.max())],
        "group_counts": ({str(k): int(v) for k, v in
                          zip(*np.unique(covs[config.group], return_counts=True))}
                         if config.group else {}),
    }
    return Ingested(comp, design, {c: np.asarray(v) for c, v in covs.items()}, report)


def write_compositions_csv(path, m, covariates=None, id_column="sample_id"):
    """Write compositions (and covariates) with round-trip float precision."""
    covariates = covariates or {}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([id_column, *m.part_names, *covariates])
        for i, sid in enumerate(m.sample_ids):
            cov_cells = [_cell(covariates[c][i]) for c in covariates]
            w.writerow([sid, *(repr(float(v)) for v in m.values[i]), *cov_cells])


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


@dataclass
class Table:
    """A named table written both as CSV and inside the JSON report."""

    name: str
    columns: list
    rows: list

    def records(self):
        return [{c: _jsonable(v) for c, v in zip(self.columns, row)} for row in self.rows]

    def to_json(self):
        return {"columns": list(self.columns), "rows": self.records()}

    def write_csv(self, directory):
        path = Path(directory) / f"{self.name}.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([_cell(v) for v in row])
        return path
