"""Record schemas, ordinal target binning, feature matrices and CSV I/O."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

MISSING = float("nan")

HOUSEHOLD_FIXED_COLUMNS = ["id", "lat", "lng", "income_monthly", "water_kl"]


def fmt_float(v) -> str:
    """Shortest round-trip decimal form; empty string for missing."""
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return ""
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lng: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise DataError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lng <= 180.0):
            raise DataError(f"longitude {self.lng} outside [-180, 180]")


@dataclass(frozen=True)
class HouseholdRecord:
    """One survey row: id, location, raw attributes, optional targets."""

    id: str
    location: GeoPoint
    attributes: dict
    income_monthly: float | None = None
    water_kl: float | None = None

    def __post_init__(self):
        if self.income_monthly is not None and self.income_monthly < 0:
            raise DataError(f"household {self.id}: negative income")
        if self.water_kl is not None and self.water_kl < 0:
            raise DataError(f"household {self.id}: negative water consumption")


@dataclass(frozen=True)
class OrdinalBinning:
    """Ordered class edges; class intervals are open below, closed above."""

    name: str
    edges: tuple
    class_labels: tuple

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        labels = tuple(str(c) for c in self.class_labels)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "class_labels", labels)
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ConfigError(f"binning {self.name}: edges must be strictly increasing")
        if len(labels) != len(edges) + 1:
            raise ConfigError(
                f"binning {self.name}: need {len(edges) + 1} labels, got {len(labels)}"
            )

    @property
    def n_classes(self) -> int:
        return len(self.edges) + 1

    def to_dict(self) -> dict:
        return {"name": self.name, "edges": list(self.edges), "labels": list(self.class_labels)}

    @classmethod
    def from_dict(cls, d: dict) -> "OrdinalBinning":
        return cls(name=d["name"], edges=tuple(d["edges"]), class_labels=tuple(d["labels"]))


def bin_target(value: float, binning: OrdinalBinning) -> int:
    """Class index of ``value``: the count of edges strictly below it.

    A value exactly on an edge falls in the lower class.
    """
    if value < 0:
        raise DataError(f"target value {value} is negative")
    return sum(1 for e in binning.edges if value > e)


@dataclass
class FeatureMatrix:
    """Named numeric features aligned to household ids; NaN marks missing."""

    row_ids: list
    column_names: list
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.row_ids), len(self.column_names)):
            raise DataError(
                f"value shape {self.values.shape} does not match "
                f"{len(self.row_ids)} rows x {len(self.column_names)} columns"
            )
        if len(set(self.row_ids)) != len(self.row_ids):
            raise DataError("duplicate row ids in feature matrix")
        if len(set(self.column_names)) != len(self.column_names):
            raise DataError("duplicate column names in feature matrix")

    @property
    def n_rows(self) -> int:
        return len(self.row_ids)

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise DataError(f"unknown feature column {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.column_index(name)]

    def select_rows(self, ids) -> "FeatureMatrix":
        pos = {rid: i for i, rid in enumerate(self.row_ids)}
        idx = [pos[r] for r in ids]
        return FeatureMatrix(list(ids), list(self.column_names), self.values[idx])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["id"] + list(self.column_names))
            for rid, row in zip(self.row_ids, self.values):
                w.writerow([rid] + [fmt_float(v) for v in row])

    @classmethod
    def from_csv(cls, path) -> "FeatureMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            if not header or header[0] != "id":
                raise DataError(f"{path}: first column must be 'id'")
            cols = header[1:]
            ids, rows = [], []
            for lineno, rec in enumerate(r, start=2):
                if len(rec) != len(header):
                    raise DataError(f"{path}:{lineno}: expected {len(header)} fields")
                ids.append(rec[0])
                rows.append([float(v) if v != "" else MISSING for v in rec[1:]])
            values = np.array(rows, dtype=np.float64).reshape(len(ids), len(cols))
        return cls(ids, cols, values)


@dataclass
class LabeledDataset:
    features: FeatureMatrix
    labels: np.ndarray
    binning: OrdinalBinning

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.labels) != self.features.n_rows:
            raise DataError("label count does not match feature rows")
        if len(self.labels) and self.labels.max() >= self.binning.n_classes:
            raise DataError("label exceeds class count")


UNSEEN = "__unseen__"


class SurveyEncoder:
    """One-hot encoder for survey attributes with an explicit unseen bucket.

    Categories are learned from the records passed to :meth:`fit`; numeric
    attributes pass through as single columns.
    """

    def __init__(self, attribute_names):
        self.attribute_names = sorted(attribute_names)
        self.categories: dict = {}
        self.numeric: set = set()
        self._fitted = False

    @staticmethod
    def _as_number(v):
        if v is None or v == "":
            return MISSING
        try:
            return float(v)
        except (TypeError, ValueError):
            return None

    def fit(self, records) -> "SurveyEncoder":
        for attr in self.attribute_names:
            seen = [r.attributes[attr] for r in records if attr in r.attributes]
            present = [v for v in seen if v is not None and v != ""]
            if not seen:
                raise ConfigError(f"attribute {attr!r} absent from all records")
            as_num = [self._as_number(v) for v in present]
            if present and all(x is not None for x in as_num):
                self.numeric.add(attr)
            else:
                self.categories[attr] = sorted({str(v) for v in present})
        self._fitted = True
        return self

    @property
    def column_names(self):
        cols = []
        for attr in self.attribute_names:
            if attr in self.numeric:
                cols.append(f"survey:{attr}")
            else:
                for cat in self.categories[attr]:
                    cols.append(f"survey:{attr}={cat}")
                cols.append(f"survey:{attr}={UNSEEN}")
        return cols

    def transform(self, records) -> FeatureMatrix:
        if not self._fitted:
            raise ConfigError("encoder not fitted")
        cols = self.column_names
        values = np.zeros((len(records), len(cols)), dtype=np.float64)
        j = 0
        for attr in self.attribute_names:
            if attr in self.numeric:
                for i, r in enumerate(records):
                    v = self._as_number(r.attributes.get(attr))
                    values[i, j] = MISSING if v is None else v
                j += 1
            else:
                cats = self.categories[attr]
                index = {c: k for k, c in enumerate(cats)}
                for i, r in enumerate(records):
                    v = r.attributes.get(attr)
                    key = "" if v is None else str(v)
                    k = index.get(key, len(cats))  # unseen / missing bucket
                    values[i, j + k] = 1.0
                j += len(cats) + 1
        return FeatureMatrix([r.id for r in records], cols, values)


def one_hot_encode(records, attribute_names) -> FeatureMatrix:
    """Fit and apply a :class:`SurveyEncoder` on the same records."""
    return SurveyEncoder(attribute_names).fit(records).transform(records)


def join_features(matrices, policy: str = "inner") -> FeatureMatrix:
    """Join matrices on row id. ``inner`` keeps the intersection, ``left``
    keeps the first matrix's rows with NaN for absent cells."""
    if not matrices:
        raise DataError("join requires at least one matrix")
    if policy not in ("inner", "left"):
        raise ConfigError(f"unknown join policy {policy!r}")
    all_cols = [c for m in matrices for c in m.column_names]
    if len(set(all_cols)) != len(all_cols):
        raise DataError("column name collision across joined matrices")

    first = matrices[0]
    if policy == "inner":
        keep = set(first.row_ids)
        for m in matrices[1:]:
            keep &= set(m.row_ids)
        row_ids = [r for r in first.row_ids if r in keep]
    else:
        row_ids = list(first.row_ids)

    blocks = []
    for m in matrices:
        pos = {rid: i for i, rid in enumerate(m.row_ids)}
        block = np.full((len(row_ids), len(m.column_names)), MISSING)
        for i, rid in enumerate(row_ids):
            if rid in pos:
                block[i] = m.values[pos[rid]]
        blocks.append(block)
    values = np.hstack(blocks) if blocks else np.zeros((len(row_ids), 0))
    return FeatureMatrix(row_ids, all_cols, values)


def read_households(path) -> list:
    """Parse ``households.csv``: fixed columns then free-form attributes."""
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.DictReader(fh)
        if r.fieldnames is None or r.fieldnames[:5] != HOUSEHOLD_FIXED_COLUMNS:
            raise DataError(
                f"{path}: header must start with {','.join(HOUSEHOLD_FIXED_COLUMNS)}"
            )
        attr_cols = r.fieldnames[5:]
        records = []
        seen = set()
        for lineno, row in enumerate(r, start=2):
            rid = row["id"]
            if rid in seen:
                raise DataError(f"{path}:{lineno}: duplicate id {rid!r}")
            seen.add(rid)
            try:
                rec = HouseholdRecord(
                    id=rid,
                    location=GeoPoint(float(row["lat"]), float(row["lng"])),
                    attributes={a: row[a] for a in attr_cols},
                    income_monthly=float(row["income_monthly"]) if row["income_monthly"] else None,
                    water_kl=float(row["water_kl"]) if row["water_kl"] else None,
                )
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            records.append(rec)
    return records


def write_households(records, path, attribute_names=None) -> None:
    if attribute_names is None:
        attribute_names = sorted({a for r in records for a in r.attributes})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(HOUSEHOLD_FIXED_COLUMNS + list(attribute_names))
        for r in records:
            w.writerow(
                [
                    r.id,
                    fmt_float(r.location.lat),
                    fmt_float(r.location.lng),
                    fmt_float(r.income_monthly),
                    fmt_float(r.water_kl),
                ]
                + [r.attributes.get(a, "") for a in attribute_names]
            )


def make_labeled_dataset(records, features: FeatureMatrix, binning: OrdinalBinning,
                         target: str) -> LabeledDataset:
    """Attach binned targets to feature rows; rows lacking the target are dropped."""
    if target not in ("water", "income"):
        raise ConfigError(f"unknown target {target!r}")
    raw = {}
    for r in records:
        v = r.water_kl if target == "water" else r.income_monthly
        if v is not None:
            raw[r.id] = v
    keep = [i for i, rid in enumerate(features.row_ids) if rid in raw]
    ids = [features.row_ids[i] for i in keep]
    labels = np.array([bin_target(raw[rid], binning) for rid in ids], dtype=np.int64)
    sub = FeatureMatrix(ids, list(features.column_names), features.values[keep])
    return LabeledDataset(sub, labels, binning)
