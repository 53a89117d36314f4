"""Fixed-length numeric encodings for model cards, dataset statistics, and
predictor input rows.

A schema is fitted on the whole zoo once: numeric hyperparameters are
z-scored against zoo population statistics, categorical/boolean ones are
one-hot encoded over the observed categories, and keys that never vary are
dropped. Column order is deterministic: the numeric block first (keys
lexicographic, each key's missing-indicator column directly after it when
the key is absent somewhere in the zoo), then the one-hot block
(lexicographic by key, then category).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import FormatError, InputError
from .ioutil import read_json, write_json_atomic
from .stats import EmbeddingStats

MANDATORY_KEYS = ("num_params", "throughput_flops")
MISSING_CATEGORY = "∅"

HyperValue = float | int | bool | str


@dataclass(frozen=True)
class ModelCard:
    model_id: str
    hyperparams: Mapping[str, HyperValue]
    throughput_flops: float
    num_params: float

    def __post_init__(self) -> None:
        if not self.model_id:
            raise InputError("model_id must be non-empty")
        for bad in MANDATORY_KEYS:
            if bad in self.hyperparams:
                raise InputError(f"{bad} belongs at card top level, not in hyperparams")
        if not (self.throughput_flops > 0 and np.isfinite(self.throughput_flops)):
            raise InputError(f"throughput_flops must be positive, got {self.throughput_flops}")
        if not (self.num_params > 0 and np.isfinite(self.num_params)):
            raise InputError(f"num_params must be positive, got {self.num_params}")

    def lookup(self, key: str) -> HyperValue | None:
        if key == "num_params":
            return self.num_params
        if key == "throughput_flops":
            return self.throughput_flops
        return self.hyperparams.get(key)


@dataclass(frozen=True)
class NumericColumn:
    key: str
    mean: float
    std: float


@dataclass(frozen=True)
class IndicatorColumn:
    key: str


@dataclass(frozen=True)
class OneHotColumn:
    key: str
    category: str


Column = NumericColumn | IndicatorColumn | OneHotColumn


def _is_numeric(v: HyperValue) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _category(v: HyperValue) -> str:
    return str(v)


@dataclass(frozen=True)
class FeatureSchema:
    columns: tuple[Column, ...]

    @property
    def width(self) -> int:
        return len(self.columns)

    def encode(self, card: ModelCard) -> np.ndarray:
        out = np.zeros(self.width)
        for i, col in enumerate(self.columns):
            v = card.lookup(col.key)
            if isinstance(col, NumericColumn):
                if v is None or not _is_numeric(v):
                    continue  # stays 0; the indicator column carries absence
                if col.std > 0:
                    out[i] = (float(v) - col.mean) / col.std
            elif isinstance(col, IndicatorColumn):
                if v is None or not _is_numeric(v):
                    out[i] = 1.0
            else:
                cat = MISSING_CATEGORY if v is None else _category(v)
                if cat == col.category:
                    out[i] = 1.0
        return out

    def to_json_dict(self) -> dict:
        cols = []
        for col in self.columns:
            if isinstance(col, NumericColumn):
                cols.append({"kind": "numeric", "key": col.key, "mean": col.mean, "std": col.std})
            elif isinstance(col, IndicatorColumn):
                cols.append({"kind": "indicator", "key": col.key})
            else:
                cols.append({"kind": "onehot", "key": col.key, "category": col.category})
        return {"columns": cols}

    @staticmethod
    def from_json_dict(d: dict) -> "FeatureSchema":
        try:
            cols: list[Column] = []
            for c in d["columns"]:
                kind = c["kind"]
                if kind == "numeric":
                    cols.append(NumericColumn(c["key"], float(c["mean"]), float(c["std"])))
                elif kind == "indicator":
                    cols.append(IndicatorColumn(c["key"]))
                elif kind == "onehot":
                    cols.append(OneHotColumn(c["key"], c["category"]))
                else:
                    raise FormatError(f"unknown column kind {kind!r}")
            return FeatureSchema(columns=tuple(cols))
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"malformed feature schema: {e}") from e


def fit_schema(cards: Sequence[ModelCard]) -> FeatureSchema:
    """Fit the zoo-wide encoding.

    A key is numeric when every present value is a non-boolean number;
    anything else (booleans, strings, mixed types) is categorical with
    missing mapped to a dedicated category. Keys whose (present, value)
    pattern is identical on all cards are dropped, except the mandatory
    numeric fields which always get columns.
    """
    if len(cards) < 2:
        raise InputError(f"need at least 2 cards to fit a schema, got {len(cards)}")
    ids = [c.model_id for c in cards]
    if len(set(ids)) != len(ids):
        raise InputError("duplicate model_id in zoo")

    keys = sorted({k for c in cards for k in c.hyperparams} | set(MANDATORY_KEYS))
    numeric_cols: list[Column] = []
    onehot_cols: list[OneHotColumn] = []
    for key in keys:
        values = [c.lookup(key) for c in cards]
        mandatory = key in MANDATORY_KEYS
        if not mandatory and len({(v is None, None if v is None else _category(v)) for v in values}) == 1:
            continue
        if all(v is None or _is_numeric(v) for v in values):
            present = np.array([float(v) for v in values if v is not None])
            if present.size == 0:
                continue
            numeric_cols.append(NumericColumn(key, float(present.mean()), float(present.std())))
            if any(v is None for v in values):
                numeric_cols.append(IndicatorColumn(key))
        else:
            cats = sorted({MISSING_CATEGORY if v is None else _category(v) for v in values})
            onehot_cols.extend(OneHotColumn(key, cat) for cat in cats)
    return FeatureSchema(columns=tuple(numeric_cols) + tuple(onehot_cols))


def encode_model(card: ModelCard, schema: FeatureSchema) -> np.ndarray:
    return schema.encode(card)


def dataset_feature(stats: EmbeddingStats) -> np.ndarray:
    return stats.mean.copy()


@dataclass(frozen=True)
class TrainingRow:
    input: np.ndarray
    label: int | None
    model_id: str
    dataset_id: str
    segments: tuple[int, int, int] = field(default=(0, 0, 0))

    def __post_init__(self) -> None:
        if self.label is not None and self.label < 1:
            raise InputError(f"rank label must be >= 1, got {self.label}")
        if sum(self.segments) != self.input.size:
            raise InputError(
                f"segment widths {self.segments} do not add up to input length {self.input.size}"
            )


def assemble_row(
    model_vec: np.ndarray,
    dataset_vec: np.ndarray,
    edge_vec: np.ndarray,
    label: int | None = None,
    model_id: str = "",
    dataset_id: str = "",
) -> TrainingRow:
    parts = [np.asarray(p, dtype=np.float64).ravel() for p in (model_vec, dataset_vec, edge_vec)]
    vec = np.concatenate(parts)
    if not np.all(np.isfinite(vec)):
        raise InputError("row segments must be finite")
    return TrainingRow(
        input=vec,
        label=label,
        model_id=model_id,
        dataset_id=dataset_id,
        segments=(parts[0].size, parts[1].size, parts[2].size),
    )


def save_model_card(card: ModelCard, path: str | Path) -> None:
    write_json_atomic(
        path,
        {
            "model_id": card.model_id,
            "hyperparams": dict(sorted(card.hyperparams.items())),
            "throughput_flops": card.throughput_flops,
            "num_params": card.num_params,
        },
    )


def load_model_card(path: str | Path) -> ModelCard:
    d = read_json(path)
    try:
        hp = d["hyperparams"]
        if not isinstance(hp, dict):
            raise FormatError(f"hyperparams must be an object in {path}")
        for k, v in hp.items():
            if not isinstance(v, (int, float, bool, str)):
                raise FormatError(f"unsupported hyperparam type for {k!r} in {path}")
        return ModelCard(
            model_id=str(d.get("model_id") or Path(path).stem),
            hyperparams=hp,
            throughput_flops=float(d["throughput_flops"]),
            num_params=float(d["num_params"]),
        )
    except InputError as e:
        raise FormatError(str(e)) from e
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed model card {path}: {e}") from e


def load_zoo(zoo_dir: str | Path) -> list[ModelCard]:
    """All *.json cards under zoo_dir, sorted by model_id."""
    paths = sorted(Path(zoo_dir).glob("*.json"))
    if not paths:
        raise InputError(f"no model cards found in {zoo_dir}")
    cards = [load_model_card(p) for p in paths]
    ids = [c.model_id for c in cards]
    if len(set(ids)) != len(ids):
        raise FormatError(f"duplicate model_id among cards in {zoo_dir}")
    return sorted(cards, key=lambda c: c.model_id)


def save_schema(schema: FeatureSchema, path: str | Path) -> None:
    write_json_atomic(path, schema.to_json_dict())


def load_schema(path: str | Path) -> FeatureSchema:
    return FeatureSchema.from_json_dict(read_json(path))
