"""Post-fine-tuning performance tables.

CSV interchange format: header ``model_id,dataset_id,score``; scores are
FID-scale non-negative reals, lower is better. Pre-fine-tuning scores use
the same format in a separate file and attach as ``initial``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError, InputError
from .ioutil import write_text_atomic

CSV_HEADER = ["model_id", "dataset_id", "score"]


@dataclass(frozen=True)
class PerfTable:
    """Map (model_id, dataset_id) -> score, with optional initial scores."""

    scores: dict[tuple[str, str], float]
    initial: dict[tuple[str, str], float] | None = field(default=None)

    def __post_init__(self) -> None:
        for (m, d), s in self.scores.items():
            if not isinstance(s, float) or s != s or s in (float("inf"), float("-inf")):
                raise InputError(f"non-finite score for ({m}, {d}): {s!r}")
            if s < 0.0:
                raise InputError(f"negative score for ({m}, {d}): {s!r}")

    def model_ids(self) -> list[str]:
        return sorted({m for m, _ in self.scores})

    def dataset_ids(self) -> list[str]:
        return sorted({d for _, d in self.scores})

    def score(self, model_id: str, dataset_id: str) -> float:
        return self.scores[(model_id, dataset_id)]

    def column(self, dataset_id: str) -> dict[str, float]:
        """Scores of every model recorded for one dataset."""
        return {m: s for (m, d), s in self.scores.items() if d == dataset_id}

    def without_dataset(self, dataset_id: str) -> "PerfTable":
        """Copy with every (model, dataset_id) entry removed."""
        kept = {k: v for k, v in self.scores.items() if k[1] != dataset_id}
        init = None
        if self.initial is not None:
            init = dict(self.initial)
        return PerfTable(scores=kept, initial=init)

    def restrict_datasets(self, dataset_ids) -> "PerfTable":
        keep = set(dataset_ids)
        kept = {k: v for k, v in self.scores.items() if k[1] in keep}
        init = None
        if self.initial is not None:
            init = {k: v for k, v in self.initial.items() if k[1] in keep}
        return PerfTable(scores=kept, initial=init)

    def mean_scores(self) -> dict[str, float]:
        """Per-model mean score over the datasets it is recorded on."""
        sums: dict[str, float] = {}
        counts: dict[str, int] = {}
        for (m, _), s in self.scores.items():
            sums[m] = sums.get(m, 0.0) + s
            counts[m] = counts.get(m, 0) + 1
        return {m: sums[m] / counts[m] for m in sums}


def _parse_perf_csv(text: str, origin: str) -> dict[tuple[str, str], float]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{origin}: empty file") from None
    if [h.strip() for h in header] != CSV_HEADER:
        raise FormatError(f"{origin}: expected header {','.join(CSV_HEADER)!r}, got {header!r}")
    entries: dict[tuple[str, str], float] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise FormatError(f"{origin}:{lineno}: expected 3 fields, got {len(row)}")
        model_id, dataset_id, raw = row[0].strip(), row[1].strip(), row[2].strip()
        try:
            score = float(raw)
        except ValueError:
            raise FormatError(f"{origin}:{lineno}: unparsable score {raw!r}") from None
        if score != score or score in (float("inf"), float("-inf")):
            raise FormatError(f"{origin}:{lineno}: non-finite score")
        key = (model_id, dataset_id)
        if key in entries:
            raise FormatError(f"{origin}:{lineno}: duplicate entry for {key}")
        entries[key] = score
    if not entries:
        raise FormatError(f"{origin}: no data rows")
    return entries


def load_perf_csv(path: str | Path, initial_path: str | Path | None = None) -> PerfTable:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"missing performance table {path}")
    scores = _parse_perf_csv(path.read_text(encoding="utf-8"), str(path))
    initial = None
    if initial_path is not None:
        initial_path = Path(initial_path)
        if not initial_path.is_file():
            raise FormatError(f"missing initial-score table {initial_path}")
        initial = _parse_perf_csv(initial_path.read_text(encoding="utf-8"), str(initial_path))
    return PerfTable(scores=scores, initial=initial)


def _format_perf_csv(entries: dict[tuple[str, str], float]) -> str:
    lines = [",".join(CSV_HEADER)]
    for (m, d) in sorted(entries):
        lines.append(f"{m},{d},{float(entries[(m, d)])!r}")
    return "\n".join(lines) + "\n"


def save_perf_csv(table: PerfTable, path: str | Path, initial_path: str | Path | None = None) -> None:
    write_text_atomic(path, _format_perf_csv(table.scores))
    if initial_path is not None:
        if table.initial is None:
            raise InputError("table has no initial scores to save")
        write_text_atomic(initial_path, _format_perf_csv(table.initial))
