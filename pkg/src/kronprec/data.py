"""Replicate tensors, word metadata and trial residualization.

A replicate tensor holds pitch values ``X[i, j, r, t]`` for speaker ``i``,
word ``j``, trial ``r`` and time point ``t``.  Trials are replicates nested in
speaker x word; residualization subtracts the per-speaker trial mean so each
``(speaker, trial)`` slice becomes a mean-zero ``n_w x n_t`` matrix.
"""
from __future__ import annotations

import csv
import os
import warnings
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadEnum,
    DuplicateCell,
    IndexOutOfRange,
    MissingAttribute,
    MissingCell,
    MissingWord,
    NonNumericValue,
    RaggedTimeAxis,
    TooFewWords,
    UnknownWord,
    ValidationError,
)

TENSOR_COLUMNS = ("speaker", "word", "trial", "time", "value")
RESIDUAL_VALUE_COLUMN = "residual"

VOWEL_LENGTHS = frozenset({"long", "short"})
CONSONANT_CLASSES = frozenset({"labial", "alveolar", "nasal", "fricative"})
METADATA_COLUMNS = (
    "word",
    "vowel",
    "vowel_length",
    "onset",
    "coda_first",
    "coda_last",
    "consonant_class",
)


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ReplicateTensor:
    """Pitch values indexed ``(speaker, word, trial, time)``."""

    values: np.ndarray
    speaker_ids: tuple[str, ...]
    word_ids: tuple[str, ...]

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.ndim != 4:
            raise ValidationError(f"expected a 4-index array, got shape {values.shape}")
        if min(values.shape) < 1:
            raise ValidationError(f"all axis lengths must be >= 1, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonNumericValue("tensor contains non-finite values")
        speakers = tuple(str(s) for s in self.speaker_ids)
        words = tuple(str(w) for w in self.word_ids)
        for name, labels, n in (("speaker", speakers, values.shape[0]), ("word", words, values.shape[1])):
            if len(labels) != n:
                raise ValidationError(f"{len(labels)} {name} labels for axis of length {n}")
            if len(set(labels)) != n:
                raise ValidationError(f"{name} labels are not unique")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "speaker_ids", speakers)
        object.__setattr__(self, "word_ids", words)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.values.shape

    @property
    def n_s(self) -> int:
        return self.values.shape[0]

    @property
    def n_w(self) -> int:
        return self.values.shape[1]

    @property
    def n_r(self) -> int:
        return self.values.shape[2]

    @property
    def n_t(self) -> int:
        return self.values.shape[3]

    def slice(self, speaker: int, trial: int) -> np.ndarray:
        """The ``n_w x n_t`` matrix for one speaker and trial."""
        return self.values[speaker, :, trial, :]

    def _replace(self, values: np.ndarray, word_ids: Sequence[str] | None = None):
        return type(self)(
            values, self.speaker_ids, self.word_ids if word_ids is None else tuple(word_ids)
        )


class ResidualTensor(ReplicateTensor):
    """A replicate tensor whose trial means are zero (up to rounding)."""


@dataclass(frozen=True)
class WordRecord:
    word: str
    vowel: str
    vowel_length: str
    onset: str
    coda_first: str
    coda_last: str
    consonant_class: str
    extra: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.vowel_length not in VOWEL_LENGTHS:
            raise BadEnum(
                f"word {self.word!r}: vowel_length {self.vowel_length!r} not in {sorted(VOWEL_LENGTHS)}"
            )
        if self.consonant_class not in CONSONANT_CLASSES:
            raise BadEnum(
                f"word {self.word!r}: consonant_class {self.consonant_class!r} "
                f"not in {sorted(CONSONANT_CLASSES)}"
            )

    def attribute(self, name: str) -> str:
        if name in METADATA_COLUMNS:
            return getattr(self, name)
        try:
            return self.extra[name]
        except KeyError:
            raise MissingAttribute(f"word {self.word!r} has no attribute {name!r}") from None


@dataclass(frozen=True)
class WordMetadata:
    """Per-word linguistic attributes, keyed by word label.

    Columns beyond the required ones are kept in ``WordRecord.extra``; this is
    how merged groupings (e.g. an onset alias column joining ``m`` and ``n``)
    are supplied.
    """

    records: Mapping[str, WordRecord]

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(self.records)

    @property
    def attribute_names(self) -> tuple[str, ...]:
        extra: dict[str, None] = {}
        for rec in self.records.values():
            extra.update(dict.fromkeys(rec.extra))
        return METADATA_COLUMNS[1:] + tuple(extra)

    def __contains__(self, word: str) -> bool:
        return word in self.records

    def __getitem__(self, word: str) -> WordRecord:
        try:
            return self.records[word]
        except KeyError:
            raise MissingWord(f"no metadata for word {word!r}") from None

    def attribute(self, word: str, name: str) -> str:
        return self[word].attribute(name)

    def check_coverage(self, words: Iterable[str]) -> None:
        """Raise for tensor words without metadata; warn about unused metadata rows."""
        words = list(words)
        missing = [w for w in words if w not in self.records]
        if missing:
            raise MissingWord(f"metadata lacks words: {', '.join(missing)}")
        unknown = sorted(set(self.records) - set(words))
        if unknown:
            warnings.warn(f"metadata words not in tensor: {', '.join(unknown)}", UnknownWord, stacklevel=2)


# --------------------------------------------------------------------------
# ingestion


def _open_csv(path):
    return open(path, newline="", encoding="utf-8-sig")


def _parse_int(raw: str, what: str, lineno: int) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise NonNumericValue(f"line {lineno}: {what} {raw!r} is not an integer") from None


def _parse_float(raw: str, lineno: int) -> float:
    try:
        value = float(raw.strip())
    except ValueError:
        raise NonNumericValue(f"line {lineno}: value {raw!r} is not numeric") from None
    if not np.isfinite(value):
        raise NonNumericValue(f"line {lineno}: value {raw!r} is not finite")
    return value


def _build_tensor(rows: Iterable[tuple[int, str, str, int, int, float]], residual: bool) -> ReplicateTensor:
    speakers: dict[str, int] = {}
    words: dict[str, int] = {}
    trials: set[int] = set()
    times: set[int] = set()
    cells: dict[tuple[str, str, int, int], float] = {}
    for lineno, s, w, r, t, v in rows:
        key = (s, w, r, t)
        if key in cells:
            raise DuplicateCell(f"line {lineno}: duplicate cell speaker={s} word={w} trial={r} time={t}")
        cells[key] = v
        speakers.setdefault(s, len(speakers))
        words.setdefault(w, len(words))
        trials.add(r)
        times.add(t)
    if not cells:
        raise MissingCell("tensor file has no data rows")
    n_t = len(times)
    if times != set(range(1, n_t + 1)):
        raise RaggedTimeAxis(f"time indices must be 1..{n_t}, got {sorted(times)}")
    trial_order = sorted(trials)
    values = np.empty((len(speakers), len(words), len(trial_order), n_t))
    for i, s in enumerate(speakers):
        for j, w in enumerate(words):
            for k, r in enumerate(trial_order):
                for t in range(1, n_t + 1):
                    try:
                        values[i, j, k, t - 1] = cells[(s, w, r, t)]
                    except KeyError:
                        raise MissingCell(
                            f"missing cell speaker={s} word={w} trial={r} time={t}"
                        ) from None
    cls = ResidualTensor if residual else ReplicateTensor
    return cls(values, tuple(speakers), tuple(words))


def load_tensor(path: str | os.PathLike, schema: Mapping[str, str] | None = None) -> ReplicateTensor:
    """Read a long-format tensor CSV.

    ``schema`` maps the logical columns ``speaker, word, trial, time, value``
    to header names in the file.  A file whose value column is named
    ``residual`` (as written by :func:`write_tensor` for residuals) loads as a
    :class:`ResidualTensor`.
    """
    schema = dict(schema or {})
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingCell(f"{path}: empty file") from None
        residual = False
        if "value" not in schema and "value" not in header and RESIDUAL_VALUE_COLUMN in header:
            schema["value"] = RESIDUAL_VALUE_COLUMN
            residual = True
        cols = {}
        for name in TENSOR_COLUMNS:
            col = schema.get(name, name)
            if col not in header:
                raise ValidationError(f"{path}: missing column {col!r} (header: {header})")
            cols[name] = header.index(col)

        def rows():
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) < len(header):
                    raise MissingCell(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
                yield (
                    lineno,
                    row[cols["speaker"]].strip(),
                    row[cols["word"]].strip(),
                    _parse_int(row[cols["trial"]], "trial", lineno),
                    _parse_int(row[cols["time"]], "time", lineno),
                    _parse_float(row[cols["value"]], lineno),
                )

        return _build_tensor(rows(), residual)


def load_wide_tensor(path: str | os.PathLike) -> ReplicateTensor:
    """Read a wide CSV: ``speaker,word,trial`` followed by one column per time point.

    Rows are converted to long form and go through the same completeness checks
    as :func:`load_tensor`.
    """
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header[:3] != ["speaker", "word", "trial"] or len(header) < 4:
            raise ValidationError(f"{path}: wide header must start with speaker,word,trial then time columns")
        n_t = len(header) - 3

        def rows():
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise MissingCell(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
                s, w = row[0].strip(), row[1].strip()
                r = _parse_int(row[2], "trial", lineno)
                for t in range(n_t):
                    yield lineno, s, w, r, t + 1, _parse_float(row[3 + t], lineno)

        return _build_tensor(rows(), residual=False)


def write_tensor(t: ReplicateTensor, path: str | os.PathLike) -> None:
    """Write long-format CSV; trials and times are renumbered from 1."""
    value_col = RESIDUAL_VALUE_COLUMN if isinstance(t, ResidualTensor) else "value"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(TENSOR_COLUMNS[:4] + (value_col,))
        for i, s in enumerate(t.speaker_ids):
            for j, w in enumerate(t.word_ids):
                for r in range(t.n_r):
                    for k in range(t.n_t):
                        out.writerow((s, w, r + 1, k + 1, format(t.values[i, j, r, k], ".17g")))


def load_metadata(path: str | os.PathLike, words: Iterable[str] | None = None) -> WordMetadata:
    """Read the word metadata CSV; with ``words``, also check coverage."""
    records: dict[str, WordRecord] = {}
    with _open_csv(path) as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in METADATA_COLUMNS if c not in header]
        if missing:
            raise ValidationError(f"{path}: metadata missing columns {missing}")
        reader.fieldnames = header
        for lineno, row in enumerate(reader, start=2):
            row = {k: (v or "").strip() for k, v in row.items() if k is not None}
            word = row["word"]
            if not word:
                continue
            if word in records:
                raise ValidationError(f"line {lineno}: duplicate metadata row for {word!r}")
            extra = {k: v for k, v in row.items() if k not in METADATA_COLUMNS}
            records[word] = WordRecord(**{c: row[c] for c in METADATA_COLUMNS}, extra=extra)
    meta = WordMetadata(records)
    if words is not None:
        meta.check_coverage(words)
    return meta


# --------------------------------------------------------------------------
# trial means and residuals


def trial_mean(t: ReplicateTensor, speaker: int) -> np.ndarray:
    """Mean over trials for one speaker, shape ``(n_w, n_t)``."""
    if not 0 <= speaker < t.n_s:
        raise IndexOutOfRange(f"speaker index {speaker} out of range 0..{t.n_s - 1}")
    return t.values[speaker].mean(axis=1)


def residualize(t: ReplicateTensor) -> ResidualTensor:
    """Subtract each speaker's trial mean from every trial.

    Residualizing a :class:`ResidualTensor` returns it unchanged.
    """
    if isinstance(t, ResidualTensor):
        return t
    means = t.values.mean(axis=2, keepdims=True)
    return ResidualTensor(t.values - means, t.speaker_ids, t.word_ids)


def _as_predicate(predicate) -> Callable[[WordRecord], bool]:
    if callable(predicate):
        return predicate
    allowed = {
        name: {value} if isinstance(value, str) else set(value) for name, value in predicate.items()
    }
    return lambda rec: all(rec.attribute(name) in values for name, values in allowed.items())


def subset_words(t: ReplicateTensor, m: WordMetadata, predicate) -> ReplicateTensor:
    """Restrict the word axis to words whose metadata satisfies ``predicate``.

    ``predicate`` is either a callable on :class:`WordRecord` or a mapping
    ``{attribute: value or collection of values}`` (all attributes must match).
    """
    keep = _as_predicate(predicate)
    idx = [j for j, w in enumerate(t.word_ids) if keep(m[w])]
    if len(idx) < 2:
        raise TooFewWords(f"filter selects {len(idx)} word(s); at least 2 are required")
    return t._replace(t.values[:, idx], [t.word_ids[j] for j in idx])


def time_labels(n_t: int) -> tuple[str, ...]:
    return tuple(f"t{k}" for k in range(1, n_t + 1))
