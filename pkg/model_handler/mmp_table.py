"""MMP data model: the subject-level binary table, its per-set 2x2 counts, and
the beta -> theta -> rho transform shared by every sampler.

Column order of ``x`` is (j=1, k=1..K, j=2, k=1..K). In the SOC data j=1 is
primary care and j=2 is specialty care.

Per-set counts follow the layout of the population-averaged tables: the first
index is the specialty-care (j=2) answer, the second the primary-care (j=1)
answer, and 1 means "yes". So ``n21`` counts pairs where primary care said yes
and specialty care said no, and ``theta_1k = (n11 + n21) / n``.
"""

import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.special import ndtr

from eval_checker.custom_exception import (
    DataFormatError,
    DimensionError,
    LabelCollisionError,
    PreconditionError,
)
from model_handler.constant import OBSERVATION_LABELS

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SOC_PATTERN_FILE = os.path.join(ROOT, "data", "soc_patterns.csv")

WIDE_LAYOUT = "wide"
PATTERN_COUNT_LAYOUT = "pattern-counts"
COUNT_COLUMN = "count"


def _frozen(array, dtype):
    array = np.array(array, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class MatchedBinaryTable:
    x: np.ndarray
    set_labels: tuple
    observation_labels: tuple = OBSERVATION_LABELS

    def __post_init__(self):
        x = np.asarray(self.x)
        if x.ndim != 2:
            raise DimensionError(f"x must be a matrix, got {x.ndim} dimension(s).")
        if x.shape[0] == 0:
            raise DataFormatError("no subjects")
        if x.shape[1] % 2 != 0:
            raise DimensionError(f"expected 2K columns, got {x.shape[1]}.")
        if not np.isin(x, (0, 1)).all():
            raise DataFormatError("every response must be 0 or 1")
        labels = tuple(str(label) for label in self.set_labels)
        if len(labels) != x.shape[1] // 2:
            raise DimensionError(f"{len(labels)} set labels for {x.shape[1] // 2} sets.")
        duplicates = {label for label in labels if labels.count(label) > 1}
        if duplicates:
            raise LabelCollisionError(duplicates)
        if len(self.observation_labels) != 2:
            raise DimensionError("exactly two observation labels are required.")
        object.__setattr__(self, "x", _frozen(x, np.int8))
        object.__setattr__(self, "set_labels", labels)
        object.__setattr__(self, "observation_labels", tuple(self.observation_labels))

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def K(self):
        return self.x.shape[1] // 2

    @property
    def column_labels(self):
        return [f"j{j}_{label}" for j in (1, 2) for label in self.set_labels]

    def differences(self):
        """Pre-differenced outcomes d_ik = x_i1k - x_i2k, shape (n, K)."""
        x = self.x.astype(np.int64)
        return x[:, : self.K] - x[:, self.K :]

    def column_means(self):
        return self.x.mean(axis=0)

    def permuted(self, order):
        return MatchedBinaryTable(self.x[np.asarray(order)], self.set_labels, self.observation_labels)

    def to_frame(self):
        return pd.DataFrame(self.x, columns=self.column_labels)


@dataclass(frozen=True)
class PairedCounts:
    n11: np.ndarray
    n12: np.ndarray
    n21: np.ndarray
    n22: np.ndarray
    set_labels: tuple

    def __post_init__(self):
        cells = [np.asarray(getattr(self, name)) for name in ("n11", "n12", "n21", "n22")]
        shape = cells[0].shape
        if any(cell.shape != shape for cell in cells) or len(shape) != 1:
            raise DimensionError("all four cell vectors must have length K.")
        if any((cell < 0).any() for cell in cells):
            raise DataFormatError("cell counts must be nonnegative")
        totals = sum(cells)
        if len(totals) and not (totals == totals[0]).all():
            raise DataFormatError("every set must total the same number of subjects")
        if len(self.set_labels) != shape[0]:
            raise DimensionError(f"{len(self.set_labels)} set labels for {shape[0]} sets.")
        for name, cell in zip(("n11", "n12", "n21", "n22"), cells):
            object.__setattr__(self, name, _frozen(cell, np.int64))
        object.__setattr__(self, "set_labels", tuple(self.set_labels))

    @property
    def n(self):
        return int(self.n11[0] + self.n12[0] + self.n21[0] + self.n22[0])

    @property
    def K(self):
        return len(self.set_labels)

    def for_set(self, label):
        k = self.set_labels.index(label)
        return int(self.n11[k]), int(self.n12[k]), int(self.n21[k]), int(self.n22[k])

    def to_dict(self):
        return {
            "n": self.n,
            "orientation": {"row": "j=2", "column": "j=1", "index_1": "yes", "index_2": "no"},
            "sets": {
                label: dict(zip(("n11", "n12", "n21", "n22"), self.for_set(label)))
                for label in self.set_labels
            },
        }


@dataclass(frozen=True)
class ContrastMatrix:
    K: int
    L: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.K < 1:
            raise PreconditionError(f"K must be positive, got {self.K}")
        identity = np.eye(self.K)
        object.__setattr__(self, "L", _frozen(np.hstack([identity, -identity]), np.float64))

    def apply(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        return theta[..., : self.K] - theta[..., self.K :]


@dataclass(frozen=True)
class MarginalEstimates:
    theta: np.ndarray
    rho: np.ndarray


def _parse_cell(value, row, column):
    if isinstance(value, float) and np.isnan(value):
        raise DataFormatError("missing cell", row, column)
    value = str(value).strip()
    if value == "":
        raise DataFormatError("missing cell", row, column)
    if value not in ("0", "1"):
        raise DataFormatError(f"'{value}' is not a binary response", row, column)
    return int(value)


def _split_header(header):
    """Returns set labels from a j1_/j2_ header, or from the first half of a plain one."""
    K = len(header) // 2
    first, second = header[:K], header[K:]
    if all(name.startswith("j1_") for name in first) and all(name.startswith("j2_") for name in second):
        labels = [name[3:] for name in first]
        if labels != [name[3:] for name in second]:
            raise DataFormatError("j1_ and j2_ columns must name the same sets in the same order")
        return labels
    return list(first)


def ingest_csv(path, layout=WIDE_LAYOUT, observation_labels=OBSERVATION_LABELS):
    """Reads a subject-level MMP CSV, or its pattern + count compact form."""
    if layout not in (WIDE_LAYOUT, PATTERN_COUNT_LAYOUT):
        raise PreconditionError(f"unknown layout '{layout}'")
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError as e:
        raise DataFormatError("no subjects") from e
    except pd.errors.ParserError as e:
        raise DataFormatError(f"could not parse file: {e}") from e
    except (OSError, UnicodeDecodeError) as e:
        raise DataFormatError(f"cannot read '{path}': {e}") from e

    header = [str(name).strip() for name in frame.iloc[0].tolist()]
    body = frame.iloc[1:]
    counts = None
    if layout == PATTERN_COUNT_LAYOUT:
        if header[-1] != COUNT_COLUMN:
            raise DataFormatError(f"pattern-count files need a trailing '{COUNT_COLUMN}' column")
        header = header[:-1]
        counts = []
        for row, value in enumerate(body.iloc[:, -1].tolist(), start=1):
            value = str(value).strip()
            if not value.isdigit():
                raise DataFormatError(f"'{value}' is not a pattern count", row, COUNT_COLUMN)
            counts.append(int(value))
        body = body.iloc[:, :-1]

    if len(header) % 2 != 0:
        raise DimensionError(f"header names {len(header)} response columns; an even number (2K) is required.")
    labels = _split_header(header)
    if len(body) == 0:
        raise DataFormatError("no subjects")

    x = np.array(
        [
            [_parse_cell(value, row, header[col]) for col, value in enumerate(values)]
            for row, values in enumerate(body.itertuples(index=False, name=None), start=1)
        ],
        dtype=np.int8,
    )
    if counts is not None:
        x = np.repeat(x, counts, axis=0)
    return MatchedBinaryTable(x, tuple(labels), observation_labels)


def load_soc_table():
    return ingest_csv(SOC_PATTERN_FILE, layout=PATTERN_COUNT_LAYOUT)


def paired_counts(table):
    K = table.K
    primary = table.x[:, :K].astype(bool)
    specialty = table.x[:, K:].astype(bool)
    return PairedCounts(
        n11=(specialty & primary).sum(axis=0),
        n12=(specialty & ~primary).sum(axis=0),
        n21=(~specialty & primary).sum(axis=0),
        n22=(~specialty & ~primary).sum(axis=0),
        set_labels=table.set_labels,
    )


def rho_from_beta(beta):
    """theta = Phi(beta) component-wise and rho = L theta; works on (..., 2K) draws."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape[-1] % 2 != 0:
        raise DimensionError(f"beta must have 2K entries, got {beta.shape[-1]}.")
    if not np.isfinite(beta).all():
        raise PreconditionError("beta must be finite")
    theta = ndtr(beta)
    return MarginalEstimates(theta=theta, rho=ContrastMatrix(beta.shape[-1] // 2).apply(theta))


def sparsity_flags(counts):
    """A set is sparse when one of its discordant cells is empty."""
    return np.minimum(counts.n12, counts.n21) == 0
