"""LIBSVM ingestion and epoch-based mini-batch sampling."""

import gzip
import io
import logging
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import sparse

from tsgd.models.batching import EpochBatcher, default_batch_size  # noqa: F401
from tsgd.models.dataset import SparseDataset
from tsgd.utils.exceptions import InvalidInputError, LibsvmParseError

logger = logging.getLogger(__name__)

LABEL_MAP = {0.0: -1.0, -1.0: -1.0, 1.0: 1.0}


def _parse_label(token: str, line_number: int) -> float:
    try:
        raw = float(token)
    except ValueError:
        raise LibsvmParseError(f"malformed label {token!r}", line_number) from None
    if raw not in LABEL_MAP:
        raise LibsvmParseError(f"label {token!r} is not binary", line_number)
    return LABEL_MAP[raw]


def parse_libsvm(text: Union[bytes, str], n_features: Optional[int] = None) -> SparseDataset:
    """Parse "label idx:val idx:val ..." lines with 1-based ascending indices.

    Labels 0/-1 map to -1 and 1/+1 to +1. The feature count is the largest index
    seen unless `n_features` overrides it.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LibsvmParseError(f"input is not UTF-8: {exc}") from None

    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    labels: list[float] = []
    max_index = 0

    for line_number, line in enumerate(text.splitlines(), start=1):
        # Comments after '#' are allowed by the format.
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue
        labels.append(_parse_label(tokens[0], line_number))
        previous = 0
        for token in tokens[1:]:
            index_text, sep, value_text = token.partition(":")
            if not sep:
                raise LibsvmParseError(f"malformed token {token!r}", line_number)
            try:
                index = int(index_text)
                value = float(value_text)
            except ValueError:
                raise LibsvmParseError(f"malformed token {token!r}", line_number) from None
            if index < 1:
                raise LibsvmParseError(f"index {index} is not 1-based", line_number)
            if index <= previous:
                raise LibsvmParseError(f"index {index} does not ascend", line_number)
            if not math.isfinite(value):
                raise LibsvmParseError(f"non-finite value {value_text!r}", line_number)
            previous = index
            indices.append(index - 1)
            values.append(value)
        max_index = max(max_index, previous)
        indptr.append(len(indices))

    if not labels:
        raise LibsvmParseError("empty file")
    if n_features is None:
        n_features = max_index
    elif n_features < max_index:
        raise InvalidInputError(f"n_features={n_features} is smaller than the largest index {max_index}")

    matrix = sparse.csr_matrix(
        (np.asarray(values, dtype=np.float64), np.asarray(indices, dtype=np.int32), np.asarray(indptr)),
        shape=(len(labels), n_features),
    )
    dataset = SparseDataset(matrix=matrix, labels=np.asarray(labels, dtype=np.float64))
    positives = int(np.sum(dataset.labels > 0))
    logger.info(
        "Parsed %d samples, %d features: %d positive %d negative",
        dataset.n_samples, dataset.n_features, positives, dataset.n_samples - positives,
    )
    return dataset


def load_libsvm(path: Union[str, Path], n_features: Optional[int] = None) -> SparseDataset:
    """Read a LIBSVM file; names ending in .gz are decompressed."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as handle:
        return parse_libsvm(handle.read(), n_features=n_features)


def serialize_libsvm(dataset: SparseDataset) -> str:
    """Canonical text: +1/-1 labels, 1-based indices, 17 significant digits."""
    out = io.StringIO()
    for i in range(dataset.n_samples):
        label = "+1" if dataset.labels[i] > 0 else "-1"
        entries = " ".join(f"{j + 1}:{v:.17g}" for j, v in dataset.row(i))
        out.write(f"{label} {entries}".rstrip() + "\n")
    return out.getvalue()


def synthetic_classification(
    n_samples: int,
    n_features: int,
    density: float = 0.3,
    label_noise: float = 0.05,
    seed: int = 0,
) -> SparseDataset:
    """Desk-scale stand-in for a LIBSVM binary dataset."""
    if n_samples < 1 or n_features < 1:
        raise InvalidInputError("synthetic data needs at least one sample and one feature")
    rng = np.random.default_rng(seed)
    mask = rng.random((n_samples, n_features)) < density
    matrix = sparse.csr_matrix(np.where(mask, rng.standard_normal((n_samples, n_features)), 0.0))
    hyperplane = rng.standard_normal(n_features)
    labels = np.where(matrix @ hyperplane >= 0.0, 1.0, -1.0)
    flip = rng.random(n_samples) < label_noise
    labels[flip] *= -1.0
    return SparseDataset(matrix=matrix, labels=labels)


def next_batch(b: EpochBatcher, n_samples: int) -> np.ndarray:
    if n_samples != b.n_samples:
        raise InvalidInputError(f"batcher was built for {b.n_samples} samples, not {n_samples}")
    if b.batch_size > n_samples:
        raise InvalidInputError(f"batch_size {b.batch_size} exceeds {n_samples} samples")
    return b.next_batch()
