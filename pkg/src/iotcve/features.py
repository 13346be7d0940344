"""TF-IDF vectorization over token streams.

The variant is fixed so results are exactly reproducible: raw term
counts, smoothed idf ``ln((1 + n_docs) / (1 + df)) + 1`` (strictly
positive), then L2 normalization. Vocabulary indices are assigned over
the sorted token universe, never hash order, so fitting the same corpus
twice gives identical models on any platform.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyCorpus
from .textprep import TokenStream

__all__ = [
    "SparseVector",
    "CsrMatrix",
    "Vocabulary",
    "TfIdfModel",
    "fit",
    "transform",
    "stack_vectors",
]


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Strictly-increasing indices with nonzero finite values."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.indices.shape != self.values.shape:
            raise ValueError("indices and values differ in length")

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    @classmethod
    def empty(cls) -> "SparseVector":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Row-compressed stack of sparse vectors."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    n_cols: int

    @property
    def n_rows(self) -> int:
        return int(self.indptr.shape[0]) - 1

    def row(self, i: int) -> SparseVector:
        start, end = self.indptr[i], self.indptr[i + 1]
        return SparseVector(self.indices[start:end], self.data[start:end])


def stack_vectors(vectors: Sequence[SparseVector], n_cols: int) -> CsrMatrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, vec in enumerate(vectors):
        indptr[i + 1] = indptr[i] + vec.nnz
    indices = np.empty(int(indptr[-1]), dtype=np.int64)
    data = np.empty(int(indptr[-1]), dtype=np.float64)
    for i, vec in enumerate(vectors):
        indices[indptr[i] : indptr[i + 1]] = vec.indices
        data[indptr[i] : indptr[i + 1]] = vec.values
    return CsrMatrix(indptr=indptr, indices=indices, data=data, n_cols=n_cols)


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    df: np.ndarray
    n_docs: int

    def __len__(self) -> int:
        return len(self.index)

    def tokens(self) -> list[str]:
        """Tokens in index order."""
        out = [""] * len(self.index)
        for token, i in self.index.items():
            out[i] = token
        return out


@dataclass(frozen=True)
class TfIdfModel:
    vocabulary: Vocabulary
    idf: np.ndarray

    def __len__(self) -> int:
        return len(self.vocabulary)


def fit(token_streams: Iterable[TokenStream], min_df: int = 1) -> TfIdfModel:
    """Fit vocabulary and idf weights on training streams only."""
    doc_freq: Counter = Counter()
    n_docs = 0
    for stream in token_streams:
        n_docs += 1
        doc_freq.update(set(stream))
    if n_docs == 0:
        raise EmptyCorpus("no documents to fit on")
    kept = sorted(t for t, c in doc_freq.items() if c >= min_df)
    if not kept:
        raise EmptyCorpus("vocabulary is empty after min_df filtering")
    index = {token: i for i, token in enumerate(kept)}
    df = np.array([doc_freq[t] for t in kept], dtype=np.int64)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return TfIdfModel(vocabulary=Vocabulary(index=index, df=df, n_docs=n_docs), idf=idf)


def transform(model: TfIdfModel, stream: TokenStream) -> SparseVector:
    """tf·idf then L2 normalize; unknown tokens are ignored.

    A stream with no known tokens yields the empty vector; callers
    decide what that means (training keeps it, prediction falls back).
    """
    counts: Counter = Counter()
    vocab = model.vocabulary.index
    for token in stream:
        idx = vocab.get(token)
        if idx is not None:
            counts[idx] += 1
    if not counts:
        return SparseVector.empty()
    indices = np.array(sorted(counts), dtype=np.int64)
    tf = np.array([counts[i] for i in indices], dtype=np.float64)
    values = tf * model.idf[indices]
    norm = math.sqrt(float(np.dot(values, values)))
    return SparseVector(indices=indices, values=values / norm)
