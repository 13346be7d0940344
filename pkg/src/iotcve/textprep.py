"""Deterministic text normalization for record features.

Every record is reduced to a stream of field-prefixed tokens
(``vendor:d_link``, ``product:dgs``, ``desc:driver``, ``cwe:cwe_254``)
so that product identity and description vocabulary never collide in
the feature space.

The stop-word list is a frozen data file shipped with the package; its
contents (and hash) are part of a trained model's reproducibility
contract. Description tokens are Porter-stemmed; vendor and product
names are not, since they are identifiers rather than English words.
"""
from __future__ import annotations

import hashlib
import re
from importlib import resources
from pathlib import Path

from .porter import stem_word

__all__ = [
    "tokenize",
    "remove_stopwords",
    "stem",
    "preprocess_fields",
    "load_stopwords",
    "default_stopwords",
    "stopwords_hash",
]

# Maximal runs of ASCII letters/digits/underscore; everything else,
# including non-ASCII letters, separates tokens.
_TOKEN_RE = re.compile(r"[a-z0-9_]+")
# Vendor/product identifiers additionally split on underscores.
_ALNUM_RE = re.compile(r"[a-z0-9]+")
_NON_ALNUM_RE = re.compile(r"[^a-z0-9]+")

TokenStream = list[str]

_DEFAULT_STOPWORDS: frozenset[str] | None = None
_DEFAULT_STOPWORDS_HASH: str | None = None


def _stopwords_resource() -> bytes:
    return resources.files("iotcve").joinpath("data/stopwords.txt").read_bytes()


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Load a one-word-per-line stop-word file."""
    words = Path(path).read_text(encoding="utf-8").split("\n")
    return frozenset(w.strip() for w in words if w.strip())


def default_stopwords() -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        raw = _stopwords_resource().decode("utf-8")
        _DEFAULT_STOPWORDS = frozenset(w for w in raw.split("\n") if w.strip())
    return _DEFAULT_STOPWORDS


def stopwords_hash(path: str | Path | None = None) -> str:
    """SHA-256 of the stop-word file bytes, recorded in model files."""
    global _DEFAULT_STOPWORDS_HASH
    if path is not None:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    if _DEFAULT_STOPWORDS_HASH is None:
        _DEFAULT_STOPWORDS_HASH = hashlib.sha256(_stopwords_resource()).hexdigest()
    return _DEFAULT_STOPWORDS_HASH


def tokenize(text: str) -> TokenStream:
    """Lowercase and split into runs of ASCII letters/digits/underscore."""
    return _TOKEN_RE.findall(text.lower())


def remove_stopwords(
    tokens: TokenStream, stopwords: frozenset[str] | None = None
) -> TokenStream:
    if stopwords is None:
        stopwords = default_stopwords()
    return [t for t in tokens if t not in stopwords]


def stem(token: str) -> str:
    """Porter-stem a token; tokens with digits or underscores pass through."""
    if not token.isalpha():
        return token
    return stem_word(token)


def _identifier_token(raw: str) -> str:
    """One token per identifier, non-alphanumerics turned into underscores."""
    return _NON_ALNUM_RE.sub("_", raw.lower()).strip("_")


def _dedup(items: list[str]) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for item in items:
        if item and item not in seen:
            seen.add(item)
            out.append(item)
    return out


def preprocess_fields(
    vendors: list[str],
    products: list[str],
    summary: str,
    cwe_id: str | None,
    versions: list[str] = (),
    *,
    include_versions: bool = False,
    stopwords: frozenset[str] | None = None,
) -> TokenStream:
    """Build the prefixed token stream for one record.

    Vendors become single ``vendor:`` tokens (hyphens and other
    punctuation mapped to underscores, so CPE spelling like ``d-link``
    survives as ``d_link``). Product names split into ``product:``
    tokens on every non-alphanumeric character. Summary text is
    tokenized, stop-filtered and stemmed into ``desc:`` tokens. Vendor,
    product and version tokens are deduplicated across the whole
    configuration tree; description tokens keep their multiplicity.
    """
    stream: TokenStream = []
    for vendor in _dedup([_identifier_token(v) for v in vendors]):
        stream.append(f"vendor:{vendor}")
    product_tokens: list[str] = []
    for product in products:
        product_tokens.extend(_ALNUM_RE.findall(product.lower()))
    for token in _dedup(product_tokens):
        stream.append(f"product:{token}")
    if include_versions:
        version_tokens: list[str] = []
        for version in versions:
            version_tokens.extend(_ALNUM_RE.findall(version.lower()))
        for token in _dedup(version_tokens):
            stream.append(f"version:{token}")
    if cwe_id:
        stream.append(f"cwe:{_identifier_token(cwe_id)}")
    for token in remove_stopwords(tokenize(summary), stopwords):
        stream.append(f"desc:{stem(token)}")
    return stream
