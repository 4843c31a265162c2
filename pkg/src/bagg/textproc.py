"""Tokenization, vocabulary construction and integer encoding.

A deliberately small word-level pipeline for the compact encoder: lowercase,
split on whitespace, strip surrounding punctuation.  No subwords, no casing
models.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

# A token sequence is a plain list of lowercase word strings.
TokenSeq = list[str]

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


def _is_punct(ch: str) -> bool:
    # Unicode categories P* (punctuation) and S* (symbols).
    return unicodedata.category(ch)[0] in ("P", "S")


def _strip_punct(token: str) -> str:
    start = 0
    end = len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> TokenSeq:
    """Lowercase, split on whitespace, strip surrounding punctuation.

    Tokens that become empty after stripping are dropped; the empty string
    tokenizes to an empty sequence.
    """
    out = []
    for raw in text.lower().split():
        tok = _strip_punct(raw)
        if tok:
            out.append(tok)
    return out


def detokenize(tokens: TokenSeq) -> str:
    """Inverse of tokenize up to whitespace: single-space join."""
    return " ".join(tokens)


@dataclass(frozen=True)
class Vocab:
    """Immutable token -> id map with PAD=0 and UNK=1 reserved."""

    token_to_id: dict[str, int]
    min_count: int = 1
    id_to_token: list[str] = field(init=False, repr=False)

    def __post_init__(self):
        ordered = sorted(self.token_to_id.items(), key=lambda kv: kv[1])
        object.__setattr__(self, "id_to_token", [tok for tok, _ in ordered])

    def __len__(self) -> int:
        return len(self.token_to_id)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def content_hash(self) -> str:
        """Stable hex digest of the full token -> id assignment."""
        import hashlib

        h = hashlib.blake2b(digest_size=16)
        for i, tok in enumerate(self.id_to_token):
            h.update(f"{tok}\t{i}\n".encode("utf-8"))
        return h.hexdigest()


def build_vocab(corpus: list[TokenSeq], min_count: int = 1) -> Vocab:
    """Build a vocabulary from tokenized training texts.

    Ids are assigned by descending frequency, ties broken lexicographically,
    after PAD and UNK.  Tokens below min_count are dropped.  The result is
    independent of corpus iteration order.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: dict[str, int] = {}
    for seq in corpus:
        for tok in seq:
            counts[tok] = counts.get(tok, 0) + 1
    kept = [(tok, c) for tok, c in counts.items() if c >= min_count]
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    token_to_id = {PAD_TOKEN: PAD_ID, UNK_TOKEN: UNK_ID}
    for tok, _ in kept:
        token_to_id[tok] = len(token_to_id)
    return Vocab(token_to_id=token_to_id, min_count=min_count)


def encode(seq: TokenSeq, vocab: Vocab) -> list[int]:
    """Map tokens to ids; out-of-vocabulary tokens map to UNK.

    Length is always preserved, so an all-UNK or empty encoding is a valid
    model input.
    """
    table = vocab.token_to_id
    return [table.get(tok, UNK_ID) for tok in seq]


def load_stopwords(path: str | Path) -> set[str]:
    """Read a stopword file: one lowercase word per line, '#' comments."""
    words: set[str] = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        words.add(line)
    return words


def default_stopwords() -> set[str]:
    """The stopword list shipped with the package."""
    from importlib.resources import files

    path = files("bagg.data").joinpath("stopwords.txt")
    words = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return words
