"""Text augmentation: EDA operations and back-translation.

Each original text is expanded into a group of correlated variants.  Every
variant's RNG stream is derived from (master seed, origin id, method name,
variant index), so the output of any single variant is reproducible in
isolation, independent of generation order.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

from .dataset import Observation
from .seeding import derive_rng
from .textproc import TokenSeq, detokenize, tokenize
from .translate import TranslationError, Translator

logger = logging.getLogger(__name__)

Thesaurus = dict[str, list[str]]

EDA_OPS = ("synonym_replace", "random_insert", "random_swap", "random_delete")


# ---------------------------------------------------------------------------
# Method and plan descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AugMethod:
    """One augmentation method: EDA with strength alpha, or back-translation
    through a list of pivot-language routes."""

    kind: str  # "eda" | "bt"
    name: str  # identifier used in provenance records and plans
    eda_alpha: float = 0.1
    routes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind == "eda":
            if not 0.0 < self.eda_alpha < 1.0:
                raise ValueError(f"eda_alpha must be in (0, 1), got {self.eda_alpha}")
        elif self.kind == "bt":
            if not self.routes:
                raise ValueError("back-translation requires at least one route")
        else:
            raise ValueError(f"unknown augmentation kind {self.kind!r}")


def eda_method(name: str = "eda", alpha: float = 0.1) -> AugMethod:
    return AugMethod(kind="eda", name=name, eda_alpha=alpha)


def bt_method(name: str, routes: list[str] | tuple[str, ...]) -> AugMethod:
    return AugMethod(kind="bt", name=name, routes=tuple(routes))


# Pivot-route presets: one cloud-style set (zh/ja/ko/hi) and one
# European-language set (fr/pt/es/it).
BT_ROUTES_A = ("zh", "ja", "ko", "hi")
BT_ROUTES_B = ("fr", "pt", "es", "it")


@dataclass(frozen=True)
class AugmentationPlan:
    """Which methods, and how many variants each, make up a group.

    The original text is always part of the group, so the group size is
    1 + sum of per-method counts.
    """

    methods: tuple[tuple[AugMethod, int], ...]
    includes_original: bool = True

    def __post_init__(self):
        if not self.includes_original:
            raise ValueError("the original text is always part of the group")
        for method, count in self.methods:
            if count < 1:
                raise ValueError(f"augmentation count for {method.name!r} must be >= 1")
        names = [m.name for m, _ in self.methods]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate method names in plan: {names}")

    @property
    def group_size(self) -> int:
        return 1 + sum(count for _, count in self.methods)

    def method_counts(self) -> list[tuple[str, int]]:
        return [(m.name, count) for m, count in self.methods]


@dataclass(frozen=True)
class AugRecord:
    """Provenance of one augmented text."""

    origin_id: str
    method: str
    variant_index: int
    text: str


# ---------------------------------------------------------------------------
# EDA token operations
# ---------------------------------------------------------------------------


def synonym_replace(
    seq: TokenSeq,
    n: int,
    thesaurus: Thesaurus,
    stopwords: set[str],
    rng: Random,
) -> TokenSeq:
    """Replace up to n eligible tokens with a uniformly chosen synonym.

    A token is eligible if it is not a stopword and has at least one
    thesaurus entry.  If fewer than n are eligible, all eligible tokens are
    replaced.  Token count is unchanged.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    eligible = [
        i for i, tok in enumerate(seq) if tok not in stopwords and thesaurus.get(tok)
    ]
    if not eligible:
        return list(seq)
    chosen = sorted(rng.sample(eligible, min(n, len(eligible))))
    out = list(seq)
    for i in chosen:
        syns = thesaurus[out[i]]
        out[i] = syns[rng.randrange(len(syns))]
    return out


def random_insert(seq: TokenSeq, n: int, thesaurus: Thesaurus, rng: Random) -> TokenSeq:
    """Insert synonyms of n randomly chosen tokens at random positions.

    Each insertion picks a token (from the current sequence) that has a
    thesaurus entry; if none exists the insertion fails and the sequence is
    left as is.  Output length = input length + successful insertions.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    out = list(seq)
    if not out:
        return out
    for _ in range(n):
        candidates = [tok for tok in out if thesaurus.get(tok)]
        if not candidates:
            break
        word = candidates[rng.randrange(len(candidates))]
        syns = thesaurus[word]
        syn = syns[rng.randrange(len(syns))]
        out.insert(rng.randrange(len(out) + 1), syn)
    return out


def random_swap(seq: TokenSeq, n: int, rng: Random) -> TokenSeq:
    """Exchange the tokens at two distinct random positions, n times.

    The token multiset is preserved; sequences shorter than two tokens are
    returned unchanged.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    out = list(seq)
    if len(out) < 2:
        return out
    for _ in range(n):
        i = rng.randrange(len(out))
        j = rng.randrange(len(out) - 1)
        if j >= i:
            j += 1
        out[i], out[j] = out[j], out[i]
    return out


def random_delete(seq: TokenSeq, p: float, rng: Random) -> TokenSeq:
    """Delete each token independently with probability p.

    If every token would be deleted, one uniformly chosen token is retained,
    so a non-empty input never produces an empty output.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"p must be in [0, 1), got {p}")
    if not seq:
        return []
    kept = [tok for tok in seq if rng.random() >= p]
    if not kept:
        return [seq[rng.randrange(len(seq))]]
    return kept


def eda_variant(
    text: str,
    variant_index: int,
    alpha: float,
    thesaurus: Thesaurus,
    stopwords: set[str],
    rng: Random,
) -> str:
    """Apply one of the four EDA operations, selected by variant index.

    0 = synonym replacement, 1 = random insertion, 2 = random swap (each
    with n = max(1, round(alpha * token count))), 3 = random deletion with
    probability alpha.  The result is re-joined with single spaces.
    """
    if variant_index not in (0, 1, 2, 3):
        raise ValueError(f"variant_index must be in 0..3, got {variant_index}")
    seq = tokenize(text)
    if not seq:
        return text
    n = max(1, round(alpha * len(seq)))
    if variant_index == 0:
        out = synonym_replace(seq, n, thesaurus, stopwords, rng)
    elif variant_index == 1:
        out = random_insert(seq, n, thesaurus, rng)
    elif variant_index == 2:
        out = random_swap(seq, n, rng)
    else:
        out = random_delete(seq, alpha, rng)
    return detokenize(out)


# ---------------------------------------------------------------------------
# Back-translation
# ---------------------------------------------------------------------------


def back_translate(text: str, route: str, client: Translator) -> str:
    """Round-trip the text through a pivot language: en -> route -> en."""
    try:
        pivot = client.translate(text, "en", route)
        return client.translate(pivot, route, "en")
    except TranslationError as exc:
        if exc.route is None:
            exc.route = route
        raise


# ---------------------------------------------------------------------------
# Group generation
# ---------------------------------------------------------------------------


@dataclass
class AugmentContext:
    """Shared dependencies for group generation."""

    thesaurus: Thesaurus
    stopwords: set[str]
    master_seed: int
    translator: Translator | None = None


def augment_records(
    origin_id: str,
    text: str,
    plan: AugmentationPlan,
    ctx: AugmentContext,
) -> list[AugRecord]:
    """Generate all augmented variants of one text, with provenance.

    EDA variants cycle through the four operations; back-translation
    variants cycle through the method's pivot routes.  A failed or empty
    back-translation is skipped and logged, shrinking the group.
    """
    records: list[AugRecord] = []
    for method, count in plan.methods:
        for i in range(count):
            rng = derive_rng(ctx.master_seed, origin_id, method.name, i)
            if method.kind == "eda":
                out = eda_variant(text, i % 4, method.eda_alpha, ctx.thesaurus, ctx.stopwords, rng)
            else:
                if ctx.translator is None:
                    raise ValueError(f"plan includes {method.name!r} but no translator is configured")
                route = method.routes[i % len(method.routes)]
                try:
                    out = back_translate(text, route, ctx.translator)
                except TranslationError as exc:
                    exc.origin_id = origin_id
                    logger.warning(
                        "skipping %s variant %d of %r (route %s): %s",
                        method.name, i, origin_id, route, exc,
                    )
                    continue
                if not out.strip():
                    logger.warning(
                        "skipping %s variant %d of %r: empty back-translation",
                        method.name, i, origin_id,
                    )
                    continue
            records.append(AugRecord(origin_id=origin_id, method=method.name, variant_index=i, text=out))
    return records


def augment_observation(
    original: tuple[str, str, int],
    plan: AugmentationPlan,
    ctx: AugmentContext,
) -> Observation:
    """Build the full group for one original: the text plus its variants.

    The label is copied, never recomputed; the original is never dropped.
    """
    origin_id, text, label = original
    records = augment_records(origin_id, text, plan, ctx)
    return Observation(
        id=origin_id,
        original=text,
        augmented=[(r.method, r.text) for r in records],
        label=label,
    )


# ---------------------------------------------------------------------------
# Thesaurus and cache files
# ---------------------------------------------------------------------------


def load_thesaurus(path: str | Path) -> Thesaurus:
    """Read a thesaurus file: ``word<TAB>syn1,syn2,...`` per line.

    Duplicate head-words merge their synonym lists (first occurrence order,
    duplicates dropped).
    """
    thesaurus: Thesaurus = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        if "\t" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'word<TAB>synonyms'")
        word, _, rest = line.partition("\t")
        word = word.strip()
        syns = [s.strip() for s in rest.split(",") if s.strip()]
        merged = thesaurus.setdefault(word, [])
        for s in syns:
            if s not in merged:
                merged.append(s)
    return thesaurus


def default_thesaurus() -> Thesaurus:
    """The small demonstration thesaurus shipped with the package."""
    from importlib.resources import as_file, files

    with as_file(files("bagg.data").joinpath("thesaurus.tsv")) as p:
        return load_thesaurus(p)


def write_aug_cache(path: str | Path, records: list[AugRecord]) -> None:
    """Write provenance records as JSON lines."""
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(
                json.dumps(
                    {
                        "origin_id": r.origin_id,
                        "method": r.method,
                        "variant_index": r.variant_index,
                        "text": r.text,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_aug_cache(path: str | Path) -> list[AugRecord]:
    """Read a JSONL augmentation cache, checking provenance uniqueness."""
    records: list[AugRecord] = []
    seen: set[tuple[str, str, int]] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rec = AugRecord(
                    origin_id=str(obj["origin_id"]),
                    method=str(obj["method"]),
                    variant_index=int(obj["variant_index"]),
                    text=str(obj["text"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed augmentation record: {exc}") from exc
            key = (rec.origin_id, rec.method, rec.variant_index)
            if key in seen:
                raise ValueError(f"{path}:{lineno}: duplicate provenance {key}")
            seen.add(key)
            records.append(rec)
    return records
