"""Grouped data model, corpus ingestion, subsampling and repeated splits.

The sampling unit throughout is the observation: an original text, the
augmented texts derived from it, and one shared label.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from random import Random
from typing import TYPE_CHECKING, Iterable, Sequence

from .seeding import derive_rng

if TYPE_CHECKING:
    from .augment import AugmentationPlan, AugRecord

logger = logging.getLogger(__name__)


@dataclass
class Observation:
    """One sampling unit: original text, augmented variants, label index."""

    id: str
    original: str
    augmented: list[tuple[str, str]] = field(default_factory=list)  # (method tag, text)
    label: int = 0

    @property
    def group_size(self) -> int:
        return 1 + len(self.augmented)

    def texts(self) -> list[str]:
        """All texts of the group, original first."""
        return [self.original] + [t for _, t in self.augmented]


@dataclass
class LabeledCorpus:
    observations: list[Observation]
    categories: list[str]
    provenance: str = ""

    def __post_init__(self):
        if len(set(self.categories)) != len(self.categories):
            raise ValueError("category names must be unique")
        for obs in self.observations:
            if not 0 <= obs.label < len(self.categories):
                raise ValueError(
                    f"observation {obs.id!r} has label {obs.label}, "
                    f"but corpus has {len(self.categories)} categories"
                )

    def __len__(self) -> int:
        return len(self.observations)

    def label_counts(self) -> dict[int, int]:
        counts = {i: 0 for i in range(len(self.categories))}
        for obs in self.observations:
            counts[obs.label] += 1
        return counts


@dataclass(frozen=True)
class SplitSpec:
    """Repeated-split protocol settings."""

    train_fraction: float = 0.8
    sample_size: int = 100
    num_categories: int = 8
    repetition_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.sample_size < self.num_categories:
            raise ValueError("sample_size must be >= num_categories")


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


def load_jsonl(path: str | Path) -> LabeledCorpus:
    """Load a corpus from JSON lines: {"id", "text", "label"} per line.

    Label strings are mapped to indices in first-appearance order.  Unknown
    fields are ignored; malformed lines and duplicate ids are errors.
    """
    observations: list[Observation] = []
    categories: list[str] = []
    cat_index: dict[str, int] = {}
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ValueError(f"{path}:{lineno}: expected a JSON object")
            for key in ("id", "text", "label"):
                if key not in obj:
                    raise ValueError(f"{path}:{lineno}: missing field {key!r}")
            obs_id = str(obj["id"])
            if obs_id in seen_ids:
                raise ValueError(f"{path}:{lineno}: duplicate id {obs_id!r}")
            seen_ids.add(obs_id)
            label_name = str(obj["label"])
            if label_name not in cat_index:
                cat_index[label_name] = len(categories)
                categories.append(label_name)
            observations.append(
                Observation(id=obs_id, original=str(obj["text"]), label=cat_index[label_name])
            )
    return LabeledCorpus(observations=observations, categories=categories, provenance=str(path))


def load_csv(path: str | Path) -> LabeledCorpus:
    """Load a corpus from CSV with header id,text,label (RFC 4180 quoting)."""
    observations: list[Observation] = []
    categories: list[str] = []
    cat_index: dict[str, int] = {}
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        required = {"id", "text", "label"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: CSV header must contain {sorted(required)}")
        for rownum, row in enumerate(reader, start=2):
            if row["id"] is None or row["text"] is None or row["label"] is None:
                raise ValueError(f"{path}:{rownum}: short row")
            obs_id = row["id"]
            if obs_id in seen_ids:
                raise ValueError(f"{path}:{rownum}: duplicate id {obs_id!r}")
            seen_ids.add(obs_id)
            label_name = row["label"]
            if label_name not in cat_index:
                cat_index[label_name] = len(categories)
                categories.append(label_name)
            observations.append(
                Observation(id=obs_id, original=row["text"], label=cat_index[label_name])
            )
    return LabeledCorpus(observations=observations, categories=categories, provenance=str(path))


def save_jsonl(corpus: LabeledCorpus, path: str | Path) -> None:
    """Write originals back out as JSON lines (augmentations not included)."""
    with open(path, "w", encoding="utf-8") as f:
        for obs in corpus.observations:
            f.write(
                json.dumps(
                    {"id": obs.id, "text": obs.original, "label": corpus.categories[obs.label]},
                    ensure_ascii=False,
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# Category selection and subsampling
# ---------------------------------------------------------------------------


def select_categories(corpus: LabeledCorpus, k: int) -> LabeledCorpus:
    """Keep the k most populous categories and relabel to [0, k).

    Ties in population are broken lexicographically by category name.
    """
    if k > len(corpus.categories):
        raise ValueError(f"asked for {k} categories, corpus has {len(corpus.categories)}")
    counts = corpus.label_counts()
    order = sorted(range(len(corpus.categories)), key=lambda i: (-counts[i], corpus.categories[i]))
    kept = order[:k]
    new_index = {old: new for new, old in enumerate(kept)}
    observations = [
        replace(obs, label=new_index[obs.label])
        for obs in corpus.observations
        if obs.label in new_index
    ]
    return LabeledCorpus(
        observations=observations,
        categories=[corpus.categories[i] for i in kept],
        provenance=f"{corpus.provenance} | top {k} categories",
    )


def category_quotas(counts: list[int], names: list[str], n: int) -> list[int]:
    """Per-category draw quotas for a stratified sample of size n.

    Each category gets floor(n / C), the remainder goes to the largest
    categories (ties by name); if a category cannot fill its quota the
    deficit redistributes over the remaining categories by the same rule.
    """
    total = sum(counts)
    if n > total:
        raise ValueError(f"cannot sample {n} observations from {total}")
    quotas = [0] * len(counts)
    need = n
    while need > 0:
        active = [i for i in range(len(counts)) if quotas[i] < counts[i]]
        share, extra = divmod(need, len(active))
        active.sort(key=lambda i: (-counts[i], names[i]))
        for rank, i in enumerate(active):
            want = share + (1 if rank < extra else 0)
            take = min(want, counts[i] - quotas[i])
            quotas[i] += take
            need -= take
    return quotas


def stratified_sample(corpus: LabeledCorpus, n: int, rng: Random) -> LabeledCorpus:
    """Draw exactly n observations, spread across categories by quota."""
    if n > len(corpus):
        raise ValueError(f"cannot sample {n} observations from {len(corpus)}")
    by_cat: dict[int, list[int]] = {i: [] for i in range(len(corpus.categories))}
    for idx, obs in enumerate(corpus.observations):
        by_cat[obs.label].append(idx)
    counts = [len(by_cat[i]) for i in range(len(corpus.categories))]
    quotas = category_quotas(counts, corpus.categories, n)
    chosen: list[int] = []
    for cat in range(len(corpus.categories)):
        if quotas[cat]:
            chosen.extend(rng.sample(by_cat[cat], quotas[cat]))
    chosen.sort()  # keep original corpus order
    return LabeledCorpus(
        observations=[corpus.observations[i] for i in chosen],
        categories=list(corpus.categories),
        provenance=f"{corpus.provenance} | stratified sample n={n}",
    )


# ---------------------------------------------------------------------------
# Repeated 80/20 splits
# ---------------------------------------------------------------------------


def split(
    corpus: LabeledCorpus, spec: SplitSpec, rep_index: int
) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Stratified train/test split for one repetition.

    Per category, floor(train_fraction * m) observations (at least one) go
    to train and the rest to test.  A category with fewer than two members
    goes wholly to train with a warning.  The RNG stream is derived from
    (repetition_seed, rep_index), so identical inputs give identical splits
    and different repetitions give different ones.
    """
    if not corpus.observations:
        raise ValueError("cannot split an empty corpus")
    rng = derive_rng(spec.repetition_seed, "split", rep_index)
    by_cat: dict[int, list[int]] = {i: [] for i in range(len(corpus.categories))}
    for idx, obs in enumerate(corpus.observations):
        by_cat[obs.label].append(idx)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cat in range(len(corpus.categories)):
        members = list(by_cat[cat])
        if len(members) < 2:
            if members:
                logger.warning(
                    "category %r has %d observation(s); placing all in train",
                    corpus.categories[cat], len(members),
                )
            train_idx.extend(members)
            continue
        rng.shuffle(members)
        n_train = max(1, int(spec.train_fraction * len(members)))
        train_idx.extend(members[:n_train])
        test_idx.extend(members[n_train:])
    train_idx.sort()
    test_idx.sort()
    mk = lambda idxs, tag: LabeledCorpus(
        observations=[corpus.observations[i] for i in idxs],
        categories=list(corpus.categories),
        provenance=f"{corpus.provenance} | {tag} rep={rep_index}",
    )
    return mk(train_idx, "train"), mk(test_idx, "test")


# ---------------------------------------------------------------------------
# Attaching cached augmentations
# ---------------------------------------------------------------------------


def attach_augmentations(
    corpus: LabeledCorpus,
    records: Iterable["AugRecord"],
    plan: "AugmentationPlan | Sequence[tuple[str, int]]",
) -> LabeledCorpus:
    """Fill each observation's augmented list from cached records.

    The plan (an AugmentationPlan or a plain list of (method name, count)
    pairs) selects which records attach: per method, variants with index
    below the count, ordered method-major then by variant index.  Records
    whose origin id is not in the corpus are ignored with a warning.
    Intended for train-side corpora; evaluation never uses augmented texts.
    """
    method_counts = plan.method_counts() if hasattr(plan, "method_counts") else list(plan)
    by_origin: dict[str, dict[str, list["AugRecord"]]] = {}
    known_ids = {obs.id for obs in corpus.observations}
    orphans: set[str] = set()
    for rec in records:
        if rec.origin_id not in known_ids:
            orphans.add(rec.origin_id)
            continue
        by_origin.setdefault(rec.origin_id, {}).setdefault(rec.method, []).append(rec)
    if orphans:
        sample = ", ".join(sorted(orphans)[:5])
        logger.warning(
            "%d augmentation record origin id(s) not in corpus (e.g. %s); ignored",
            len(orphans), sample,
        )
    observations = []
    for obs in corpus.observations:
        augmented: list[tuple[str, str]] = []
        per_method = by_origin.get(obs.id, {})
        for method_name, count in method_counts:
            recs = sorted(per_method.get(method_name, []), key=lambda r: r.variant_index)
            augmented.extend((r.method, r.text) for r in recs if r.variant_index < count)
        observations.append(replace(obs, augmented=augmented))
    return LabeledCorpus(
        observations=observations,
        categories=list(corpus.categories),
        provenance=corpus.provenance,
    )
