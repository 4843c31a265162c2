"""Benchmark harness: repeated subsampling, mode/method grid, correlation study.

A grid cell is (sample size, category count, augmentation method).  Within a
cell every mode sees the same subsamples, splits and parameter
initializations, so mode comparisons are not confounded by sampling noise.
The no-augmentation baseline runs once per (sample size, category count)
under the pseudo-method "none".
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from random import Random

import numpy as np

from .dataset import (
    LabeledCorpus,
    Observation,
    SplitSpec,
    attach_augmentations,
    select_categories,
    split,
    stratified_sample,
)
from .model import encode_text, head
from .seeding import derive_rng, derive_seed
from .textproc import encode, tokenize
from .trainer import TrainConfig, TrainedModel, evaluate, train_from_observations

logger = logging.getLogger(__name__)

BASELINE_METHOD = "none"

MODE_ORDER = ("baseline", "standard", "bagg")
METHOD_ORDER = ("none", "eda", "bt_a", "bt_b", "combined")


# ---------------------------------------------------------------------------
# Result containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    sample_size: int
    num_categories: int
    mode: str
    method: str
    mean_accuracy: float
    std_dev: float
    repetitions: int
    seed: int


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)
    skipped: list[tuple[int, int, str, str]] = field(default_factory=list)

    def sort(self) -> None:
        def key(row: ResultRow):
            mode_rank = MODE_ORDER.index(row.mode) if row.mode in MODE_ORDER else len(MODE_ORDER)
            method_rank = (
                METHOD_ORDER.index(row.method)
                if row.method in METHOD_ORDER
                else len(METHOD_ORDER)
            )
            return (row.sample_size, row.num_categories, mode_rank, method_rank, row.method)

        self.rows.sort(key=key)


@dataclass
class ExperimentConfig:
    sample_sizes: tuple[int, ...] = (100, 200)
    num_categories: tuple[int, ...] = (8, 12)
    methods: tuple[str, ...] = ("eda", "bt_a", "bt_b", "combined")
    modes: tuple[str, ...] = ("baseline", "standard", "bagg")
    repetitions: int = 25
    master_seed: int = 0
    aug_count: int = 4
    train: TrainConfig = field(default_factory=TrainConfig)
    cache_dir: Path | None = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.aug_count < 1:
            raise ValueError(f"aug_count must be >= 1, got {self.aug_count}")

    def combined_components(self) -> list[str]:
        return [m for m in self.methods if m != "combined"]


# ---------------------------------------------------------------------------
# Experiment runner
# ---------------------------------------------------------------------------


def _fingerprint_corpus(corpus: LabeledCorpus) -> str:
    h = hashlib.blake2b(digest_size=16)
    for name in corpus.categories:
        h.update(name.encode("utf-8") + b"\x1f")
    for obs in corpus.observations:
        h.update(f"{obs.id}\x1f{obs.original}\x1f{obs.label}\x1e".encode("utf-8"))
    return h.hexdigest()


def _fingerprint_records(records_by_method: dict[str, list]) -> str:
    h = hashlib.blake2b(digest_size=16)
    for method in sorted(records_by_method):
        for r in records_by_method[method]:
            h.update(
                f"{method}\x1f{r.origin_id}\x1f{r.method}\x1f{r.variant_index}\x1f{r.text}\x1e".encode("utf-8")
            )
    return h.hexdigest()


def _cache_path(cache_dir: Path, key: str, n: int, cats: int, method: str) -> Path:
    return cache_dir / f"cell_{key}_{n}_{cats}_{method}.json"


def _atomic_write_json(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    os.replace(tmp, path)


def _method_counts_for(method: str, config: ExperimentConfig) -> list[tuple[str, int]]:
    if method == "combined":
        components = config.combined_components()
        if not components:
            raise ValueError("combined method requires at least one component method")
        return [(name, config.aug_count) for name in components]
    return [(method, config.aug_count)]


def run_experiment(
    corpus: LabeledCorpus,
    records_by_method: dict[str, list],
    config: ExperimentConfig,
) -> ResultTable:
    """Run the full grid and aggregate mean/std accuracy over repetitions.

    Deterministic given (corpus, records, config): every cell draws from
    seed streams derived from (master_seed, sample_size, num_categories,
    method), so modes within a cell share subsamples, splits and inits, and
    removing one cell never changes another.  Completed cells can be cached
    to cache_dir and are reused on rerun.
    """
    table = ResultTable()
    cache_key = None
    if config.cache_dir is not None:
        config.cache_dir.mkdir(parents=True, exist_ok=True)
        cache_key = hashlib.blake2b(
            "\x1f".join(
                [
                    _fingerprint_corpus(corpus),
                    _fingerprint_records(records_by_method),
                    str(config.master_seed),
                    str(config.repetitions),
                    str(config.aug_count),
                    ",".join(config.modes),
                    str(config.train),
                ]
            ).encode("utf-8"),
            digest_size=8,
        ).hexdigest()

    cells: list[tuple[str, list[str]]] = []
    if "baseline" in config.modes:
        cells.append((BASELINE_METHOD, ["baseline"]))
    aug_modes = [m for m in config.modes if m != "baseline"]
    if aug_modes:
        cells.extend((method, aug_modes) for method in config.methods)

    for n in config.sample_sizes:
        for cats in config.num_categories:
            if cats > len(corpus.categories):
                for method, _ in cells:
                    reason = f"corpus has {len(corpus.categories)} categories, cell needs {cats}"
                    table.skipped.append((n, cats, method, reason))
                    logger.warning("skipping cell n=%d cats=%d method=%s: %s", n, cats, method, reason)
                continue
            base = select_categories(corpus, cats)
            if n > len(base):
                for method, _ in cells:
                    reason = f"only {len(base)} observations available, cell needs {n}"
                    table.skipped.append((n, cats, method, reason))
                    logger.warning("skipping cell n=%d cats=%d method=%s: %s", n, cats, method, reason)
                continue
            for method, modes in cells:
                cache_file = None
                if cache_key is not None:
                    cache_file = _cache_path(config.cache_dir, cache_key, n, cats, method)
                    if cache_file.exists():
                        payload = json.loads(cache_file.read_text(encoding="utf-8"))
                        accs = {mode: payload["accuracies"][mode] for mode in modes}
                        table.rows.extend(
                            _aggregate(n, cats, method, modes, accs, payload["cell_seed"], config)
                        )
                        logger.info("cell n=%d cats=%d method=%s loaded from cache", n, cats, method)
                        continue
                cell_seed, accs = _run_cell(base, records_by_method, n, cats, method, modes, config)
                if cache_file is not None:
                    _atomic_write_json(cache_file, {"cell_seed": cell_seed, "accuracies": accs})
                table.rows.extend(_aggregate(n, cats, method, modes, accs, cell_seed, config))
    table.sort()
    return table


def _run_cell(
    base: LabeledCorpus,
    records_by_method: dict[str, list],
    n: int,
    cats: int,
    method: str,
    modes: list[str],
    config: ExperimentConfig,
) -> tuple[int, dict[str, list[float]]]:
    cell_seed = derive_seed(config.master_seed, n, cats, method)
    split_spec = SplitSpec(
        train_fraction=0.8, sample_size=n, num_categories=cats, repetition_seed=cell_seed
    )
    if method == BASELINE_METHOD:
        method_counts = []
        by_origin: dict[str, list] = {}
    else:
        method_counts = _method_counts_for(method, config)
        by_origin = {}
        for name, _ in method_counts:
            if name not in records_by_method:
                raise ValueError(f"no augmentation records for method {name!r}")
            for rec in records_by_method[name]:
                by_origin.setdefault(rec.origin_id, []).append(rec)
    accuracies: dict[str, list[float]] = {mode: [] for mode in modes}
    for rep in range(config.repetitions):
        sub = stratified_sample(base, n, derive_rng(cell_seed, "sample", rep))
        train_c, test_c = split(sub, split_spec, rep)
        if method_counts:
            # restrict to the split's ids so expected misses don't warn
            records = [r for obs in train_c.observations for r in by_origin.get(obs.id, [])]
            train_c = attach_augmentations(train_c, records, method_counts)
        run_seed = derive_seed(cell_seed, "train", rep)
        for mode in modes:
            cfg = replace(config.train, mode=mode, seed=run_seed)
            model = train_from_observations(train_c, cfg)
            accuracies[mode].append(evaluate(model, test_c))
    return cell_seed, accuracies


def _aggregate(
    n: int,
    cats: int,
    method: str,
    modes: list[str],
    accuracies: dict[str, list[float]],
    cell_seed: int,
    config: ExperimentConfig,
) -> list[ResultRow]:
    rows = []
    for mode in modes:
        accs = np.asarray(accuracies[mode])
        std = float(accs.std(ddof=1)) if len(accs) > 1 else 0.0
        rows.append(
            ResultRow(
                sample_size=n,
                num_categories=cats,
                mode=mode,
                method=method,
                mean_accuracy=float(accs.mean()),
                std_dev=std,
                repetitions=config.repetitions,
                seed=cell_seed,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Synthetic corpus
# ---------------------------------------------------------------------------

SIGNATURES_PER_CLASS = 3
NOISE_VOCAB_SIZE = 60


def class_signatures(num_classes: int) -> list[list[str]]:
    return [
        [f"sig{c}k{k}" for k in range(SIGNATURES_PER_CLASS)] for c in range(num_classes)
    ]


def noise_vocab() -> list[str]:
    return [f"noise{j}" for j in range(NOISE_VOCAB_SIZE)]


def make_synthetic_corpus(
    num_classes: int,
    size: int,
    noise_level: float = 0.0,
    rng: Random | None = None,
) -> LabeledCorpus:
    """Generate a desk-scale classification corpus with known structure.

    Each class owns three signature keywords.  A text draws 2-4 signature
    words of its class (each replaced by a random noise word with
    probability noise_level) plus 5-15 noise words, shuffled.  Class counts
    are balanced to within one.
    """
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    if not 0.0 <= noise_level <= 1.0:
        raise ValueError(f"noise_level must be in [0, 1], got {noise_level}")
    rng = rng or Random(0)
    signatures = class_signatures(num_classes)
    noise = noise_vocab()
    observations = []
    for i in range(size):
        label = i % num_classes
        sigs = signatures[label]
        words = []
        for _ in range(rng.randint(2, 4)):
            word = sigs[rng.randrange(len(sigs))]
            if rng.random() < noise_level:
                word = noise[rng.randrange(len(noise))]
            words.append(word)
        for _ in range(rng.randint(5, 15)):
            words.append(noise[rng.randrange(len(noise))])
        rng.shuffle(words)
        observations.append(Observation(id=f"syn{i}", original=" ".join(words), label=label))
    return LabeledCorpus(
        observations=observations,
        categories=[f"class{c}" for c in range(num_classes)],
        provenance=f"synthetic C={num_classes} n={size} noise={noise_level}",
    )


def synthetic_thesaurus(num_classes: int) -> dict[str, list[str]]:
    """Companion thesaurus for the synthetic corpus.

    Signature words map to the other signature words of their class (a
    thesaurus groups words from the same semantic field); noise words map
    to neighboring noise words.
    """
    thesaurus: dict[str, list[str]] = {}
    for sigs in class_signatures(num_classes):
        for word in sigs:
            thesaurus[word] = [w for w in sigs if w != word]
    noise = noise_vocab()
    for j, word in enumerate(noise):
        thesaurus[word] = [noise[(j + 1) % len(noise)], noise[(j + 2) % len(noise)]]
    return thesaurus


# ---------------------------------------------------------------------------
# Correlation study
# ---------------------------------------------------------------------------


@dataclass
class CorrelationReport:
    """Pearson correlations of per-text losses, within vs across groups."""

    within_group_corr: float | None
    cross_group_corr: float | None
    group_count: int
    mean_group_size: float
    within_pairs: int
    cross_pairs: int
    p_within_positive: float | None
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "within_group_corr": self.within_group_corr,
            "cross_group_corr": self.cross_group_corr,
            "group_count": self.group_count,
            "mean_group_size": self.mean_group_size,
            "within_pairs": self.within_pairs,
            "cross_pairs": self.cross_pairs,
            "p_within_positive": self.p_within_positive,
            "degenerate": self.degenerate,
        }


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    if x.std() == 0.0 or y.std() == 0.0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def _fisher_p_positive(r: float, n_pairs: int) -> float:
    """One-sided p-value for H1: correlation > 0, via the Fisher transform."""
    if n_pairs <= 3:
        return 1.0
    with np.errstate(divide="ignore"):
        z = np.arctanh(min(r, 1.0)) * math.sqrt(n_pairs - 3)
    return 0.5 * math.erfc(float(z) / math.sqrt(2.0))


def correlation_study(
    corpus: LabeledCorpus,
    model: TrainedModel,
    seed: int = 0,
    min_groups: int = 50,
) -> CorrelationReport:
    """Measure loss correlation within groups vs across groups.

    Computes each text's cross-entropy under the model, forms every
    intra-group pair and an equal number of random inter-group pairs, and
    reports the two Pearson correlations.  Requires at least min_groups
    groups of three or more texts.
    """
    groups: list[list[float]] = []
    for obs in corpus.observations:
        texts = obs.texts()
        if len(texts) < 2:
            continue
        losses = []
        for text in texts:
            ids = encode(tokenize(text), model.vocab)
            probs = head(encode_text(ids, model.params), model.params)
            losses.append(float(-np.log(probs[obs.label])))
        groups.append(losses)
    eligible = sum(1 for g in groups if len(g) >= 3)
    if eligible < min_groups:
        raise ValueError(
            f"correlation study needs >= {min_groups} groups of size >= 3, found {eligible}"
        )

    within_x: list[float] = []
    within_y: list[float] = []
    n_within_unordered = 0
    for losses in groups:
        for a in range(len(losses)):
            for b in range(a + 1, len(losses)):
                n_within_unordered += 1
                within_x.extend((losses[a], losses[b]))
                within_y.extend((losses[b], losses[a]))

    rng = derive_rng(seed, "cross-pairs")
    cross_x: list[float] = []
    cross_y: list[float] = []
    for _ in range(n_within_unordered):
        gi = rng.randrange(len(groups))
        gj = rng.randrange(len(groups) - 1)
        if gj >= gi:
            gj += 1
        a = groups[gi][rng.randrange(len(groups[gi]))]
        b = groups[gj][rng.randrange(len(groups[gj]))]
        cross_x.extend((a, b))
        cross_y.extend((b, a))

    wx, wy = np.asarray(within_x), np.asarray(within_y)
    cx, cy = np.asarray(cross_x), np.asarray(cross_y)
    within_r = _pearson(wx, wy)
    cross_r = _pearson(cx, cy)
    degenerate = within_r is None or cross_r is None
    return CorrelationReport(
        within_group_corr=within_r,
        cross_group_corr=cross_r,
        group_count=len(groups),
        mean_group_size=float(np.mean([len(g) for g in groups])),
        within_pairs=n_within_unordered,
        cross_pairs=n_within_unordered,
        p_within_positive=None if within_r is None else _fisher_p_positive(within_r, n_within_unordered),
        degenerate=degenerate,
    )


def run_correlation_study(
    corpus: LabeledCorpus,
    records: list,
    method_counts: list[tuple[str, int]],
    epochs: int,
    train_config: TrainConfig,
    seed: int = 0,
) -> CorrelationReport:
    """Attach augmentations, train standard mode for a few epochs, measure."""
    attached = attach_augmentations(corpus, records, method_counts)
    cfg = replace(train_config, mode="standard", epochs=epochs)
    model = train_from_observations(attached, cfg)
    return correlation_study(attached, model, seed=seed)
