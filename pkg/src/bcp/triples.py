"""Vocabulary construction, triple ingestion, and the known-fact index.

Datasets are directories of ``train.txt`` / ``valid.txt`` / ``test.txt``,
one ``subject<TAB>relation<TAB>object`` triple per line. Triples are stored
as integer (subject, object, relation) index rows. Vocab and TripleStore
are treated as immutable once built.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field

import numpy as np

INVERSE_SUFFIX = "#inv"


class ParseError(ValueError):
    """Malformed dataset line."""


class Vocab:
    """Dense label <-> index maps for entities and relations."""

    def __init__(self) -> None:
        self.entity_ids: dict[str, int] = {}
        self.relation_ids: dict[str, int] = {}
        self.entity_labels: list[str] = []
        self.relation_labels: list[str] = []
        # set once inverse relations have been appended
        self.n_base_relations: int | None = None

    @property
    def n_entities(self) -> int:
        return len(self.entity_labels)

    @property
    def n_relations(self) -> int:
        return len(self.relation_labels)

    def add_entity(self, label: str) -> int:
        idx = self.entity_ids.get(label)
        if idx is None:
            idx = len(self.entity_labels)
            self.entity_ids[label] = idx
            self.entity_labels.append(label)
        return idx

    def add_relation(self, label: str) -> int:
        idx = self.relation_ids.get(label)
        if idx is None:
            idx = len(self.relation_labels)
            self.relation_ids[label] = idx
            self.relation_labels.append(label)
        return idx

    def inverse_relation(self, k: int) -> int:
        """Involution pairing each relation with its inverse (index arithmetic)."""
        if self.n_base_relations is None:
            raise ValueError("vocabulary has no inverse relations")
        nb = self.n_base_relations
        return k - nb if k >= nb else k + nb

    def with_inverse_relations(self) -> "Vocab":
        if self.n_base_relations is not None:
            raise ValueError("inverse relations already present")
        out = Vocab()
        out.entity_ids = dict(self.entity_ids)
        out.entity_labels = list(self.entity_labels)
        out.relation_labels = list(self.relation_labels) + [
            lab + INVERSE_SUFFIX for lab in self.relation_labels
        ]
        out.relation_ids = {lab: i for i, lab in enumerate(out.relation_labels)}
        out.n_base_relations = len(self.relation_labels)
        return out


def load_triples(
    path: str | os.PathLike,
    vocab: Vocab | None = None,
    frozen: bool = False,
    on_unknown: str = "skip",
    on_duplicate: str = "error",
) -> tuple[Vocab, np.ndarray]:
    """Read one split file and return (vocab, (n, 3) int64 rows of (i, j, k)).

    With ``frozen`` the vocabulary is not extended; lines mentioning unseen
    labels are skipped with a warning (``on_unknown='skip'``) or rejected
    (``'error'``). Duplicate triples within the file are an error by default,
    or dropped with a warning under ``on_duplicate='dedup'``.
    """
    if on_unknown not in ("skip", "error"):
        raise ValueError("on_unknown must be 'skip' or 'error'")
    if on_duplicate not in ("error", "dedup"):
        raise ValueError("on_duplicate must be 'error' or 'dedup'")
    if vocab is None:
        vocab = Vocab()

    rows: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int, int]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            subj, rel, obj = fields
            if frozen:
                if (
                    subj not in vocab.entity_ids
                    or obj not in vocab.entity_ids
                    or rel not in vocab.relation_ids
                ):
                    if on_unknown == "error":
                        raise ParseError(
                            f"{path}:{lineno}: unknown label in frozen vocabulary"
                        )
                    warnings.warn(
                        f"{path}:{lineno}: skipping triple with unknown label"
                    )
                    continue
                i = vocab.entity_ids[subj]
                j = vocab.entity_ids[obj]
                k = vocab.relation_ids[rel]
            else:
                i = vocab.add_entity(subj)
                j = vocab.add_entity(obj)
                k = vocab.add_relation(rel)
            triple = (i, j, k)
            if triple in seen:
                if on_duplicate == "error":
                    raise ParseError(f"{path}:{lineno}: duplicate triple {line!r}")
                warnings.warn(f"{path}:{lineno}: dropping duplicate triple")
                continue
            seen.add(triple)
            rows.append(triple)
    arr = np.asarray(rows, dtype=np.int64).reshape(len(rows), 3)
    return vocab, arr


def write_triples(path: str | os.PathLike, triples: np.ndarray, vocab: Vocab) -> None:
    """Write (i, j, k) rows back to the subject/relation/object line format."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, k in np.asarray(triples):
            fh.write(
                f"{vocab.entity_labels[i]}\t{vocab.relation_labels[k]}\t{vocab.entity_labels[j]}\n"
            )


def _encode_keys(triples: np.ndarray, ne: int, nr: int) -> np.ndarray:
    t = np.asarray(triples, dtype=np.uint64)
    ne_, nr_ = np.uint64(ne), np.uint64(nr)
    return (t[:, 0] * ne_ + t[:, 1]) * nr_ + t[:, 2]


@dataclass
class TripleStore:
    """Split triples plus a sorted-key membership index over all splits."""

    splits: dict[str, np.ndarray]
    n_entities: int
    n_relations: int
    augmented: bool = False
    filter_keys: np.ndarray = field(init=False, repr=False)
    train_keys: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        empty = np.empty((0, 3), dtype=np.int64)
        for name in ("train", "valid", "test"):
            self.splits.setdefault(name, empty)
        for name, arr in self.splits.items():
            arr = np.asarray(arr, dtype=np.int64).reshape(-1, 3)
            if arr.size:
                if arr[:, :2].min() < 0 or arr[:, :2].max() >= self.n_entities:
                    raise ValueError(f"{name}: entity index out of bounds")
                if arr[:, 2].min() < 0 or arr[:, 2].max() >= self.n_relations:
                    raise ValueError(f"{name}: relation index out of bounds")
            self.splits[name] = arr
        all_keys = np.concatenate(
            [self._keys(arr) for arr in self.splits.values()]
        )
        self.filter_keys = np.unique(all_keys)
        self.train_keys = np.unique(self._keys(self.splits["train"]))

    def _keys(self, triples: np.ndarray) -> np.ndarray:
        return _encode_keys(triples, self.n_entities, self.n_relations)

    def __getitem__(self, split: str) -> np.ndarray:
        return self.splits[split]

    def _check_bounds(self, i: int, j: int, k: int) -> None:
        if not (0 <= i < self.n_entities and 0 <= j < self.n_entities):
            raise IndexError(f"entity index out of bounds: ({i}, {j})")
        if not 0 <= k < self.n_relations:
            raise IndexError(f"relation index out of bounds: {k}")

    def is_known_fact(self, i: int, j: int, k: int) -> bool:
        """True iff (i, j, k) appears in the union of all splits."""
        self._check_bounds(i, j, k)
        key = np.uint64((i * self.n_entities + j) * self.n_relations + k)
        pos = int(np.searchsorted(self.filter_keys, key))
        return pos < len(self.filter_keys) and self.filter_keys[pos] == key

    def _known_mask(self, keys: np.ndarray) -> np.ndarray:
        if not len(self.filter_keys):
            return np.zeros(len(keys), dtype=bool)
        pos = np.searchsorted(self.filter_keys, keys)
        pos = np.minimum(pos, len(self.filter_keys) - 1)
        return self.filter_keys[pos] == keys

    def known_objects_mask(self, i: int, k: int) -> np.ndarray:
        """Boolean mask over j: is (i, j, k) a known fact."""
        ne, nr = np.uint64(self.n_entities), np.uint64(self.n_relations)
        js = np.arange(self.n_entities, dtype=np.uint64)
        return self._known_mask((np.uint64(i) * ne + js) * nr + np.uint64(k))

    def known_subjects_mask(self, j: int, k: int) -> np.ndarray:
        """Boolean mask over i: is (i, j, k) a known fact."""
        ne, nr = np.uint64(self.n_entities), np.uint64(self.n_relations)
        is_ = np.arange(self.n_entities, dtype=np.uint64)
        return self._known_mask((is_ * ne + np.uint64(j)) * nr + np.uint64(k))


def augment_inverse(store: TripleStore, vocab: Vocab) -> tuple[TripleStore, Vocab]:
    """Add (j, i, inv(k)) to the training split for every train triple.

    Relation count doubles; valid/test splits are untouched; the filter
    index is rebuilt to cover the added triples.
    """
    if store.augmented:
        raise ValueError("inverse augmentation already applied")
    new_vocab = vocab.with_inverse_relations()
    nb = vocab.n_relations
    train = store.splits["train"]
    inv = np.empty_like(train)
    inv[:, 0] = train[:, 1]
    inv[:, 1] = train[:, 0]
    inv[:, 2] = train[:, 2] + nb
    new_splits = {
        "train": np.concatenate([train, inv], axis=0),
        "valid": store.splits["valid"],
        "test": store.splits["test"],
    }
    new_store = TripleStore(
        splits=new_splits,
        n_entities=store.n_entities,
        n_relations=2 * nb,
        augmented=True,
    )
    return new_store, new_vocab


def load_dataset(
    directory: str | os.PathLike,
    augment: bool = True,
    on_unknown: str = "skip",
    on_duplicate: str = "error",
) -> tuple[Vocab, TripleStore]:
    """Load train/valid/test files from a dataset directory.

    The vocabulary grows only while reading ``train.txt``; valid and test
    are loaded against the frozen vocabulary. ``valid.txt``/``test.txt``
    are optional.
    """
    train_path = os.path.join(directory, "train.txt")
    if not os.path.exists(train_path):
        raise FileNotFoundError(f"missing train split: {train_path}")
    vocab, train = load_triples(train_path, on_duplicate=on_duplicate)
    splits = {"train": train}
    for name in ("valid", "test"):
        path = os.path.join(directory, f"{name}.txt")
        if os.path.exists(path):
            _, splits[name] = load_triples(
                path, vocab, frozen=True,
                on_unknown=on_unknown, on_duplicate=on_duplicate,
            )
    store = TripleStore(
        splits=splits,
        n_entities=vocab.n_entities,
        n_relations=vocab.n_relations,
    )
    if augment:
        store, vocab = augment_inverse(store, vocab)
    return vocab, store
