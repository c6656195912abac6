"""Deterministic synthetic datasets for desk-scale runs.

``generate_structured_dataset`` plants a learnable group structure:
entities belong to blocs and every relation holds between a few
(source-bloc, target-bloc) pairs. Facts are the pattern cells, trimmed
to the requested count and split 80/10/10 with a coverage pass that
keeps every entity and relation present in train.
"""

from __future__ import annotations

import os
from collections import Counter

import numpy as np


def generate_structured_dataset(
    n_entities: int = 14,
    n_relations: int = 56,
    n_facts: int = 2024,
    seed: int = 7,
    n_groups: int = 4,
) -> dict[str, list[str]]:
    """Build train/valid/test line lists for a synthetic bloc-structured graph."""
    if n_facts > n_entities * n_entities * n_relations:
        raise ValueError("more facts requested than tensor cells")
    rng = np.random.default_rng(seed)

    group_of = np.sort(np.arange(n_entities) % n_groups)
    rng.shuffle(group_of)
    members = [np.flatnonzero(group_of == g) for g in range(n_groups)]
    pair_list = [(gs, gt) for gs in range(n_groups) for gt in range(n_groups)]

    quota = n_facts // n_relations
    fact_set: set[tuple[int, int, int]] = set()
    patterns: list[list[tuple[int, int]]] = []
    for k in range(n_relations):
        want = int(rng.integers(quota - 6, quota + 9))
        order = rng.permutation(len(pair_list))
        picked: list[tuple[int, int]] = []
        cells = 0
        for t in order:
            gs, gt = pair_list[t]
            picked.append((gs, gt))
            cells += len(members[gs]) * len(members[gt])
            if cells >= want:
                break
        patterns.append(picked)
        for gs, gt in picked:
            for i in members[gs]:
                for j in members[gt]:
                    fact_set.add((int(i), int(j), k))
    # widen sparse relations until enough facts exist
    while len(fact_set) < n_facts:
        k = int(rng.integers(n_relations))
        gs, gt = pair_list[int(rng.integers(len(pair_list)))]
        if (gs, gt) in patterns[k]:
            continue
        patterns[k].append((gs, gt))
        for i in members[gs]:
            for j in members[gt]:
                fact_set.add((int(i), int(j), k))

    facts = sorted(fact_set)
    rng.shuffle(facts)
    # trim to the exact count without emptying any relation or entity
    rel_count = Counter(k for _, _, k in facts)
    ent_count = Counter()
    for i, j, _ in facts:
        ent_count[i] += 1
        ent_count[j] += 1
    keep: list[tuple[int, int, int]] = []
    excess = len(facts) - n_facts
    for i, j, k in facts:
        droppable = (
            excess > 0
            and rel_count[k] > 1
            and ent_count[i] > (1 if i == j else 2)
            and ent_count[j] > (1 if i == j else 2)
        )
        if droppable:
            rel_count[k] -= 1
            ent_count[i] -= 1
            ent_count[j] -= 1
            excess -= 1
        else:
            keep.append((i, j, k))
    if len(keep) != n_facts:
        raise RuntimeError("could not trim to the requested fact count")
    facts = keep

    # coverage pass: pin one fact per relation and per entity into train
    pinned: set[int] = set()
    seen_rel: set[int] = set()
    seen_ent: set[int] = set()
    for idx, (i, j, k) in enumerate(facts):
        if k not in seen_rel or i not in seen_ent or j not in seen_ent:
            pinned.add(idx)
            seen_rel.add(k)
            seen_ent.update((i, j))
    free = [idx for idx in range(len(facts)) if idx not in pinned]
    order = rng.permutation(len(free))
    n_eval = n_facts // 10
    test_idx = {free[t] for t in order[:n_eval]}
    valid_idx = {free[t] for t in order[n_eval:2 * n_eval]}

    ew = len(str(n_entities - 1))
    rw = len(str(n_relations - 1))

    def line(i: int, j: int, k: int) -> str:
        return f"e{i:0{ew}d}\tr{k:0{rw}d}\te{j:0{ew}d}"

    splits: dict[str, list[str]] = {"train": [], "valid": [], "test": []}
    for idx, (i, j, k) in enumerate(facts):
        if idx in test_idx:
            splits["test"].append(line(i, j, k))
        elif idx in valid_idx:
            splits["valid"].append(line(i, j, k))
        else:
            splits["train"].append(line(i, j, k))
    return splits


def write_dataset(directory: str | os.PathLike, splits: dict[str, list[str]]) -> None:
    os.makedirs(directory, exist_ok=True)
    for name, lines in splits.items():
        with open(os.path.join(directory, f"{name}.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))


def write_nations_scale(directory: str | os.PathLike, seed: int = 7) -> None:
    """Materialize the default 14-entity / 56-relation / 2024-fact dataset."""
    write_dataset(directory, generate_structured_dataset(seed=seed))


if __name__ == "__main__":
    import sys

    out = sys.argv[1] if len(sys.argv) > 1 else "data/nations-scale"
    write_nations_scale(out)
    print(f"wrote dataset to {out}")
