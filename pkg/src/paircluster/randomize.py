"""Treatment assignment draws for paired and stratified designs.

Each stratum gets its own sub-seed derived from (master seed, stratum
index), so draws are reproducible and independent of how the strata are
iterated.  Subset sampling uses a seeded shuffle: exact uniformity over
subsets, no rejection loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Assignment, ExperimentData
from .errors import NotPaired, StratumTooSmall

__all__ = ["Seed", "draw_paired_assignment", "draw_stratified_assignment"]

_MAX_SEED = 2**64


@dataclass(frozen=True)
class Seed:
    """Master seed; the same seed always reproduces the same draws."""

    master: int

    def __post_init__(self):
        if not (0 <= int(self.master) < _MAX_SEED):
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "master", int(self.master))

    def sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.master)

    def spawn(self, n: int) -> list[np.random.SeedSequence]:
        return self.sequence().spawn(n)


def _stratified_treated(
    unit_counts: list[int], master: np.random.SeedSequence
) -> list[np.ndarray]:
    """Per-stratum treated masks: floor(G/2) treated, uniform over subsets."""
    children = master.spawn(len(unit_counts))
    masks = []
    for count, child in zip(unit_counts, children):
        rng = np.random.default_rng(child)
        order = rng.permutation(count)
        mask = np.zeros(count, dtype=bool)
        mask[order[: count // 2]] = True
        masks.append(mask)
    return masks


def _assignment_from_masks(data: ExperimentData, masks: list[np.ndarray]) -> Assignment:
    treated = {}
    for pair, mask in zip(data.pairs, masks):
        for unit, flag in zip(pair.units, mask):
            treated[(pair.pair_id, unit.unit_id)] = int(flag)
    return Assignment(treated)


def draw_stratified_assignment(data: ExperimentData, seed: Seed) -> Assignment:
    """Draw floor(G/2) treated units per stratum, independently across strata.

    With an odd stratum size G this leaves ceil(G/2) = (G+1)/2 controls.
    """
    counts = [p.n_units for p in data.pairs]
    for pair, count in zip(data.pairs, counts):
        if count < 2:
            raise StratumTooSmall(f"stratum {pair.pair_id!r} has {count} unit(s)")
    masks = _stratified_treated(counts, seed.sequence())
    return _assignment_from_masks(data, masks)


def draw_paired_assignment(data: ExperimentData, seed: Seed) -> Assignment:
    """Draw one treated unit per pair, each unit with probability 1/2."""
    for pair in data.pairs:
        if pair.n_units != 2:
            raise NotPaired(
                f"pair {pair.pair_id!r} has {pair.n_units} units; paired draws need exactly 2"
            )
    masks = _stratified_treated([2] * data.P, seed.sequence())
    return _assignment_from_masks(data, masks)
