"""Redundant and degenerate fleet construction and the mutation operator.

Redundant fleets draw every vehicle from a catalog of disjoint task pairs
``(0,1), (2,3), ...``, so vehicles of one type are interchangeable copies.
Degenerate fleets use pairwise distinct pairs, so any two vehicles overlap in
at most one task type.

Mutations act on one vehicle: ``DELETION`` turns it into a null vehicle that
serves no existing task type, ``REPLACEMENT`` swaps its pair for another
admissible one.  Either way the mutated vehicle arrives with nothing
allocated.
"""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, replace
from math import comb
from typing import FrozenSet, List, Optional, Sequence, Tuple

from .model import NULL_CODE, Allocation, Genotype, Pair, code_pair, pair_code


class ConfigError(ValueError):
    """Invalid fleet or experiment configuration."""


class MutationExhausted(RuntimeError):
    """No vehicle in the fleet admits the requested mutation."""


class ModelKind(str, enum.Enum):
    REDUNDANT = "redundant"
    DEGENERATE = "degenerate"


class MutationMode(str, enum.Enum):
    REPLACEMENT = "replace"
    DELETION = "delete"


class DegenerateInit(str, enum.Enum):
    RANDOM_DISTINCT = "random_distinct"
    DOUBLE_RING = "double_ring"


class InitMode(str, enum.Enum):
    # C_a uniform, C_b = capacity - C_a: every base vehicle starts fully loaded
    FULL_LOAD = "full_load"
    # C_a, C_b independently uniform in [0, init_state_max]
    INDEPENDENT = "independent"


class Identity(str, enum.Enum):
    # vehicles are labelled rows of the capability matrix
    LABELLED = "labelled"
    # genotype is the multiset of pairs
    MULTISET = "multiset"


class ThresholdReference(str, enum.Enum):
    VEHICLE_LOSS = "vehicle_loss"
    WORST_CASE = "worst_case"


class AdaptFrom(str, enum.Enum):
    # mutant starts from its parent's adapted allocation
    PARENT = "parent"
    # mutant starts from the initial allocation on unchanged vehicles
    INITIAL = "initial"


@dataclass(frozen=True)
class FleetConfig:
    """Everything needed to build and explore one fleet design.

    ``base_fleet_size`` is the number of vehicles that receive an initial
    allocation (and hence define demand).  Vehicles beyond it are excess
    resources that start empty.  ``None`` means the whole fleet.
    """

    task_count: int = 16
    fleet_size: int = 32
    base_fleet_size: Optional[int] = None
    capacity: int = 10
    model: ModelKind = ModelKind.DEGENERATE
    mutation_mode: MutationMode = MutationMode.DELETION
    init_state_max: int = 10
    degenerate_init: DegenerateInit = DegenerateInit.RANDOM_DISTINCT
    init_mode: InitMode = InitMode.FULL_LOAD
    transfers: bool = True
    identity: Identity = Identity.LABELLED
    threshold_reference: ThresholdReference = ThresholdReference.VEHICLE_LOSS
    adapt_from: AdaptFrom = AdaptFrom.PARENT
    max_sweeps: int = 1000

    def __post_init__(self):
        # accept plain strings for the enum fields
        for name, enum_cls in _ENUM_FIELDS.items():
            value = getattr(self, name)
            if not isinstance(value, enum_cls):
                try:
                    object.__setattr__(self, name, enum_cls(value))
                except ValueError:
                    allowed = ", ".join(m.value for m in enum_cls)
                    raise ConfigError(f"{name}: {value!r} is not one of {allowed}") from None
        self.check()

    @property
    def base_size(self) -> int:
        return self.fleet_size if self.base_fleet_size is None else self.base_fleet_size

    def with_(self, **changes) -> "FleetConfig":
        return replace(self, **changes)

    def check(self) -> None:
        t, v = self.task_count, self.fleet_size
        if t < 2:
            raise ConfigError(f"task_count: need at least 2 task types, got {t}")
        if v < 1:
            raise ConfigError(f"fleet_size: need at least one vehicle, got {v}")
        if not 1 <= self.base_size <= v:
            raise ConfigError(f"base_fleet_size: must lie in [1, fleet_size={v}], got {self.base_size}")
        if self.init_state_max < 0:
            raise ConfigError("init_state_max: must be non-negative")
        if self.capacity < 1:
            raise ConfigError("capacity: must be at least 1")
        if self.max_sweeps < 1:
            raise ConfigError("max_sweeps: must be at least 1")
        if self.model is ModelKind.REDUNDANT and t % 2:
            raise ConfigError(f"task_count: redundant fleets need an even number of task types, got {t}")
        if self.model is ModelKind.DEGENERATE:
            if v > comb(t, 2):
                raise ConfigError(f"fleet_size: {v} distinct pairs requested but only {comb(t, 2)} exist for {t} tasks")
            if self.degenerate_init is DegenerateInit.DOUBLE_RING and v > len(double_ring_pairs(t)):
                raise ConfigError(f"fleet_size: double ring over {t} tasks has only {len(double_ring_pairs(t))} pairs")
        m, cap = self.init_state_max, self.capacity
        if self.init_mode is InitMode.INDEPENDENT and cap < 2 * m:
            raise ConfigError(f"capacity: {cap} < 2 * init_state_max = {2 * m}, random initialization could overflow")
        if self.init_mode is InitMode.FULL_LOAD and not m <= cap <= 2 * m:
            raise ConfigError(
                f"capacity: full-load initialization needs init_state_max <= capacity <= 2 * init_state_max, "
                f"got capacity={cap}, init_state_max={m}"
            )


_ENUM_FIELDS = {
    "model": ModelKind,
    "mutation_mode": MutationMode,
    "degenerate_init": DegenerateInit,
    "init_mode": InitMode,
    "identity": Identity,
    "threshold_reference": ThresholdReference,
    "adapt_from": AdaptFrom,
}


def catalog(task_count: int) -> List[Pair]:
    return [(2 * k, 2 * k + 1) for k in range(task_count // 2)]


def all_pairs(task_count: int) -> List[Pair]:
    return list(itertools.combinations(range(task_count), 2))


def double_ring_pairs(task_count: int) -> List[Pair]:
    """Ring of neighbours then ring of second neighbours, duplicates dropped."""
    out: List[Pair] = []
    seen = set()
    for step in (1, 2):
        for j in range(task_count):
            k = (j + step) % task_count
            if j == k:
                continue
            p = (min(j, k), max(j, k))
            if p not in seen:
                seen.add(p)
                out.append(p)
    return out


def init_redundant(config: FleetConfig, rng: Optional[random.Random] = None) -> Genotype:
    """Round-robin assignment over the disjoint-pair catalog."""
    if config.task_count % 2:
        raise ConfigError("task_count: redundant fleets need an even number of task types")
    types = catalog(config.task_count)
    vehicles = tuple(types[i % len(types)] for i in range(config.fleet_size))
    return Genotype(vehicles, config.task_count, config.capacity)


def init_degenerate(config: FleetConfig, rng: random.Random) -> Genotype:
    t, v = config.task_count, config.fleet_size
    if v > comb(t, 2):
        raise ConfigError(f"fleet_size: {v} distinct pairs requested but only {comb(t, 2)} exist")
    if config.degenerate_init is DegenerateInit.DOUBLE_RING:
        ring = double_ring_pairs(t)
        if v > len(ring):
            raise ConfigError(f"fleet_size: double ring over {t} tasks has only {len(ring)} pairs")
        vehicles = tuple(ring[:v])
    else:
        vehicles = tuple(rng.sample(all_pairs(t), v))
    return Genotype(vehicles, t, config.capacity)


def init_genotype(config: FleetConfig, rng: random.Random) -> Genotype:
    if config.model is ModelKind.REDUNDANT:
        return init_redundant(config, rng)
    return init_degenerate(config, rng)


def init_allocation(genotype: Genotype, config: FleetConfig, rng: random.Random) -> Allocation:
    """Random integer states for the base fleet, zeros for excess and null vehicles."""
    m, cap = config.init_state_max, config.capacity
    if config.init_mode is InitMode.INDEPENDENT and cap < 2 * m:
        raise ConfigError(f"capacity: {cap} < 2 * init_state_max = {2 * m}")
    lo, hi = max(0, cap - m), min(m, cap)
    rows = []
    for i, pair in enumerate(genotype.vehicles):
        if pair is None or i >= config.base_size:
            rows.append((0, 0))
        elif config.init_mode is InitMode.FULL_LOAD:
            x = rng.randint(lo, hi)
            rows.append((x, cap - x))
        else:
            rows.append((rng.randint(0, m), rng.randint(0, m)))
    return Allocation(tuple(rows))


def check_constraints(model: ModelKind, genotype: Genotype) -> bool:
    present = [p for p in genotype.vehicles if p is not None]
    if ModelKind(model) is ModelKind.REDUNDANT:
        allowed = set(catalog(genotype.task_count))
        return all(p in allowed for p in present)
    return len(set(present)) == len(present)


# Code-level helpers.  Pairs are packed as a * T + b (null = -1); the explorer
# works on tuples of these codes.

def catalog_codes(task_count: int) -> Tuple[int, ...]:
    return tuple(pair_code(p, task_count) for p in catalog(task_count))


def all_codes(task_count: int) -> Tuple[int, ...]:
    return tuple(pair_code(p, task_count) for p in all_pairs(task_count))


def admissible_codes(model: ModelKind, codes: Sequence[int], vehicle: int, task_count: int) -> List[int]:
    current = codes[vehicle]
    if model is ModelKind.REDUNDANT:
        return [c for c in catalog_codes(task_count) if c != current]
    used = set(codes)
    return [c for c in all_codes(task_count) if c not in used]


def is_exhausted(codes: Sequence[int], model: ModelKind, mode: MutationMode, task_count: int) -> bool:
    """True when no vehicle admits a mutation of the given mode."""
    if mode is MutationMode.DELETION:
        return all(c == NULL_CODE for c in codes)
    if model is ModelKind.REDUNDANT:
        n_types = task_count // 2
        return n_types < 2 and all(c != NULL_CODE for c in codes)
    used = {c for c in codes if c != NULL_CODE}
    return len(used) >= comb(task_count, 2)


def choose_mutation(
    codes: Sequence[int], model: ModelKind, mode: MutationMode, task_count: int, rng: random.Random
) -> Tuple[int, int]:
    """Pick ``(vehicle, new_code)``: uniform vehicle by rejection, then uniform target."""
    if is_exhausted(codes, model, mode, task_count):
        raise MutationExhausted("no vehicle admits a mutation")
    n = len(codes)
    while True:
        k = rng.randrange(n)
        if mode is MutationMode.DELETION:
            if codes[k] != NULL_CODE:
                return k, NULL_CODE
            continue
        options = admissible_codes(model, codes, k, task_count)
        if options:
            return k, options[rng.randrange(len(options))]


def admissible_replacements(model: ModelKind, genotype: Genotype, vehicle: int) -> FrozenSet[Pair]:
    """Pairs the vehicle may be replaced with without breaking the model's constraint."""
    t = genotype.task_count
    codes = [pair_code(p, t) for p in genotype.vehicles]
    return frozenset(code_pair(c, t) for c in admissible_codes(ModelKind(model), codes, vehicle, t))


def mutate(
    genotype: Genotype,
    allocation: Allocation,
    model: ModelKind,
    mode: MutationMode,
    rng: random.Random,
) -> Tuple[Genotype, Allocation]:
    """Mutate one vehicle and clear its allocation row.

    Raises :class:`MutationExhausted` when no vehicle can be mutated.
    """
    t = genotype.task_count
    codes = [pair_code(p, t) for p in genotype.vehicles]
    k, new = choose_mutation(codes, ModelKind(model), MutationMode(mode), t, rng)
    return genotype.with_vehicle(k, code_pair(new, t)), allocation.with_row(k, (0, 0))
