"""Fleet genotype, allocation, phenotype and fitness.

A fleet is ``V`` vehicles over ``T`` task types.  Each vehicle can serve
exactly two distinct task types (its capability pair) or nothing at all
(a null vehicle).  The allocation records how many tasks of each of its two
types a vehicle is ready to accomplish; the phenotype sums those counts per
task type, and fitness penalises the squared shortfall against demand.

Everything here is integer valued.  Thresholds are exact fractions, so no
neutrality decision ever depends on floating point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

Pair = Tuple[int, int]
TraitVector = Tuple[int, ...]


class StructureError(ValueError):
    """Raised when vectors or matrices have incompatible shapes."""


class ParameterError(ValueError):
    """Raised for out-of-range scalar parameters."""


def normalize_pair(a: int, b: int) -> Pair:
    if a == b:
        raise StructureError(f"capability pair needs two distinct tasks, got ({a}, {b})")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Genotype:
    """Capability matrix of a fleet, stored as one optional pair per vehicle."""

    vehicles: Tuple[Optional[Pair], ...]
    task_count: int
    capacity: int

    def __post_init__(self):
        if self.task_count < 2:
            raise StructureError("task_count must be at least 2")
        if len(self.vehicles) < 1:
            raise StructureError("a fleet needs at least one vehicle")
        if self.capacity < 0:
            raise StructureError("capacity must be non-negative")
        for i, pair in enumerate(self.vehicles):
            if pair is None:
                continue
            a, b = pair
            if not (0 <= a < b < self.task_count):
                raise StructureError(
                    f"vehicle {i}: pair {pair} is not an ordered pair of tasks in [0, {self.task_count})"
                )

    @classmethod
    def from_pairs(cls, pairs: Sequence[Optional[Sequence[int]]], task_count: int, capacity: int) -> "Genotype":
        vehicles = tuple(None if p is None else normalize_pair(int(p[0]), int(p[1])) for p in pairs)
        return cls(vehicles, task_count, capacity)

    @property
    def fleet_size(self) -> int:
        return len(self.vehicles)

    def with_vehicle(self, index: int, pair: Optional[Pair]) -> "Genotype":
        vehicles = list(self.vehicles)
        vehicles[index] = pair
        return Genotype(tuple(vehicles), self.task_count, self.capacity)


@dataclass(frozen=True)
class Allocation:
    """Per-vehicle task counts ``(count for task_a, count for task_b)``."""

    states: Tuple[Tuple[int, int], ...]

    @classmethod
    def zeros(cls, fleet_size: int) -> "Allocation":
        return cls(((0, 0),) * fleet_size)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "Allocation":
        return cls(tuple((int(r[0]), int(r[1])) for r in rows))

    def __len__(self) -> int:
        return len(self.states)

    def with_row(self, index: int, row: Tuple[int, int]) -> "Allocation":
        states = list(self.states)
        states[index] = row
        return Allocation(tuple(states))


def compute_phenotype(genotype: Genotype, allocation: Allocation) -> TraitVector:
    """Readiness per task type: the sum of allocated counts over capable vehicles."""
    if len(allocation) != genotype.fleet_size:
        raise StructureError(
            f"allocation has {len(allocation)} rows but the fleet has {genotype.fleet_size} vehicles"
        )
    totals = [0] * genotype.task_count
    for pair, (x, y) in zip(genotype.vehicles, allocation.states):
        if pair is None:
            continue
        totals[pair[0]] += x
        totals[pair[1]] += y
    return tuple(totals)


def shortfall_penalty(phenotype: Sequence[int], environment: Sequence[int]) -> int:
    """Total squared shortfall; over-supply is free."""
    if len(phenotype) != len(environment):
        raise StructureError(f"length mismatch: phenotype {len(phenotype)} vs environment {len(environment)}")
    total = 0
    for have, need in zip(phenotype, environment):
        if have > need:
            continue
        total += (have - need) ** 2
    return total


def fitness(phenotype: Sequence[int], environment: Sequence[int]) -> int:
    """Fleet fitness: ``-sum_j theta_j`` where ``theta_j`` is the squared shortfall on task ``j``.

    Always an integer ``<= 0``; zero exactly when every demand is met.
    """
    return -shortfall_penalty(phenotype, environment)


def worst_case_penalty(environment: Sequence[int]) -> int:
    """Penalty of a fleet that is ready for nothing."""
    return sum(e * e for e in environment)


def vehicle_loss_penalty(genotype: Genotype, allocation: Allocation) -> int:
    """Summed penalty of every single-vehicle failure with no reallocation.

    Removing vehicle ``i`` from a fleet that exactly meets demand leaves a
    shortfall of ``C_ij`` on each of its tasks, so this is ``sum_ij C_ij**2``
    over capable vehicles.
    """
    total = 0
    for pair, (x, y) in zip(genotype.vehicles, allocation.states):
        if pair is not None:
            total += x * x + y * y
    return total


def _as_fraction(alpha) -> Fraction:
    if isinstance(alpha, float):
        # str() keeps decimal literals like 2.5 exact
        return Fraction(str(alpha))
    return Fraction(alpha)


def neutrality_threshold(environment: Sequence[int], alpha, reference: Optional[int] = None) -> Fraction:
    """Lowest fitness still counted as neutral: ``-(alpha/100) * reference``.

    ``reference`` defaults to the worst-case penalty of ``environment``.
    """
    a = _as_fraction(alpha)
    if a < 0:
        raise ParameterError(f"alpha must be non-negative, got {alpha}")
    if reference is None:
        reference = worst_case_penalty(environment)
    return -(a * reference) / 100


def is_neutral(value: int, threshold) -> bool:
    # inclusive boundary, exact comparison
    return value >= threshold


NULL_CODE = -1


def pair_code(pair: Optional[Pair], task_count: int) -> int:
    return NULL_CODE if pair is None else pair[0] * task_count + pair[1]


def code_pair(code: int, task_count: int) -> Optional[Pair]:
    return None if code < 0 else (code // task_count, code % task_count)


def canonical_form(genotype: Genotype) -> bytes:
    """Order-independent identity of a genotype.

    Pairs are sorted lexicographically with null vehicles last and packed as
    big-endian 16-bit fields, so keys compare the same on every platform.
    """
    present = sorted(p for p in genotype.vehicles if p is not None)
    nulls = genotype.fleet_size - len(present)
    out = bytearray(genotype.task_count.to_bytes(2, "big"))
    for a, b in present:
        out += a.to_bytes(2, "big") + b.to_bytes(2, "big")
    out += b"\xff\xff\xff\xff" * nulls
    return bytes(out)


def validate(genotype: Genotype, allocation: Allocation) -> list:
    """List every broken allocation constraint as a readable string; empty when valid."""
    problems = []
    if len(allocation) != genotype.fleet_size:
        problems.append(
            f"fleet: allocation has {len(allocation)} rows for {genotype.fleet_size} vehicles"
        )
        return problems
    for i, (pair, (x, y)) in enumerate(zip(genotype.vehicles, allocation.states)):
        if x < 0 or y < 0:
            problems.append(f"vehicle {i}: negative task count ({x}, {y})")
        if pair is None:
            if x != 0 or y != 0:
                problems.append(f"vehicle {i}: zero-where-incapable violated, null vehicle holds ({x}, {y})")
            continue
        if x + y > genotype.capacity:
            problems.append(f"vehicle {i}: capacity violated, {x} + {y} > {genotype.capacity}")
    return problems
