"""Phenotypic control: ordered asynchronous local search over allocations.

Vehicles are visited in index order.  Each one evaluates its single-unit
moves and applies the best strictly improving move before the next vehicle
looks at the fleet.  A sweep that accepts nothing ends the search.

Move evaluation order (first one wins on ties):

    +1 on task_a, -1 on task_a, +1 on task_b, -1 on task_b,
    then, with transfers enabled, shift one task b->a, shift one task a->b.

A transfer keeps the vehicle's total load fixed, which is the only way a
fully loaded vehicle can respond to a shortfall.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from numba import njit

from .model import Allocation, Genotype, StructureError, compute_phenotype, fitness, pair_code, validate

DEFAULT_MAX_SWEEPS = 1000


class Move(NamedTuple):
    d_a: int
    d_b: int


@dataclass(frozen=True)
class AdaptationOutcome:
    allocation: Allocation
    fitness: int
    sweeps_used: int
    converged: bool
    # (vehicle, d_a, d_b) per accepted move, only filled when recording
    moves: Tuple[Tuple[int, int, int], ...] = ()


def candidate_moves(genotype: Genotype, allocation: Allocation, vehicle: int, transfers: bool = False) -> List[Move]:
    """Legal single-unit moves for one vehicle, in evaluation order."""
    if genotype.vehicles[vehicle] is None:
        return []
    x, y = allocation.states[vehicle]
    room = x + y < genotype.capacity
    moves = []
    if room:
        moves.append(Move(1, 0))
    if x > 0:
        moves.append(Move(-1, 0))
    if room:
        moves.append(Move(0, 1))
    if y > 0:
        moves.append(Move(0, -1))
    if transfers:
        if y > 0:
            moves.append(Move(1, -1))
        if x > 0:
            moves.append(Move(-1, 1))
    return moves


@njit(cache=True, inline="always")
def _theta(have, need):
    if have > need:
        return 0
    d = have - need
    return d * d


@njit(cache=True)
def _adapt_kernel(codes, alloc, env, capacity, transfers, max_sweeps, moves):
    """Greedy reallocation in place.

    ``codes`` packs each vehicle's pair as ``a * T + b`` (``-1`` for null).
    Returns ``(penalty, sweeps, converged, n_moves, phenotype)``.  Moves past
    ``moves.shape[0]`` are applied but not recorded.
    """
    n_tasks = env.shape[0]
    n_veh = codes.shape[0]
    ta = np.empty(n_veh, dtype=np.int64)
    tb = np.empty(n_veh, dtype=np.int64)
    for i in range(n_veh):
        c = codes[i]
        if c < 0:
            ta[i] = -1
            tb[i] = -1
        else:
            ta[i] = c // n_tasks
            tb[i] = c % n_tasks
    phen = np.zeros(n_tasks, dtype=np.int64)
    for i in range(n_veh):
        if ta[i] >= 0:
            phen[ta[i]] += alloc[i, 0]
            phen[tb[i]] += alloc[i, 1]
    penalty = 0
    for j in range(n_tasks):
        penalty += _theta(phen[j], env[j])

    n_moves = 0
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        accepted = 0
        for i in range(n_veh):
            a = ta[i]
            if a < 0:
                continue
            b = tb[i]
            pa = phen[a]
            pb = phen[b]
            ea = env[a]
            eb = env[b]
            # decreases never help and increases only help a short task
            if pa >= ea and pb >= eb:
                continue
            x = alloc[i, 0]
            y = alloc[i, 1]
            th_a = _theta(pa, ea)
            th_b = _theta(pb, eb)
            room = x + y < capacity
            best = 0
            bda = 0
            bdb = 0
            if room:
                g = th_a - _theta(pa + 1, ea)
                if g > best:
                    best, bda, bdb = g, 1, 0
            if x > 0:
                g = th_a - _theta(pa - 1, ea)
                if g > best:
                    best, bda, bdb = g, -1, 0
            if room:
                g = th_b - _theta(pb + 1, eb)
                if g > best:
                    best, bda, bdb = g, 0, 1
            if y > 0:
                g = th_b - _theta(pb - 1, eb)
                if g > best:
                    best, bda, bdb = g, 0, -1
            if transfers:
                if y > 0:
                    g = th_a - _theta(pa + 1, ea) + th_b - _theta(pb - 1, eb)
                    if g > best:
                        best, bda, bdb = g, 1, -1
                if x > 0:
                    g = th_a - _theta(pa - 1, ea) + th_b - _theta(pb + 1, eb)
                    if g > best:
                        best, bda, bdb = g, -1, 1
            if best > 0:
                alloc[i, 0] = x + bda
                alloc[i, 1] = y + bdb
                phen[a] = pa + bda
                phen[b] = pb + bdb
                penalty -= best
                if n_moves < moves.shape[0]:
                    moves[n_moves, 0] = i
                    moves[n_moves, 1] = bda
                    moves[n_moves, 2] = bdb
                n_moves += 1
                accepted += 1
        if accepted == 0:
            converged = True
            break
    return penalty, sweeps, converged, n_moves, phen


_NO_MOVES = np.zeros((0, 3), dtype=np.int64)


def adapt_arrays(codes, alloc, env, capacity: int, transfers: bool, max_sweeps: int = DEFAULT_MAX_SWEEPS):
    """Array-level entry point used by the explorer; mutates ``alloc``."""
    return _adapt_kernel(codes, alloc, env, capacity, transfers, max_sweeps, _NO_MOVES)


def genotype_codes(genotype: Genotype) -> np.ndarray:
    t = genotype.task_count
    return np.array([pair_code(p, t) for p in genotype.vehicles], dtype=np.int64)


def adapt(
    genotype: Genotype,
    allocation: Allocation,
    environment,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    transfers: bool = True,
    record: bool = False,
) -> AdaptationOutcome:
    """Run the fleet's local search until a sweep accepts no move.

    With ``record=True`` the accepted moves are returned so callers can replay
    and audit the trajectory.
    """
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be at least 1")
    problems = validate(genotype, allocation)
    if problems:
        raise StructureError("invalid allocation: " + "; ".join(problems))
    if len(environment) != genotype.task_count:
        raise StructureError(f"environment has {len(environment)} entries for {genotype.task_count} task types")

    codes = genotype_codes(genotype)
    alloc = np.array(allocation.states, dtype=np.int64).reshape(genotype.fleet_size, 2)
    env = np.asarray(environment, dtype=np.int64)
    if record:
        # every accepted move lowers the integer penalty, so this bounds the count
        start_penalty = -fitness(compute_phenotype(genotype, allocation), environment)
        moves = np.zeros((start_penalty, 3), dtype=np.int64)
    else:
        moves = _NO_MOVES
    penalty, sweeps, converged, n_moves, _ = _adapt_kernel(
        codes, alloc, env, genotype.capacity, transfers, max_sweeps, moves
    )
    recorded: Optional[tuple] = ()
    if record:
        recorded = tuple(tuple(int(v) for v in row) for row in moves[:n_moves])
    return AdaptationOutcome(
        allocation=Allocation.from_rows(alloc.tolist()),
        fitness=-int(penalty),
        sweeps_used=int(sweeps),
        converged=bool(converged),
        moves=recorded,
    )
