"""Slow, independent reference implementations and the bundled self-check.

Nothing here reuses the numba kernel or the explorer's bookkeeping: fitness
is evaluated straight from its definition, adaptation recomputes the whole
fleet fitness for every candidate move, and the reference search walks plain
Python objects.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .adaptation import adapt
from .explorer import evolvability, exhaustive_explore, explore, nn_size
from .genotypes import AdaptFrom, FleetConfig, Identity, ModelKind, MutationMode, ThresholdReference, catalog
from .model import Allocation, Genotype, compute_phenotype

Key = tuple


def reference_fitness(phenotype: Sequence[int], environment: Sequence[int]) -> int:
    total = 0
    for j in range(len(environment)):
        p, e = phenotype[j], environment[j]
        theta = 0 if p > e else (p - e) * (p - e)
        total += theta
    return -total


def _phenotype(pairs, rows, t) -> List[int]:
    out = [0] * t
    for pair, (x, y) in zip(pairs, rows):
        if pair is not None:
            out[pair[0]] += x
            out[pair[1]] += y
    return out


def reference_adapt(pairs, rows, environment, capacity: int, transfers: bool, max_sweeps: int = 1000):
    """Greedy ordered asynchronous search, full fitness recomputation per move.

    Returns ``(rows, fitness, converged)``.
    """
    t = len(environment)
    rows = [list(r) for r in rows]
    current = reference_fitness(_phenotype(pairs, rows, t), environment)
    deltas = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    if transfers:
        deltas += [(1, -1), (-1, 1)]
    for _ in range(max_sweeps):
        changed = False
        for i, pair in enumerate(pairs):
            if pair is None:
                continue
            best, best_rows = current, None
            for da, db in deltas:
                x, y = rows[i][0] + da, rows[i][1] + db
                if x < 0 or y < 0 or x + y > capacity:
                    continue
                trial = [r[:] for r in rows]
                trial[i] = [x, y]
                f = reference_fitness(_phenotype(pairs, trial, t), environment)
                if f > best:
                    best, best_rows = f, trial
            if best_rows is not None:
                rows, current, changed = best_rows, best, True
        if not changed:
            return [tuple(r) for r in rows], current, True
    return [tuple(r) for r in rows], current, False


def brute_force_optimum(pairs, environment, capacity: int) -> int:
    """Best fitness over every feasible allocation (tiny fleets only)."""
    t = len(environment)
    states = [(x, y) for x in range(capacity + 1) for y in range(capacity + 1 - x)]
    options = [states if p is not None else [(0, 0)] for p in pairs]
    best = None
    for rows in itertools.product(*options):
        f = reference_fitness(_phenotype(pairs, rows, t), environment)
        if best is None or f > best:
            best = f
    return best


@dataclass
class ReferenceSpace:
    neutral: Dict[Key, Tuple[int, ...]]
    boundary: Dict[Key, Tuple[int, ...]]

    @property
    def boundary_phenotypes(self) -> set:
        return set(self.boundary.values())


def _key(pairs, identity: Identity) -> Key:
    if identity is Identity.LABELLED:
        return tuple(pairs)
    present = sorted(p for p in pairs if p is not None)
    return tuple(present) + (None,) * (len(pairs) - len(present))


def _canonical(pairs, rows):
    both = sorted(zip(pairs, rows), key=lambda pr: (pr[0] is None, pr[0] or (0, 0), tuple(pr[1])))
    return [p for p, _ in both], [tuple(r) for _, r in both]


def _neighbours(pairs, config: FleetConfig):
    t = config.task_count
    if config.mutation_mode is MutationMode.DELETION:
        for k, p in enumerate(pairs):
            if p is not None:
                yield k, None
        return
    if config.model is ModelKind.REDUNDANT:
        types = catalog(t)
        for k, p in enumerate(pairs):
            for q in types:
                if q != p:
                    yield k, q
        return
    used = set(pairs)
    free = [q for q in itertools.combinations(range(t), 2) if q not in used]
    for k in range(len(pairs)):
        for q in free:
            yield k, q


def reference_search(config: FleetConfig, alpha, genotype: Genotype, allocation: Allocation) -> ReferenceSpace:
    """Breadth-first enumeration of the neutral network and its 1-neighborhood."""
    t = config.task_count
    pairs0 = list(genotype.vehicles)
    rows0 = list(allocation.states)
    env = list(compute_phenotype(genotype, allocation))
    if config.threshold_reference is ThresholdReference.VEHICLE_LOSS:
        ref = sum(x * x + y * y for p, (x, y) in zip(pairs0, rows0) if p is not None)
    else:
        ref = sum(e * e for e in env)
    a = Fraction(str(alpha)) if isinstance(alpha, float) else Fraction(alpha)
    # neutral iff 100 * fitness >= -alpha * ref
    def neutral(f: int) -> bool:
        return 100 * f >= -a * ref

    multiset = config.identity is Identity.MULTISET
    if multiset:
        pairs0, rows0 = _canonical(pairs0, rows0)
    seen = {_key(pairs0, config.identity)}
    space = ReferenceSpace({_key(pairs0, config.identity): tuple(env)}, {})
    queue = deque([(pairs0, rows0)])
    while queue:
        pairs, rows = queue.popleft()
        for k, q in _neighbours(pairs, config):
            child = list(pairs)
            child[k] = q
            key = _key(child, config.identity)
            if key in seen:
                continue
            seen.add(key)
            if config.adapt_from is AdaptFrom.PARENT:
                start = list(rows)
                start[k] = (0, 0)
                if multiset:
                    child, start = _canonical(child, start)
            elif multiset:
                child, _ = _canonical(child, [(0, 0)] * len(child))
                # k-th copy of a pair inherits the k-th initial row of that pair
                pools: Dict = {}
                for p0, r in zip(pairs0, rows0):
                    pools.setdefault(p0, []).append(r)
                start = []
                for c in child:
                    pool = pools.get(c) if c is not None else None
                    start.append(pool.pop(0) if pool else (0, 0))
            else:
                start = [r if c == p0 else (0, 0) for c, p0, r in zip(child, pairs0, rows0)]
            new_rows, f, ok = reference_adapt(child, start, env, config.capacity, config.transfers, config.max_sweeps)
            if not ok:
                raise RuntimeError("reference adaptation did not converge")
            phen = tuple(_phenotype(child, new_rows, t))
            if neutral(f):
                space.neutral[key] = phen
                queue.append((child, new_rows))
            else:
                space.boundary[key] = phen
    return space


def _pair_key(codes, t, identity: Identity) -> Key:
    pairs = [None if c < 0 else (c // t, c % t) for c in codes]
    return _key(pairs, identity)


def result_space(result) -> ReferenceSpace:
    t, identity = result.config.task_count, result.config.identity
    return ReferenceSpace(
        {_pair_key(result.codes[i], t, identity): result.phenotypes[i] for i in result.neutral_ids},
        {_pair_key(result.codes[i], t, identity): result.phenotypes[i] for i in result.boundary_ids},
    )


@dataclass(frozen=True)
class Fixture:
    name: str
    config: FleetConfig
    alpha: object
    seed: int


def _fx(name, alpha, seed, **kw) -> Fixture:
    base = dict(capacity=4, init_state_max=2, adapt_from=AdaptFrom.INITIAL)
    base.update(kw)
    return Fixture(name, FleetConfig(**base), alpha, seed)


# Small instances whose genotype space fits in memory.  Classification with
# adapt_from=initial depends on the genotype alone, so a walk that runs long
# enough must find exactly what breadth-first search finds.
FIXTURES: Tuple[Fixture, ...] = (
    _fx("deg-T4-V2-replace", 5, 1, task_count=4, fleet_size=2, model="degenerate", mutation_mode="replace"),
    _fx("deg-T4-V3-replace", 20, 2, task_count=4, fleet_size=3, model="degenerate", mutation_mode="replace"),
    _fx("red-T4-V3-replace", 30, 3, task_count=4, fleet_size=3, model="redundant", mutation_mode="replace"),
    _fx("red-T6-V4-replace", 30, 4, task_count=6, fleet_size=4, model="redundant", mutation_mode="replace"),
    _fx("deg-T5-V4-replace", 25, 5, task_count=5, fleet_size=4, model="degenerate", mutation_mode="replace"),
    _fx(
        "deg-T6-V5-multiset", 25, 6, task_count=6, fleet_size=5, model="degenerate",
        mutation_mode="replace", identity="multiset",
    ),
    _fx("deg-T6-V6-delete", 30, 7, task_count=6, fleet_size=6, model="degenerate", mutation_mode="delete"),
    _fx("red-T6-V6-delete", 30, 8, task_count=6, fleet_size=6, model="redundant", mutation_mode="delete"),
    _fx(
        "deg-T6-V4-worstcase", 5, 9, task_count=6, fleet_size=4, model="degenerate",
        mutation_mode="replace", identity="multiset", threshold_reference="worst_case",
    ),
    _fx("deg-T4-V2-alpha0", 0, 1, task_count=4, fleet_size=2, model="degenerate", mutation_mode="replace"),
)

WALK_FACTOR = 50


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _check_fixture(fx: Fixture) -> List[CheckResult]:
    out = []
    oracle = exhaustive_explore(fx.config, fx.alpha, seed=fx.seed)
    ref = reference_search(fx.config, fx.alpha, oracle.node(0).genotype, oracle.node(0).allocation)
    got = result_space(oracle)
    same = got.neutral == ref.neutral and got.boundary == ref.boundary
    out.append(CheckResult(f"{fx.name}: breadth-first search matches reference", same,
                           f"neutral {len(got.neutral)} vs {len(ref.neutral)}, "
                           f"boundary {len(got.boundary)} vs {len(ref.boundary)}"))

    steps = WALK_FACTOR * oracle.node_count()
    walk = explore(fx.config, fx.alpha, max_steps=steps, seed=fx.seed)
    w = result_space(walk)
    checks = [
        ("neutral set", set(w.neutral) == set(got.neutral)),
        ("boundary set", set(w.boundary) == set(got.boundary)),
        ("nn_size", nn_size(walk) == nn_size(oracle)),
        ("evolvability", evolvability(walk) == evolvability(oracle)),
    ]
    for what, ok in checks:
        out.append(CheckResult(f"{fx.name}: walk of {steps} steps reproduces {what}", ok,
                               f"walk nn={nn_size(walk)} ev={evolvability(walk)}, "
                               f"oracle nn={nn_size(oracle)} ev={evolvability(oracle)}"))
    if fx.alpha == 0:
        exact = all(oracle.fitnesses[i] == 0 for i in oracle.neutral_ids)
        out.append(CheckResult(f"{fx.name}: only exactly optimal fleets are neutral", exact))
    return out


def _adaptation_checks() -> List[CheckResult]:
    out = []
    cases = [
        ("single vehicle", [(0, 1)], [(0, 0)], (3, 2), 20, 0),
        ("shared middle task", [(0, 1), (1, 2)], [(0, 0), (0, 0)], (2, 6, 2), 4, None),
        ("full vehicle needs transfer", [(0, 1), (0, 1)], [(4, 0), (0, 0)], (2, 2), 4, 0),
        ("three vehicles", [(0, 1), (1, 2), (0, 2)], [(1, 1), (0, 0), (0, 0)], (3, 3, 3), 3, None),
    ]
    for name, pairs, rows, env, cap, expected in cases:
        g = Genotype.from_pairs(pairs, len(env), cap)
        alloc = Allocation.from_rows(rows)
        fast = adapt(g, alloc, env, transfers=True)
        slow_rows, slow_f, _ = reference_adapt(g.vehicles, rows, env, cap, True)
        optimum = brute_force_optimum(g.vehicles, env, cap)
        ok = fast.allocation.states == tuple(slow_rows) and fast.fitness == slow_f and fast.converged
        out.append(CheckResult(f"adapt '{name}' matches full-recompute reference", ok,
                               f"kernel {fast.fitness} vs reference {slow_f}"))
        target = optimum if expected is None else expected
        out.append(CheckResult(f"adapt '{name}' reaches optimum {target}", fast.fitness == target == optimum,
                               f"greedy {fast.fitness}, brute force {optimum}"))
    return out


def _redundant_count() -> CheckResult:
    cfg = FleetConfig(task_count=4, fleet_size=3, capacity=4, init_state_max=2, model="redundant",
                      mutation_mode="replace", identity="multiset", adapt_from=AdaptFrom.INITIAL)
    res = exhaustive_explore(cfg, alpha=10**6, seed=0)
    # multisets of size 3 over 2 catalog types
    expected = len(list(itertools.combinations_with_replacement(catalog(4), 3)))
    return CheckResult("redundant T=4 V=3 visits every canonical multiset", res.node_count() == expected,
                       f"{res.node_count()} visited, {expected} exist")


def oracle_check(progress: Optional[Callable[[CheckResult], None]] = None) -> List[CheckResult]:
    """Run every bundled fixture; ``progress`` sees each result as it lands."""
    results: List[CheckResult] = []

    def emit(items):
        for r in items:
            results.append(r)
            if progress:
                progress(r)

    emit(_adaptation_checks())
    emit([_redundant_count()])
    for fx in FIXTURES:
        emit(_check_fixture(fx))
    return results
