"""Neutral network discovery by random walk, plus an exhaustive oracle.

Each walk step picks a neutral node uniformly, mutates one vehicle, lets the
mutant fleet adapt, and stores it as neutral or as part of the
1-neighborhood (boundary) unless its genotype has been seen before.  Boundary
nodes are never expanded.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, floor, perm
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .adaptation import adapt_arrays
from .genotypes import (
    AdaptFrom,
    FleetConfig,
    Identity,
    ModelKind,
    MutationExhausted,
    MutationMode,
    ThresholdReference,
    admissible_codes,
    catalog_codes,
    choose_mutation,
    init_allocation,
    init_genotype,
    is_exhausted,
)
from .model import (
    NULL_CODE,
    Allocation,
    Genotype,
    code_pair,
    compute_phenotype,
    neutrality_threshold,
    pair_code,
    vehicle_loss_penalty,
    worst_case_penalty,
)

DEFAULT_MAX_STEPS = 20000
EXHAUSTIVE_LIMIT = 100_000

NEUTRAL = "neutral"
BOUNDARY = "boundary"

SeedLike = Union[int, np.random.SeedSequence, random.Random, None]


class ExplorationTooLarge(ValueError):
    """The genotype space is too big for exhaustive enumeration."""


class AdaptationDiverged(RuntimeError):
    """Adaptation hit its sweep limit without converging."""


@dataclass(frozen=True)
class FleetNode:
    id: int
    genotype: Genotype
    allocation: Allocation
    phenotype: Tuple[int, ...]
    fitness: int
    node_class: str


@dataclass
class ExplorationResult:
    """Everything a walk (or the oracle) discovered.

    Nodes are stored column-wise; ``node(i)`` materialises one as a
    :class:`FleetNode`.  ``series`` has one row per executed step plus the
    step-0 row, with columns ``step, neutral_count,
    unique_boundary_phenotypes, duplicates``.
    """

    config: FleetConfig
    alpha: object
    environment: Tuple[int, ...]
    threshold: Fraction
    reference_penalty: int
    codes: List[Tuple[int, ...]]
    allocations: List[np.ndarray]
    phenotypes: List[Tuple[int, ...]]
    fitnesses: List[int]
    neutral_flags: List[bool]
    neutral_ids: List[int]
    boundary_ids: List[int]
    edges: List[Tuple[int, int]]
    series: np.ndarray
    steps_executed: int
    seed: Optional[int] = None
    keys: Dict[tuple, int] = field(default_factory=dict, repr=False)

    def node(self, node_id: int) -> FleetNode:
        t = self.config.task_count
        genotype = Genotype(tuple(code_pair(c, t) for c in self.codes[node_id]), t, self.config.capacity)
        return FleetNode(
            id=node_id,
            genotype=genotype,
            allocation=Allocation.from_rows(self.allocations[node_id].tolist()),
            phenotype=self.phenotypes[node_id],
            fitness=self.fitnesses[node_id],
            node_class=NEUTRAL if self.neutral_flags[node_id] else BOUNDARY,
        )

    @property
    def neutral_nodes(self) -> List[FleetNode]:
        return [self.node(i) for i in self.neutral_ids]

    @property
    def boundary_nodes(self) -> List[FleetNode]:
        return [self.node(i) for i in self.boundary_ids]

    def neutral_keys(self) -> set:
        return {identity_key(self.codes[i], self.config.identity) for i in self.neutral_ids}

    def boundary_keys(self) -> set:
        return {identity_key(self.codes[i], self.config.identity) for i in self.boundary_ids}

    def node_count(self) -> int:
        return len(self.codes)


def identity_key(codes: Sequence[int], identity: Identity) -> tuple:
    if identity is Identity.LABELLED:
        return tuple(codes)
    present = sorted(c for c in codes if c != NULL_CODE)
    return tuple(present) + (NULL_CODE,) * (len(codes) - len(present))


def seed_streams(seed: SeedLike) -> Tuple[random.Random, random.Random, random.Random]:
    """Independent streams for genotype init, allocation init and the walk.

    A shared :class:`random.Random` is used for all three when one is passed.
    """
    if isinstance(seed, random.Random):
        return seed, seed, seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(0 if seed is None else int(seed))
    out = []
    for i in range(3):
        child = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + (i,))
        out.append(random.Random(int(child.generate_state(1, np.uint64)[0])))
    return out[0], out[1], out[2]


class _Landscape:
    """Shared state for the walk and the oracle: node storage and classification."""

    def __init__(self, config: FleetConfig, alpha, genotype: Genotype, allocation: Allocation):
        self.config = config
        self.alpha = alpha
        t = config.task_count
        self.task_count = t
        phen0 = compute_phenotype(genotype, allocation)
        self.environment = phen0
        self.env = np.asarray(phen0, dtype=np.int64)
        if config.threshold_reference is ThresholdReference.VEHICLE_LOSS:
            self.reference = vehicle_loss_penalty(genotype, allocation)
        else:
            self.reference = worst_case_penalty(phen0)
        self.threshold = neutrality_threshold(phen0, alpha, self.reference)
        # integer penalties: neutral iff penalty <= floor(-threshold)
        self.max_penalty = floor(-self.threshold)
        codes0 = tuple(pair_code(p, t) for p in genotype.vehicles)
        alloc0 = np.array(allocation.states, dtype=np.int64).reshape(len(codes0), 2)
        self.multiset = config.identity is Identity.MULTISET
        if self.multiset:
            codes0, alloc0 = _sorted_rows(codes0, alloc0)
            # initial rows per pair, in sorted order, for occurrence matching
            self.initial_rows: Dict[int, List[np.ndarray]] = {}
            for c, row in zip(codes0, alloc0):
                if c != NULL_CODE:
                    self.initial_rows.setdefault(c, []).append(row)
        self.codes0 = codes0
        self.codes0_arr = np.array(codes0, dtype=np.int64)
        self.alloc0 = alloc0

        self.codes: List[Tuple[int, ...]] = [self.codes0]
        self.allocations: List[np.ndarray] = [self.alloc0.copy()]
        self.phenotypes: List[Tuple[int, ...]] = [phen0]
        self.fitnesses: List[int] = [0]
        self.neutral_flags: List[bool] = [True]
        self.neutral_ids: List[int] = [0]
        self.boundary_ids: List[int] = []
        self.edges: List[Tuple[int, int]] = []
        self.keys: Dict[tuple, int] = {identity_key(self.codes0, config.identity): 0}
        self.boundary_phenotypes: set = set()

    def child(self, parent: int, vehicle: int, new_code: int) -> Tuple[Tuple[int, ...], tuple]:
        pc = self.codes[parent]
        codes = pc[:vehicle] + (new_code,) + pc[vehicle + 1:]
        return codes, identity_key(codes, self.config.identity)

    def _initial_start(self, codes: Tuple[int, ...]) -> np.ndarray:
        """Start allocation that reuses the initial fleet's rows where possible.

        Labelled fleets keep a row when the vehicle at that index still has
        its initial pair.  Multiset fleets match the k-th copy of a pair to
        the k-th initial row for that pair, so the start depends only on the
        multiset.
        """
        if not self.multiset:
            arr = np.array(codes, dtype=np.int64)
            return np.where((arr == self.codes0_arr)[:, None], self.alloc0, 0)
        alloc = np.zeros((len(codes), 2), dtype=np.int64)
        seen: Dict[int, int] = {}
        for i, c in enumerate(codes):
            if c == NULL_CODE:
                continue
            n = seen.get(c, 0)
            seen[c] = n + 1
            rows = self.initial_rows.get(c)
            if rows is not None and n < len(rows):
                alloc[i] = rows[n]
        return alloc

    def add(self, parent: int, vehicle: int, codes: Tuple[int, ...], key: tuple) -> int:
        cfg = self.config
        if cfg.adapt_from is AdaptFrom.PARENT:
            alloc = self.allocations[parent].copy()
            alloc[vehicle] = 0
            if self.multiset:
                codes, alloc = _sorted_rows(codes, alloc)
        else:
            if self.multiset:
                codes = key
            alloc = self._initial_start(codes)
        arr = np.array(codes, dtype=np.int64)
        penalty, _, converged, _, phen = adapt_arrays(
            arr, alloc, self.env, cfg.capacity, cfg.transfers, cfg.max_sweeps
        )
        if not converged:
            raise AdaptationDiverged(f"adaptation did not converge within {cfg.max_sweeps} sweeps")
        node_id = len(self.codes)
        phen_t = tuple(phen.tolist())
        neutral = penalty <= self.max_penalty
        self.codes.append(codes)
        self.allocations.append(alloc)
        self.phenotypes.append(phen_t)
        self.fitnesses.append(-int(penalty))
        self.neutral_flags.append(neutral)
        self.keys[key] = node_id
        if neutral:
            self.neutral_ids.append(node_id)
        else:
            self.boundary_ids.append(node_id)
            self.boundary_phenotypes.add(phen_t)
        self.edges.append((parent, node_id))
        return node_id

    def result(self, series: np.ndarray, steps: int, seed=None) -> ExplorationResult:
        return ExplorationResult(
            config=self.config,
            alpha=self.alpha,
            environment=self.environment,
            threshold=self.threshold,
            reference_penalty=self.reference,
            codes=self.codes,
            allocations=self.allocations,
            phenotypes=self.phenotypes,
            fitnesses=self.fitnesses,
            neutral_flags=self.neutral_flags,
            neutral_ids=self.neutral_ids,
            boundary_ids=self.boundary_ids,
            edges=self.edges,
            series=series,
            steps_executed=steps,
            seed=seed,
            keys=self.keys,
        )


def _sorted_rows(codes: Sequence[int], alloc: np.ndarray) -> Tuple[Tuple[int, ...], np.ndarray]:
    """Canonical vehicle order for multiset identity: by pair, nulls last, then by row."""
    order = sorted(
        range(len(codes)),
        key=lambda i: (codes[i] == NULL_CODE, codes[i], int(alloc[i, 0]), int(alloc[i, 1])),
    )
    return tuple(codes[i] for i in order), alloc[order].copy()


def initial_fleet(config: FleetConfig, seed: SeedLike = None) -> Tuple[Genotype, Allocation, random.Random]:
    g_rng, a_rng, walk_rng = seed_streams(seed)
    genotype = init_genotype(config, g_rng)
    allocation = init_allocation(genotype, config, a_rng)
    return genotype, allocation, walk_rng


def explore(
    config: FleetConfig,
    alpha=5,
    max_steps: int = DEFAULT_MAX_STEPS,
    seed: SeedLike = None,
    start: Optional[Tuple[Genotype, Allocation]] = None,
) -> ExplorationResult:
    """Random-walk exploration of the neutral network and its 1-neighborhood.

    Every mutation attempt is a step, including attempts that land on a known
    genotype or on a node with nothing left to mutate.  The walk stops early
    only when no neutral node can be mutated at all.  ``start`` overrides the
    random initial fleet.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    genotype, allocation, rng = initial_fleet(config, seed)
    if start is not None:
        genotype, allocation = start
    land = _Landscape(config, alpha, genotype, allocation)
    model, mode, t = config.model, config.mutation_mode, config.task_count

    series = np.zeros((max_steps + 1, 4), dtype=np.int64)
    series[0] = (0, 1, 0, 0)
    exhausted = 1 if is_exhausted(land.codes0, model, mode, t) else 0
    duplicates = 0
    steps = 0
    neutral_ids = land.neutral_ids
    codes = land.codes
    keys = land.keys
    for step in range(1, max_steps + 1):
        if exhausted == len(neutral_ids):
            break
        steps = step
        parent = neutral_ids[rng.randrange(len(neutral_ids))]
        try:
            vehicle, new_code = choose_mutation(codes[parent], model, mode, t, rng)
        except MutationExhausted:
            series[step] = (step, len(neutral_ids), len(land.boundary_phenotypes), duplicates)
            continue
        child, key = land.child(parent, vehicle, new_code)
        known = keys.get(key)
        if known is not None:
            duplicates += 1
            land.edges.append((parent, known))
        else:
            node_id = land.add(parent, vehicle, child, key)
            if land.neutral_flags[node_id] and is_exhausted(child, model, mode, t):
                exhausted += 1
        series[step] = (step, len(neutral_ids), len(land.boundary_phenotypes), duplicates)

    seed_value = seed if isinstance(seed, int) else None
    return land.result(series[: steps + 1].copy(), steps, seed_value)


def genotype_space_bound(config: FleetConfig, start_codes: Sequence[int]) -> int:
    """Upper bound on the number of genotypes reachable by the mutation relation."""
    v = len(start_codes)
    t = config.task_count
    if config.mutation_mode is MutationMode.DELETION:
        return 2 ** sum(1 for c in start_codes if c != NULL_CODE)
    if config.model is ModelKind.REDUNDANT:
        k = len(catalog_codes(t)) + 1  # catalog types plus null
        if config.identity is Identity.LABELLED:
            return k ** v
        return comb(v + k - 1, v)
    n = comb(t, 2) + 1
    if config.identity is Identity.LABELLED:
        return perm(n, v) if v <= n else n ** v
    return comb(n + v - 1, v)


def exhaustive_explore(
    config: FleetConfig,
    alpha=5,
    seed: SeedLike = None,
    start: Optional[Tuple[Genotype, Allocation]] = None,
    limit: int = EXHAUSTIVE_LIMIT,
) -> ExplorationResult:
    """Breadth-first enumeration of the full neutral network and 1-neighborhood.

    Uses the same initial fleet as :func:`explore` for the same ``seed``.
    The ``series`` of the result has one row per stored node instead of per
    walk step.
    """
    genotype, allocation, _ = initial_fleet(config, seed)
    if start is not None:
        genotype, allocation = start
    land = _Landscape(config, alpha, genotype, allocation)
    bound = genotype_space_bound(config, land.codes0)
    if bound > limit:
        raise ExplorationTooLarge(f"genotype space may hold {bound} genotypes, above the limit of {limit}")
    model, mode, t = config.model, config.mutation_mode, config.task_count

    queue = deque([0])
    while queue:
        parent = queue.popleft()
        for vehicle, new_code in _all_mutations(land.codes[parent], model, mode, t):
            child, key = land.child(parent, vehicle, new_code)
            known = land.keys.get(key)
            if known is not None:
                land.edges.append((parent, known))
                continue
            node_id = land.add(parent, vehicle, child, key)
            if land.neutral_flags[node_id]:
                queue.append(node_id)
            if len(land.codes) > limit:
                raise ExplorationTooLarge(f"more than {limit} genotypes visited")

    n = len(land.codes)
    series = np.zeros((1, 4), dtype=np.int64)
    series[0] = (0, len(land.neutral_ids), len(land.boundary_phenotypes), 0)
    seed_value = seed if isinstance(seed, int) else None
    return land.result(series, n - 1, seed_value)


def _all_mutations(codes: Sequence[int], model: ModelKind, mode: MutationMode, t: int) -> Iterator[Tuple[int, int]]:
    for k, c in enumerate(codes):
        if mode is MutationMode.DELETION:
            if c != NULL_CODE:
                yield k, NULL_CODE
            continue
        for target in sorted(admissible_codes(model, codes, k, t)):
            yield k, target


def nn_size(result: ExplorationResult) -> int:
    return len(result.neutral_ids)


def evolvability(result: ExplorationResult) -> int:
    """Number of distinct phenotypes in the 1-neighborhood."""
    return len({result.phenotypes[i] for i in result.boundary_ids})


def innovation_series(result: ExplorationResult) -> List[Tuple[int, int, int]]:
    """``(step, cumulative neutral genotypes, cumulative unique boundary phenotypes)`` per step."""
    return [(int(r[0]), int(r[1]), int(r[2])) for r in result.series]


@dataclass(frozen=True)
class TopologyReport:
    node_count: int
    edge_count: int
    degree_average: float
    path_length_average: Optional[float]
    sample_pairs: int


def neutral_graph(result: ExplorationResult) -> Tuple[List[int], set]:
    """Neutral node ids and the set of distinct undirected neutral-neutral edges."""
    flags = result.neutral_flags
    edges = set()
    for u, v in result.edges:
        if u != v and flags[u] and flags[v]:
            edges.add((u, v) if u < v else (v, u))
    return list(result.neutral_ids), edges


def topology_metrics(
    result: ExplorationResult,
    sample_pairs: Optional[int] = 1000,
    rng: Optional[random.Random] = None,
) -> TopologyReport:
    """Degree and shortest-path statistics of the discovered neutral network.

    Path length is averaged over ``sample_pairs`` uniformly drawn pairs of
    distinct neutral nodes, or over all pairs when ``sample_pairs`` is None
    or at least the number of pairs.
    """
    nodes, edges = neutral_graph(result)
    n = len(nodes)
    degree_average = 2 * len(edges) / n if n else 0.0
    if n < 2:
        return TopologyReport(n, len(edges), degree_average, None, 0)

    index = {node: i for i, node in enumerate(nodes)}
    rows = [index[u] for u, v in edges] + [index[v] for u, v in edges]
    cols = [index[v] for u, v in edges] + [index[u] for u, v in edges]
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))

    total_pairs = n * (n - 1) // 2
    if sample_pairs is None or sample_pairs >= total_pairs:
        dist = shortest_path(graph, directed=False, unweighted=True)
        upper = dist[np.triu_indices(n, k=1)]
        return TopologyReport(n, len(edges), degree_average, float(upper.mean()), total_pairs)

    rng = rng or random.Random(0)
    pairs = []
    for _ in range(sample_pairs):
        i = rng.randrange(n)
        j = rng.randrange(n - 1)
        if j >= i:
            j += 1
        pairs.append((i, j))
    sources = sorted({i for i, _ in pairs})
    dist = shortest_path(graph, directed=False, unweighted=True, indices=sources)
    row = {s: r for r, s in enumerate(sources)}
    lengths = [dist[row[i], j] for i, j in pairs]
    return TopologyReport(n, len(edges), degree_average, float(np.mean(lengths)), sample_pairs)
