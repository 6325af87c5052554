import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from neutralwalk.adaptation import Move, adapt, candidate_moves
from neutralwalk.model import Allocation, Genotype, StructureError, compute_phenotype, fitness, validate
from neutralwalk.oracle import brute_force_optimum, reference_adapt


def g(pairs, t, cap):
    return Genotype.from_pairs(pairs, t, cap)


class TestCandidateMoves:
    def test_at_capacity(self):
        moves = candidate_moves(g([(0, 1)], 2, 20), Allocation.from_rows([(10, 10)]), 0)
        assert moves == [Move(-1, 0), Move(0, -1)]

    def test_empty(self):
        moves = candidate_moves(g([(0, 1)], 2, 20), Allocation.from_rows([(0, 0)]), 0)
        assert moves == [Move(1, 0), Move(0, 1)]

    def test_interior(self):
        moves = candidate_moves(g([(0, 1)], 2, 20), Allocation.from_rows([(3, 5)]), 0)
        assert moves == [Move(1, 0), Move(-1, 0), Move(0, 1), Move(0, -1)]

    def test_null_vehicle(self):
        assert candidate_moves(g([None], 2, 20), Allocation.zeros(1), 0) == []

    def test_transfers_appended(self):
        moves = candidate_moves(g([(0, 1)], 2, 8), Allocation.from_rows([(3, 5)]), 0, transfers=True)
        assert moves == [Move(-1, 0), Move(0, -1), Move(1, -1), Move(-1, 1)]


class TestAdaptExamples:
    def test_single_vehicle(self):
        out = adapt(g([(0, 1)], 2, 20), Allocation.zeros(1), (3, 2))
        assert out.allocation.states == ((3, 2),)
        assert out.fitness == 0 and out.converged

    def test_optimal_fleet_is_untouched(self):
        geno = g([(0, 1), (1, 2)], 3, 10)
        alloc = Allocation.from_rows([(2, 3), (4, 1)])
        out = adapt(geno, alloc, compute_phenotype(geno, alloc))
        assert out.allocation == alloc
        assert out.fitness == 0 and out.sweeps_used == 1 and out.converged

    def test_shared_middle_task_trajectory(self):
        # demand 10 exceeds total capacity 8, so exhaustive search tops out at -2
        geno = g([(0, 1), (1, 2)], 3, 4)
        env = (2, 6, 2)
        assert brute_force_optimum(geno.vehicles, env, 4) == -2
        out = adapt(geno, Allocation.zeros(2), env, record=True)
        assert out.fitness == -2
        assert out.allocation.states == ((2, 2), (3, 1))
        assert out.moves == (
            (0, 0, 1), (1, 1, 0), (0, 0, 1), (1, 1, 0),
            (0, 1, 0), (1, 1, 0), (0, 1, 0), (1, 0, 1),
        )
        assert out.sweeps_used == 5

    def test_transfer_unlocks_full_vehicle(self):
        geno = g([(0, 1)], 2, 4)
        alloc = Allocation.from_rows([(4, 0)])
        assert adapt(geno, alloc, (2, 2), transfers=False).fitness == -4
        assert adapt(geno, alloc, (2, 2), transfers=True).fitness == 0

    def test_invalid_allocation(self):
        with pytest.raises(StructureError):
            adapt(g([(0, 1)], 2, 3), Allocation.from_rows([(3, 3)]), (1, 1))
        with pytest.raises(StructureError):
            adapt(g([(0, 1)], 2, 3), Allocation.zeros(1), (1, 1, 1))
        with pytest.raises(ValueError):
            adapt(g([(0, 1)], 2, 3), Allocation.zeros(1), (1, 1), max_sweeps=0)

    def test_sweep_limit_reports_not_converged(self):
        out = adapt(g([(0, 1)], 2, 20), Allocation.zeros(1), (5, 5), max_sweeps=1)
        assert not out.converged


@st.composite
def instances(draw, max_t=5, max_v=5, max_cap=6):
    t = draw(st.integers(2, max_t))
    cap = draw(st.integers(1, max_cap))
    pair = st.tuples(st.integers(0, t - 1), st.integers(0, t - 1)).filter(lambda p: p[0] != p[1])
    pairs = draw(st.lists(st.one_of(st.none(), pair), min_size=1, max_size=max_v))
    rows = []
    for p in pairs:
        if p is None:
            rows.append((0, 0))
        else:
            x = draw(st.integers(0, cap))
            rows.append((x, draw(st.integers(0, cap - x))))
    env = draw(st.lists(st.integers(0, 2 * cap), min_size=t, max_size=t))
    return g(pairs, t, cap), Allocation.from_rows(rows), tuple(env)


def replay(geno, alloc, env, moves):
    """Apply recorded moves one by one, checking every intermediate state."""
    rows = [list(r) for r in alloc.states]
    current = fitness(compute_phenotype(geno, alloc), env)
    for i, da, db in moves:
        rows[i][0] += da
        rows[i][1] += db
        state = Allocation.from_rows(rows)
        assert validate(geno, state) == []
        f = fitness(compute_phenotype(geno, state), env)
        assert f > current
        current = f
    return Allocation.from_rows(rows), current


class TestAdaptProperties:
    @settings(max_examples=300, deadline=None)
    @given(instances(), st.booleans())
    def test_matches_full_recompute_reference(self, inst, transfers):
        geno, alloc, env = inst
        out = adapt(geno, alloc, env, transfers=transfers)
        rows, f, ok = reference_adapt(geno.vehicles, alloc.states, env, geno.capacity, transfers)
        assert out.allocation.states == tuple(rows)
        assert out.fitness == f
        assert out.converged and ok

    @settings(max_examples=300, deadline=None)
    @given(instances(), st.booleans())
    def test_trajectory_is_monotone_and_valid(self, inst, transfers):
        geno, alloc, env = inst
        out = adapt(geno, alloc, env, transfers=transfers, record=True)
        final, f = replay(geno, alloc, env, out.moves)
        assert final == out.allocation
        assert f == out.fitness == fitness(compute_phenotype(geno, out.allocation), env)
        start_penalty = -fitness(compute_phenotype(geno, alloc), env)
        assert len(out.moves) <= start_penalty

    @settings(max_examples=100, deadline=None)
    @given(instances())
    def test_deterministic(self, inst):
        geno, alloc, env = inst
        assert adapt(geno, alloc, env) == adapt(geno, alloc, env)

    @settings(max_examples=100, deadline=None)
    @given(instances())
    def test_local_optimum(self, inst):
        geno, alloc, env = inst
        out = adapt(geno, alloc, env)
        for i in range(geno.fleet_size):
            for m in candidate_moves(geno, out.allocation, i, transfers=True):
                x, y = out.allocation.states[i]
                trial = out.allocation.with_row(i, (x + m.d_a, y + m.d_b))
                assert fitness(compute_phenotype(geno, trial), env) <= out.fitness


# Exact greedy outcome vs exhaustive optimum on tiny seeded instances
# (V <= 2, capacity <= 5, T <= 3).  Greedy is not promised to be optimal;
# the frozen values pin reproducibility.
TINY_EXPECTED = [
    # (seed, greedy fitness, brute-force optimum)
    (0, -61, -61),
    (1, -41, -41),
    (2, -5, -5),
    (3, -98, -98),
    (4, 0, 0),
    (5, -5, -5),
    (6, -2, -2),
    (7, -16, -16),
    (8, 0, 0),
    (9, -34, -34),
    (10, 0, 0),
    (11, -45, -45),
]


def tiny_instance(seed):
    rng = random.Random(seed)
    t = rng.randint(2, 3)
    cap = rng.randint(1, 5)
    pairs = [tuple(sorted(rng.sample(range(t), 2))) for _ in range(rng.randint(1, 2))]
    env = tuple(rng.randint(0, 2 * cap) for _ in range(t))
    return g(pairs, t, cap), env


def test_tiny_instances_against_brute_force():
    for seed, expected, optimum in TINY_EXPECTED:
        geno, env = tiny_instance(seed)
        out = adapt(geno, Allocation.zeros(geno.fleet_size), env)
        assert out.fitness == expected
        assert brute_force_optimum(geno.vehicles, env, geno.capacity) == optimum
