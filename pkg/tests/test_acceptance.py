"""One test per acceptance criterion, at full experimental scale.

Standard setting: 16 task types, 32 vehicles, alpha = 5 %, 20 000 walk steps,
50 paired runs per model.  Tolerances are the ones the criteria state.
"""

import itertools
import random
import time

import pytest

from neutralwalk.adaptation import adapt
from neutralwalk.cli import main
from neutralwalk.experiments import DEFAULT_MASTER_SEED, run_batch, sweep_alpha, sweep_fleet_size
from neutralwalk.explorer import evolvability, exhaustive_explore, explore, nn_size
from neutralwalk.genotypes import FleetConfig, ModelKind
from neutralwalk.model import Allocation, Genotype, compute_phenotype, fitness, validate
from neutralwalk.oracle import FIXTURES, WALK_FACTOR, result_space

DEG, RED = ModelKind.DEGENERATE, ModelKind.REDUNDANT
STEPS, RUNS, SEED = 20000, 50, DEFAULT_MASTER_SEED
BASE = FleetConfig()
SIZES = (32, 36, 40, 44, 48)
ALPHAS = (0, 2, 5, 10)


@pytest.fixture(scope="module")
def baseline():
    start = time.perf_counter()
    out = {m: run_batch(BASE.with_(model=m), 5, STEPS, RUNS, SEED) for m in (DEG, RED)}
    return out, time.perf_counter() - start


@pytest.fixture(scope="module")
def alpha_table():
    return sweep_alpha(BASE, ALPHAS, STEPS, RUNS, SEED)


@pytest.fixture(scope="module")
def size_table():
    return sweep_fleet_size(BASE, SIZES, 5, STEPS, RUNS, SEED)


def non_decreasing(aggs, allow_inversion=False):
    """Means never fall, except (optionally) one drop within one standard error."""
    inversions = 0
    for a, b in zip(aggs, aggs[1:]):
        drop = a.nn_size.mean - b.nn_size.mean
        if drop <= 0:
            continue
        se = max(a.standard_error(), b.standard_error())
        if allow_inversion and drop <= se and inversions == 0:
            inversions += 1
            continue
        return False
    return True


def test_baseline_contrast(baseline, report):
    aggs, seconds = baseline
    deg, red = aggs[DEG].nn_size.mean, aggs[RED].nn_size.mean
    ok = deg > 1.5 * red and 100 <= deg <= 10_000 and 100 <= red <= 10_000 and seconds <= 600
    report("baseline contrast", ok,
           f"nn_size deg {deg:.1f} vs red {red:.1f} (ratio {deg / red:.2f}, need > 1.5, both in [100, 10000]); "
           f"{seconds:.0f} s for both batches (limit 600)")
    assert ok


def test_evolvability_gap(baseline, report):
    aggs, _ = baseline
    deg, red = aggs[DEG].evolvability.mean, aggs[RED].evolvability.mean
    ok = deg >= 10 * red
    report("evolvability gap", ok, f"evolvability deg {deg:.1f} vs red {red:.1f} (ratio {deg / red:.1f}, need >= 10)")
    assert ok


def test_fleet_size_sweep(size_table, report):
    deg = [size_table[(DEG, v)] for v in SIZES]
    red = [size_table[(RED, v)] for v in SIZES]
    nn_ok = non_decreasing(deg, True) and non_decreasing(red, True)
    red_ev = [a.evolvability.mean for a in red]
    deg_ev = [a.evolvability.mean for a in deg]
    red_flat = max(red_ev) / min(red_ev) < 2
    deg_growth = deg_ev[-1] / deg_ev[0]
    ok = nn_ok and red_flat and deg_growth >= 10
    report("fleet-size sweep", ok,
           f"nn_size deg {[round(a.nn_size.mean) for a in deg]}, red {[round(a.nn_size.mean) for a in red]} "
           f"(monotone: {nn_ok}); red evolvability {[round(e) for e in red_ev]} (flat < 2x: {red_flat}); "
           f"deg evolvability {[round(e) for e in deg_ev]} (growth {deg_growth:.2f}x, need >= 10)")
    assert ok


def test_alpha_sweep(alpha_table, report):
    deg = [alpha_table[(DEG, a)] for a in ALPHAS]
    red = [alpha_table[(RED, a)] for a in ALPHAS]
    nn_ok = non_decreasing(deg) and non_decreasing(red)
    g_deg = deg[-1].evolvability.mean / deg[0].evolvability.mean
    g_red = red[-1].evolvability.mean / red[0].evolvability.mean
    ok = nn_ok and g_deg >= 5 * g_red
    report("alpha sweep", ok,
           f"nn_size deg {[round(a.nn_size.mean) for a in deg]}, red {[round(a.nn_size.mean) for a in red]} "
           f"(monotone: {nn_ok}); evolvability growth 0->10: deg {g_deg:.1f}x, red {g_red:.1f}x "
           f"(ratio {g_deg / g_red:.2f}, need >= 5)")
    assert ok


def test_oracle_equivalence(report):
    failures = []
    for fx in FIXTURES:
        oracle = exhaustive_explore(fx.config, fx.alpha, seed=fx.seed)
        assert oracle.node_count() <= 10_000
        walk = explore(fx.config, fx.alpha, max_steps=WALK_FACTOR * oracle.node_count(), seed=fx.seed)
        o, w = result_space(oracle), result_space(walk)
        same = (
            set(w.neutral) == set(o.neutral)
            and set(w.boundary) == set(o.boundary)
            and nn_size(walk) == nn_size(oracle)
            and evolvability(walk) == evolvability(oracle)
        )
        if not same:
            failures.append(fx.name)
    ok = not failures
    report("oracle equivalence", ok, f"{len(FIXTURES) - len(failures)}/{len(FIXTURES)} bundled instances exact"
           + (f", failing: {failures}" if failures else ""))
    assert ok


def _random_instance(rng):
    t = rng.randint(2, 8)
    cap = rng.randint(1, 10)
    pairs = []
    for _ in range(rng.randint(1, 10)):
        pairs.append(None if rng.random() < 0.15 else tuple(sorted(rng.sample(range(t), 2))))
    rows = []
    for p in pairs:
        if p is None:
            rows.append((0, 0))
        else:
            x = rng.randint(0, cap)
            rows.append((x, rng.randint(0, cap - x)))
    env = tuple(rng.randint(0, 2 * cap) for _ in range(t))
    return Genotype(tuple(pairs), t, cap), Allocation(tuple(rows)), env


def test_adaptation_properties(report):
    rng = random.Random(123)
    calls, moves_checked, problems = 100_000, 0, []
    for n in range(calls):
        geno, alloc, env = _random_instance(rng)
        out = adapt(geno, alloc, env, transfers=bool(n % 2), record=True)
        if not out.converged:
            problems.append(f"call {n} did not converge")
            continue
        rows = [list(r) for r in alloc.states]
        current = fitness(compute_phenotype(geno, alloc), env)
        for i, da, db in out.moves:
            rows[i][0] += da
            rows[i][1] += db
            state = Allocation.from_rows(rows)
            f = fitness(compute_phenotype(geno, state), env)
            if f < current or validate(geno, state):
                problems.append(f"call {n} broke an invariant at vehicle {i}")
                break
            current = f
            moves_checked += 1
        if current != out.fitness or Allocation.from_rows(rows) != out.allocation:
            problems.append(f"call {n} replay mismatch")
    ok = not problems
    report("adaptation properties", ok, f"{calls} calls, {moves_checked} accepted moves replayed, "
           f"{len(problems)} violations")
    assert ok, problems[:5]


def test_determinism(tmp_path, report):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["batch", "--out", str(a)]) == 0
    assert main(["batch", "--out", str(b)]) == 0
    names = [f"{m}/{f}" for m in ("degenerate", "redundant") for f in ("summary.json", "series.csv")]
    same = all((a / n).read_bytes() == (b / n).read_bytes() for n in names)
    report("determinism", same, f"two full baseline batches, seed {SEED}: {len(names)} files byte-identical: {same}")
    assert same


def _direct(tp, te):
    s = 0
    for p, e in zip(tp, te):
        s += 0 if p > e else (p - e) ** 2
    return -s


def test_fitness_brute_force(report):
    grid = list(itertools.product(range(5), repeat=3))
    mismatches = sum(1 for tp in grid for te in grid if fitness(tp, te) != _direct(tp, te))
    ok = mismatches == 0
    report("fitness brute force", ok, f"{len(grid) ** 2} (phenotype, environment) pairs over {{0..4}}^3, "
           f"{mismatches} mismatches")
    assert ok
