import numpy as np
import pytest

from gsgpls import engine, semops
from gsgpls.adaptive import GenState, end_generation
from gsgpls.dataset import Dataset, friedman_surrogate
from gsgpls.engine import (
    VARIANTS,
    EmptyPopulation,
    EvolutionConfig,
    RunContext,
    initialize_population,
    run,
    step_generation,
    tournament_select,
)
from gsgpls.semops import FitnessCases, Lineage, rmse


@pytest.fixture(scope="module")
def data():
    return friedman_surrogate(n=120, seed=3)


def small(variant, **kw):
    kw.setdefault("population_size", 20)
    kw.setdefault("generations", 12)
    return EvolutionConfig(variant=variant, **kw)


def test_variant_table_complete():
    assert len(VARIANTS) == 13
    assert VARIANTS["GSGP"].local_search == "none"
    assert VARIANTS["HYBRID_r"] == engine.VariantTraits("gsm_ls", ridge=True, limited=True)
    assert VARIANTS["REG_rg"] == engine.VariantTraits("reg", ridge=True, gated=True)


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(variant="NOPE")
    with pytest.raises(ValueError):
        EvolutionConfig(p_crossover=0.5, p_mutation=0.6)
    with pytest.raises(ValueError):
        EvolutionConfig(population_size=0)
    assert EvolutionConfig(variant="GPLS_r").regression.lam == 0.001


def test_initial_population(data):
    ctx = RunContext.create(EvolutionConfig(population_size=100), data, 0)
    pop = initialize_population(ctx)
    assert len(pop) == 100
    assert {p.lineage.kind for p in pop} == {semops.INITIAL}
    for p in pop:
        assert p.train_fitness == rmse(p.semantics, data.targets, ctx.split.train)
        assert p.test_fitness == rmse(p.semantics, data.targets, ctx.split.test)
    again = initialize_population(RunContext.create(EvolutionConfig(population_size=100), data, 0))
    assert all(np.array_equal(a.semantics, b.semantics) for a, b in zip(pop, again))


def population(fitnesses):
    cases = FitnessCases(np.zeros(2), [0], [1])
    return [
        cases.make([f, f], Lineage(semops.INITIAL, random_tree_ids=(None,))) for f in fitnesses
    ]


def test_tournament_argmin():
    pop = population([5.0, 3.0, 4.0, 1.0, 2.0])
    rng = np.random.default_rng(0)
    for _ in range(200):
        winner = tournament_select(pop, 4, rng)
        assert winner.train_fitness <= max(p.train_fitness for p in pop)
    # a drawn set always yields its minimum
    rng_a, rng_b = np.random.default_rng(1), np.random.default_rng(1)
    drawn = rng_b.integers(0, 5, size=3)
    assert tournament_select(pop, 3, rng_a).train_fitness == min(pop[i].train_fitness for i in drawn)


def test_tournament_ties_go_to_first_draw():
    pop = population([1.0, 1.0, 1.0])
    rng_a, rng_b = np.random.default_rng(9), np.random.default_rng(9)
    first = rng_b.integers(0, 3, size=4)[0]
    assert tournament_select(pop, 4, rng_a) is pop[first]


def test_tournament_size_one_is_uniform():
    pop = population(list(range(5)))
    rng = np.random.default_rng(2)
    counts = np.bincount([int(tournament_select(pop, 1, rng).train_fitness) for _ in range(5000)], minlength=5)
    assert counts.min() > 850 and counts.max() < 1150


def test_tournament_edge_cases():
    pop = population([3.0])
    assert tournament_select(pop, 4, np.random.default_rng(0)) is pop[0]
    with pytest.raises(EmptyPopulation):
        tournament_select([], 4, np.random.default_rng(0))


def test_gsgp_never_solves_regression(data, monkeypatch):
    def boom(*a, **k):
        raise AssertionError("regression called")

    monkeypatch.setattr(semops, "fit", boom)
    run(small("GSGP"), data, 0)


def test_hybrid_switches_to_plain_mutation(data):
    config = small("HYBRID", hybrid_cutoff=10)
    ctx = RunContext.create(config, data, 1)
    pop = initialize_population(ctx)
    kinds = {}
    for g in range(1, 13):
        pop, _ = step_generation(pop, ctx, g)
        kinds[g] = {p.lineage.kind for p in pop}
    assert semops.MUTATION_LS in kinds[10] and semops.MUTATION not in kinds[10]
    assert semops.MUTATION in kinds[11] and semops.MUTATION_LS not in kinds[11]


def test_reg_window(data):
    config = small("REG", hybrid_cutoff=3)
    ctx = RunContext.create(config, data, 2)
    pop = initialize_population(ctx)
    for g in range(1, 6):
        pop, _ = step_generation(pop, ctx, g)
        regs = sum(p.lineage.kind == semops.REG_LS for p in pop)
        if g <= 3:
            assert regs >= len(pop) - 1  # all but possibly the elite
        else:
            assert regs <= 1


def test_zero_generations(data):
    log = run(small("GPLS", generations=0), data, 0)
    assert len(log.records) == 1
    assert log.records[0].generation == 0


def test_run_deterministic(data):
    for variant in ("GPLS_g", "REG_rg", "HYBRID"):
        assert run(small(variant), data, 5).records == run(small(variant), data, 5).records


def test_gen_probability_trace(data):
    log = run(small("GPLS_g"), data, 0)
    probs = [r.ls_prob for r in log.records]
    assert probs[0] == 1.0 and probs[1] == 1.0
    assert all(0.01 <= p <= 1.0 for p in probs)
    assert all(r.ls_prob is None for r in run(small("GPLS"), data, 0).records)


@pytest.mark.parametrize("variant", list(VARIANTS))
def test_elitism_and_no_leakage(data, variant):
    config = small(variant, generations=15)
    log = run(config, data, 11)
    train = log.train_curve()
    assert np.all(np.diff(train) <= 0)
    split = RunContext.create(config, data, 11).split
    corrupted = data.targets.copy()
    corrupted[split.test] = np.random.default_rng(0).normal(size=split.test.size) * 1e6
    other = run(config, data.with_targets(corrupted), 11)
    np.testing.assert_array_equal(other.train_curve(), train)
    assert [r.ls_prob for r in other.records] == [r.ls_prob for r in log.records]


@pytest.mark.parametrize("variant", list(VARIANTS))
def test_offspring_lineage_is_exclusive(data, variant):
    config = small(variant)
    ctx = RunContext.create(config, data, 4)
    pop = initialize_population(ctx)
    state = GenState() if config.traits.gated else None
    for g in range(1, 8):
        prev_ids = {p.id for p in pop}
        pop, state = step_generation(pop, ctx, g, state)
        if state is not None:
            state = end_generation(state)
        for p in pop:
            if p.id in prev_ids:
                continue  # surviving elite
            kind = p.lineage.kind
            assert kind in {semops.CROSSOVER, semops.MUTATION, semops.MUTATION_LS, semops.COPY, semops.REG_LS}


def test_gpls_mutation_never_hurts_training(data):
    ctx = RunContext.create(small("GPLS"), data, 6)
    pop = initialize_population(ctx)
    for g in range(1, 8):
        by_id = {p.id: p for p in pop}
        pop, _ = step_generation(pop, ctx, g)
        for child in pop:
            if child.lineage.kind == semops.MUTATION_LS:
                parent = by_id[child.lineage.parent_ids[0]]
                assert child.train_fitness <= parent.train_fitness


@pytest.mark.parametrize("variant", ["GPLS_g", "GPLS_rg", "REG_g", "REG_rg"])
def test_gated_acceptances_improve_validation(data, variant, monkeypatch):
    calls = []
    original = engine.attempt_local_search

    def spy(parent, step, inner, targets, state):
        out, new_state = original(parent, step, inner, targets, state)
        calls.append((parent, out, inner))
        return out, new_state

    monkeypatch.setattr(engine, "attempt_local_search", spy)
    run(small(variant), data, 8)
    assert calls
    accepted = 0
    for parent, out, inner in calls:
        if out is not parent:
            accepted += 1
            assert rmse(out.semantics, data.targets, inner.x2) < rmse(parent.semantics, data.targets, inner.x2)
    assert accepted > 0


def test_gated_variant_needs_validation_cases():
    tiny = Dataset("tiny", np.arange(20.0).reshape(10, 2), np.arange(10.0))
    with pytest.raises(Exception):
        run(small("GPLS_g"), tiny, 0)
    run(small("GPLS"), tiny, 0)
