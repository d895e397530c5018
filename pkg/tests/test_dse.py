import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exceptions import DseError, InvalidObjective, RefError
from models.schemas import CategoricalDim, ContinuousDim, DseConfig, ParamSpace, TrialRecord
from services.dse_service import (
    CategoricalEstimator,
    DseService,
    ParzenEstimator,
    crowding_distance,
    default_space,
    hypervolume_2d,
    nondominated_sort,
    random_search,
    run,
    sample_prior,
    split_good_bad,
    suggest,
    zdt1,
    zdt1_space,
)
from tests.conftest import slow
from utils import read_json


def brute_force_ranks(points):
    pts = np.asarray(points, dtype=float)
    remaining = set(range(len(pts)))
    ranks = [-1] * len(pts)
    rank = 0
    while remaining:
        layer = [
            i for i in remaining
            if not any(np.all(pts[j] <= pts[i]) and np.any(pts[j] < pts[i]) for j in remaining if j != i)
        ]
        for i in layer:
            ranks[i] = rank
        remaining -= set(layer)
        rank += 1
    return ranks


def test_ranks_of_small_set():
    assert nondominated_sort([(1, 2), (2, 1), (2, 2), (3, 3)]).tolist() == [0, 0, 1, 2]


def test_single_point_is_rank_zero():
    assert nondominated_sort([(5.0, 5.0)]).tolist() == [0]


def test_maximized_objective_flips_order():
    assert nondominated_sort([(1.0,), (2.0,)], ["max"]).tolist() == [1, 0]


def test_nan_objective_rejected():
    with pytest.raises(InvalidObjective):
        nondominated_sort([(1.0, float("nan"))])


def test_direction_count_must_match():
    with pytest.raises(DseError):
        nondominated_sort([(1.0, 2.0)], ["min"])


@pytest.mark.parametrize("seed", range(5))
def test_ranks_match_brute_force(seed):
    pts = np.random.default_rng(seed).random((50, 3))
    assert nondominated_sort(pts).tolist() == brute_force_ranks(pts)


@settings(max_examples=50, deadline=None)
@given(
    pts=st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=20),
    factor=st.floats(0.1, 10.0),
)
def test_ranks_invariant_to_objective_scale(pts, factor):
    scaled = [(a * factor, b) for a, b in pts]
    assert nondominated_sort(scaled).tolist() == nondominated_sort(pts).tolist()


def test_crowding_distance_boundaries_infinite():
    d = crowding_distance([(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)])
    assert np.isinf(d[0]) and np.isinf(d[2])
    assert d[1] == pytest.approx(2.0)


def test_split_good_bad_size():
    losses = np.asarray([(k, 10 - k) for k in range(10)] + [(20, 20)], dtype=float)
    good, bad = split_good_bad(losses, 0.25)
    assert len(good) == 3
    assert 10 in bad
    assert {0, 9} <= set(good.tolist())


@pytest.mark.parametrize(
    "front, ref, expected",
    [
        ([(0.0, 0.0)], (1.0, 1.0), 1.0),
        ([(0.0, 0.5), (0.5, 0.0)], (1.0, 1.0), 0.75),
        ([], (1.0, 1.0), 0.0),
        ([(0.0, 0.5), (0.5, 0.0), (0.6, 0.6)], (1.0, 1.0), 0.75),
    ],
)
def test_hypervolume(front, ref, expected):
    assert hypervolume_2d(front, ref) == pytest.approx(expected)


def test_hypervolume_point_beyond_ref():
    with pytest.raises(RefError):
        hypervolume_2d([(1.5, 0.0)], (1.0, 1.0))


def test_parzen_density_integrates_to_one():
    est = ParzenEstimator(np.asarray([0.2, 0.25, 0.7]), 0.0, 1.0)
    xs = (np.arange(20000) + 0.5) / 20000
    assert np.exp(est.log_pdf(xs)).mean() == pytest.approx(1.0, abs=1e-3)
    samples = est.sample(np.random.default_rng(0), 500)
    assert samples.min() >= 0.0 and samples.max() <= 1.0


def test_categorical_estimator_smooths():
    est = CategoricalEstimator(np.asarray([0, 0, 1]), 3)
    probs = np.exp(est.log_pdf(np.arange(3)))
    assert probs.tolist() == pytest.approx([3 / 6, 2 / 6, 1 / 6])


def test_empty_history_samples_prior():
    space = default_space()
    params = suggest(space, [], np.random.default_rng(0))
    assert space.contains(params)


dims = st.one_of(
    st.tuples(st.floats(-5, 5), st.floats(0.01, 5)).map(lambda t: ("c", t[0], t[0] + t[1])),
    st.lists(st.integers(0, 9), min_size=1, max_size=4, unique=True).map(lambda c: ("k", c)),
)


@settings(max_examples=25, deadline=None)
@given(specs=st.lists(dims, min_size=1, max_size=3), seed=st.integers(0, 1000))
def test_suggestions_respect_bounds(specs, seed):
    dimensions = [
        ContinuousDim(name=f"d{i}", low=s[1], high=s[2]) if s[0] == "c" else CategoricalDim(name=f"d{i}", choices=s[1])
        for i, s in enumerate(specs)
    ]
    space = ParamSpace(dimensions=dimensions)
    rng = np.random.default_rng(seed)
    history = []
    for k in range(14):
        params = suggest(space, history, rng, DseConfig(n_startup=4))
        assert space.contains(params)
        history.append(TrialRecord(number=k, params=params, objectives=[float(rng.random()), float(rng.random())]))


def test_failed_trials_are_recorded():
    space = ParamSpace(dimensions=[ContinuousDim(name="x", low=0.0, high=1.0)])

    def flaky(params):
        if params["x"] > 0.5:
            raise RuntimeError("solver crashed")
        return [params["x"]]

    history, front = random_search(space, flaky, 20, seed=1)
    assert len(history) == 20
    failed = [t for t in history if t.state == "failed"]
    assert failed and all(t.error == "solver crashed" for t in failed)
    assert all(t.state == "complete" for t in front.trials)


def test_budget_zero():
    history, front = run(zdt1_space(), zdt1, 0, seed=0)
    assert history == [] and front.trials == []


def test_same_seed_same_history():
    a, _ = run(zdt1_space(), zdt1, 15, seed=3, config=DseConfig(n_startup=5))
    b, _ = run(zdt1_space(), zdt1, 15, seed=3, config=DseConfig(n_startup=5))
    assert a == b


def test_pareto_front_members_not_dominated():
    history, front = random_search(zdt1_space(), zdt1, 30, seed=2)
    members = [t.objectives for t in front.trials]
    for t in history:
        if t.rank == 0:
            continue
        assert any(all(m[k] <= t.objectives[k] for k in range(2)) for m in members)


def test_sample_prior_uses_choices():
    space = ParamSpace(dimensions=[CategoricalDim(name="bins", choices=[64, 128, 256])])
    picks = {sample_prior(space, np.random.default_rng(s))["bins"] for s in range(30)}
    assert picks <= {64, 128, 256}


def test_explore_writes_outputs(tmp_path):
    summary = DseService(DseConfig(n_startup=5)).explore("zdt1", 12, 0, tmp_path)
    assert summary["trials"] == 12
    assert summary["hypervolume"] >= 0.0
    history = pd.read_csv(tmp_path / "dse_history.csv")
    assert len(history) == 12
    assert list(history.columns[:2]) == ["number", "state"]
    assert "trials" in read_json(tmp_path / "dse_front.json")


def test_unknown_objective(tmp_path):
    with pytest.raises(DseError):
        DseService().explore("nope", 1, 0, tmp_path)


def _front_hv(front):
    pts = [t.objectives for t in front.trials if t.objectives[0] <= 1.1 and t.objectives[1] <= 1.1]
    return hypervolume_2d(pts, (1.1, 1.1))


@slow
def test_motpe_beats_random_on_zdt1():
    wins = 0
    for seed in range(10):
        _, motpe = run(zdt1_space(), zdt1, 100, seed)
        _, rand = random_search(zdt1_space(), zdt1, 100, seed)
        wins += _front_hv(motpe) >= _front_hv(rand)
    assert wins >= 8


@slow
def test_motpe_concentrates_on_minimum():
    space = ParamSpace(dimensions=[ContinuousDim(name="x", low=0.0, high=1.0)])
    hits = 0
    for seed in range(10):
        history, _ = run(space, lambda p: [(p["x"] - 0.3) ** 2], 200, seed)
        hits += sum(abs(t.params["x"] - 0.3) < 0.1 for t in history[-50:])
    assert hits >= 0.8 * 500
