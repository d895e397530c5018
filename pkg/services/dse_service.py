"""
DSE Service - multi-objective TPE parameter search with Pareto-front extraction
"""
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import constants
from exceptions import DseError, InvalidObjective, RefError
from models.schemas import ContinuousDim, DseConfig, ParamSpace, ParetoFront, TrialRecord
from services.tensor_io import write_csv
from utils import write_json

logger = logging.getLogger(__name__)

Objective = Callable[[Dict[str, Any]], Sequence[float]]

_erf = np.vectorize(math.erf, otypes=[np.float64])
_SQRT2 = math.sqrt(2.0)


def _as_losses(values, directions: Optional[Sequence[str]] = None) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.size and np.isnan(arr).any():
        raise InvalidObjective("objective vector contains NaN")
    if directions is not None:
        if len(directions) != arr.shape[1]:
            raise DseError(f"{len(directions)} directions for {arr.shape[1]} objectives")
        signs = np.asarray([-1.0 if d == "max" else 1.0 for d in directions])
        arr = arr * signs
    return arr


def nondominated_sort(values, directions: Optional[Sequence[str]] = None) -> np.ndarray:
    """
    Nondomination rank of each row (0 = Pareto set). Objectives are minimized
    unless their direction is "max".
    """
    losses = _as_losses(values, directions)
    n = len(losses)
    ranks = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return ranks
    # dominated[i, j]: row j dominates row i
    dominated = np.all(losses[:, None, :] >= losses[None, :, :], axis=2) & np.any(
        losses[:, None, :] > losses[None, :, :], axis=2
    )
    rank = 0
    while np.any(ranks == -1):
        open_ = ranks == -1
        counts = np.sum(open_[None, :] & dominated, axis=1)
        ranks[open_ & (counts == 0)] = rank
        rank += 1
    return ranks


def crowding_distance(values) -> np.ndarray:
    """Crowding distance of each row; boundary rows are infinite."""
    arr = np.asarray(values, dtype=np.float64)
    n = len(arr)
    if n <= 2:
        return np.full(n, np.inf)
    dist = np.zeros(n)
    for m in range(arr.shape[1]):
        order = np.argsort(arr[:, m], kind="stable")
        lo, hi = arr[order[0], m], arr[order[-1], m]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi == lo:
            continue
        gaps = (arr[order[2:], m] - arr[order[:-2], m]) / (hi - lo)
        dist[order[1:-1]] += gaps
    return dist


def split_good_bad(losses: np.ndarray, gamma: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Indices of the good set (the best ceil(gamma * n) by rank, the last rank
    cut by crowding distance) and the rest, both in chronological order.
    """
    n = len(losses)
    n_good = min(n, max(1, math.ceil(gamma * n)))
    ranks = nondominated_sort(losses)
    good: List[int] = []
    rank = 0
    while len(good) < n_good:
        members = np.flatnonzero(ranks == rank)
        room = n_good - len(good)
        if len(members) <= room:
            good.extend(members.tolist())
        else:
            crowd = crowding_distance(losses[members])
            order = sorted(range(len(members)), key=lambda k: (-crowd[k], members[k]))
            good.extend(members[order[:room]].tolist())
        rank += 1
    good_idx = np.sort(np.asarray(good, dtype=np.int64))
    bad_idx = np.setdiff1d(np.arange(n), good_idx)
    return good_idx, bad_idx


class ParzenEstimator:
    """Truncated-Gaussian mixture over [low, high] with a uniform prior component."""

    def __init__(self, observations: np.ndarray, low: float, high: float):
        self.low, self.high = low, high
        self.mus = np.asarray(observations, dtype=np.float64)
        width = high - low
        n = len(self.mus)
        if n > 1:
            sigma = float(np.std(self.mus)) * n ** (-1.0 / 5.0)
        else:
            sigma = width
        self.sigma = max(sigma, constants.BANDWIDTH_FLOOR * width)
        self.weights = np.full(n + 1, 1.0 / (n + 1))  # last entry is the prior

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        width = self.high - self.low
        prior = np.full(len(x), 1.0 / width)
        if len(self.mus) == 0:
            return np.log(prior)
        z = (x[:, None] - self.mus[None, :]) / self.sigma
        norm = (
            0.5 * (1.0 + _erf((self.high - self.mus) / (self.sigma * _SQRT2)))
            - 0.5 * (1.0 + _erf((self.low - self.mus) / (self.sigma * _SQRT2)))
        )
        comp = np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi)) / np.maximum(norm, 1e-300)
        mix = comp @ self.weights[:-1] + prior * self.weights[-1]
        return np.log(np.maximum(mix, 1e-300))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        picks = rng.choice(len(self.weights), size=size, p=self.weights)
        out = np.empty(size)
        for k, c in enumerate(picks):
            if c == len(self.mus):
                out[k] = rng.uniform(self.low, self.high)
                continue
            for _ in range(16):
                v = rng.normal(self.mus[c], self.sigma)
                if self.low <= v <= self.high:
                    break
            out[k] = v
        return np.clip(out, self.low, self.high)


class CategoricalEstimator:
    """Add-one smoothed choice frequencies."""

    def __init__(self, indices: np.ndarray, n_choices: int):
        counts = np.bincount(np.asarray(indices, dtype=np.int64), minlength=n_choices).astype(np.float64)
        self.probs = (counts + 1.0) / (counts.sum() + n_choices)

    def log_pdf(self, idx: np.ndarray) -> np.ndarray:
        return np.log(self.probs[np.asarray(idx, dtype=np.int64)])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(len(self.probs), size=size, p=self.probs)


def sample_prior(space: ParamSpace, rng: np.random.Generator) -> Dict[str, Any]:
    params: Dict[str, Any] = {}
    for dim in space.dimensions:
        if isinstance(dim, ContinuousDim):
            params[dim.name] = float(rng.uniform(dim.low, dim.high))
        else:
            params[dim.name] = dim.choices[int(rng.integers(len(dim.choices)))]
    return params


def _complete(history: Sequence[TrialRecord]) -> List[TrialRecord]:
    return [t for t in history if t.state == "complete" and t.objectives is not None]


def suggest(space: ParamSpace, history: Sequence[TrialRecord], rng: np.random.Generator,
            config: Optional[DseConfig] = None, directions: Optional[Sequence[str]] = None) -> Dict[str, Any]:
    """
    Next parameter assignment. Prior samples until n_startup complete trials
    exist; afterwards the candidate from the good-set density maximizing
    l(x) / g(x) summed over dimensions in log space.
    """
    cfg = config or DseConfig()
    done = _complete(history)
    if len(done) < max(cfg.n_startup, 2):
        return sample_prior(space, rng)
    losses = _as_losses([t.objectives for t in done], directions)
    good, bad = split_good_bad(losses, cfg.gamma)
    if len(good) == 0 or len(bad) == 0:
        return sample_prior(space, rng)

    n = cfg.n_candidates
    score = np.zeros(n)
    columns: Dict[str, np.ndarray] = {}
    for dim in space.dimensions:
        if isinstance(dim, ContinuousDim):
            obs = np.asarray([float(t.params[dim.name]) for t in done])
            l_est = ParzenEstimator(obs[good], dim.low, dim.high)
            g_est = ParzenEstimator(obs[bad], dim.low, dim.high)
        else:
            lookup = {c: k for k, c in enumerate(dim.choices)}
            obs = np.asarray([lookup[t.params[dim.name]] for t in done], dtype=np.int64)
            l_est = CategoricalEstimator(obs[good], len(dim.choices))
            g_est = CategoricalEstimator(obs[bad], len(dim.choices))
        cand = l_est.sample(rng, n)
        columns[dim.name] = cand
        score += l_est.log_pdf(cand) - g_est.log_pdf(cand)

    best = int(np.argmax(score))
    params: Dict[str, Any] = {}
    for dim in space.dimensions:
        v = columns[dim.name][best]
        params[dim.name] = float(v) if isinstance(dim, ContinuousDim) else dim.choices[int(v)]
    return params


def _evaluate(objective: Objective, params: Dict[str, Any], number: int) -> TrialRecord:
    try:
        values = [float(v) for v in objective(params)]
    except Exception as e:  # objective is user code
        logger.warning(f"⚠️ Trial {number} failed: {e}")
        return TrialRecord(number=number, params=params, state="failed", error=str(e))
    if not values or not all(math.isfinite(v) for v in values):
        logger.warning(f"⚠️ Trial {number} returned non-finite objectives {values}")
        return TrialRecord(number=number, params=params, state="failed", error="non-finite objective")
    return TrialRecord(number=number, params=params, objectives=values)


def pareto_front(history: List[TrialRecord], directions: Optional[Sequence[str]] = None) -> ParetoFront:
    """Assign ranks to complete trials in place and return the rank-0 set."""
    done = _complete(history)
    if not done:
        return ParetoFront()
    ranks = nondominated_sort([t.objectives for t in done], directions)
    for t, r in zip(done, ranks):
        t.rank = int(r)
    return ParetoFront(trials=[t for t in done if t.rank == 0])


def _search(space: ParamSpace, objective: Objective, budget: int, seed: int, propose,
            directions: Optional[Sequence[str]]) -> Tuple[List[TrialRecord], ParetoFront]:
    rng = np.random.default_rng(seed)
    history: List[TrialRecord] = []
    for number in range(budget):
        params = propose(history, rng)
        history.append(_evaluate(objective, params, number))
    front = pareto_front(history, directions)
    failed = sum(1 for t in history if t.state == "failed")
    logger.info(f"✅ {budget} trials ({failed} failed), front of {len(front.trials)}")
    return history, front


def run(space: ParamSpace, objective: Objective, budget: int = constants.DEFAULT_DSE_BUDGET, seed: int = 0,
        config: Optional[DseConfig] = None,
        directions: Optional[Sequence[str]] = None) -> Tuple[List[TrialRecord], ParetoFront]:
    """Exactly `budget` MOTPE trials; failed trials count against the budget."""
    return _search(space, objective, budget, seed,
                   lambda h, rng: suggest(space, h, rng, config, directions), directions)


def random_search(space: ParamSpace, objective: Objective, budget: int = constants.DEFAULT_DSE_BUDGET,
                  seed: int = 0, directions: Optional[Sequence[str]] = None) -> Tuple[List[TrialRecord], ParetoFront]:
    return _search(space, objective, budget, seed, lambda h, rng: sample_prior(space, rng), directions)


def hypervolume_2d(points, ref: Tuple[float, float]) -> float:
    """Exact area dominated by `points` (minimization) and bounded by `ref`."""
    arr = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(arr) == 0:
        return 0.0
    if np.isnan(arr).any():
        raise InvalidObjective("hypervolume point contains NaN")
    rx, ry = float(ref[0]), float(ref[1])
    if np.any(arr[:, 0] > rx) or np.any(arr[:, 1] > ry):
        raise RefError(f"reference point ({rx}, {ry}) does not bound every point")
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    front = []
    best_y = math.inf
    for x, y in arr[order]:
        if y < best_y:
            front.append((x, y))
            best_y = y
    area = 0.0
    for k, (x, y) in enumerate(front):
        next_x = front[k + 1][0] if k + 1 < len(front) else rx
        area += (next_x - x) * (ry - y)
    return area


# ----------------------------------------------------------------------------- objectives

def zdt1_space(n: int = 5) -> ParamSpace:
    return ParamSpace(dimensions=[ContinuousDim(name=f"x{i}", low=0.0, high=1.0) for i in range(1, n + 1)])


def zdt1(params: Dict[str, Any]) -> List[float]:
    xs = [float(params[k]) for k in sorted(params, key=lambda k: int(k[1:]))]
    f1 = xs[0]
    g = 1.0 + 9.0 * sum(xs[1:]) / max(len(xs) - 1, 1)
    return [f1, g * (1.0 - math.sqrt(f1 / g))]


def sphere(params: Dict[str, Any], center: float = 0.0) -> List[float]:
    return [sum((float(v) - center) ** 2 for v in params.values())]


def placement_surrogate(params: Dict[str, Any]) -> List[float]:
    """
    Analytic stand-in for a placer: an HPWL proxy falling with target density
    against an overflow proxy rising with it.
    """
    d = float(params["target_density"])
    c = float(params["init_wirelength_coef"])
    bar = float(params["min_wirelength_force_bar"])
    phi = float(params["max_phi_coef"])
    bins = int(params["bin_count"])
    hpwl = 1.2 - 0.3 * d + 0.8 * (c - 0.25) ** 2 + 0.1 * ((bar + 300.0) / 450.0) ** 2 + 0.03 * abs(math.log2(bins / 128))
    overflow = 0.05 + 0.6 * (d - 0.8) + 30.0 * (phi - 1.04) ** 2 + 0.02 * abs(math.log2(bins / 256))
    return [hpwl, overflow]


def default_space() -> ParamSpace:
    return ParamSpace.model_validate({"dimensions": constants.DEFAULT_PARAM_SPACE})


OBJECTIVES: Dict[str, Tuple[Objective, Callable[[], ParamSpace]]] = {
    "zdt1": (zdt1, zdt1_space),
    "sphere": (sphere, lambda: ParamSpace(dimensions=[ContinuousDim(name="x", low=-1.0, high=1.0)])),
    "placement": (placement_surrogate, default_space),
}


# ----------------------------------------------------------------------------- output

def history_frame(history: Sequence[TrialRecord], space: ParamSpace) -> pd.DataFrame:
    n_obj = max((len(t.objectives) for t in history if t.objectives), default=0)
    rows = []
    for t in history:
        row: Dict[str, Any] = {"number": t.number, "state": t.state}
        for dim in space.dimensions:
            row[dim.name] = t.params.get(dim.name)
        for k in range(n_obj):
            row[f"objective_{k}"] = t.objectives[k] if t.objectives else None
        row["rank"] = t.rank
        row["error"] = t.error or ""
        rows.append(row)
    columns = ["number", "state"] + [d.name for d in space.dimensions] + [f"objective_{k}" for k in range(n_obj)]
    return pd.DataFrame(rows, columns=columns + ["rank", "error"])


class DseService:
    def __init__(self, config: Optional[DseConfig] = None):
        self.config = config or DseConfig()

    def explore(self, objective_name: str, budget: int, seed: int, out_dir: Path,
                space: Optional[ParamSpace] = None, random: bool = False) -> Dict[str, Any]:
        """Run a built-in objective and write dse_history.csv and dse_front.json."""
        if objective_name not in OBJECTIVES:
            raise DseError(f"unknown objective {objective_name}; expected one of {', '.join(OBJECTIVES)}")
        objective, space_factory = OBJECTIVES[objective_name]
        space = space or space_factory()
        logger.info(f"🔍 Exploring {objective_name} with {'random search' if random else 'MOTPE'}, budget {budget}")
        if random:
            history, front = random_search(space, objective, budget, seed)
        else:
            history, front = run(space, objective, budget, seed, self.config)
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(out_dir / "dse_history.csv", history_frame(history, space))
        write_json(out_dir / "dse_front.json", front)
        summary: Dict[str, Any] = {
            "objective": objective_name,
            "trials": len(history),
            "failed": sum(1 for t in history if t.state == "failed"),
            "front_size": len(front.trials),
        }
        if front.trials and len(front.trials[0].objectives) == 2 and objective_name == "zdt1":
            inside = [t.objectives for t in front.trials if t.objectives[0] <= 1.1 and t.objectives[1] <= 1.1]
            summary["hypervolume"] = hypervolume_2d(inside, (1.1, 1.1))
        return summary


# Global service instance
dse_service = DseService()
