"""
Steiner Service - rectilinear MST and iterated 1-Steiner RSMT estimation
"""
import itertools
import logging
from typing import List, Sequence, Tuple

import numpy as np

import constants
from models.geometry import Point
from services.geom_service import hpwl, manhattan

logger = logging.getLogger(__name__)

_BIG = np.iinfo(np.int64).max // 4


def prim_tree(xy: np.ndarray) -> Tuple[int, np.ndarray]:
    """Rectilinear MST over an (m, 2) int array: (length, parent index per node, -1 at root)."""
    m = len(xy)
    parent = np.full(m, -1, dtype=np.int64)
    if m < 2:
        return 0, parent
    in_tree = np.zeros(m, dtype=bool)
    in_tree[0] = True
    best = np.abs(xy[:, 0] - xy[0, 0]) + np.abs(xy[:, 1] - xy[0, 1])
    link = np.zeros(m, dtype=np.int64)
    total = 0
    for _ in range(m - 1):
        v = int(np.argmin(np.where(in_tree, _BIG, best)))
        total += int(best[v])
        parent[v] = link[v]
        in_tree[v] = True
        d = np.abs(xy[:, 0] - xy[v, 0]) + np.abs(xy[:, 1] - xy[v, 1])
        closer = d < best
        best = np.where(closer, d, best)
        link = np.where(closer, v, link)
    return total, parent


def batch_mst_length(xy: np.ndarray) -> np.ndarray:
    """MST lengths for a (B, m, 2) batch of point sets, Prim run in lock-step."""
    b, m, _ = xy.shape
    if m < 2:
        return np.zeros(b, dtype=np.int64)
    rows = np.arange(b)
    in_tree = np.zeros((b, m), dtype=bool)
    in_tree[:, 0] = True
    best = np.abs(xy[:, :, 0] - xy[:, :1, 0]) + np.abs(xy[:, :, 1] - xy[:, :1, 1])
    total = np.zeros(b, dtype=np.int64)
    for _ in range(m - 1):
        v = np.argmin(np.where(in_tree, _BIG, best), axis=1)
        total += best[rows, v]
        in_tree[rows, v] = True
        pv = xy[rows, v]
        d = np.abs(xy[:, :, 0] - pv[:, None, 0]) + np.abs(xy[:, :, 1] - pv[:, None, 1])
        best = np.minimum(best, d)
    return total


def rmst_length(pins: Sequence[Point]) -> int:
    pts = _unique(pins)
    if len(pts) < 2:
        return 0
    return prim_tree(np.array(pts, dtype=np.int64))[0]


def _unique(pins: Sequence[Point]) -> List[Tuple[int, int]]:
    return sorted({(p.x, p.y) for p in pins})


def _prune(pins: np.ndarray, steiner: List[Tuple[int, int]]) -> List[Tuple[int, int]]:
    # drop Steiner points of degree <= 2 in the current MST until none remain
    while steiner:
        xy = np.vstack([pins, np.array(steiner, dtype=np.int64)])
        _, parent = prim_tree(xy)
        degree = np.zeros(len(xy), dtype=np.int64)
        for v, p in enumerate(parent):
            if p >= 0:
                degree[v] += 1
                degree[p] += 1
        n = len(pins)
        keep = [s for i, s in enumerate(steiner) if degree[n + i] > 2]
        if len(keep) == len(steiner):
            break
        steiner = keep
    return steiner


def iterated_one_steiner(pins: Sequence[Point], max_insertions: int = None) -> int:
    """RMST refined by greedy Hanan-grid Steiner insertions; never above the RMST."""
    pts = _unique(pins)
    n = len(pts)
    base = np.array(pts, dtype=np.int64)
    best_len, _ = prim_tree(base)
    if n < 3:
        return best_len
    limit = 2 * n if max_insertions is None else max_insertions
    xs = sorted({x for x, _ in pts})
    ys = sorted({y for _, y in pts})
    hanan = [(x, y) for x in xs for y in ys]
    steiner: List[Tuple[int, int]] = []
    inserted = 0
    while inserted < limit:
        current = np.vstack([base, np.array(steiner, dtype=np.int64).reshape(-1, 2)])
        occupied = {tuple(p) for p in current.tolist()}
        cands = [c for c in hanan if c not in occupied]
        if not cands:
            break
        cand = np.array(cands, dtype=np.int64)
        batch = np.concatenate(
            [np.broadcast_to(current, (len(cand),) + current.shape), cand[:, None, :]], axis=1
        )
        lengths = batch_mst_length(batch)
        k = int(np.argmin(lengths))
        gain, choice = best_len - int(lengths[k]), [cands[k]]
        if n <= constants.STEINER_LOOKAHEAD_PINS and len(cands) >= 2:
            pairs = list(itertools.combinations(range(len(cands)), 2))
            idx = np.array(pairs, dtype=np.int64)
            pair_batch = np.concatenate(
                [np.broadcast_to(current, (len(idx),) + current.shape), cand[idx]], axis=1
            )
            pair_lengths = batch_mst_length(pair_batch)
            j = int(np.argmin(pair_lengths))
            if best_len - int(pair_lengths[j]) > gain:
                gain = best_len - int(pair_lengths[j])
                choice = [cands[pairs[j][0]], cands[pairs[j][1]]]
        if gain <= 0:
            break
        steiner.extend(choice)
        inserted += len(choice)
        steiner = _prune(base, steiner)
        best_len = prim_tree(np.vstack([base, np.array(steiner, dtype=np.int64).reshape(-1, 2)]))[0]
    return best_len


def estimate_rsmt(pins: Sequence[Point]) -> int:
    """
    Rectilinear Steiner tree length estimate.

    1 pin -> 0, 2 pins -> Manhattan, 3 pins -> HPWL (exact), larger nets ->
    iterated 1-Steiner over the RMST; above the refinement cap the RMST itself.
    """
    pts = _unique(pins)
    n = len(pts)
    if n <= 1:
        return 0
    if n == 2:
        return manhattan(Point(*pts[0]), Point(*pts[1]))
    if n == 3:
        return hpwl([Point(x, y) for x, y in pts])
    if n > constants.STEINER_REFINE_MAX_PINS:
        return rmst_length(pins)
    return iterated_one_steiner(pins)
