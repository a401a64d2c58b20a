"""
Enumeration Module for mldlab
Vectorised exhaustive sweeps over weight tuples (exact int64 arithmetic with numpy) and the
worker pool shared by the theorem harness and the enumerate command.
"""

import logging
import sys
from fractions import Fraction
from multiprocessing import Pool
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from arith_module import InvalidInputError, PreconditionError, coprime
from singularity_module import CyclicQuotient, in_A

logger = logging.getLogger(__name__)

# rows per block when crossing coprime triples with paired weights
BLOCK_ROWS = 1_000_000


def run_tasks(worker: Callable[[Any], Any], tasks: Sequence[Any], jobs: int = 1,
              desc: Optional[str] = None, progress: bool = True) -> List[Any]:
    """
    Map a pure top-level function over tasks, in task order.

    Args:
        worker: picklable function of one argument
        tasks: task arguments
        jobs: worker processes; 1 runs inline without a pool
        desc: progress bar label
        progress: show a tqdm bar on stderr

    Returns:
        List of results, one per task, in the order of tasks
    """
    if jobs < 1:
        raise InvalidInputError(f"jobs must be at least 1, got {jobs}")
    tasks = list(tasks)
    bar = tqdm(total=len(tasks), desc=desc, file=sys.stderr, disable=not progress, leave=False)
    results = []
    try:
        if jobs == 1 or len(tasks) <= 1:
            for task in tasks:
                results.append(worker(task))
                bar.update(1)
        else:
            chunksize = max(1, len(tasks) // (jobs * 8))
            with Pool(jobs) as pool:
                for result in pool.imap(worker, tasks, chunksize=chunksize):
                    results.append(result)
                    bar.update(1)
    finally:
        bar.close()
    return results


def units(r: int) -> List[int]:
    """Residues in [1, r-1] coprime to r."""
    return [a for a in range(1, r) if coprime(a, r)]


def _check_int64(r: int) -> None:
    if r * r >= 2 ** 62:
        raise PreconditionError(f"r={r} too large for exact int64 sweeps")


def sorted_tuples(values: Sequence[int], size: int, sum_lo: int, sum_hi: int) -> np.ndarray:
    """
    All nondecreasing tuples over values of the given size with sum in [sum_lo, sum_hi].

    Prefixes are extended one column at a time and dropped as soon as no completion can land
    in the window.

    Returns:
        int64 array of shape (N, size), rows in lexicographic order of value indices
    """
    vals = np.asarray(sorted(set(values)), dtype=np.int64)
    if size < 1 or vals.size == 0:
        return np.zeros((0, max(size, 0)), dtype=np.int64)
    vmax = int(vals[-1])
    rest = size - 1
    keep = (vals * (1 + rest) <= sum_hi) & (vals + rest * vmax >= sum_lo)
    prefixes = vals[keep][:, None]
    last = np.nonzero(keep)[0]
    for k in range(1, size):
        rest = size - k - 1
        sums = prefixes.sum(axis=1)
        rows, lasts = [], []
        for j, v in enumerate(vals.tolist()):
            sel = (last <= j) & (sums + v * (1 + rest) <= sum_hi) & (sums + v + rest * vmax >= sum_lo)
            count = int(sel.sum())
            if count:
                rows.append(np.hstack([prefixes[sel], np.full((count, 1), v, dtype=np.int64)]))
                lasts.append(np.full(count, j))
        if not rows:
            return np.zeros((0, size), dtype=np.int64)
        # restore lexicographic order of prefixes
        stacked = np.vstack(rows)
        stacked_last = np.concatenate(lasts)
        order = np.lexsort(stacked.T[::-1])
        prefixes, last = stacked[order], stacked_last[order]
    return prefixes


def paired_weights(r: int) -> np.ndarray:
    """Pairs a_4 <= a_5 in [1, r-1] with gcd(a_4, r) = gcd(a_5, r)."""
    pairs = sorted_tuples(range(1, r), 2, 2, 2 * (r - 1))
    if pairs.size == 0:
        return pairs
    same = np.gcd(pairs[:, 0], r) == np.gcd(pairs[:, 1], r)
    return pairs[same]


def structured_tuples(r: int, sum_lo: int, sum_hi: int) -> Iterator[np.ndarray]:
    """
    Yield blocks of 5-tuples (a_1 <= a_2 <= a_3 units, a_4 <= a_5 with equal gcd) with sum in the window.
    """
    triples = sorted_tuples(units(r), 3, 0, 3 * r)
    pairs = paired_weights(r)
    if triples.size == 0 or pairs.size == 0:
        return
    pair_sums = pairs.sum(axis=1)
    step = max(1, BLOCK_ROWS // len(pairs))
    for start in range(0, len(triples), step):
        block = triples[start:start + step]
        total = block.sum(axis=1)[:, None] + pair_sums[None, :]
        ti, pj = np.nonzero((total >= sum_lo) & (total <= sum_hi))
        if ti.size:
            yield np.hstack([block[ti], pairs[pj]])


def toric_minima(r: int, weights: np.ndarray) -> np.ndarray:
    """
    Row-wise min over j in [1, r-1] of r * sum_i (1 + j a_i/r - ceil(j a_i/r)).

    Args:
        r: group order, at least 2
        weights: int64 array (N, d) with entries in [1, r-1]

    Returns:
        int64 array (N,)
    """
    _check_int64(r)
    weights = np.asarray(weights, dtype=np.int64)
    best = np.full(weights.shape[0], weights.shape[1] * r, dtype=np.int64)
    for j in range(1, r):
        residue = (j * weights) % r
        np.minimum(best, np.where(residue == 0, r, residue).sum(axis=1), out=best)
    return best


def bar_rows(r: int, weights: np.ndarray) -> np.ndarray:
    """Rows whose toric minimum is attained at j = 1 (mld equals sum / r)."""
    if weights.shape[0] == 0:
        return weights
    return weights[toric_minima(r, weights) == weights.sum(axis=1)]


def dedupe_multisets(rows: np.ndarray) -> np.ndarray:
    """Unique rows after sorting each row, in lexicographic order."""
    if rows.shape[0] == 0:
        return rows
    return np.unique(np.sort(rows, axis=1), axis=0)


def b_exceptional_candidates(r: int) -> List[Tuple[Tuple[int, ...], int]]:
    """
    Pairs (a_1..a_4 multiset from [1, r], e in [1, r]) with exactly one k in [1, r-1] where
    sum{k a_i/r} - {k e/r} < 1. A necessary condition for B_r membership.
    """
    _check_int64(r)
    quads = sorted_tuples(range(1, r + 1), 4, 4, 4 * r)
    ks = np.arange(1, r, dtype=np.int64)
    # (M, r-1): sum over i of (k a_i mod r)
    weight_part = ((quads[:, :, None] * ks[None, None, :]) % r).sum(axis=1)
    found = []
    for e in range(1, r + 1):
        e_part = (ks * e) % r
        low = (weight_part - e_part[None, :]) < r
        hits = np.nonzero(low.sum(axis=1) == 1)[0]
        found.extend((tuple(int(a) for a in quads[i]), e) for i in hits)
    return found


def window_for(r: int, bar: bool, eps: Optional[Fraction]) -> Tuple[int, int]:
    """Sum window for five weights in [1, r-1] implied by the bar and epsilon conditions."""
    lo, hi = 5, 5 * (r - 1)
    if bar:
        hi = min(hi, 2 * r - 1)
        if eps is not None:
            # sum / r > 2 - eps
            bound = r * (2 - eps)
            lo = max(lo, bound.numerator // bound.denominator + 1)
    return lo, hi


def candidate_blocks(level: int, r: int, sum_lo: int, sum_hi: int) -> Iterator[np.ndarray]:
    """Canonical candidate 5-tuples for one level (up to reordering)."""
    if r < 2:
        return
    if level == 1:
        yield sorted_tuples(range(1, r), 5, sum_lo, sum_hi)
    elif level == 5:
        yield sorted_tuples(units(r), 5, sum_lo, sum_hi)
    else:
        yield from structured_tuples(r, sum_lo, sum_hi)


def _passes_mld(r: int, rows: np.ndarray, bar: bool, eps: Optional[Fraction]) -> np.ndarray:
    minima = toric_minima(r, rows)
    keep = minima < 2 * r
    if eps is not None:
        bound = r * (2 - eps)
        keep &= minima * bound.denominator > bound.numerator
    if bar:
        keep &= minima == rows.sum(axis=1)
    return rows[keep]


def members_for_r(task: Tuple[int, int, Optional[str], bool]) -> List[Dict[str, Any]]:
    """Worker: members of A_r(level[, eps]) (bar variant if asked) for one r, sorted by weights."""
    level, r, eps_text, bar = task
    eps = Fraction(eps_text) if eps_text is not None else None
    found: Dict[Tuple[int, ...], Dict[str, Any]] = {}
    sum_lo, sum_hi = window_for(r, bar, eps)
    for block in candidate_blocks(level, r, sum_lo, sum_hi):
        if block.shape[0] == 0:
            continue
        for row in dedupe_multisets(_passes_mld(r, block, bar, eps)).tolist():
            key = tuple(row)
            if key in found:
                continue
            cq = CyclicQuotient(r, key)
            report = in_A(cq, level, eps)
            if report.member and (report.bar or not bar):
                found[key] = {"singularity": cq.to_dict(), "membership": report.to_dict()}
    return [found[key] for key in sorted(found)]


def divisors(r: int) -> List[int]:
    return [d for d in range(1, r + 1) if r % d == 0]


class Enumerator:
    """Drives member enumeration over a range of r with an optional worker pool."""

    def __init__(self, jobs: int = 1, progress: bool = True):
        self.logger = logging.getLogger(__name__)
        self.jobs = jobs
        self.progress = progress

    def members(self, level: int, eps: Optional[Fraction], r_min: int, r_max: int,
                bar: bool) -> List[Dict[str, Any]]:
        """
        All members of A(level[, eps]) (or its bar subset) with r in [r_min, r_max].

        Args:
            level: 1..5
            eps: optional lower gap, mld > 2 - eps
            r_min: smallest r, at least 1
            r_max: largest r
            bar: keep only bar members

        Returns:
            List of {"singularity", "membership"} dicts sorted by (r, weights)
        """
        if level not in (1, 2, 3, 4, 5):
            raise InvalidInputError(f"level must be in 1..5, got {level}")
        if r_min < 1 or r_min > r_max:
            raise InvalidInputError(f"need 1 <= r_min <= r_max, got [{r_min}, {r_max}]")
        if eps is not None and not 0 < eps <= 2:
            raise InvalidInputError(f"eps must lie in (0, 2], got {eps}")
        eps_text = str(eps) if eps is not None else None

        r_values = list(range(r_min, r_max + 1))
        if level == 5 and not bar:
            r_values = self._isolated_candidates(eps_text, r_values)

        tasks = [(level, r, eps_text, bar) for r in r_values]
        self.logger.info(f"Enumerating level {level} over {len(tasks)} values of r")
        chunks = run_tasks(members_for_r, tasks, self.jobs, desc=f"level {level}", progress=self.progress)
        return [item for chunk in chunks for item in chunk]

    def _isolated_candidates(self, eps_text: Optional[str], r_values: List[int]) -> List[int]:
        # reduction keeps isolation and the mld, and its order divides r
        r_max = max(r_values)
        tasks = [(5, r, eps_text, True) for r in range(1, r_max + 1)]
        bar_found = run_tasks(members_for_r, tasks, self.jobs, desc="bar level 5", progress=self.progress)
        seeds = {task[1] for task, found in zip(tasks, bar_found) if found}
        kept = [r for r in r_values if any(d in seeds for d in divisors(r))]
        self.logger.info(f"Reduction leaves {len(kept)} of {len(r_values)} values of r to sweep")
        return kept
