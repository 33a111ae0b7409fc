"""
Ladder Worker
=============

This module defines the `LadderWorker`, which evaluates independent ladder work
items (one per matrix order n, or per (m, n) pair) on a thread pool so long
ladders do not run one SVD at a time. LAPACK releases the GIL, so threads are
enough.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class LadderWorker:
    """
    Runs a function over a list of work items and returns results in order.

    Progress is reported through an optional callback taking an integer
    percentage (0-100), emitted once per finished item.
    """

    def __init__(
        self,
        max_workers: int = 1,
        progress_callback: Optional[Callable[[int], None]] = None,
    ):
        """
        Args:
            max_workers: Threads to use; 1 evaluates inline.
            progress_callback: Called with the completed percentage.
        """
        if max_workers < 1:
            raise ValueError(f"max_workers must be at least 1, got {max_workers}")
        self._max_workers = max_workers
        self._progress_callback = progress_callback

    def run(self, work: Callable[[T], R], items: Sequence[T]) -> List[R]:
        """
        Evaluates `work` on every item.

        The first exception raised by any item propagates after the pool shuts
        down; results of the other items are discarded.
        """
        total = len(items)
        if total == 0:
            return []

        if self._max_workers == 1 or total == 1:
            results = []
            for done, item in enumerate(items, start=1):
                results.append(work(item))
                self._report(done, total)
            return results

        with ThreadPoolExecutor(max_workers=self._max_workers) as pool:
            futures = [pool.submit(work, item) for item in items]
            results = []
            for done, future in enumerate(futures, start=1):
                results.append(future.result())
                self._report(done, total)
        return results

    def _report(self, done: int, total: int) -> None:
        logger.debug(f"Ladder progress {done}/{total}")
        if self._progress_callback is not None:
            self._progress_callback(min(int(done * 100 / total), 100))
