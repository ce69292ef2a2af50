import concurrent.futures
import logging
from typing import Callable, List, Sequence, TypeVar

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def execute_items(items: Sequence[T], fn: Callable[[T], R], workers: int = 1) -> List[R]:
    """
    Apply fn to every item, optionally on a thread pool.

    Results come back in input order whatever the completion order, so any
    reduction over them is deterministic.
    """
    if not items:
        return []
    if workers <= 1 or len(items) == 1:
        return [fn(item) for item in items]
    results: List = [None] * len(items)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(fn, item): idx for idx, item in enumerate(items)}
        for fut in concurrent.futures.as_completed(futures):
            results[futures[fut]] = fut.result()
    return results


def chunk_ranges(total: int, chunks: int) -> List[range]:
    chunks = max(1, min(chunks, total)) if total > 0 else 1
    bounds = [total * i // chunks for i in range(chunks + 1)]
    return [range(bounds[i], bounds[i + 1]) for i in range(chunks)]
