from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(function: Callable[[T], R], items: Iterable[T], num_workers: Optional[int] = None) -> List[R]:
    """
    Apply `function` to every item, in order.

    Args:
        function: pure function of one item
        items: inputs
        num_workers: threads to use; None or 1 runs sequentially
    """
    if num_workers and num_workers > 1:
        with ThreadPoolExecutor(num_workers) as executor:
            # NOTE: Threads suffice here, the reductions run inside NumPy/SciPy kernels that release the GIL.
            return list(executor.map(function, items))
    elif num_workers is None or num_workers == 1:
        return [function(item) for item in items]
    else:
        raise ValueError(f"Invalid number of workers: {num_workers}")
