from typing import Tuple, Iterable, List, Callable, Optional, TypeVar
from concurrent.futures import ThreadPoolExecutor
import os

# ========== File with the functionality for internal purposes only ===========

# ==== TYPES ====
# Sorted, duplicate free tuple of 0-based scenario indices
T_index_set = Tuple[int, ...]
# Callback that receives the warning messages
T_logger = Callable[[str], None]
T_item = TypeVar('T_item')
T_value = TypeVar('T_value')
# ===============

# Slack on every cumulative probability comparison
MASS_TOLERANCE: float = 1e-9
# Slack on c(x, xi) <= 0 in the chance check
CONSTRAINT_TOLERANCE: float = 1e-9
# Feasibility accepted from the projection oracle
FEASIBILITY_TOLERANCE: float = 1e-8
# Name of the environment variable that caps the worker threads
THREADS_VARIABLE: str = "CCP_THREADS"


def index_set(indices: Iterable[int]) -> T_index_set:
    """Create the canonical index set (sorted, without duplicates).

    Args:
        indices (Iterable[int]): Any collection of 0-based indices.

    Returns:
        T_index_set: Sorted tuple of unique indices.
    """
    return tuple(sorted({int(idx) for idx in indices}))


def mass_reaches(mass: float, required: float) -> bool:
    """Decide whether the probability mass satisfies the chance requirement.

    Args:
        mass (float): Accumulated probability mass.
        required (float): Required mass (1 - tau after normalisation).

    Returns:
        bool: True if mass >= required up to MASS_TOLERANCE.
    """
    return mass >= required - MASS_TOLERANCE


def to_report_indices(indices: Iterable[int]) -> List[int]:
    """Convert internal 0-based indices to the 1-based report convention.
    """
    return [int(idx) + 1 for idx in sorted(indices)]


def from_report_indices(indices: Iterable[int]) -> T_index_set:
    """Convert 1-based report indices to the internal index set.

    Raises:
        ValueError: If some index is smaller than 1.
    """
    indices = list(indices)
    if any(int(idx) < 1 for idx in indices):
        raise ValueError("Scenario indices in reports start at 1!")
    return index_set(int(idx) - 1 for idx in indices)


def silent_if_none(warning_logger: Optional[T_logger]) -> T_logger:
    """Return the logger or the silent logger if None is passed.
    """
    if warning_logger is not None:
        return warning_logger
    # Silent logger
    return lambda _mess: _mess


def thread_count() -> int:
    """Read the number of worker threads from the CCP_THREADS variable.

    Returns:
        int: Number of threads, 1 (sequential) when the variable is unset.

    Raises:
        ValueError: If the variable does not hold a positive integer.
    """
    raw = os.environ.get(THREADS_VARIABLE, "").strip()
    if not raw:
        return 1
    try:
        threads = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_VARIABLE} has to be a positive integer!")
    if threads < 1:
        raise ValueError(f"{THREADS_VARIABLE} has to be a positive integer!")
    return threads


def map_concurrently(function: Callable[[T_item], T_value],
                     items: Iterable[T_item],
                     /, *,  # noqa E999
                     threads: Optional[int] = None) -> List[T_value]:
    """Apply the function to every item, preserving the order of items.

    Args:
        function (Callable): Pure function evaluated on each item.
        items (Iterable): Inputs.
        threads (Optional[int]): Number of worker threads, None reads
            the CCP_THREADS variable.

    Returns:
        List: Results in the order of items.
    """
    items = list(items)
    if threads is None:
        threads = thread_count()
    if threads <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(function, items))
