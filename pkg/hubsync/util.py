import datetime
import os
import sys
import traceback
from typing import Callable, Iterable, List, TypeVar

from dask import compute, delayed

T = TypeVar("T")
R = TypeVar("R")

ERROR_LOG_FILE = os.getenv("HUBSYNC_ERROR_LOG") or "error.txt"
DEFAULT_JOBS = int(os.getenv("HUBSYNC_JOBS") or 1)

GREEN = "\033[92m"
YELLOW = "\033[93m"
RED = "\033[91m"
CYAN = "\033[96m"
RESET = "\033[0m"


def _console(color: str, message: str):
    print(f"{color}{message}{RESET}", file=sys.stderr)


def print_info(message: str):
    _console(CYAN, message)


def print_success(message: str):
    _console(GREEN, message)


def print_warning(message: str):
    _console(YELLOW, message)


def print_failure(message: str):
    _console(RED, message)


def log_error(error_message: str, log_file: str | None = None):
    """Append a timestamped error message to the error log file. Never raises."""
    path = log_file or ERROR_LOG_FILE
    try:
        with open(path, "a") as f:
            timestamp = datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S")
            f.write(f"\n[{timestamp}] ERROR: {error_message}\n")
    except Exception as e:
        print(f"Failed to log error to file: {str(e)}", file=sys.stderr)


def log_exception(error: BaseException, log_file: str | None = None):
    """Log an exception message followed by its traceback."""
    log_error(f"Unhandled exception: {str(error)}", log_file)
    details = "".join(traceback.format_exception(type(error), error, error.__traceback__))
    log_error(details, log_file)


def parallel_map(function: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> List[R]:
    """
    Map `function` over `items`, preserving order.

    With jobs > 1 the calls are dask delayed tasks on the process scheduler; `function` and every item
    must be picklable.
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    tasks = [delayed(function)(item) for item in items]
    return list(compute(*tasks, scheduler="processes", num_workers=min(jobs, len(items))))
