from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Optional

from gradcode.config import settings


def get_executor(threads: Optional[int] = None) -> Iterator[ThreadPoolExecutor]:
    """
    Worker pool for Monte Carlo chunks.
    Creates a pool per run and shuts it down when the run is done.
    """
    executor = ThreadPoolExecutor(max_workers=threads or settings.threads, thread_name_prefix="gradcode-mc")
    try:
        yield executor
    finally:
        executor.shutdown(wait=True)
