"""Helper functions for sieve_sgd.

Examples:

    # Time a fit
    start = get_time()
    result = run_ssgd_average(data, config)
    seconds = get_time() - start

    # Derive independent seeds for 100 replications
    seeds = spawn_seeds(2024, 100)

    # Sum the rows of a matrix in a fixed, run-independent order
    total = pairwise_sum(rows)

"""

# Imports from other packages
import datetime
import logging
import os
import numpy as np

_logger = logging.getLogger(__name__)

# Rows summed directly before the pairwise tree splits again
PAIRWISE_BLOCK = 256


def get_time():
    """Get the current time in seconds since epoch.

    Args:
        None

    Returns:
        The current time in seconds since epoch.

    """

    return datetime.datetime.now().timestamp()


def pairwise_sum(values, block=PAIRWISE_BLOCK):
    """Sum an array over its first axis with a fixed-shape pairwise tree.

    The tree depends only on the number of rows, so the result is bitwise
    identical between runs, machines with different BLAS thread counts, and
    callers that split the work.

    Args:
        values (np.ndarray): Array of shape (n, ...) to reduce over axis 0.
        block (int): Leaf size of the tree. Defaults to PAIRWISE_BLOCK.

    Returns:
        An array of shape values.shape[1:].

    """

    n = values.shape[0]
    # Leaves are reduced row by row
    if n <= block:
        return np.add.reduce(values, axis=0)
    half = n // 2
    return pairwise_sum(values[:half], block) + pairwise_sum(values[half:], block)


def row_weighted_sum(X, weights, deterministic=True):
    """Compute sum_i weights[i] * X[i] for a matrix X.

    Args:
        X (np.ndarray): Matrix of shape (n, p).
        weights (np.ndarray): Vector of length n.
        deterministic (bool): Use the pairwise tree instead of a BLAS
            matrix-vector product. Defaults to True.

    Returns:
        A vector of length p.

    """

    if deterministic:
        return pairwise_sum(weights[:, None] * X)
    return X.T @ weights


def spawn_seeds(seed, count):
    """Derive independent 64-bit seeds from one root seed.

    Seeds come from numpy's SeedSequence spawning, so replication i always
    gets the same stream regardless of how many replications run or in which
    order they finish.

    Args:
        seed (int): The root seed.
        count (int): How many child seeds to derive.

    Returns:
        A list of count Python ints.

    """

    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def worker_count(requested=None):
    """Resolve the number of parallel workers.

    The SSGD_THREADS environment variable caps the count.

    Args:
        requested (int): Workers asked for. None or -1 means all CPUs.

    Returns:
        A positive int.

    """

    cpus = os.cpu_count() or 1
    workers = cpus if requested in (None, -1) else max(1, int(requested))
    cap = os.environ.get("SSGD_THREADS")
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            _logger.warning("ignoring SSGD_THREADS=%r, not an integer", cap)
    return workers
