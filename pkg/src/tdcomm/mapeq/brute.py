from __future__ import annotations

import numpy as np

from . import _kernels as K
from .core import CodelengthBreakdown, Partition, codelength, make_partition, visit_rates

MAX_BRUTE_NODES = 12


def brute_force_optimum(g) -> tuple[Partition, CodelengthBreakdown]:
    """Global map-equation minimum by enumerating every set partition.

    Ties go to the lexicographically smallest restricted-growth labelling.
    Refuses graphs with more than 12 nodes (Bell(13) is about 27.6 million).
    """
    if g.n_nodes > MAX_BRUTE_NODES:
        raise ValueError(f"exhaustive search limited to {MAX_BRUTE_NODES} nodes, got {g.n_nodes}")
    fd = visit_rates(g)
    src = np.asarray(g.src, dtype=np.int64)
    dst = np.asarray(g.dst, dtype=np.int64)
    flow = np.asarray(g.weight, dtype=np.float64) / (2.0 * fd.total_weight)
    labels, _, _ = K.enumerate_partitions(g.n_nodes, src, dst, flow, fd.visit_rate, fd.node_entropy, 1e-12)
    part = make_partition(g, labels, fd)
    return part, codelength(g, part, fd)
