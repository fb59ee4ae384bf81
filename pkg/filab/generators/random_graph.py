"""Simple random walk on a connected Erdos-Renyi sample"""

import logging
from typing import List, Tuple
import networkx as nx
import numpy as np
from filab.generators.abstract_family import Family
from filab.exceptions import DisconnectedSample, InvalidParams


logger = logging.getLogger(__name__)

RETRY_CAP = 100


class RandomGraph(Family):
    """Simple random walk T(x,y) = 1/deg(x) on a connected G(n, p) sample.
    Samples are redrawn until connected, at most RETRY_CAP times; the same
    (n, p, seed) always gives the same chain.
    """

    def check_params(self):
        n, p = self.params.n, self.params.p
        if n is None or n < 2:
            raise InvalidParams("random_graph needs n >= 2")
        if p is None or not 0 < p <= 1:
            raise InvalidParams("random_graph needs an edge probability 0 < p <= 1")
        if self.params.seed is None:
            raise InvalidParams("random_graph needs a seed")

    def build(self) -> Tuple[List[str], np.ndarray]:
        n, p, seed = self.params.n, self.params.p, self.params.seed
        rng = np.random.default_rng(seed)
        for attempt in range(RETRY_CAP):
            graph = nx.gnp_random_graph(n, p, seed=int(rng.integers(2 ** 32)))
            if nx.is_connected(graph):
                break
            logger.debug(f"G({n}, {p}) sample {attempt} is disconnected, resampling")
        else:
            raise DisconnectedSample(
                f"no connected G({n}, {p}) sample in {RETRY_CAP} attempts (seed {seed})"
            )
        adjacency = nx.to_numpy_array(graph, nodelist=range(n))
        T = adjacency / adjacency.sum(axis=1, keepdims=True)
        return [str(x) for x in range(n)], T
