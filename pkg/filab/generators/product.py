"""Product chain T = w1 (T1 x I) + w2 (I x T2)"""

from typing import List, Tuple
import numpy as np
from filab.generators.abstract_family import Family
from filab.exceptions import InvalidParams


class Product(Family):
    """Product of two chains: with probability w1 the first coordinate moves
    according to T1, otherwise the second one moves according to T2.
    """

    def check_params(self):
        children, mix = self.params.children, self.params.mix
        if children is None or len(children) != 2:
            raise InvalidParams("product needs exactly two children")
        if mix is None or len(mix) != 2:
            raise InvalidParams("product needs mixing weights (w1, w2)")
        if min(mix) < 0 or abs(sum(mix) - 1.0) > 1e-12:
            raise InvalidParams("mixing weights must be non-negative and sum to 1")

    def build(self) -> Tuple[List[str], np.ndarray]:
        # late import, the registry imports this module
        from filab.generators import build_family

        (labels1, T1), (labels2, T2) = [build_family(c) for c in self.params.children]
        w1, w2 = self.params.mix
        n1, n2 = len(labels1), len(labels2)
        T = w1 * np.kron(T1, np.eye(n2)) + w2 * np.kron(np.eye(n1), T2)
        labels = [f"({a},{b})" for a in labels1 for b in labels2]
        return labels, T
