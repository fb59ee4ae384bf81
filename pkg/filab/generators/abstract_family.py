"""Abstract chain family that defines mandatory family methods"""

from abc import ABC, abstractmethod
from typing import List, Tuple
import numpy as np


class Family(ABC):
    def __init__(self, params):
        """Keep the FamilyParams and check the ones this family needs"""
        self.params = params
        self.check_params()

    @abstractmethod
    def check_params(self):
        """Check the parameters of the family

        Raises:
            InvalidParams: if a parameter is missing or out of range
        """
        pass

    @abstractmethod
    def build(self) -> Tuple[List[str], np.ndarray]:
        """Build the transition matrix of the family member

        Returns:
            (labels, T): state labels and the row-stochastic transition matrix

        Raises:
            InvalidParams: if the parameters don't produce a chain
            DisconnectedSample: if a random construction kept failing
        """
        pass

    def __call__(self):
        return self.build()
