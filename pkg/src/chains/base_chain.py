"""
Base chain class for all simulated Markov chain models
"""
from abc import ABC, abstractmethod
from typing import Any, Callable, Tuple
import logging

import numpy as np

from ..errors import InputValidationError

logger = logging.getLogger(__name__)

Observable = Callable[[np.ndarray], np.ndarray]


class BaseChain(ABC):
    """Abstract base class for chain models with a coupling kernel"""

    def __init__(self, model_id: str):
        self.model_id = model_id
        self.logger = logging.getLogger(f"{__name__}.{model_id}")

    @abstractmethod
    def initial_states(self, replicas: int, rng: np.random.Generator, init: Any = None) -> np.ndarray:
        """
        Draw a batch of initial states

        Args:
            replicas: Number of independent copies
            rng: Random stream
            init: None for the stationary (or model default) start, otherwise a model-specific start

        Returns:
            Array whose leading axis indexes replicas
        """
        pass

    @abstractmethod
    def step(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One transition for every replica in the batch"""
        pass

    @abstractmethod
    def coupled_step(self, states: np.ndarray, states_prime: np.ndarray,
                     rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """One transition of the coupling kernel for every pair in the batch"""
        pass

    @abstractmethod
    def cost(self, states: np.ndarray, states_prime: np.ndarray) -> np.ndarray:
        """Cost c(x, x') per pair, bounded by 1"""
        pass

    @abstractmethod
    def lyapunov(self, states: np.ndarray) -> np.ndarray:
        """Drift function V per state"""
        pass

    def simulate_sums(self, g: Observable, n: int, replicas: int, rng: np.random.Generator,
                      init: Any = None, center: float = 0.0) -> np.ndarray:
        """
        Simulate S_n = sum_{l<n} (g(X_l) - center) for a batch of replicas

        Args:
            g: Vectorized observable on a batch of states
            center: pi(g), or 0 for observables centered by construction
        """
        if n < 1:
            raise InputValidationError(f"n must be >= 1, got {n}")
        states = self.initial_states(replicas, rng, init)
        sums = np.zeros(replicas)
        for _ in range(n):
            sums += g(states) - center
            states = self.step(states, rng)
        return sums

    def trajectory(self, n: int, rng: np.random.Generator, init: Any = None) -> np.ndarray:
        """A single path X_0, ..., X_n as an (n+1, dim) array"""
        state = self.initial_states(1, rng, init)
        path = [state[0]]
        for _ in range(n):
            state = self.step(state, rng)
            path.append(state[0])
        return np.asarray(path, dtype=float).reshape(n + 1, -1)

    def coupled_costs(self, states: np.ndarray, states_prime: np.ndarray, steps: int,
                      rng: np.random.Generator) -> np.ndarray:
        """Cost c(X_steps, X'_steps) after running the coupling from the given pairs"""
        for _ in range(steps):
            states, states_prime = self.coupled_step(states, states_prime, rng)
        return self.cost(states, states_prime)
