"""
Quadrature Rule Pool for the biphoton toolkit
Provides a thread-safe, persistent store of Gauss rules so repeated sweeps reuse their nodes.
"""

import logging
import threading

from biphoton.utils.specfun import GaussianProductRule, QuadratureRule, gaussian_product_rule, make_quadrature

logger = logging.getLogger(__name__)


class QuadraturePool:
    """
    Caches one-dimensional Gauss rules keyed by (kind, order).

    This class is thread-safe and designed to be used as a singleton.
    Rules are immutable, so a cached rule can be handed to any number of
    worker threads at once.
    """

    def __init__(self):
        self._rules: dict = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get_rule(self, kind: str, order: int) -> QuadratureRule:
        """
        Retrieve a rule from the pool, building it on first use.

        Args:
            kind: 'gauss-hermite' or 'gauss-legendre'
            order: number of nodes

        Returns:
            QuadratureRule: the shared immutable rule

        Raises:
            QuadratureOrderError: If the order is out of range
            SpecialFunctionDomainError: If the kind is unsupported
        """
        key = (kind, int(order))
        with self._lock:
            rule = self._rules.get(key)
            if rule is not None:
                self.hits += 1
                return rule

            rule = make_quadrature(kind, order)
            self._rules[key] = rule
            self.misses += 1
            logger.debug(f"Cached {kind} rule of order {order} ({len(self._rules)} rules pooled)")
            return rule

    def product_rule(self, precision, order: int) -> GaussianProductRule:
        """Principal-axis 2D rule built on the pooled 1D Hermite rule (not cached itself)."""
        return gaussian_product_rule(precision, order, rule=self.get_rule('gauss-hermite', order))

    def clear(self) -> None:
        """Drop every cached rule and reset the counters."""
        with self._lock:
            self._rules.clear()
            self.hits = 0
            self.misses = 0

    def __len__(self) -> int:
        with self._lock:
            return len(self._rules)


# Global instance of the rule pool to be used across the application.
quadrature_pool = QuadraturePool()
