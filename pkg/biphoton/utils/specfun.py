"""
Special functions and quadrature rules
Hermite and Laguerre polynomials, oscillator eigenfunctions, Bessel I0 and Gauss rules
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from biphoton.utils.exceptions import (
    InvalidParameterError,
    QuadratureOrderError,
    SpecialFunctionDomainError,
    SpecialFunctionOverflowError,
)

logger = logging.getLogger(__name__)

# Golden-ratio coefficient of the Mehler expansion of exp(-(x+y)^2)
GOLDEN_Q = (math.sqrt(5.0) - 1.0) / 2.0

# Cramér's bound: |H_n(x)| <= CRAMER_K * sqrt(2^n n!) * exp(x^2/2)
CRAMER_K = 1.086435

GAUSS_HERMITE = 'gauss-hermite'
GAUSS_LEGENDRE = 'gauss-legendre'
QUADRATURE_KINDS = (GAUSS_HERMITE, GAUSS_LEGENDRE)
MIN_QUADRATURE_ORDER = 2
MAX_QUADRATURE_ORDER = 4096

_RESCALE = 1e150
_LOG_RESCALE = math.log(_RESCALE)


def _readonly(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class QuadratureRule:
    """
    Immutable one-dimensional Gauss rule.

    Gauss-Hermite rules integrate against exp(-x^2) on the real line,
    Gauss-Legendre rules against 1 on [-1, 1].
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    order: int

    def integrate(self, values) -> complex | float:
        """Weighted sum of integrand values sampled at the nodes."""
        return np.sum(self.weights * np.asarray(values))

    def on_interval(self, lower: float, upper: float) -> tuple[np.ndarray, np.ndarray]:
        """Legendre nodes and weights mapped onto [lower, upper]."""
        if self.kind != GAUSS_LEGENDRE:
            raise SpecialFunctionDomainError(f"Interval mapping needs a Legendre rule, got {self.kind}")
        half = 0.5 * (upper - lower)
        return half * self.nodes + 0.5 * (upper + lower), half * self.weights


def make_quadrature(kind: str, order: int) -> QuadratureRule:
    """
    Build a deterministic Gauss rule.

    Args:
        kind: 'gauss-hermite' or 'gauss-legendre'
        order: number of nodes, 2..4096

    Returns:
        QuadratureRule: nodes in increasing order with their weights

    Raises:
        QuadratureOrderError: If order is outside the supported range
        SpecialFunctionDomainError: If kind is not supported
    """
    if kind not in QUADRATURE_KINDS:
        raise SpecialFunctionDomainError(f"Unsupported quadrature kind '{kind}'")
    if not isinstance(order, (int, np.integer)) or not MIN_QUADRATURE_ORDER <= order <= MAX_QUADRATURE_ORDER:
        raise QuadratureOrderError(
            f"Order {order!r} outside [{MIN_QUADRATURE_ORDER}, {MAX_QUADRATURE_ORDER}]"
        )

    if kind == GAUSS_HERMITE:
        nodes, weights = np.polynomial.hermite.hermgauss(int(order))
    else:
        nodes, weights = np.polynomial.legendre.leggauss(int(order))

    logger.debug(f"Built {kind} rule of order {order}")
    return QuadratureRule(nodes=_readonly(nodes), weights=_readonly(weights), kind=kind, order=int(order))


@dataclass(frozen=True)
class GaussianProductRule:
    """
    Two-dimensional Gauss-Hermite rule adapted to exp(-X^T A X).

    The tensor rule is rotated onto the eigenvectors of A and scaled by the
    inverse square roots of its eigenvalues, so the Gaussian envelope is
    integrated exactly whatever its aspect ratio. ``exponent`` holds
    X^T A X at every node (equal to |u|^2 of the unscaled nodes).
    ``plain_weights`` are the weights with the Gaussian divided out,
    computed per axis so that exp(|u|^2) never overflows.
    """

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    plain_weights: np.ndarray
    exponent: np.ndarray
    order: int
    precision: np.ndarray = field(repr=False)

    def integrate(self, values) -> complex | float:
        """Sum of f(X) * weights, approximating the integral of f(X) exp(-X^T A X)."""
        return np.sum(self.weights * np.asarray(values))

    def integrate_plain(self, values) -> complex | float:
        """Sum of g(X) * plain_weights, approximating the integral of g(X) itself."""
        return np.sum(self.plain_weights * np.asarray(values))


def gaussian_product_rule(precision, order: int, rule: QuadratureRule | None = None) -> GaussianProductRule:
    """
    Build a principal-axis Gauss-Hermite rule for a 2x2 precision matrix.

    Args:
        precision: symmetric positive definite 2x2 matrix A
        order: Gauss-Hermite order per principal axis

    Returns:
        GaussianProductRule: flattened nodes, weights and exponents

    Raises:
        InvalidParameterError: If A is not symmetric positive definite
    """
    matrix = np.asarray(precision, dtype=float)
    if matrix.shape != (2, 2) or not np.allclose(matrix, matrix.T, rtol=1e-12, atol=0.0):
        raise InvalidParameterError(f"Precision matrix must be symmetric 2x2, got {matrix!r}")

    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    if eigenvalues[0] <= 0.0 or not np.all(np.isfinite(eigenvalues)):
        raise InvalidParameterError(f"Precision matrix is not positive definite: {eigenvalues!r}")

    if rule is None or rule.kind != GAUSS_HERMITE or rule.order != order:
        rule = make_quadrature(GAUSS_HERMITE, order)
    u1, u2 = np.meshgrid(rule.nodes, rule.nodes, indexing='ij')
    w = np.outer(rule.weights, rule.weights)
    with np.errstate(divide='ignore'):
        stripped = np.exp(np.log(rule.weights) + rule.nodes ** 2)
    w_plain = np.outer(stripped, stripped)

    scale = 1.0 / np.sqrt(eigenvalues)
    a = u1.ravel() * scale[0]
    b = u2.ravel() * scale[1]
    x = eigenvectors[0, 0] * a + eigenvectors[0, 1] * b
    y = eigenvectors[1, 0] * a + eigenvectors[1, 1] * b

    return GaussianProductRule(
        x=_readonly(x),
        y=_readonly(y),
        weights=_readonly(w.ravel() * scale[0] * scale[1]),
        plain_weights=_readonly(w_plain.ravel() * scale[0] * scale[1]),
        exponent=_readonly(u1.ravel() ** 2 + u2.ravel() ** 2),
        order=int(order),
        precision=_readonly(matrix),
    )


def hermite(n: int, x):
    """Physicists' Hermite polynomial H_n(x)."""
    if n < 0:
        raise SpecialFunctionDomainError(f"Hermite degree must be non-negative, got {n}")
    return special.eval_hermite(int(n), x)


def hermite_function_table(n_max: int, x) -> np.ndarray:
    """
    Oscillator eigenfunctions psi_0..psi_n_max at the points x.

    Uses the normalized three-term recurrence with an exponent tracked per
    point, so neither factorials nor exp(-x^2/2) ever overflow or underflow
    before the final product.

    Args:
        n_max: highest index
        x: sample points

    Returns:
        np.ndarray: array of shape (n_max + 1, len(x))
    """
    if n_max < 0:
        raise SpecialFunctionDomainError(f"Eigenfunction index must be non-negative, got {n_max}")

    x = np.atleast_1d(np.asarray(x, dtype=float))
    table = np.empty((n_max + 1, x.size))
    log_scale = -0.5 * x ** 2
    previous = np.zeros_like(x)
    current = np.full_like(x, np.pi ** -0.25)
    table[0] = current * np.exp(log_scale)

    for n in range(n_max):
        following = math.sqrt(2.0 / (n + 1)) * x * current - math.sqrt(n / (n + 1)) * previous
        previous, current = current, following
        large = np.abs(current) > _RESCALE
        if large.any():
            previous[large] /= _RESCALE
            current[large] /= _RESCALE
            log_scale[large] += _LOG_RESCALE
        table[n + 1] = current * np.exp(log_scale)

    return table


def oscillator_eigenfunction(n: int, x):
    """
    Normalized oscillator eigenfunction psi_n(x).

    Args:
        n: non-negative index
        x: point or array of points

    Returns:
        float or np.ndarray: (sqrt(pi) n! 2^n)^(-1/2) H_n(x) exp(-x^2/2)
    """
    values = hermite_function_table(int(n), x)[int(n)]
    return values if np.ndim(x) else float(values[0])


def normalized_hermite_table(n_max: int, x) -> np.ndarray:
    """
    Polynomial parts psi_n(x) * exp(x^2/2) for n = 0..n_max.

    Meant for Gauss-Hermite sums, where the weights supply exp(-x^2).

    Raises:
        SpecialFunctionOverflowError: If a value exceeds double precision
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    table = np.empty((n_max + 1, x.size))
    previous = np.zeros_like(x)
    current = np.full_like(x, np.pi ** -0.25)
    table[0] = current
    for n in range(n_max):
        following = math.sqrt(2.0 / (n + 1)) * x * current - math.sqrt(n / (n + 1)) * previous
        previous, current = current, following
        table[n + 1] = current
    if not np.all(np.isfinite(table)):
        raise SpecialFunctionOverflowError(
            f"Normalized Hermite polynomials overflow for n_max={n_max}, max|x|={np.max(np.abs(x)):.3g}"
        )
    return table


def assoc_laguerre(r: int, m: int, x):
    """Associated Laguerre polynomial L_r^(m)(x)."""
    if r < 0 or m < 0:
        raise SpecialFunctionDomainError(f"Laguerre indices must be non-negative, got r={r}, m={m}")
    return special.eval_genlaguerre(int(r), int(m), x)


def _g_start(orders: np.ndarray, x: float) -> np.ndarray:
    # x^(m/2) / sqrt(m!) in log-gamma form
    return np.exp(0.5 * orders * math.log(x) - 0.5 * special.gammaln(orders + 1.0))


def g_polynomial(p: int, n: int, x: float) -> float:
    """
    Real magnitude of the scalar-product polynomial G_pn.

    Returns sqrt(r!/s!) x^((s-r)/2) L_r^(s-r)(x) with s = max(p, n) and
    r = min(p, n). The phase (i)^(s-r) is left to the caller.

    Args:
        p: first index
        n: second index
        x: non-negative argument

    Returns:
        float: g(p, n, x) = g(n, p, x)

    Raises:
        SpecialFunctionDomainError: If x < 0 or an index is negative
    """
    if x < 0:
        raise SpecialFunctionDomainError(f"g_polynomial needs x >= 0, got {x}")
    if p < 0 or n < 0:
        raise SpecialFunctionDomainError(f"g_polynomial indices must be non-negative, got ({p}, {n})")

    s, r = max(p, n), min(p, n)
    m = s - r
    if x == 0.0:
        return 1.0 if m == 0 else 0.0

    previous = 0.0
    current = float(_g_start(np.array([float(m)]), x)[0])
    for k in range(r):
        following = ((2 * k + 1 + m - x) * current - math.sqrt(k * (k + m)) * previous) / math.sqrt(
            (k + 1) * (k + 1 + m)
        )
        previous, current = current, following
    return current


def g_polynomial_table(dim: int, x: float) -> np.ndarray:
    """
    Symmetric matrix of g(p, n, x) for p, n < dim.

    Same normalized recurrence as g_polynomial, vectorized over the order
    m = |p - n|. Entries stay bounded by exp(x/2) for any dim.
    """
    if x < 0:
        raise SpecialFunctionDomainError(f"g_polynomial_table needs x >= 0, got {x}")
    if dim < 1:
        raise SpecialFunctionDomainError(f"Table dimension must be positive, got {dim}")
    if x == 0.0:
        return np.eye(dim)

    table = np.zeros((dim, dim))
    orders = np.arange(dim, dtype=float)
    previous = np.zeros(dim)
    current = _g_start(orders, x)

    for r in range(dim):
        width = dim - r
        band = np.arange(width)
        table[r, r + band] = current[:width]
        table[r + band, r] = current[:width]
        following = ((2 * r + 1 + orders - x) * current - np.sqrt(r * (r + orders)) * previous) / np.sqrt(
            (r + 1) * (r + 1 + orders)
        )
        previous, current = current, following

    return table


def bessel_i0(x):
    """
    Modified Bessel function I_0(x).

    Raises:
        InvalidParameterError: If x is not finite
        SpecialFunctionOverflowError: If I_0(x) exceeds double precision
    """
    values = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidParameterError(f"bessel_i0 needs a finite argument, got {x!r}")
    with np.errstate(over='ignore'):
        result = special.i0(values)
    if not np.all(np.isfinite(result)):
        raise SpecialFunctionOverflowError(f"I0({x!r}) is beyond double precision; use bessel_i0e")
    return result if np.ndim(x) else float(result)


def bessel_i0e(x):
    """Exponentially scaled Bessel function exp(-|x|) I_0(x)."""
    result = special.i0e(np.asarray(x, dtype=float))
    return result if np.ndim(x) else float(result)


def mehler_sum(x, y, z: float, terms: int):
    """Truncated bilinear sum of z^n psi_n(x) psi_n(y) over n < terms."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    powers = z ** np.arange(terms)
    return np.einsum('n,nk,nk->k', powers, hermite_function_table(terms - 1, x),
                     hermite_function_table(terms - 1, y))


def mehler_closed(x, y, z: float):
    """Closed form of the bilinear sum of z^n psi_n(x) psi_n(y), |z| < 1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    denominator = 1.0 - z * z
    exponent = (2.0 * x * y * z - (x * x + y * y) * z * z) / denominator - 0.5 * (x * x + y * y)
    return np.exp(exponent) / np.sqrt(np.pi * denominator)


def mehler_terms_for(bound: float, radius: float, q: float = GOLDEN_Q) -> int:
    """Terms N such that q^N/(2^N N!) max|H_N|^2 < bound for |x| <= radius (Cramér's bound)."""
    return int(math.ceil((math.log(bound) - 2.0 * math.log(CRAMER_K) - radius ** 2) / math.log(q))) + 1


def mehler_identity_residual(x, y, q_sign: float = -1.0, bound: float = 1e-10) -> np.ndarray:
    """
    Pointwise error of the golden Mehler expansion of exp(-(x+y)^2).

    The expansion is exp(-q^2 (x^2 + y^2)) sqrt(q) sum (-q)^n/(2^n n!) H_n(x) H_n(y);
    q_sign=+1 gives the mis-signed variant, which must fail.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    radius = float(max(np.max(np.abs(x)), np.max(np.abs(y))))
    terms = mehler_terms_for(bound, radius)
    q = GOLDEN_Q
    r2 = x * x + y * y
    series = mehler_sum(x, y, q_sign * q, terms)
    approx = np.exp(-q * q * r2 + 0.5 * r2) * math.sqrt(q * math.pi) * series
    return np.abs(approx - np.exp(-(x + y) ** 2))


def laguerre_generating_closed(m: int, x: float, t: float) -> float:
    """Closed form of sum_n L_n^(m)(x) t^n for |t| < 1."""
    return (1.0 - t) ** (-m - 1) * math.exp(x * t / (t - 1.0))


def laguerre_generating_series(m: int, x: float, t: float, terms: int = 400) -> float:
    """Direct partial sum of L_n^(m)(x) t^n."""
    n = np.arange(terms)
    return float(np.sum(special.eval_genlaguerre(n, m, x) * t ** n))


def laguerre_product_generating_closed(m: int, x: float, y: float, t: float) -> float:
    """
    Closed form of sum_n t^n n!/Gamma(n+m+1) L_n^(m)(x) L_n^(m)(y) for 0 < t < 1.

    The Bessel factor is taken exponentially scaled, I_m(u) = ive(m, u) e^u.
    """
    u = 2.0 * math.sqrt(x * y * t) / (1.0 - t)
    exponent = -(x + y) * t / (1.0 - t) + u
    return special.ive(m, u) * math.exp(exponent) / ((x * y * t) ** (0.5 * m) * (1.0 - t))


def laguerre_product_generating_series(m: int, x: float, y: float, t: float, terms: int = 400) -> float:
    """Direct partial sum of the Laguerre product generating function."""
    n = np.arange(terms)
    weights = np.exp(n * math.log(t) + special.gammaln(n + 1.0) - special.gammaln(n + m + 1.0))
    return float(np.sum(weights * special.eval_genlaguerre(n, m, x) * special.eval_genlaguerre(n, m, y)))
