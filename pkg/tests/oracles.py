"""Reference values computed independently of the package.

Nothing here imports ``wornstones``; each value comes from a closed form or a
textbook series evaluated with plain Python/numpy.
"""

import math

import numpy as np


def bessel_j0(x: float, terms: int = 60) -> float:
    """Power series ``J_0(x) = sum (-1)^k (x/2)^{2k} / (k!)^2``."""
    total, term = 0.0, 1.0
    q = (0.5 * x) ** 2
    for k in range(terms):
        total += term
        term *= -q / ((k + 1) ** 2)
    return total


def bisect(f, lo: float, hi: float, tol: float = 1e-15) -> float:
    flo = f(lo)
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


J01 = bisect(bessel_j0, 2.0, 3.0)


def rectangle_torsion_double(a: float, b: float, kmax: int = 400) -> float:
    """Torsional rigidity of an ``a x b`` rectangle from the double sine series.

    ``T = (64 a b / pi^6) sum_{m, n odd} 1 / (m^2 n^2 (m^2/a^2 + n^2/b^2))``.
    Truncation error is below 1e-9 relative for ``kmax = 400``.
    """
    odd = np.arange(1, 2 * kmax, 2, dtype=float)
    m, n = np.meshgrid(odd, odd, indexing="ij")
    s = np.sum(1.0 / (m**2 * n**2 * (m**2 / a**2 + n**2 / b**2)))
    return 64.0 * a * b / math.pi**6 * s


def ellipse_torsion(a: float, b: float) -> float:
    """``u = c (1 - x^2/a^2 - y^2/b^2)`` with ``c = a^2 b^2 / (2 (a^2 + b^2))``."""
    return math.pi * a**3 * b**3 / (4.0 * (a**2 + b**2))


def ellipse_perimeter(a: float, b: float, n: int = 200000) -> float:
    """Arc length of the parametrized ellipse by the midpoint rule (spectrally accurate)."""
    t = (np.arange(n) + 0.5) * 2.0 * math.pi / n
    return float(np.sum(np.hypot(a * np.sin(t), b * np.cos(t))) * 2.0 * math.pi / n)


def shoelace(pts) -> float:
    x, y = np.asarray(pts, dtype=float).T
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
