"""Gauss rules on the unit segment [0, 1] and the reference triangle.

The reference triangle has vertices (0, 0), (1, 0), (0, 1). Triangle rules
are the symmetric positive-weight rules of Dunavant (degrees 1, 2, 4, 6) and
the 7-point Radon rule (degree 5); the requested degree is rounded up to the
next available rule.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import InvalidArgument


@dataclass(frozen=True)
class QuadRule:
    """Points and weights of a quadrature rule.

    ``points`` holds the 1D coordinate in [0, 1] for segment rules and the
    (x, y) reference coordinates for triangle rules.
    """

    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def gauss_segment(degree):
    """Gauss-Legendre rule on [0, 1] exact up to ``degree``."""
    if int(degree) != degree or not 0 <= degree <= 9:
        raise InvalidArgument(f"segment rule degree must be in [0, 9], got {degree!r}")
    npts = (int(degree) + 2) // 2
    x, w = np.polynomial.legendre.leggauss(npts)
    return QuadRule(0.5 * (x + 1.0), 0.5 * w, 2 * npts - 1)


def _orbit3(a):
    b = 1.0 - 2.0 * a
    return [(a, a), (b, a), (a, b)]


def _orbit6(a, b):
    c = 1.0 - a - b
    return [(a, b), (b, a), (b, c), (c, b), (c, a), (a, c)]


def _rule(groups, degree):
    pts, wts = [], []
    for w, orbit in groups:
        pts.extend(orbit)
        wts.extend([w] * len(orbit))
    # tabulated weights sum to 1; the reference triangle has area 1/2
    return QuadRule(np.array(pts), 0.5 * np.array(wts), degree)


def _triangle_rules():
    s15 = np.sqrt(15.0)
    return {
        1: _rule([(1.0, [(1 / 3, 1 / 3)])], 1),
        2: _rule([(1 / 3, _orbit3(1 / 6))], 2),
        4: _rule([
            (0.223381589678011, _orbit3(0.445948490915965)),
            (0.109951743655322, _orbit3(0.091576213509771)),
        ], 4),
        5: _rule([
            (9 / 40, [(1 / 3, 1 / 3)]),
            ((155 - s15) / 1200, _orbit3((6 - s15) / 21)),
            ((155 + s15) / 1200, _orbit3((6 + s15) / 21)),
        ], 5),
        6: _rule([
            (0.116786275726379, _orbit3(0.249286745170910)),
            (0.050844906370207, _orbit3(0.063089014491502)),
            (0.082851075618374, _orbit6(0.053145049844817, 0.310352451033784)),
        ], 6),
    }


_TRIANGLE = _triangle_rules()


def gauss_triangle(degree):
    """Symmetric rule on the reference triangle exact up to ``degree``."""
    if int(degree) != degree or not 0 <= degree <= 6:
        raise InvalidArgument(f"triangle rule degree must be in [0, 6], got {degree!r}")
    for d in sorted(_TRIANGLE):
        if d >= degree:
            return _TRIANGLE[d]
    raise AssertionError("unreachable")
