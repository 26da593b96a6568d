"""Closed-form integrals of sine products, stable near equal wavevectors."""

import math


def cos_integral(w: float, phi: float, x1: float, x2: float) -> float:
    """Integral of cos(w x + phi) over [x1, x2], stable as w -> 0.

    Written as (x2-x1) * cos(phi + w*(x1+x2)/2) * sinc(w*(x2-x1)/2) so the
    w -> 0 limit is exact instead of 0/0.
    """
    h = 0.5 * w * (x2 - x1)
    if abs(h) < 1e-8:
        s = 1.0 - h * h / 6.0
    else:
        s = math.sin(h) / h
    return (x2 - x1) * math.cos(phi + 0.5 * w * (x1 + x2)) * s


def sin_sin_integral(p: float, phi_p: float, q: float, phi_q: float,
                     x1: float, x2: float) -> float:
    """Integral of sin(p x + phi_p) sin(q x + phi_q) over [x1, x2].

    Product-to-sum form; safe for p close to (or exactly) +-q, which is where
    the textbook difference-of-angles formula hits 0/0.
    """
    return 0.5 * (cos_integral(p - q, phi_p - phi_q, x1, x2)
                  - cos_integral(p + q, phi_p + phi_q, x1, x2))
