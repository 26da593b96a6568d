"""Physical observables of a state vector: compartment probabilities and populations."""

from dataclasses import dataclass

import numpy as np

from .errors import NonRealProbabilityError
from .eigensolver import EigenState, Spectrum
from .geometry import BoxGeometry
from .sineint import sin_sin_integral

_IMAG_TOL = 1e-6


@dataclass(frozen=True)
class ObservableSet:
    P_left: float          # larger compartment (a >= b by convention)
    P_right: float
    P_excite: float        # total population of levels n >= 3
    populations: np.ndarray


def partial_overlap(sm: EigenState, sn: EigenState, region: str,
                    geom: BoxGeometry) -> float:
    """O_mn = integral of psi_m psi_n over one compartment, in closed form.

    region 'left' is [-a, 0], 'right' is [0, b].  The k_m -> k_n limit is
    handled analytically inside the sine integrals, so near-degenerate pairs
    at large alpha are safe.
    """
    if region == "left":
        return sm.A * sn.A * sin_sin_integral(
            sm.k, sm.k * geom.a, sn.k, sn.k * geom.a, -geom.a, 0.0)
    if region == "right":
        return sm.B * sn.B * sin_sin_integral(
            sm.k, -sm.k * geom.b, sn.k, -sn.k * geom.b, 0.0, geom.b)
    raise ValueError(f"region must be 'left' or 'right', got {region!r}")


def overlap_matrix(spec: Spectrum, region: str) -> np.ndarray:
    """Symmetric matrix of compartment overlaps for all level pairs."""
    n = spec.n_levels
    O = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            O[i, j] = O[j, i] = partial_overlap(spec.states[i], spec.states[j],
                                                region, spec.geom)
    return O


def side_probabilities(sv, spec: Spectrum) -> tuple:
    """(P_left, P_right) from the coefficient expansion.

    P_region = sum_mn conj(c_m e^{i theta_m}) (c_n e^{i theta_n}) O_mn^region.
    The quadratic form over a real symmetric O is real; any imaginary part
    above 1e-6 signals a phase bookkeeping bug and raises.
    """
    ct = np.asarray(sv.c) * np.exp(1j * np.asarray(sv.theta))
    out = []
    for region in ("left", "right"):
        O = overlap_matrix(spec, region)
        val = np.vdot(ct, O @ ct)
        if abs(val.imag) > _IMAG_TOL:
            raise NonRealProbabilityError(
                f"P_{region} has imaginary part {val.imag:.3e}")
        out.append(float(val.real))
    return out[0], out[1]


def excitation_probability(sv) -> float:
    """Population of levels above the second, sum_{n>=3} |c_n|^2."""
    c = np.asarray(sv.c)
    return float(np.sum(np.abs(c[2:]) ** 2))


def observable_set(sv, spec: Spectrum) -> ObservableSet:
    p_left, p_right = side_probabilities(sv, spec)
    return ObservableSet(
        P_left=p_left,
        P_right=p_right,
        P_excite=excitation_probability(sv),
        populations=np.abs(np.asarray(sv.c)) ** 2,
    )
