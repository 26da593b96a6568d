"""Inter-level couplings induced by raising the barrier.

The time derivative of the Hamiltonian is alpha_rate * delta(x), so all
couplings reduce to products of eigenfunction values at the barrier:

    <psi_m| delta(x) |psi_n> = psi_m(0) psi_n(0),

an exactly rank-1 matrix.  The quantity plotted against alpha in the
coupling diagnostic is the ratio delta_elem / (E_n - E_m), whose slow decay
for the (1, 2) pair is what makes ground-to-first-excited transfer possible
at large barrier heights.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLevelsError
from .eigensolver import EigenState, Spectrum


@dataclass(frozen=True)
class CouplingMatrix:
    """delta_elem[m][n] = psi_m(0) psi_n(0) and ratio[m][n] = delta_elem/(E_n - E_m).

    Indices are 0-based (level n is row n-1).  ratio is antisymmetric with a
    zero diagonal (<psi_m|d/dt psi_m> = 0 for real instantaneous states).
    """

    alpha: float
    delta_elem: np.ndarray
    ratio: np.ndarray


def delta_matrix_element(sm: EigenState, sn: EigenState) -> float:
    """<psi_m| delta(x) |psi_n> = A_m sin(k_m a) A_n sin(k_n a) = psi_m(0) psi_n(0)."""
    return sm.psi0 * sn.psi0


def coupling_ratio(spec: Spectrum, m: int, n: int) -> float:
    """delta_elem[m][n] / (E_n - E_m) for 1-based level indices m != n."""
    if m == n:
        raise DegenerateLevelsError("coupling ratio is defined for m != n only")
    sm = spec.states[m - 1]
    sn = spec.states[n - 1]
    dE = sn.E - sm.E
    if dE == 0.0:
        raise DegenerateLevelsError(f"levels {m} and {n} are numerically degenerate")
    return delta_matrix_element(sm, sn) / dE


def coupling_table(spec: Spectrum) -> CouplingMatrix:
    """All pairwise delta elements and ratios for a spectrum."""
    psi0 = spec.psi0s()
    E = spec.energies()
    delta = np.outer(psi0, psi0)
    n = spec.n_levels
    ratio = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dE = E[j] - E[i]
            if dE == 0.0:
                raise DegenerateLevelsError(
                    f"levels {i + 1} and {j + 1} are numerically degenerate"
                )
            ratio[i, j] = delta[i, j] / dE
    return CouplingMatrix(alpha=spec.alpha, delta_elem=delta, ratio=ratio)
