"""Instantaneous eigenproblem of the box with a delta barrier at x = 0.

Eigenfunctions are piecewise sines,

    psi(x) = A sin[k(x + a)]  on [-a, 0],
    psi(x) = B sin[k(x - b)]  on [0, b],

and the allowed wavevectors are the roots of the characteristic function

    f(k) = sin(kL) + (2 m alpha / (k hbar^2)) sin(ka) sin(kb).

Root structure used throughout: level n lives in [n pi/L, (n+1) pi/L) for
every alpha >= 0 (energies grow monotonically with alpha and the hard-wall
limits interlace with the bare grid), and the sign of f at the grid points
k = n pi/L is (-1)^(n+1) analytically.  Each level is therefore bracketed a
priori and refined by safeguarded Newton iteration, with no scanning step
that could skip the near-tangent root pairs that appear at large alpha.

Levels whose wavefunction has an exact node at the barrier (n*a/L integer;
for the centered box these are the antisymmetric levels k = 2n pi/L) are
roots of f for every alpha but carry no reliable sign change.  They are
detected analytically and injected, with psi(0) = 0 exactly.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import BracketFailureError, DegenerateAmplitudeError
from .geometry import BoxGeometry, UnitSystem

# Tolerance for "n*a/L is an integer": safely above float representation
# noise for rational widths like a = 0.6, far below any honest offset.
_BLIND_TOL = 1e-12

# Wavevector refinement target, |dk| < _K_TOL_FACTOR * pi / L.
_K_TOL_FACTOR = 1e-13


@njit(cache=True)
def _char_eval(k, alpha_eff, a, b):
    # alpha_eff = 2 m alpha / hbar^2
    return math.sin(k * (a + b)) + alpha_eff * math.sin(k * a) * math.sin(k * b) / k


@njit(cache=True)
def _char_deriv(k, alpha_eff, a, b):
    sa = math.sin(k * a)
    ca = math.cos(k * a)
    sb = math.sin(k * b)
    cb = math.cos(k * b)
    L = a + b
    return L * math.cos(k * L) + alpha_eff * ((a * ca * sb + b * sa * cb) / k - sa * sb / (k * k))


@njit(cache=True)
def _level_is_blind(n, a, L):
    r = n * a / L
    return abs(r - np.rint(r)) < _BLIND_TOL


@njit(cache=True)
def _root_in_interval(n, alpha_eff, a, b, guess):
    """The unique root of f in (n pi/L, (n+1) pi/L), safeguarded Newton.

    Endpoint signs are assigned analytically (f(n pi/L) has the sign of
    (-1)^(n+1) for alpha > 0), so the bracket is valid even where the
    endpoint values are dominated by roundoff.  guess <= 0 means cold start.
    """
    L = a + b
    lo = n * math.pi / L
    hi = (n + 1) * math.pi / L
    sign_lo_pos = (n & 1) == 1  # f > 0 just right of lo when n is odd
    tol = _K_TOL_FACTOR * math.pi / L

    blo = lo
    bhi = hi
    x = guess if lo < guess < hi else 0.5 * (lo + hi)
    for _ in range(200):
        f = _char_eval(x, alpha_eff, a, b)
        if f == 0.0:
            return x
        if (f > 0.0) == sign_lo_pos:
            blo = x
        else:
            bhi = x
        if bhi - blo < tol:
            return 0.5 * (blo + bhi)
        fp = _char_deriv(x, alpha_eff, a, b)
        if fp != 0.0:
            xn = x - f / fp
            if blo < xn < bhi:
                if abs(xn - x) < tol:
                    return xn
            else:
                xn = 0.5 * (blo + bhi)
        else:
            xn = 0.5 * (blo + bhi)
        x = xn
    return 0.5 * (blo + bhi)


@njit(cache=True)
def _solve_levels(alpha_eff, a, b, kout):
    """Wavevectors of levels 1..len(kout); kout holds warm-start guesses on entry (0 = cold)."""
    L = a + b
    for i in range(kout.shape[0]):
        n = i + 1
        if alpha_eff <= 0.0 or _level_is_blind(n, a, L):
            kout[i] = n * math.pi / L
        else:
            kout[i] = _root_in_interval(n, alpha_eff, a, b, kout[i])


@njit(cache=True)
def _amps_for_k(k, a, b):
    """(A, B, psi(0)) for a characteristic root k, A > 0 convention.

    Uses the A-parameterized closed form when |sin(kb)| >= |sin(ka)| and the
    mirror-image B-parameterized form otherwise, so the normalization never
    divides by a vanishing sine.  Node-at-barrier levels get the bare-box
    amplitude and psi(0) = 0 exactly.
    """
    L = a + b
    ra = k * a / math.pi
    rL = k * L / math.pi
    if abs(ra - np.rint(ra)) < _BLIND_TOL and abs(rL - np.rint(rL)) < _BLIND_TOL:
        A = math.sqrt(2.0 / L)
        # smooth continuation across x = 0 forces B = (-1)^n A with n = kL/pi
        B = A if int(np.rint(rL)) % 2 == 0 else -A
        return A, B, 0.0
    sa = math.sin(k * a)
    sb = math.sin(k * b)
    if abs(sb) >= abs(sa):
        if sb == 0.0:
            return np.nan, np.nan, np.nan
        r = sa / sb
        inv = 0.5 * a - math.sin(2.0 * k * a) / (4.0 * k) \
            + r * r * (0.5 * b - math.sin(2.0 * k * b) / (4.0 * k))
        A = 1.0 / math.sqrt(inv)
        B = -A * r
    else:
        r = sb / sa
        inv = 0.5 * b - math.sin(2.0 * k * b) / (4.0 * k) \
            + r * r * (0.5 * a - math.sin(2.0 * k * a) / (4.0 * k))
        B = 1.0 / math.sqrt(inv)
        A = -B * r
        if A < 0.0:
            A = -A
            B = -B
    return A, B, A * sa


@njit(cache=True)
def _spectrum_arrays(alpha_eff, a, b, kcache, Aout, Bout, psi0out):
    """Solve levels and amplitudes in one pass (used per RHS evaluation)."""
    _solve_levels(alpha_eff, a, b, kcache)
    for i in range(kcache.shape[0]):
        Aout[i], Bout[i], psi0out[i] = _amps_for_k(kcache[i], a, b)


# -- public API --------------------------------------------------------------


@dataclass(frozen=True)
class EigenState:
    """One instantaneous eigenstate: level index, wavevector, energy, amplitudes."""

    n: int
    k: float
    E: float
    A: float
    B: float
    psi0: float  # psi(0) = A sin(ka); exactly 0 for node-at-barrier levels


@dataclass(frozen=True)
class Spectrum:
    """The lowest N eigenstates at a fixed barrier strength, k strictly increasing."""

    alpha: float
    geom: BoxGeometry
    states: tuple

    @property
    def n_levels(self) -> int:
        return len(self.states)

    def ks(self) -> np.ndarray:
        return np.array([s.k for s in self.states])

    def energies(self) -> np.ndarray:
        return np.array([s.E for s in self.states])

    def psi0s(self) -> np.ndarray:
        return np.array([s.psi0 for s in self.states])


def characteristic(k: float, alpha: float, geom: BoxGeometry,
                   units: UnitSystem | None = None) -> float:
    """f(k) = sin(kL) + (2 m alpha/(k hbar^2)) sin(ka) sin(kb); roots are eigen-wavevectors."""
    units = units or UnitSystem.natural(geom.L)
    alpha_eff = 2.0 * units.mass * alpha / units.hbar**2
    return _char_eval(float(k), alpha_eff, geom.a, geom.b)


def normalize(k: float, alpha: float, geom: BoxGeometry,
              units: UnitSystem | None = None) -> tuple:
    """Amplitudes (A, B) for a characteristic root k: unit norm, continuity, A > 0."""
    A, B, _ = _amps_for_k(float(k), geom.a, geom.b)
    if not (np.isfinite(A) and np.isfinite(B)):
        raise DegenerateAmplitudeError(
            f"sin(ka) and sin(kb) both vanish at k={k} but the level is not a barrier node"
        )
    return float(A), float(B)


def solve_spectrum(alpha: float, geom: BoxGeometry, n_levels: int,
                   warm_start: Spectrum | None = None,
                   units: UnitSystem | None = None) -> Spectrum:
    """Lowest n_levels eigenstates at barrier strength alpha.

    warm_start (a Spectrum from a nearby alpha) seeds the per-level root
    iteration; the a-priori interval bracket guarantees no level crossings
    or index swaps regardless of the seed quality.
    """
    if n_levels < 1:
        raise ValueError(f"n_levels must be >= 1, got {n_levels}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0 (repulsive barrier), got {alpha}")
    units = units or UnitSystem.natural(geom.L)
    alpha_eff = 2.0 * units.mass * alpha / units.hbar**2

    kcache = np.zeros(n_levels)
    if warm_start is not None:
        for i, s in enumerate(warm_start.states[:n_levels]):
            kcache[i] = s.k
    Aa = np.empty(n_levels)
    Bb = np.empty(n_levels)
    p0 = np.empty(n_levels)
    _spectrum_arrays(alpha_eff, geom.a, geom.b, kcache, Aa, Bb, p0)

    if not np.all(np.isfinite(kcache)):
        bad = int(np.argmin(np.isfinite(kcache))) + 1
        raise BracketFailureError(bad, "root refinement returned a non-finite wavevector")
    if np.any(np.diff(kcache) <= 0):
        bad = int(np.argmax(np.diff(kcache) <= 0)) + 2
        raise BracketFailureError(bad, "levels are not strictly ordered")
    if not np.all(np.isfinite(Aa)):
        bad = int(np.argmin(np.isfinite(Aa))) + 1
        raise DegenerateAmplitudeError(f"level {bad}: amplitude normalization failed")

    h2_over_2m = units.hbar**2 / (2.0 * units.mass)
    states = tuple(
        EigenState(n=i + 1, k=float(kcache[i]), E=float(h2_over_2m * kcache[i] ** 2),
                   A=float(Aa[i]), B=float(Bb[i]), psi0=float(p0[i]))
        for i in range(n_levels)
    )
    return Spectrum(alpha=float(alpha), geom=geom, states=states)


def eigenfunction_at_barrier(state: EigenState) -> float:
    """psi_n(0) = A sin(ka); exactly zero for node-at-barrier levels."""
    return state.psi0


def eigenfunction_values(state: EigenState, geom: BoxGeometry, x) -> np.ndarray:
    """Evaluate the piecewise eigenfunction on an array of positions."""
    x = np.asarray(x, dtype=float)
    return np.where(
        x <= 0.0,
        state.A * np.sin(state.k * (x + geom.a)),
        state.B * np.sin(state.k * (x - geom.b)),
    )
