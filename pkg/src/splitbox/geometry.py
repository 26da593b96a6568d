"""Box geometry, units, and barrier insertion protocols.

The box is V(x) = 0 on [-a, b] with hard walls, split at x = 0 by a delta
barrier of time-dependent strength alpha(t).  All quantities are stored in
natural units (hbar = m = 1); alpha appears in units of E0*L only at I/O
boundaries (config files, CLI), never internally.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    InvalidAsymmetryError,
    InvalidLengthError,
    InvalidProtocolError,
    ProtocolRangeError,
)


@dataclass(frozen=True)
class BoxGeometry:
    """Two compartment widths with the convention a >= b (left is larger)."""

    a: float            # left compartment width, x in [-a, 0]
    b: float            # right compartment width, x in [0, b]
    L: float            # total width a + b
    epsilon: float      # asymmetry, a = L*(1/2 + epsilon), in [0, 1/2)
    swapped: bool = False  # True if the input epsilon was negative and labels were mirrored


def make_geometry(L: float = 1.0, epsilon: float = 0.0) -> BoxGeometry:
    """Build a BoxGeometry from total length and asymmetry.

    Negative epsilon is accepted: the compartment labels are mirrored so that
    the left compartment is always the larger one, and ``swapped`` records it.
    """
    if not L > 0:
        raise InvalidLengthError(f"box length must be positive, got L={L}")
    if not abs(epsilon) < 0.5:
        raise InvalidAsymmetryError(
            f"|epsilon| must be < 1/2 so both compartments have finite width, got {epsilon}"
        )
    swapped = epsilon < 0
    eps = abs(float(epsilon))
    a = L * (0.5 + eps)
    b = L * (0.5 - eps)
    return BoxGeometry(a=a, b=b, L=float(L), epsilon=eps, swapped=swapped)


@dataclass(frozen=True)
class UnitSystem:
    """Natural units: hbar = m = 1, energies reported against E0.

    E0 is the ground-state energy of the barrier-free box of width L,
    E0 = pi^2 hbar^2 / (2 m L^2).
    """

    hbar: float = 1.0
    mass: float = 1.0
    E0: float = math.pi**2 / 2.0

    @classmethod
    def natural(cls, L: float = 1.0) -> "UnitSystem":
        return cls(hbar=1.0, mass=1.0, E0=math.pi**2 / (2.0 * L**2))

    def alpha_unit(self, L: float) -> float:
        """The I/O unit for barrier strength: E0*L (alpha has energy*length units)."""
        return self.E0 * L


_KIND_CODES = {"quadratic": 0, "linear": 1, "table": 2}


@dataclass(frozen=True)
class BarrierProtocol:
    """Monotone barrier ramp alpha(t) on [0, tau] with alpha(0) = 0.

    kind 'quadratic': alpha = A t^2       (rate = A, the paper's protocol)
    kind 'linear':    alpha = rate * t
    kind 'table':     piecewise-linear interpolation of (t, alpha) samples
    """

    kind: str
    alpha_max: float
    tau: float
    rate: float = 0.0
    table_t: tuple = ()
    table_alpha: tuple = ()

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise InvalidProtocolError(f"unknown protocol kind {self.kind!r}")
        if not self.tau > 0:
            raise InvalidProtocolError(f"protocol duration must be positive, got tau={self.tau}")
        if self.alpha_max < 0:
            raise InvalidProtocolError("alpha_max must be non-negative (repulsive barrier)")

    @classmethod
    def quadratic(cls, A: float, alpha_max: float) -> "BarrierProtocol":
        """alpha(t) = A t^2 ramped until alpha(tau) = alpha_max, tau = sqrt(alpha_max/A)."""
        if not A > 0 or not alpha_max > 0:
            raise InvalidProtocolError("quadratic protocol needs A > 0 and alpha_max > 0")
        return cls(kind="quadratic", alpha_max=float(alpha_max),
                   tau=math.sqrt(alpha_max / A), rate=float(A))

    @classmethod
    def linear(cls, slope: float, alpha_max: float) -> "BarrierProtocol":
        if not slope > 0 or not alpha_max > 0:
            raise InvalidProtocolError("linear protocol needs slope > 0 and alpha_max > 0")
        return cls(kind="linear", alpha_max=float(alpha_max),
                   tau=alpha_max / slope, rate=float(slope))

    @classmethod
    def from_table(cls, t, alpha) -> "BarrierProtocol":
        """Tabulated ramp; validated for alpha(0) = 0 and monotonicity at load."""
        t = np.asarray(t, dtype=float)
        alpha = np.asarray(alpha, dtype=float)
        if t.ndim != 1 or t.shape != alpha.shape or t.size < 2:
            raise InvalidProtocolError("table protocol needs matching 1-d t/alpha arrays, >= 2 rows")
        if t[0] != 0.0:
            raise InvalidProtocolError("table protocol must start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise InvalidProtocolError("table times must be strictly increasing")
        if alpha[0] != 0.0:
            raise InvalidProtocolError("alpha(0) must be exactly 0")
        if np.any(np.diff(alpha) < 0):
            raise InvalidProtocolError("alpha(t) must be monotonically non-decreasing")
        return cls(kind="table", alpha_max=float(alpha[-1]), tau=float(t[-1]),
                   table_t=tuple(t.tolist()), table_alpha=tuple(alpha.tolist()))

    # -- evaluation ---------------------------------------------------------

    def _check_range(self, t: float):
        if t < 0.0 or t > self.tau * (1.0 + 1e-12):
            raise ProtocolRangeError(f"t={t} outside protocol range [0, {self.tau}]")

    def alpha_at(self, t: float) -> float:
        """Barrier strength at time t (natural units); exact 0 at t = 0."""
        self._check_range(t)
        if self.kind == "quadratic":
            return self.rate * t * t
        if self.kind == "linear":
            return self.rate * t
        return float(np.interp(t, self.table_t, self.table_alpha))

    def alpha_rate_at(self, t: float) -> float:
        """d alpha/dt at time t; table kind uses a centered finite difference."""
        self._check_range(t)
        if self.kind == "quadratic":
            return 2.0 * self.rate * t
        if self.kind == "linear":
            return self.rate
        h = self.tau * 1e-7
        t1 = max(0.0, t - h)
        t2 = min(self.tau, t + h)
        a1 = np.interp(t1, self.table_t, self.table_alpha)
        a2 = np.interp(t2, self.table_t, self.table_alpha)
        return float((a2 - a1) / (t2 - t1))

    # -- kernel plumbing ----------------------------------------------------

    @property
    def kind_code(self) -> int:
        return _KIND_CODES[self.kind]

    def jit_args(self):
        """(kind_code, rate, tau, table_t, table_alpha) for the jitted integrators."""
        tbl_t = np.asarray(self.table_t if self.table_t else (0.0, self.tau), dtype=float)
        tbl_a = np.asarray(self.table_alpha if self.table_alpha else (0.0, 0.0), dtype=float)
        return self.kind_code, self.rate, self.tau, tbl_t, tbl_a


# -- jitted protocol evaluation (used inside the integrator loops) -----------


@njit(cache=True)
def _interp_table(t, tbl_t, tbl_a):
    if t <= tbl_t[0]:
        return tbl_a[0]
    if t >= tbl_t[-1]:
        return tbl_a[-1]
    i = np.searchsorted(tbl_t, t)
    if tbl_t[i] == t:
        return tbl_a[i]
    w = (t - tbl_t[i - 1]) / (tbl_t[i] - tbl_t[i - 1])
    return tbl_a[i - 1] * (1.0 - w) + tbl_a[i] * w


@njit(cache=True)
def _alpha_of_t(t, kind, rate, tau, tbl_t, tbl_a):
    if kind == 0:
        return rate * t * t
    if kind == 1:
        return rate * t
    return _interp_table(t, tbl_t, tbl_a)


@njit(cache=True)
def _alpha_rate_of_t(t, kind, rate, tau, tbl_t, tbl_a):
    if kind == 0:
        return 2.0 * rate * t
    if kind == 1:
        return rate
    h = tau * 1e-7
    t1 = t - h
    t2 = t + h
    if t1 < 0.0:
        t1 = 0.0
    if t2 > tau:
        t2 = tau
    if t2 == t1:
        return 0.0
    return (_interp_table(t2, tbl_t, tbl_a) - _interp_table(t1, tbl_t, tbl_a)) / (t2 - t1)
