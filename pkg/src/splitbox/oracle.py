"""Independent brute-force propagation in the fixed bare-box eigenbasis.

The delta barrier has exact matrix elements in the alpha = 0 eigenbasis,

    H_mn(t) = delta_mn E0_n + alpha(t) phi_m(0) phi_n(0),

so the Schrodinger equation i hbar d/dt = H d can be integrated without ever
touching the transcendental eigensolver.  This module shares no spectrum or
integrator code with the instantaneous-basis path: comparing the two routes
end to end is the point.

Because the coupling is a delta function, bare-basis quantities converge only
first order in the truncation M (the barrier puts a derivative kink into the
wavefunction, whose sine coefficients decay slowly).  Reaching 1e-3 accuracy
at alpha = 400 E0 takes M of order a thousand, far beyond what an explicit
Runge-Kutta method can propagate (it would have to resolve phases at E0_M).
The propagator is therefore a Strang splitting with exact ingredients:

    d <- e^{-i D h/2} * exp(-i lambda |phi><phi|) * e^{-i D h/2} d,

with lambda the exact integral of alpha over the step and the rank-1 kick in
closed form.  Every operation is O(M), the cost is independent of how stiff
the diagonal is, and the step is unitary.  Local error is controlled per step
by step doubling (one h-step against two h/2-steps, Richardson-extrapolated),
with the same rtol/atol interface as the dynamics module.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import StepUnderflowError
from .eigensolver import Spectrum
from .geometry import BarrierProtocol, BoxGeometry, UnitSystem, _interp_table
from .sineint import sin_sin_integral

_BLIND_TOL = 1e-12  # same "exact node at the barrier" criterion as the eigensolver

DEFAULT_BARE_M = 2560


@dataclass(frozen=True)
class BareBasis:
    """Truncated eigenbasis of the barrier-free box."""

    M: int
    L: float
    a: float
    E0n: np.ndarray    # bare energies, strictly increasing
    phi0n: np.ndarray  # bare eigenfunction values at the barrier point


def make_bare_basis(geom: BoxGeometry, M: int = DEFAULT_BARE_M,
                    units: UnitSystem | None = None) -> BareBasis:
    """Bare energies and barrier-point values for levels 1..M."""
    if M < 1:
        raise ValueError("bare basis needs M >= 1")
    units = units or UnitSystem.natural(geom.L)
    h2_over_2m = units.hbar**2 / (2.0 * units.mass)
    n = np.arange(1, M + 1)
    E0n = h2_over_2m * (n * math.pi / geom.L) ** 2
    phi = np.sqrt(2.0 / geom.L) * np.sin(n * math.pi * geom.a / geom.L)
    r = n * geom.a / geom.L
    phi[np.abs(r - np.rint(r)) < _BLIND_TOL] = 0.0  # exact node at x = 0
    return BareBasis(M=M, L=geom.L, a=geom.a, E0n=E0n, phi0n=phi)


def bare_hamiltonian(alpha: float, basis: BareBasis) -> np.ndarray:
    """H = diag(E0) + alpha * |phi(0)><phi(0)|, real symmetric."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return np.diag(basis.E0n) + alpha * np.outer(basis.phi0n, basis.phi0n)


@njit(cache=True)
def _alpha_integral(t1, t2, kind, ratec, tbl_t, tbl_a):
    """Exact integral of alpha(t) over [t1, t2] for each protocol kind."""
    if kind == 0:
        return ratec * (t2 * t2 * t2 - t1 * t1 * t1) / 3.0
    if kind == 1:
        return 0.5 * ratec * (t2 * t2 - t1 * t1)
    # piecewise-linear table: trapezoid over the knots is exact
    total = 0.0
    lo = t1
    a_lo = _interp_table(lo, tbl_t, tbl_a)
    for i in range(tbl_t.shape[0]):
        knot = tbl_t[i]
        if knot <= lo:
            continue
        hi = knot if knot < t2 else t2
        a_hi = _interp_table(hi, tbl_t, tbl_a)
        total += 0.5 * (a_lo + a_hi) * (hi - lo)
        lo = hi
        a_lo = a_hi
        if hi >= t2:
            break
    if lo < t2:
        a_hi = _interp_table(t2, tbl_t, tbl_a)
        total += 0.5 * (a_lo + a_hi) * (t2 - lo)
    return total


@njit(cache=True)
def _kick(d, phi, rho, lam):
    """d <- exp(-i lam |phi><phi|) d via the closed rank-1 form, exactly unitary."""
    if rho == 0.0 or lam == 0.0:
        return
    s = 0.0 + 0.0j
    for i in range(d.shape[0]):
        s += phi[i] * d[i]
    x = lam * rho
    half = 0.5 * x
    sh = math.sin(half)
    # (e^{-ix} - 1)/rho without cancellation at small x
    fac = complex(-2.0 * sh * sh, -2.0 * sh * math.cos(half)) * (s / rho)
    for i in range(d.shape[0]):
        d[i] += fac * phi[i]


@njit(cache=True)
def _strang(d, t, h, E0n, phi, rho, kind, ratec, tbl_t, tbl_a, inv_hbar, ph_half):
    """One Strang step of size h starting at t; ph_half = exp(-i E0 h/2 / hbar)."""
    M = d.shape[0]
    for i in range(M):
        d[i] *= ph_half[i]
    lam = _alpha_integral(t, t + h, kind, ratec, tbl_t, tbl_a) * inv_hbar
    _kick(d, phi, rho, lam)
    for i in range(M):
        d[i] *= ph_half[i]


@njit(cache=True)
def _bare_loop(E0n, phi, kind, ratec, tau, tbl_t, tbl_a, inv_hbar,
               d0, rtol, atol, t_samples):
    """Adaptive split-step propagation; lands exactly on every sample time.

    Per controlled step the state advances once with h and twice with h/2;
    the difference drives the controller (third-order local error) and the
    Richardson-extrapolated fine solution is kept.
    """
    M = d0.shape[0]
    S = t_samples.shape[0]
    out = np.zeros((S, M), np.complex128)
    d = d0.copy()
    out[0] = d

    rho = 0.0
    for i in range(M):
        rho += phi[i] * phi[i]

    dc = np.zeros(M, np.complex128)
    df = np.zeros(M, np.complex128)
    ph_quarter = np.zeros(M, np.complex128)  # exp(-i E0 h/4 / hbar)
    ph_half = np.zeros(M, np.complex128)     # its square

    nsteps = 0
    nacc = 0
    nrej = 0
    status = 0

    h = tau * 1e-3
    h_phase = -1.0  # h the phase vectors were built for
    t = 0.0
    isamp = 1
    h_floor = 1e-14 * tau

    while isamp < S:
        t_target = t_samples[isamp]
        hit = False
        hs = h
        if t + hs >= t_target:
            hs = t_target - t
            hit = True

        if hs != h_phase:
            for i in range(M):
                arg = -0.25 * E0n[i] * hs * inv_hbar
                ph_quarter[i] = complex(math.cos(arg), math.sin(arg))
                ph_half[i] = ph_quarter[i] * ph_quarter[i]
            h_phase = hs

        for i in range(M):
            dc[i] = d[i]
            df[i] = d[i]
        _strang(dc, t, hs, E0n, phi, rho, kind, ratec, tbl_t, tbl_a, inv_hbar, ph_half)
        _strang(df, t, 0.5 * hs, E0n, phi, rho, kind, ratec, tbl_t, tbl_a,
                inv_hbar, ph_quarter)
        _strang(df, t + 0.5 * hs, 0.5 * hs, E0n, phi, rho, kind, ratec, tbl_t, tbl_a,
                inv_hbar, ph_quarter)
        nsteps += 1

        errn = 0.0
        for i in range(M):
            e = (df[i] - dc[i]) / 3.0
            sc = atol + rtol * max(abs(d[i]), abs(df[i]))
            errn += (abs(e) / sc) ** 2
        errn = math.sqrt(errn / M)

        if errn <= 1.0:
            nacc += 1
            t = t_target if hit else t + hs
            for i in range(M):
                d[i] = df[i] + (df[i] - dc[i]) / 3.0  # Richardson, local order 3
            if hit:
                out[isamp] = d
                isamp += 1
        else:
            nrej += 1

        if errn != errn:
            fac = 0.2
        elif errn == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * errn ** (-1.0 / 3.0)
            if fac > 5.0:
                fac = 5.0
            if fac < 0.2:
                fac = 0.2
        h = hs * fac
        if h < h_floor and isamp < S:
            status = 1
            break

    return out, status, nsteps, nacc, nrej


def propagate_bare(geom: BoxGeometry, protocol: BarrierProtocol,
                   basis: BareBasis | None = None, d0=None,
                   rtol: float = 1e-8, atol: float = 1e-10,
                   t_samples=None, units: UnitSystem | None = None):
    """Integrate i hbar d' = H(alpha(t)) d from t = 0 to tau.

    Returns the final amplitude vector d(tau); with t_samples given, returns
    (d_final, d_samples) where d_samples[i] is d at t_samples[i].
    """
    units = units or UnitSystem.natural(geom.L)
    if basis is None:
        basis = make_bare_basis(geom, units=units)
    if d0 is None:
        d0 = np.zeros(basis.M, dtype=complex)
        d0[0] = 1.0
    else:
        d0 = np.asarray(d0, dtype=complex)
        if d0.shape != (basis.M,):
            raise ValueError(f"d0 has shape {d0.shape}, expected ({basis.M},)")
        nrm = np.sum(np.abs(d0) ** 2)
        if abs(nrm - 1.0) > 1e-6:
            raise ValueError(f"initial amplitudes must be normalized, got |d0|^2={nrm}")
        d0 = d0 / math.sqrt(nrm)

    kind, ratec, tau, tbl_t, tbl_a = protocol.jit_args()
    want_samples = t_samples is not None
    ts = np.asarray(t_samples, dtype=float) if want_samples else np.array([0.0, tau])

    out, status, nsteps, nacc, nrej = _bare_loop(
        basis.E0n, basis.phi0n, kind, ratec, tau, tbl_t, tbl_a,
        1.0 / units.hbar, d0, rtol, atol, ts)
    if status == 1:
        raise StepUnderflowError("bare propagation step underflowed")

    if want_samples:
        return out[-1], out
    return out[-1]


def instantaneous_overlaps(spec: Spectrum, basis: BareBasis) -> np.ndarray:
    """W[n, m] = <psi_n | phi_m>: instantaneous eigenstates against bare states."""
    geom = spec.geom
    amp = math.sqrt(2.0 / basis.L)
    kap = np.arange(1, basis.M + 1) * math.pi / basis.L
    W = np.empty((spec.n_levels, basis.M))
    for i, s in enumerate(spec.states):
        for m in range(basis.M):
            left = s.A * sin_sin_integral(s.k, s.k * geom.a, kap[m], kap[m] * geom.a,
                                          -geom.a, 0.0)
            right = s.B * sin_sin_integral(s.k, -s.k * geom.b, kap[m], kap[m] * geom.a,
                                           0.0, geom.b)
            W[i, m] = amp * (left + right)
    return W


def project_onto_instantaneous(d, spec: Spectrum, basis: BareBasis) -> np.ndarray:
    """Populations |<psi_n|Psi>|^2 of the instantaneous levels for bare amplitudes d."""
    W = instantaneous_overlaps(spec, basis)
    return np.abs(W @ np.asarray(d, dtype=complex)) ** 2


def bare_side_overlap(basis: BareBasis, region: str) -> np.ndarray:
    """Compartment overlap matrix of the bare basis (for P_left along the oracle path).

    Vectorized closed form: with u = x + a the bare states are sin(kappa u) on
    [0, L] and the region integral is [sin((ki-kj)u)/(2(ki-kj)) - (+)] between
    the compartment bounds, diagonal handled analytically.
    """
    if region not in ("left", "right"):
        raise ValueError(f"region must be 'left' or 'right', got {region!r}")
    kap = np.arange(1, basis.M + 1) * math.pi / basis.L
    u1, u2 = (0.0, basis.a) if region == "left" else (basis.a, basis.L)
    diff = kap[:, None] - kap[None, :]
    summ = kap[:, None] + kap[None, :]
    np.fill_diagonal(diff, 1.0)
    I_diff = (np.sin(diff * u2) - np.sin(diff * u1)) / (2.0 * diff)
    di = np.arange(basis.M)
    I_diff[di, di] = 0.5 * (u2 - u1)
    I_sum = (np.sin(summ * u2) - np.sin(summ * u1)) / (2.0 * summ)
    return (2.0 / basis.L) * (I_diff - I_sum)


def truncation_check(geom: BoxGeometry, protocol: BarrierProtocol,
                     spec: Spectrum, M: int = DEFAULT_BARE_M,
                     rtol: float = 1e-8, atol: float = 1e-10,
                     units: UnitSystem | None = None) -> dict:
    """Doubling check: propagate at M and 2M, report the population deviation."""
    pops = []
    for m in (M, 2 * M):
        basis = make_bare_basis(geom, m, units=units)
        d = propagate_bare(geom, protocol, basis, rtol=rtol, atol=atol, units=units)
        pops.append(project_onto_instantaneous(d, spec, basis))
    dev = float(np.max(np.abs(pops[0] - pops[1])))
    return {"M": M, "M_ref": 2 * M, "max_population_dev": dev}
