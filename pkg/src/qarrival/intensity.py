"""Intensity profiles: omega(t), its integral, and momentum derivatives.

A profile tabulates everything the arrival-time statistics need on one time
grid: the detection intensity ``omega``, its integral ``Omega`` (cumulative
trapezoid, with a cusp-aware model for the first cell in beam mode), the
momentum derivative ``domega`` (analytic for the beam, central finite
differences over re-solves otherwise), and the running integrals
``dOmega = int domega`` and ``dOmega_tilde = int domega^2/omega``.

Between nodes ``Omega`` is the quadratic cell model consistent with the
trapezoid sums (its derivative is the linear interpolant of ``omega``), so
inversion round-trips to machine precision.  Beyond the tabulated horizon a
beam profile continues with its constant late-time model; finite profiles
carry a fitted power-law tail estimate for the total-mass extrapolation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import deltakernel as dk
from . import propagate as pg
from .errors import ConfigError, RangeError
from .scenario import Scenario

# Fig-scale defaults; the beam horizon doubles as the model boundary past
# which the late-time constant-intensity reduction applies (see fisher).
_DEFAULTS = {
    "beam": dict(t_max=60.0, dt=0.01),
    "delta": dict(t_max=60.0, dt=1e-3),
    "gaussian": dict(t_max=60.0, dt=1e-3),
}

_GEO_MIN = 1e-9
_GEO_SWITCH = 1.0
_GEO_POINTS = 700


@dataclass(frozen=True)
class FiniteTail:
    """Power-law tail fit omega ~ omega_m (t/t_m)^(-slope) past the grid."""

    t_m: float
    omega_m: float
    slope: float
    mass: float  # estimated integral of omega beyond the grid


@dataclass(frozen=True)
class IntensityProfile:
    scn: Scenario
    mode: str  # "beam" | "delta" | "gaussian"
    t: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)
    Omega: np.ndarray = field(repr=False)
    domega: np.ndarray = field(repr=False)
    dOmega: np.ndarray = field(repr=False)
    dOmega_tilde: np.ndarray = field(repr=False)
    Omega_inf: float
    dOmega_inf: float
    fd_step: float
    beam_tail: dk.BeamAsymptotes | None = None
    finite_tail: FiniteTail | None = None
    has_derivative: bool = True

    # -- pointwise evaluators --------------------------------------------

    def omega_at(self, tq):
        tq = np.asarray(tq, dtype=float)
        out = np.interp(tq, self.t, self.omega)
        if self.mode == "beam":
            out = np.where(tq > self.t[-1], self.beam_tail.omega_inf, out)
        else:
            out = np.where(tq > self.t[-1], 0.0, out)
        return float(out) if out.ndim == 0 else out

    def Omega_at(self, tq):
        tq = np.asarray(tq, dtype=float)
        scalar = tq.ndim == 0
        tq = np.atleast_1d(tq)
        idx = np.clip(np.searchsorted(self.t, tq, side="right") - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[idx], self.t[idx + 1]
        w0, w1 = self.omega[idx], self.omega[idx + 1]
        s = np.clip(tq - t0, 0.0, t1 - t0)
        out = self.Omega[idx] + w0 * s + 0.5 * (w1 - w0) / (t1 - t0) * s * s
        beyond = tq > self.t[-1]
        if np.any(beyond):
            if self.mode == "beam":
                out = np.where(beyond, self.Omega[-1] + self.beam_tail.omega_inf * (tq - self.t[-1]), out)
            else:
                out = np.where(beyond, self.Omega[-1], out)
        return float(out[0]) if scalar else out

    def domega_at(self, tq):
        tq = np.asarray(tq, dtype=float)
        out = np.interp(tq, self.t, self.domega)
        if self.mode == "beam":
            out = np.where(tq > self.t[-1], self.beam_tail.domega_dp0_inf, out)
        else:
            out = np.where(tq > self.t[-1], 0.0, out)
        return float(out) if out.ndim == 0 else out

    def dOmega_at(self, tq):
        tq = np.asarray(tq, dtype=float)
        out = np.interp(tq, self.t, self.dOmega)
        if self.mode == "beam":
            out = np.where(tq > self.t[-1],
                           self.dOmega[-1] + self.beam_tail.domega_dp0_inf * (tq - self.t[-1]), out)
        return float(out) if out.ndim == 0 else out

    def invert_Omega(self, u):
        """Time at which the integrated intensity reaches u.

        Raises :class:`RangeError` for u >= Omega(inf); that branch is the
        NO-event outcome for the callers.
        """
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u).astype(float)
        if np.any(u < 0.0):
            raise ValueError("integrated intensity must be >= 0")
        if np.any(u >= self.Omega_inf):
            raise RangeError("requested mass never accumulates (NO-event branch)")
        out = np.empty_like(u)
        inside = u <= self.Omega[-1]
        if np.any(inside):
            ui = u[inside]
            idx = np.clip(np.searchsorted(self.Omega, ui, side="right") - 1, 0, len(self.t) - 2)
            # ties on flat segments: step back to the first cell with slope
            t0, t1 = self.t[idx], self.t[idx + 1]
            w0, w1 = self.omega[idx], self.omega[idx + 1]
            kappa = (w1 - w0) / (t1 - t0)
            c = ui - self.Omega[idx]
            disc = np.sqrt(np.maximum(w0 * w0 + 2.0 * kappa * c, 0.0))
            with np.errstate(divide="ignore", invalid="ignore"):
                s = np.where(np.abs(kappa) > 1e-300 * np.abs(w0 + disc),
                             2.0 * c / (w0 + disc),
                             np.where(w0 > 0, c / np.where(w0 > 0, w0, 1.0), 0.0))
            out[inside] = t0 + np.clip(s, 0.0, t1 - t0)
        beyond = ~inside
        if np.any(beyond):
            ub = u[beyond]
            if self.mode == "beam":
                out[beyond] = self.t[-1] + (ub - self.Omega[-1]) / self.beam_tail.omega_inf
            else:
                tail = self.finite_tail
                if tail is None or tail.mass <= 0.0:
                    out[beyond] = self.t[-1]
                else:
                    frac = np.clip((self.Omega_inf - ub) / tail.mass, 1e-300, None)
                    out[beyond] = tail.t_m * frac ** (-1.0 / (tail.slope - 1.0))
        return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def _cumtrapz(y, t):
    inc = 0.5 * (y[1:] + y[:-1]) * np.diff(t)
    return np.concatenate([[0.0], np.cumsum(inc)])


def _beam_grid(t_max: float, dt: float):
    geo = np.geomspace(_GEO_MIN, min(_GEO_SWITCH, 0.5 * t_max), _GEO_POINTS)
    bulk = np.arange(geo[-1] + dt, t_max + 0.5 * dt, dt)
    return np.concatenate([[0.0], geo, bulk])


@lru_cache(maxsize=16)
def _beam_tables(a: float, m: float, p0: float, t_max: float, dt: float):
    """r0-independent beam tabulation: per-density intensity g = omega/r0."""
    dp_obj = dk.DeltaParams(a, m)
    t = _beam_grid(t_max, dt)
    bracket = dk.transmission_T(p0, dp_obj) + dk.remainder_R(p0, t, dp_obj)
    dbracket = dp_obj.alpha / (p0 + dp_obj.alpha) ** 2 + dk.remainder_R_dp(p0, t, dp_obj)
    g = a * np.abs(bracket) ** 2
    gdot = 2.0 * a * np.real(np.conj(bracket) * dbracket)
    asym = dk.beam_asymptotes(p0, 1.0, dp_obj)  # unit density; scaled later
    G = _cumtrapz(g, t)
    # cusp-aware first cell: g = c0 + c_sqrt sqrt(t) + c_lin t locally
    t1 = t[1]
    G[1:] += (asym.c0 * t1 + (2.0 / 3.0) * asym.c_sqrt * t1 ** 1.5 + 0.5 * asym.c_lin * t1 * t1) \
        - 0.5 * (g[0] + g[1]) * t1
    dG = _cumtrapz(gdot, t)
    dG[1:] += 0.4 * asym.dc_t32 * t1 ** 2.5 - 0.5 * (gdot[0] + gdot[1]) * t1
    with np.errstate(divide="ignore", invalid="ignore"):
        sq = np.where(g > 0.0, gdot * gdot / np.where(g > 0, g, 1.0), 0.0)
    dG_tilde = _cumtrapz(sq, t)
    return t, g, gdot, G, dG, dG_tilde, asym


def _fit_finite_tail(t, omega, navg, Omega_end, warn: bool = True):
    """Estimate the intensity mass beyond the grid from a power-law fit."""
    n = len(t)
    lo = int(0.7 * n)
    tt, ww = t[lo:], omega[lo:]
    good = ww > 0.0
    if good.sum() < 8 or ww[good][-1] <= 0.0:
        return FiniteTail(t[-1], 0.0, math.inf, 0.0)
    slope, _ = np.polyfit(np.log(tt[good]), np.log(ww[good]), 1)
    slope = -slope
    if slope <= 1.05 or not np.isfinite(slope):
        if warn:
            warnings.warn("intensity tail decays too slowly for a reliable mass estimate; "
                          "increase t_max", stacklevel=3)
        slope = 1.05
    mass = omega[-1] * t[-1] / (slope - 1.0)
    mass = min(mass, max(navg - Omega_end, 0.0))
    return FiniteTail(t[-1], omega[-1], slope, mass)


def build_profile(scn: Scenario, t_max: float | None = None, dt: float | None = None,
                  fd_step: float = 1e-4, fd_check: bool = False,
                  derivative: bool = True) -> IntensityProfile:
    """Tabulate the intensity profile for a scenario (all three modes).

    ``derivative=False`` skips the momentum-derivative arrays (and the
    finite-difference re-solves they cost); such profiles serve density and
    sampling work but cannot feed the information quadrature.
    """
    if scn.beam:
        mode = "beam"
    elif scn.delta_detector:
        mode = "delta"
    else:
        mode = "gaussian"
    t_max = _DEFAULTS[mode]["t_max"] if t_max is None else float(t_max)
    dt = _DEFAULTS[mode]["dt"] if dt is None else float(dt)

    if mode == "beam":
        t, g, gdot, G, dG, dG_tilde, asym_unit = _beam_tables(scn.a, scn.m, scn.p0, t_max, dt)
        r0 = scn.r0
        asym = dk.beam_asymptotes(scn.p0, r0, dk.DeltaParams(scn.a, scn.m))
        return IntensityProfile(
            scn=scn, mode=mode, t=t,
            omega=r0 * g, Omega=r0 * G, domega=r0 * gdot,
            dOmega=r0 * dG, dOmega_tilde=r0 * dG_tilde,
            Omega_inf=math.inf, dOmega_inf=math.nan,
            fd_step=fd_step, beam_tail=asym)

    grid = pg.TimeGrid(t_max, dt)

    def omega_of(p0):
        shifted = scn.at_p0(p0)
        if mode == "gaussian":
            h = pg.solve_volterra(pg.gaussian_overlap_h0(shifted, grid),
                                  gaussian_kernel, shifted.gamma)
            return shifted.navg * shifted.gamma * np.abs(h.values) ** 2
        dp_obj = dk.DeltaParams(shifted.a, shifted.m)
        f = pg.solve_renewal(pg.gaussian_free_at_origin(shifted, grid), dp_obj.d)
        return shifted.a * shifted.navg * np.abs(f.values) ** 2

    gaussian_kernel = pg.gaussian_kernel_g(scn, grid) if mode == "gaussian" else None
    omega = omega_of(scn.p0)
    t = grid.times
    Omega = _cumtrapz(omega, t)
    if Omega[-1] > scn.navg * (1.0 + 1e-9):
        raise ConfigError("integrated intensity exceeded the particle number; "
                          "the grid is too coarse for this scenario")
    tail = _fit_finite_tail(t, omega, scn.navg, Omega[-1])
    Omega_inf = min(Omega[-1] + tail.mass, scn.navg)

    if not derivative:
        zeros = np.zeros_like(omega)
        return IntensityProfile(
            scn=scn, mode=mode, t=t, omega=omega, Omega=Omega, domega=zeros,
            dOmega=zeros, dOmega_tilde=zeros,
            Omega_inf=Omega_inf, dOmega_inf=math.nan,
            fd_step=fd_step, finite_tail=tail, has_derivative=False)

    om_plus = omega_of(scn.p0 + fd_step)
    om_minus = omega_of(scn.p0 - fd_step)
    domega = (om_plus - om_minus) / (2.0 * fd_step)
    if fd_check:
        i = int(np.argmax(omega))
        d2 = (omega_of(scn.p0 + 0.5 * fd_step)[i] - omega_of(scn.p0 - 0.5 * fd_step)[i]) / fd_step
        if abs(d2 - domega[i]) > 1e-3 * max(abs(domega[i]), 1e-30):
            warnings.warn(f"p0 finite-difference step {fd_step:g} looks unstable at the peak")

    def omega_inf_of(om):
        om_end = _cumtrapz(om, t)[-1]
        tl = _fit_finite_tail(t, om, scn.navg, om_end, warn=False)
        return min(om_end + tl.mass, scn.navg)

    dOmega_inf = (omega_inf_of(om_plus) - omega_inf_of(om_minus)) / (2.0 * fd_step)
    dOmega = _cumtrapz(domega, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        sq = np.where(omega > 0.0, domega * domega / np.where(omega > 0, omega, 1.0), 0.0)
    dOmega_tilde = _cumtrapz(sq, t)
    return IntensityProfile(
        scn=scn, mode=mode, t=t, omega=omega, Omega=Omega, domega=domega,
        dOmega=dOmega, dOmega_tilde=dOmega_tilde,
        Omega_inf=Omega_inf, dOmega_inf=dOmega_inf,
        fd_step=fd_step, finite_tail=tail)
