"""Physical scenarios, unit conventions, and source-state families.

Unit conventions
----------------
All quantities are dimensionless multiples of a length unit ``l``, a time
unit ``tau``, the momentum unit ``pbar = hbar/l``, and the mass unit
``pbar*tau/l``.  In these units ``hbar = 1``, so it never appears
explicitly in the formulas below.

A :class:`Scenario` bundles the parameters of one detection setup: particle
mass ``m``, detection strength ``a``, detector width ``eps`` (``eps = 0``
selects the point-detector limit), source momentum ``p0``, source position
``x0 < 0``, momentum width ``dp``, mean particle number ``navg``
(``inf`` selects the uniform-beam limit) and spatial density ``r0``.

A :class:`StateFamily` selects how the many-particle state is composed from
identical single-particle wavefunctions: fixed particle number (``fock``),
a coherent superposition (``coherent``), or a geometric classical mixture
(``quasifree``).  Each family is characterised by a weight function ``F``
with the signed derivatives ``F_n = (-1)^n F^(n)``:

==========  ======================================  =================
family      F(u)                                    F_n(u)
==========  ======================================  =================
fock(N)     (1 - u/N)^N   (0 for u > N)             N!/(N^n (N-n)!) (1-u/N)^(N-n)
coherent    exp(-u)                                 exp(-u)
quasifree   1/(1 + u)                               n!/(1+u)^(n+1)
==========  ======================================  =================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, SingularFamilyError

HBAR = 1.0

# Scaled detection rate of the finite-width Gaussian detector.  With this
# scaling the eps -> 0 limit reproduces the point detector of strength a.
def gamma_eps(a: float, eps: float) -> float:
    """Detection rate gamma for a Gaussian detector of width eps."""
    if eps <= 0.0:
        raise ConfigError("gamma_eps requires eps > 0 (eps = 0 is the point detector)")
    return a / (2.0 * eps * math.sqrt(2.0 * math.pi))


_CONFIG_KEYS = ("m", "a", "eps", "p0", "x0", "dp", "navg", "r0", "mode")


@dataclass(frozen=True)
class Scenario:
    """Parameter record for one detection setup (paper units, hbar = 1)."""

    m: float = 1.0          # particle mass
    a: float = 0.1          # detection strength (length/time)
    eps: float = 0.0        # detector width; 0 = point detector
    p0: float = 1.0         # source momentum
    x0: float = -20.0       # source position (< 0, detector sits at x = 0)
    dp: float = 0.0         # momentum width of the source Gaussian
    navg: float = math.inf  # mean particle number; inf = beam
    r0: float = 56.42       # spatial particle density (beam mode)

    def __post_init__(self):
        if self.m <= 0 or self.a <= 0:
            raise ConfigError("mass and detection strength must be positive")
        if self.eps < 0:
            raise ConfigError("detector width eps must be >= 0")
        if not self.beam:
            if self.navg <= 0:
                raise ConfigError("mean particle number must be positive")
            if self.dp <= 0:
                raise ConfigError("momentum width dp must be positive in finite mode")
        else:
            if self.eps != 0.0:
                raise ConfigError("beam mode requires the point detector (eps = 0)")
            if self.r0 <= 0:
                raise ConfigError("beam mode requires a positive density r0")

    @property
    def beam(self) -> bool:
        return math.isinf(self.navg)

    @property
    def delta_detector(self) -> bool:
        return self.eps == 0.0

    @property
    def gamma(self) -> float:
        """Detection rate of the finite-width detector."""
        return gamma_eps(self.a, self.eps)

    def at_navg(self, navg: float) -> "Scenario":
        """Finite-navg member of the beam family with the same density r0.

        The momentum width is tied to navg so that r0 stays the maximal
        spatial density of the packet: dp = sqrt(pi/2) * r0 / navg.
        """
        if math.isinf(navg):
            return replace(self, navg=math.inf, dp=0.0, eps=0.0)
        dp = math.sqrt(math.pi / 2.0) * HBAR * self.r0 / navg
        return replace(self, navg=navg, dp=dp)

    def at_p0(self, p0: float) -> "Scenario":
        return replace(self, p0=p0)

    # -- flat key=value config files (the CLI contract) ------------------

    def to_config(self) -> str:
        mode = "beam" if self.beam else "finite"
        navg = "inf" if self.beam else repr(self.navg)
        lines = [
            f"m={self.m!r}",
            f"a={self.a!r}",
            f"eps={self.eps!r}",
            f"p0={self.p0!r}",
            f"x0={self.x0!r}",
            f"dp={self.dp!r}",
            f"navg={navg}",
            f"r0={self.r0!r}",
            f"mode={mode}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config(cls, text: str) -> "Scenario":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = val.strip()
        missing = [k for k in _CONFIG_KEYS if k not in values and k != "mode"]
        if missing:
            raise ConfigError(f"missing keys: {', '.join(missing)}")
        mode = values.get("mode", "finite")
        if mode not in ("finite", "beam"):
            raise ConfigError(f"mode must be 'finite' or 'beam', got {mode!r}")
        try:
            num = {k: float(values[k]) for k in _CONFIG_KEYS if k != "mode"}
        except ValueError as exc:
            raise ConfigError(f"non-numeric value: {exc}") from exc
        if mode == "beam":
            num["navg"] = math.inf
            num["dp"] = 0.0
            num["eps"] = 0.0
        elif math.isinf(num["navg"]):
            raise ConfigError("navg=inf requires mode=beam")
        try:
            return cls(**num)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Source-state families
# ---------------------------------------------------------------------------

_KINDS = ("fock", "coherent", "quasifree")


@dataclass(frozen=True)
class StateFamily:
    """Composition rule of the many-particle source state.

    ``param`` is the particle number N (integer >= 1) for ``fock`` and the
    mean particle number for the other two kinds.
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown family kind {self.kind!r}")
        if self.kind == "fock":
            if self.param < 1 or self.param != int(self.param):
                raise ConfigError("fock family needs an integer N >= 1")
        elif self.param <= 0:
            raise ConfigError("mean particle number must be positive")

    @classmethod
    def fock(cls, n_particles: int) -> "StateFamily":
        return cls("fock", float(n_particles))

    @classmethod
    def coherent(cls, navg: float) -> "StateFamily":
        return cls("coherent", float(navg))

    @classmethod
    def quasifree(cls, navg: float) -> "StateFamily":
        return cls("quasifree", float(navg))

    @property
    def domain_max(self) -> float:
        """Upper end of the admissible integrated-intensity range."""
        return self.param if self.kind == "fock" else math.inf


def _check_domain(omega_int):
    u = np.asarray(omega_int, dtype=float)
    if np.any(u < 0.0):
        raise ValueError("integrated intensity must be >= 0")
    return u


def family_F(family: StateFamily, omega_int):
    """Weight function F evaluated at the integrated intensity."""
    return family_Fn(family, 0, omega_int)


def log_family_Fn(family: StateFamily, n: int, omega_int):
    """log F_n; -inf where F_n vanishes.  Stable for large n and N."""
    if n < 0:
        raise ValueError("order n must be >= 0")
    u = _check_domain(omega_int)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    if family.kind == "coherent":
        out = -u
    elif family.kind == "quasifree":
        out = gammaln(n + 1.0) - (n + 1.0) * np.log1p(u)
    else:
        N = family.param
        out = np.full_like(u, -np.inf)
        if n <= N:
            logpref = gammaln(N + 1.0) - n * math.log(N) - gammaln(N - n + 1.0)
            inside = u < N
            with np.errstate(divide="ignore"):
                out[inside] = logpref + (N - n) * np.log1p(-u[inside] / N)
    return float(out[0]) if scalar else out


def family_Fn(family: StateFamily, n: int, omega_int):
    """Signed derivative F_n = (-1)^n F^(n) of the family weight function."""
    logs = log_family_Fn(family, n, omega_int)
    return np.exp(logs) if isinstance(logs, np.ndarray) else math.exp(logs)


def family_Hn(family: StateFamily, n: int, omega_int):
    """Ratio H_n = F_{n+1}/F_n; requires F_n > 0 at the evaluation point."""
    u = _check_domain(omega_int)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    if family.kind == "coherent":
        out = np.ones_like(u)
    elif family.kind == "quasifree":
        out = (n + 1.0) / (1.0 + u)
    else:
        N = family.param
        if n > N:
            raise SingularFamilyError(f"F_{n} vanishes identically for fock N={N:g}")
        if np.any(u >= N):
            raise SingularFamilyError("F_n vanishes at the requested point (u >= N)")
        # n == N: F_N is a positive constant on u < N while F_{N+1} == 0.
        out = (N - n) / (N - u)
    return float(out[0]) if scalar else out
