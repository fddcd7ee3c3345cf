"""Problem parameters, the weighted cylinder grid, and quotient evaluation.

Everything downstream works on the truncated cylinder [-L, L] x S^{d-1},
reduced to the two variables (s, phi) where phi in [0, pi] is the azimuthal
angle.  The angular measure carries the density sin^{d-2}(phi), normalized
either to total mass 1 ("probability" mode) or to |S^{d-1}| ("surface" mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MEASURE_MODES = ("probability", "surface")


def sphere_area(d: int) -> float:
    """Surface measure |S^{d-1}| of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def theta_critical(p: float, d: int) -> float:
    """Critical interpolation exponent d(p-2)/(2p).

    Admissible exponents theta for the quotient lie in [theta_critical, 1].
    """
    if d < 3:
        raise ValueError(f"dimension must be >= 3, got {d}")
    if p <= 2:
        raise ValueError(f"exponent p must exceed 2, got {p}")
    return d * (p - 2.0) / (2.0 * p)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension, exponent and measure convention defining one problem.

    Derived constants (theta_critical, q, a_c, p_star) are exposed as
    properties so a params object is the single source for all of them.
    """

    d: int
    p: float
    theta: float = 1.0
    measure_mode: str = "surface"

    def __post_init__(self):
        if self.d < 3:
            raise ValueError(f"dimension must be >= 3, got {self.d}")
        if not 2.0 < self.p < 2.0 * self.d / (self.d - 2.0):
            raise ValueError(
                f"p must satisfy 2 < p < 2d/(d-2) = {2 * self.d / (self.d - 2)}, got {self.p}"
            )
        tc = theta_critical(self.p, self.d)
        if not tc <= self.theta <= 1.0:
            raise ValueError(
                f"theta must lie in [theta_critical, 1] = [{tc}, 1], got {self.theta}"
            )
        if self.measure_mode not in MEASURE_MODES:
            raise ValueError(f"measure_mode must be one of {MEASURE_MODES}")

    @property
    def theta_min(self) -> float:
        return theta_critical(self.p, self.d)

    @property
    def q(self) -> float:
        """Dual exponent p/(p-2) normalizing the potentials."""
        return self.p / (self.p - 2.0)

    @property
    def a_c(self) -> float:
        return (self.d - 2.0) / 2.0

    def p_star(self, theta: float | None = None) -> float:
        th = self.theta if theta is None else theta
        return 2.0 * self.d / (self.d - 2.0 * th)

    @property
    def angular_total(self) -> float:
        return 1.0 if self.measure_mode == "probability" else sphere_area(self.d)


@dataclass
class CylinderGrid:
    """Tensor (s, phi) grid with sin^{d-2}(phi)-weighted quadrature.

    s is uniform on [-L, L]; phi nodes are cosine-clustered towards the
    poles, phi_j = (pi/2) (1 - cos(pi j / (n_phi - 1))).  Node weights at
    the poles vanish exactly (the angular density is zero there); the
    staggered midpoint weights `mphi` used for the angular gradient are
    zero on the two pole-adjacent cells, so pole values never enter any
    norm or energy.  Treat instances as immutable after construction.
    """

    d: int
    p: float
    measure_mode: str
    L: float
    n_s: int
    n_phi: int
    s: np.ndarray
    phi: np.ndarray
    ws: np.ndarray
    wphi: np.ndarray
    dphi: np.ndarray
    mphi: np.ndarray
    h_s: float
    _stiffness: object = field(default=None, repr=False, compare=False)
    _reduced: object = field(default=None, repr=False, compare=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_s, self.n_phi)

    @property
    def angular_total(self) -> float:
        return 1.0 if self.measure_mode == "probability" else sphere_area(self.d)

    @property
    def weights(self) -> np.ndarray:
        """Full (n_s, n_phi) quadrature weight table."""
        return np.outer(self.ws, self.wphi)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.einsum("i,j,ij->", self.ws, self.wphi, values))

    def params(self, theta: float = 1.0) -> ProblemParams:
        return ProblemParams(self.d, self.p, theta, self.measure_mode)


def build_grid(L: float, n_s: int, n_phi: int, params: ProblemParams) -> CylinderGrid:
    """Construct the weighted tensor grid for `params`.

    The angular node weights are trapezoidal cells times the nodal density
    sin^{d-2}(phi), rescaled so the total angular mass is exact (1 or
    |S^{d-1}|); quadrature of a constant is then exact by construction.
    """
    if L <= 0:
        raise ValueError(f"half-length L must be positive, got {L}")
    if n_s < 16 or n_phi < 8:
        raise ValueError(f"grid too small: need n_s >= 16, n_phi >= 8, got {n_s}x{n_phi}")

    d = params.d
    s = np.linspace(-L, L, n_s)
    h_s = 2.0 * L / (n_s - 1)
    ws = np.full(n_s, h_s)
    ws[0] = ws[-1] = 0.5 * h_s

    j = np.arange(n_phi)
    phi = 0.5 * math.pi * (1.0 - np.cos(math.pi * j / (n_phi - 1)))
    phi[0], phi[-1] = 0.0, math.pi

    cells = np.empty(n_phi)
    cells[0] = 0.5 * (phi[1] - phi[0])
    cells[-1] = 0.5 * (phi[-1] - phi[-2])
    cells[1:-1] = 0.5 * (phi[2:] - phi[:-2])
    raw = cells * np.sin(phi) ** (d - 2)
    raw[0] = raw[-1] = 0.0
    scale = params.angular_total / raw.sum()
    wphi = scale * raw

    dphi = np.diff(phi)
    mid = 0.5 * (phi[:-1] + phi[1:])
    mphi = scale * dphi * np.sin(mid) ** (d - 2)
    mphi[0] = mphi[-1] = 0.0  # pole cells carry no angular-gradient weight

    return CylinderGrid(
        d=d, p=params.p, measure_mode=params.measure_mode, L=L, n_s=n_s, n_phi=n_phi,
        s=s, phi=phi, ws=ws, wphi=wphi, dphi=dphi, mphi=mphi, h_s=h_s,
    )


@dataclass
class Field:
    """Nodal values of a function u(s, phi) on a CylinderGrid."""

    grid: CylinderGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @classmethod
    def from_function(cls, grid: CylinderGrid, fn) -> "Field":
        return cls(grid, fn(grid.s[:, None], grid.phi[None, :]))

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def norm_sq(self) -> float:
        return self.grid.integrate(self.values**2)

    def __mul__(self, c: float) -> "Field":
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__


def dirichlet_energy(u: Field) -> float:
    """Quadrature-weighted energy int |grad u|^2 from staggered differences."""
    g = u.grid
    v = u.values
    ds = np.diff(v, axis=0)
    x_s = np.einsum("j,ij->", g.wphi, ds**2) / g.h_s
    dp = np.diff(v, axis=1)
    x_phi = np.einsum("i,j,ij->", g.ws, g.mphi / g.dphi**2, dp**2)
    return float(x_s + x_phi)


def evaluate_norms(u: Field) -> tuple[float, float, float]:
    """Return (X, Y, Z) = (int |grad u|^2, int u^2, int |u|^p)."""
    g = u.grid
    if not np.any(u.values):
        raise ValueError("cannot evaluate norms of the zero field")
    X = dirichlet_energy(u)
    Y = g.integrate(u.values**2)
    Z = g.integrate(np.abs(u.values) ** g.p)
    return X, Y, Z


def evaluate_Q(u: Field, Lambda: float, theta: float) -> float:
    """Interpolation quotient (X + Lambda Y)^theta Y^(1-theta) / Z^(2/p)."""
    X, Y, Z = evaluate_norms(u)
    base = X + Lambda * Y
    if base <= 0 and not float(theta).is_integer():
        raise ValueError(
            f"X + Lambda*Y = {base} is not positive; quotient undefined for theta={theta}"
        )
    p = u.grid.p
    return base**theta * Y ** (1.0 - theta) / Z ** (2.0 / p)
