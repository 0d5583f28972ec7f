"""Nonlocal velocity grad(K) * u for K(x) = -|x|, and Riesz convolutions.

Kernel gradient convention: grad(K)(x) = -x/|x| away from the origin and 0
at the origin cell (the symmetric choice, which keeps the velocity of a
symmetric field antisymmetric).

1D uses the exact line representation: K' = -sgn, and

    (K' * u)(x) = M - 2 F(x),   F(x) = cumulative mass up to x,

evaluated by midpoint prefix sums.  It is exact for the infinite-line kernel
restricted to the box (no periodization of sgn), costs O(n), and is the form
the conservative upwind scheme consumes.

2D (and the brute-force oracles) use the periodized discrete convolution
with the kernel sampled on the offset lattice of the grid.  The FFT path and
the O(n^2)-cell direct path share the same kernel samples; only the summation
algorithm differs, which is exactly what the oracle is meant to check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import FieldError
from .fields import Field, Grid

DIRECT_ORACLE_CELL_LIMIT = 4096
VELOCITY_BOUND_SLACK = 1e-8


@dataclass(frozen=True)
class VelocityField:
    """Components of grad(K) * u sampled at cell centers."""

    grid: Grid
    components: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.components) != self.grid.dim:
            raise FieldError(
                f"expected {self.grid.dim} components, got {len(self.components)}"
            )
        comps = []
        for c in self.components:
            c = np.asarray(c, dtype=np.float64)
            if c.shape != self.grid.shape:
                raise FieldError(f"component shape {c.shape} != {self.grid.shape}")
            if not np.all(np.isfinite(c)):
                raise FieldError("velocity components must be finite")
            c = c.copy() if c.flags.writeable else c
            c.flags.writeable = False
            comps.append(c)
        object.__setattr__(self, "components", tuple(comps))

    @property
    def max_abs(self) -> float:
        return max(float(np.abs(c).max()) for c in self.components)


def _check_velocity_bound(field: Field, vel: VelocityField) -> VelocityField:
    # |grad K| = 1 pointwise, so |v| <= ||u||_1.
    l1 = field.grid.cell_volume * float(np.abs(field.values).sum())
    if vel.max_abs > l1 * (1.0 + VELOCITY_BOUND_SLACK) + 1e-300:
        raise FieldError(
            f"velocity bound violated: max |v| = {vel.max_abs:g} > ||u||_1 = {l1:g}"
        )
    return vel


def velocity_1d(field: Field) -> VelocityField:
    """Exact line velocity v = M - 2F at cell centers (midpoint prefix sum)."""
    if field.grid.dim != 1:
        raise FieldError("velocity_1d requires a 1D field")
    u = field.values
    h = field.grid.h
    prefix = h * np.cumsum(u)
    total = prefix[-1]
    v = total - 2.0 * (prefix - 0.5 * h * u)
    return _check_velocity_bound(field, VelocityField(field.grid, (v,)))


def interface_velocity_1d(field: Field) -> tuple[np.ndarray, float]:
    """Line velocity at the n right-hand cell interfaces, plus total mass.

    The cumulative mass at interface i+1/2 is exactly the prefix sum
    h * sum_{l <= i} u_l, so w[i] = M - 2 * prefix[i]; w[n-1] = -M is the
    right domain edge.
    """
    if field.grid.dim != 1:
        raise FieldError("interface_velocity_1d requires a 1D field")
    prefix = field.grid.h * np.cumsum(field.values)
    total = float(prefix[-1])
    return total - 2.0 * prefix, total


def pointy_kernel_samples(grid: Grid) -> tuple[np.ndarray, ...]:
    """grad(K) = -x/|x| sampled on the offset lattice; 0 at the origin.

    Each component is odd along its own axis, and the offsets -L/2 and +L/2
    are the same point of the torus, so (as at the origin) the component's
    value on its own Nyquist plane is ambiguous and is set to 0; this keeps
    the sampled kernel exactly odd under reflection.
    """
    nyq = grid.n // 2
    if grid.dim == 1:
        d = grid.axis_offsets
        g = -np.sign(d)
        g[nyq] = 0.0
        return (g,)
    dx, dy = np.meshgrid(grid.axis_offsets, grid.axis_offsets, indexing="ij")
    r = np.sqrt(dx**2 + dy**2)
    with np.errstate(invalid="ignore", divide="ignore"):
        gx = np.where(r > 0, -dx / r, 0.0)
        gy = np.where(r > 0, -dy / r, 0.0)
    gx[nyq, :] = 0.0
    gy[:, nyq] = 0.0
    return gx, gy


def _origin_cell_average_riesz(grid: Grid, lam: float) -> float:
    """Cell average of |x|^-lam over the origin cell.

    1D closed form; 2D by polar integration over the 8 symmetric wedges of
    the square cell (Gauss-Legendre in the angle).
    """
    h = grid.h
    if grid.dim == 1:
        return (h / 2.0) ** (-lam) / (1.0 - lam)
    nodes, weights = leggauss(64)
    theta = (np.pi / 8.0) * (nodes + 1.0)
    wedge = np.sum(weights * np.cos(theta) ** (lam - 2.0)) * (np.pi / 8.0)
    return (8.0 / h**2) * (h / 2.0) ** (2.0 - lam) / (2.0 - lam) * wedge


def riesz_kernel_samples(grid: Grid, lam: float) -> np.ndarray:
    """|x|^-lam on the offset lattice with the origin cell regularized."""
    if not (0.0 < lam < grid.dim):
        raise FieldError(f"lambda must lie in (0, {grid.dim}), got {lam}")
    if grid.dim == 1:
        d = np.abs(grid.axis_offsets)
    else:
        dx, dy = np.meshgrid(grid.axis_offsets, grid.axis_offsets, indexing="ij")
        d = np.sqrt(dx**2 + dy**2)
    with np.errstate(divide="ignore"):
        k = np.where(d > 0, d, 1.0) ** (-lam)
    k[(0,) * grid.dim] = _origin_cell_average_riesz(grid, lam)
    return k


def fft_convolve(kernel_samples: np.ndarray, field: Field) -> np.ndarray:
    """Periodized convolution h^dim * sum_y G(x - y) u(y) via the FFT."""
    grid = field.grid
    axes = tuple(range(grid.dim))
    out = np.fft.irfftn(
        np.fft.rfftn(kernel_samples) * np.fft.rfftn(field.values),
        s=grid.shape, axes=axes,
    )
    return grid.cell_volume * out


def direct_convolve_oracle(kernel_samples: np.ndarray, field: Field) -> np.ndarray:
    """Same periodized convolution by brute-force summation (no FFT).

    Accumulates kernel offsets in a fixed order, so translating the input by
    one cell translates the output by one cell bitwise.  Guarded to small
    grids: the cost is O(n^2) in the cell count.
    """
    grid = field.grid
    if grid.cell_count > DIRECT_ORACLE_CELL_LIMIT:
        raise FieldError(
            f"direct oracle limited to {DIRECT_ORACLE_CELL_LIMIT} cells, "
            f"got {grid.cell_count}"
        )
    u = field.values
    out = np.zeros_like(u)
    if grid.dim == 1:
        for j in range(grid.n):
            if kernel_samples[j] != 0.0:
                out += kernel_samples[j] * np.roll(u, j)
    else:
        for j1 in range(grid.n):
            for j2 in range(grid.n):
                g = kernel_samples[j1, j2]
                if g != 0.0:
                    out += g * np.roll(u, (j1, j2), axis=(0, 1))
    return grid.cell_volume * out


def velocity_2d_spectral(field: Field, kernel_samples=None) -> VelocityField:
    """Velocity grad(K) * u in 2D by FFT convolution with the sampled kernel.

    kernel_samples optionally overrides the pointy kernel (a test hook used
    by the 1D-extrusion cross-check); it must be a tuple of two sample
    arrays on the offset lattice.
    """
    if field.grid.dim != 2:
        raise FieldError("velocity_2d_spectral requires a 2D field")
    if kernel_samples is None:
        kernel_samples = pointy_kernel_samples(field.grid)
    comps = tuple(fft_convolve(g, field) for g in kernel_samples)
    return _check_velocity_bound(field, VelocityField(field.grid, comps))


def velocity_direct_oracle(field: Field, kernel_samples=None) -> VelocityField:
    """Brute-force counterpart of the spectral velocity, same kernel samples."""
    if kernel_samples is None:
        kernel_samples = pointy_kernel_samples(field.grid)
    comps = tuple(direct_convolve_oracle(g, field) for g in kernel_samples)
    return VelocityField(field.grid, comps)


def riesz_convolve(field: Field, lam: float) -> Field:
    """Riesz potential |x|^-lam * u (periodized, origin cell regularized)."""
    return Field(field.grid, fft_convolve(riesz_kernel_samples(field.grid, lam), field))
