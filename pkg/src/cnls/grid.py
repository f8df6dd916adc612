"""Periodic spectral grids, complex field vectors, and the modulus calculus.

The whole-space problem is truncated to a periodic box; box lengths must be
chosen large enough that localized states decay to roundoff at the boundary,
after which all quadrature and differentiation below is spectrally accurate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Modulus below which the quotient formula for the derivative of |z| is
# replaced by 0 (the continuum definition assigns 0 on the zero set).
EPS_MODULUS = 1e-14

# Hard cap on total grid points (keeps flat indexing well inside int range).
MAX_TOTAL_POINTS = 2**28


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=True)
class Grid:
    """Uniform periodic grid on a centered box in 1, 2 or 3 dimensions.

    Point counts must be powers of two (>= 8 per axis); coordinates run over
    [-L_i/2, L_i/2) and wavenumbers follow the usual FFT layout, covering
    (2*pi/L_i) * {-n_i/2, ..., n_i/2 - 1}.
    """

    points_per_dim: tuple[int, ...]
    lengths_per_dim: tuple[float, ...]

    def __post_init__(self) -> None:
        points = tuple(int(n) for n in self.points_per_dim)
        lengths = tuple(float(length) for length in self.lengths_per_dim)
        object.__setattr__(self, "points_per_dim", points)
        object.__setattr__(self, "lengths_per_dim", lengths)

        n_dims = len(points)
        if n_dims not in (1, 2, 3):
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {n_dims}")
        if len(lengths) != n_dims:
            raise ValueError("points_per_dim and lengths_per_dim lengths differ")
        for n in points:
            if n < 8 or not _is_power_of_two(n):
                raise ValueError(f"points per axis must be a power of two >= 8, got {n}")
        for length in lengths:
            if not np.isfinite(length) or length <= 0.0:
                raise ValueError(f"box lengths must be positive, got {length}")
        total = 1
        for n in points:
            total *= n
        if total > MAX_TOTAL_POINTS:
            raise ValueError(f"grid has {total} points, exceeding the {MAX_TOTAL_POINTS} cap")

        spacings = tuple(length / n for length, n in zip(lengths, points))
        coords = tuple(
            (-lengths[i] / 2.0 + spacings[i] * np.arange(points[i])) for i in range(n_dims)
        )
        wavenumbers = tuple(
            2.0 * np.pi * np.fft.fftfreq(points[i], d=spacings[i]) for i in range(n_dims)
        )

        # Broadcastable views: axis i varies along dimension i only.
        def _bcast(arr: np.ndarray, axis: int) -> np.ndarray:
            shape = [1] * n_dims
            shape[axis] = arr.size
            return arr.reshape(shape)

        k_sq = np.zeros(points, dtype=np.float64)
        for i in range(n_dims):
            k_sq = k_sq + _bcast(wavenumbers[i], i) ** 2

        object.__setattr__(self, "spacings", spacings)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "wavenumbers", wavenumbers)
        object.__setattr__(self, "k_sq", k_sq)

    @property
    def n_dims(self) -> int:
        return len(self.points_per_dim)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points_per_dim

    @property
    def total_points(self) -> int:
        total = 1
        for n in self.points_per_dim:
            total *= n
        return total

    @property
    def cell_volume(self) -> float:
        vol = 1.0
        for dx in self.spacings:
            vol *= dx
        return vol

    @property
    def box_volume(self) -> float:
        vol = 1.0
        for length in self.lengths_per_dim:
            vol *= length
        return vol

    def coord_arrays(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcastable to the full grid shape."""
        out = []
        for i, c in enumerate(self.coords):
            shape = [1] * self.n_dims
            shape[i] = c.size
            out.append(c.reshape(shape))
        return tuple(out)

    def wavenumber_array(self, axis: int) -> np.ndarray:
        """Wavenumbers along one axis, broadcastable to the grid shape."""
        k = self.wavenumbers[axis]
        shape = [1] * self.n_dims
        shape[axis] = k.size
        return k.reshape(shape)

    def zeros_complex(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=np.complex128)

    def zeros_real(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=np.float64)


def _validate_values(grid: Grid, values: np.ndarray, dtype: np.dtype) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=dtype)
    if arr.shape != grid.shape:
        raise ValueError(f"field shape {arr.shape} does not match grid shape {grid.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("field contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class ComplexField:
    """One complex-valued component on a grid (z = u + i v)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _validate_values(self.grid, self.values, np.complex128))


@dataclass(frozen=True, eq=False)
class RealField:
    """One real-valued field on a grid (components u, v, or a modulus |z|)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _validate_values(self.grid, self.values, np.float64))


@dataclass(frozen=True, eq=False)
class FieldVector:
    """State of the coupled system: a tuple of complex components on one grid."""

    components: tuple[ComplexField, ...]

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if len(comps) < 1:
            raise ValueError("a field vector needs at least one component")
        grid = comps[0].grid
        for c in comps[1:]:
            if c.grid != grid:
                raise ValueError("all components must share one grid")
        object.__setattr__(self, "components", comps)

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    @property
    def ell(self) -> int:
        return len(self.components)

    def arrays(self) -> list[np.ndarray]:
        """The raw component arrays (callers must treat them as read-only)."""
        return [c.values for c in self.components]

    @staticmethod
    def from_arrays(grid: Grid, arrays) -> "FieldVector":
        return FieldVector(tuple(ComplexField(grid, a) for a in arrays))


# ---------------------------------------------------------------------------
# quadrature and norms
# ---------------------------------------------------------------------------

def integrate(f: RealField) -> float:
    """Box quadrature: sum of samples times the cell volume.

    numpy's pairwise summation over the contiguous array makes the result
    reproducible bit-for-bit, independent of any elementwise parallelism.
    """
    vals = f.values
    if not np.isfinite(vals).all():
        raise ValueError("cannot integrate a field with non-finite entries")
    return float(np.sum(vals) * f.grid.cell_volume)


def _l2_sq(grid: Grid, values: np.ndarray) -> float:
    if np.iscomplexobj(values):
        dens = values.real * values.real + values.imag * values.imag
    else:
        dens = values * values
    return float(np.sum(dens) * grid.cell_volume)


def l2_norm_sq(z: ComplexField) -> float:
    """Integral of |z|^2 = u^2 + v^2 over the box."""
    return _l2_sq(z.grid, z.values)


def _gradient_sq(grid: Grid, values: np.ndarray) -> float:
    """Sum over axes of the integral of |d_i z|^2, evaluated spectrally."""
    spectrum = np.fft.fftn(values)
    power = spectrum.real * spectrum.real + spectrum.imag * spectrum.imag
    total = 0.0
    for i in range(grid.n_dims):
        ki = grid.wavenumber_array(i)
        total += float(np.sum(ki * ki * power))
    return total * grid.cell_volume / grid.total_points


def gradient_sq_norm(z: ComplexField) -> float:
    """Integral of |grad z|^2, with derivatives taken by wavenumber multiplication."""
    return _gradient_sq(z.grid, z.values)


def _spectral_partial(grid: Grid, values: np.ndarray, axis: int) -> np.ndarray:
    """Partial derivative along one axis via a 1-D transform on that axis."""
    spectrum = np.fft.fft(values, axis=axis)
    spectrum *= 1j * grid.wavenumber_array(axis)
    return np.fft.ifft(spectrum, axis=axis)


def _spectral_partial_real(grid: Grid, values: np.ndarray, axis: int) -> np.ndarray:
    return _spectral_partial(grid, values.astype(np.float64, copy=False), axis).real


def _laplacian(grid: Grid, values: np.ndarray) -> np.ndarray:
    spectrum = np.fft.fftn(values)
    spectrum *= -grid.k_sq
    return np.fft.ifftn(spectrum)


def modulus(z: ComplexField) -> RealField:
    """Pointwise modulus (u^2 + v^2)^(1/2)."""
    return RealField(z.grid, np.hypot(z.values.real, z.values.imag))


def _modulus_partial_values(grid: Grid, values: np.ndarray, axis: int) -> np.ndarray:
    u = values.real
    v = values.imag
    du = _spectral_partial_real(grid, u, axis)
    dv = _spectral_partial_real(grid, v, axis)
    m = np.hypot(u, v)
    mask = m > EPS_MODULUS
    out = np.zeros_like(m)
    np.divide(u * du + v * dv, m, out=out, where=mask)
    return out


def modulus_partial(z: ComplexField, axis: int) -> RealField:
    """Weak partial derivative of |z| along one axis.

    Returns (u du + v dv) / (u^2 + v^2)^(1/2) where the modulus exceeds
    EPS_MODULUS and 0 elsewhere; by Cauchy-Schwarz the result is pointwise
    bounded by (du^2 + dv^2)^(1/2).
    """
    if not 0 <= axis < z.grid.n_dims:
        raise ValueError(f"axis {axis} out of range for a {z.grid.n_dims}-d grid")
    return RealField(z.grid, _modulus_partial_values(z.grid, z.values, axis))


def h1_norm_sq(z: FieldVector) -> float:
    """Squared Sobolev norm summed over components: |z|_2^2 + |grad z|_2^2."""
    total = 0.0
    for c in z.components:
        total += _l2_sq(c.grid, c.values) + _gradient_sq(c.grid, c.values)
    return total


def h1_distance(a: FieldVector, b: FieldVector) -> float:
    """Sobolev distance between two states on the same grid."""
    if a.grid != b.grid:
        raise ValueError("states live on different grids")
    if a.ell != b.ell:
        raise ValueError(f"component counts differ: {a.ell} vs {b.ell}")
    total = 0.0
    for ca, cb in zip(a.components, b.components):
        diff = ca.values - cb.values
        total += _l2_sq(a.grid, diff) + _gradient_sq(a.grid, diff)
    return float(np.sqrt(total))
