"""
Gevrey-class bumps and the radial frequency filters built from them.

A bump is the indicator of a slightly shorter interval smoothed by a
truncated infinite convolution of normalised box functions whose radii
shrink like n^-2. Its Fourier transform is an explicit product of sinc
factors and decays like exp(-c |x|^(1/2)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
import scipy.fft
from scipy import ndimage, stats

from decoupling_lab.config import get_cutoff_config, get_worker_count
from decoupling_lab.errors import InvalidParameterError
from decoupling_lab.synthesis import GridSpec, SampledField

FIT_RANGE = (10.0, 1000.0)
FIT_BINS = 60
FIT_SAMPLES = 200_000


class FilterKind(Enum):
    """Radial filter variants."""

    LOW = "low"
    HIGH = "high"
    ANNULUS = "annulus"


def box_radii(total_radius: float, conv_terms: int) -> np.ndarray:
    """Half-widths of the convolution factors: proportional to n^-2, summing to total_radius."""
    weights = 1.0 / np.arange(1, conv_terms + 1, dtype=float) ** 2
    return total_radius * weights / weights.sum()


def _smooth(values: np.ndarray, step: float, radii: np.ndarray, mode: str) -> np.ndarray:
    """Apply one box average per radius; boxes narrower than a sample are skipped."""
    out = values.astype(float)
    for radius in radii:
        half = int(np.floor(radius / step))
        if half < 1:
            continue
        out = ndimage.uniform_filter1d(out, size=2 * half + 1, mode=mode)
    return out


def fit_subexponential_decay(
    transform, x_range: tuple[float, float] = FIT_RANGE
) -> tuple[float, float, float]:
    """
    Fit |F(x)| <= K exp(-c sqrt(x)) on x_range.

    The maximum of log|F| in each bin of sqrt(x) is regressed on sqrt(x);
    c is minus the slope and K is the smallest constant that makes the bound
    hold at every sample.

    Returns:
        (K, c, fit_residual) with fit_residual = 1 - r^2
    """
    x = np.linspace(x_range[0], x_range[1], FIT_SAMPLES)
    log_abs = np.log(np.maximum(np.abs(transform(x)), 1e-300))
    root = np.sqrt(x)
    edges = np.linspace(root[0], root[-1], FIT_BINS + 1)
    slot = np.clip(np.digitize(root, edges) - 1, 0, FIT_BINS - 1)

    centres, peaks = [], []
    for b in range(FIT_BINS):
        members = np.flatnonzero(slot == b)
        if members.size == 0:
            continue
        best = members[np.argmax(log_abs[members])]
        centres.append(root[best])
        peaks.append(log_abs[best])

    fit = stats.linregress(centres, peaks)
    c = -float(fit.slope)
    K = float(np.max(np.exp(log_abs + c * root)))
    return K, c, 1.0 - float(fit.rvalue) ** 2


@dataclass(frozen=True, eq=False)
class GevreyBump:
    """A 1D Gevrey bump g with g = 1 on the plateau and g = 0 outside [-1, 1].

    Attributes:
        epsilon0: Plateau margin; plateau is [-(1 - epsilon0), 1 - epsilon0]
        conv_terms: Number of convolution factors kept
        plateau_halfwidth: 1 - epsilon0
        support_halfwidth: 1
        radii: Half-widths of the convolution factors
        nodes: Sample positions of the profile
        samples: Profile values at nodes
        decay_constant: Fitted c in |g^(x)| <= K exp(-c |x|^(1/2))
        decay_scale: Fitted K
        fit_residual: 1 - r^2 of the decay fit
    """

    epsilon0: float
    conv_terms: int
    plateau_halfwidth: float
    support_halfwidth: float
    radii: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    decay_constant: float = 0.0
    decay_scale: float = 0.0
    fit_residual: float = 1.0

    @property
    def margin(self) -> float:
        """Radius r of the smoothing measure."""
        return self.epsilon0 / 2.0

    def __call__(self, t: np.ndarray | float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        values = np.interp(t, self.nodes, self.samples, left=0.0, right=0.0)
        values = np.where(np.abs(t) >= self.support_halfwidth, 0.0, values)
        return np.where(np.abs(t) <= self.plateau_halfwidth, 1.0, values)

    def transform(self, x: np.ndarray | float) -> np.ndarray:
        """Fourier transform of the continuous bump: 2b sinc(2bx) prod sinc(2 a_n x), b = 1 - r."""
        x = np.asarray(x, dtype=float)
        b = 1.0 - self.margin
        out = 2.0 * b * np.sinc(2.0 * b * x)
        for radius in self.radii:
            out = out * np.sinc(2.0 * radius * x)
        return out

    def decay_bound(self, x: np.ndarray | float) -> np.ndarray:
        return self.decay_scale * np.exp(-self.decay_constant * np.sqrt(np.abs(x)))


def build_gevrey_bump(epsilon0: float | None = None, conv_terms: int | None = None) -> GevreyBump:
    """
    Build the reproducing bump g.

    g = 1_{[-1+r, 1-r]} * mu_r with r = epsilon0/2 and mu_r the truncated
    infinite convolution of normalised boxes of half-width proportional to n^-2.

    Args:
        epsilon0: Plateau margin in (0, 1/2); defaults to the configured value
        conv_terms: Number of convolution factors (>= 10); defaults to the configured value

    Returns:
        GevreyBump with a fitted decay constant

    Raises:
        InvalidParameterError: If a parameter is out of range
    """
    cfg = get_cutoff_config()
    eps = cfg.epsilon0 if epsilon0 is None else float(epsilon0)
    terms = cfg.conv_terms if conv_terms is None else int(conv_terms)
    if not 0.0 < eps < 0.5:
        raise InvalidParameterError(f"Invalid epsilon0: '{eps}'. Valid range: (0, 0.5)")
    if terms < 10:
        raise InvalidParameterError(f"Invalid conv_terms: '{terms}'. Must be >= 10")
    return _build_bump(eps, terms, cfg.profile_samples)


@lru_cache(maxsize=8)
def _build_bump(eps: float, terms: int, profile_samples: int) -> GevreyBump:
    r = eps / 2.0
    step = 1.0 / profile_samples
    reach = 1.0 + 4.0 * step
    nodes = np.arange(-reach, reach + step / 2, step)
    radii = box_radii(r, terms)

    indicator = (np.abs(nodes) <= 1.0 - r).astype(float)
    samples = _smooth(indicator, step, radii, mode="constant")
    samples[np.abs(nodes) >= 1.0] = 0.0
    samples[np.abs(nodes) <= 1.0 - eps] = 1.0
    for array in (nodes, radii, samples):
        array.setflags(write=False)

    bump = GevreyBump(
        epsilon0=eps,
        conv_terms=terms,
        plateau_halfwidth=1.0 - eps,
        support_halfwidth=1.0,
        radii=radii,
        nodes=nodes,
        samples=samples,
    )
    K, c, residual = fit_subexponential_decay(bump.transform)
    return GevreyBump(
        epsilon0=eps,
        conv_terms=terms,
        plateau_halfwidth=1.0 - eps,
        support_halfwidth=1.0,
        radii=radii,
        nodes=nodes,
        samples=samples,
        decay_constant=c,
        decay_scale=K,
        fit_residual=residual,
    )


def _radial_profile(conv_terms: int, samples_per_unit: int) -> tuple[np.ndarray, np.ndarray]:
    """Phi(t): 1 on t <= 1, 0 on t >= 2, smoothed by a measure of total radius 1/2."""
    step = 1.0 / samples_per_unit
    nodes = np.arange(0.0, 2.5 + step / 2, step)
    values = (nodes <= 1.5).astype(float)
    values = _smooth(values, step, box_radii(0.5, conv_terms), mode="nearest")
    values[nodes <= 1.0] = 1.0
    values[nodes >= 2.0] = 0.0
    return nodes, values


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Radial cutoffs on a grid's frequency mesh.

    Attributes:
        grid: Grid whose spectrum the filters act on
        radius: |xi| at every spectral index
        nodes: Sample positions of the radial profile Phi
        profile: Phi at nodes
    """

    grid: GridSpec
    radius: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    profile: np.ndarray = field(repr=False)

    def phi_at(self, t: np.ndarray) -> np.ndarray:
        return np.interp(t, self.nodes, self.profile, left=1.0, right=0.0)

    def base(self) -> np.ndarray:
        """phi(xi)."""
        return self.phi_at(self.radius)

    def low(self, r: float) -> np.ndarray:
        """eta_{<=r}(xi) = phi(xi/r)."""
        _check_radius(r)
        return self.phi_at(self.radius / r)

    def high(self, r: float) -> np.ndarray:
        """eta_{>r} = phi - eta_{<=r}."""
        return self.base() - self.low(r)

    def annulus(self, r: float) -> np.ndarray:
        """eta_{~r}(xi) = phi(xi/r) - phi(2 xi/r)."""
        _check_radius(r)
        return self.phi_at(self.radius / r) - self.phi_at(2.0 * self.radius / r)

    def multiplier(self, r: float, kind: FilterKind | str) -> np.ndarray:
        try:
            kind = FilterKind(kind)
        except ValueError:
            valid = ", ".join(k.value for k in FilterKind)
            raise InvalidParameterError(
                f"Invalid filter kind: '{kind}'. Valid options: {valid}"
            ) from None
        if kind is FilterKind.LOW:
            return self.low(r)
        if kind is FilterKind.HIGH:
            return self.high(r)
        return self.annulus(r)


def _check_radius(r: float) -> None:
    if not r > 0:
        raise InvalidParameterError(f"Invalid filter radius: '{r}'. Must be positive")


def build_filter_bank(grid: GridSpec, conv_terms: int | None = None) -> FilterBank:
    """Build the radial filters for a grid."""
    cfg = get_cutoff_config()
    terms = cfg.conv_terms if conv_terms is None else conv_terms
    freqs = grid.frequencies()
    radius = np.hypot(freqs[:, None], freqs[None, :])
    nodes, profile = _radial_profile(terms, cfg.profile_samples)
    return FilterBank(grid=grid, radius=radius, nodes=nodes, profile=profile)


def apply_multiplier(field_: SampledField, multiplier: np.ndarray) -> SampledField:
    """Multiply the spectrum of a field; real input stays real."""
    workers = get_worker_count()
    spectrum = scipy.fft.fft2(field_.values, workers=workers)
    out = scipy.fft.ifft2(spectrum * multiplier, workers=workers)
    if not np.iscomplexobj(field_.values):
        out = out.real
    return field_.with_values(out)


def band_filter(
    sq_field: SampledField,
    r: float,
    kind: FilterKind | str,
    bank: FilterBank | None = None,
) -> SampledField:
    """
    Filter a field with eta_{<=r} (low), eta_{>r} (high) or eta_{~r} (annulus).

    Raises:
        InvalidParameterError: If r <= 0 or the kind is unknown
    """
    _check_radius(r)
    bank = bank if bank is not None and bank.grid == sq_field.grid else build_filter_bank(
        sq_field.grid
    )
    return apply_multiplier(sq_field, bank.multiplier(r, kind))


def box_cutoff(
    bump: GevreyBump,
    grid: GridSpec,
    center: tuple[float, float],
    tangent: tuple[float, float],
    half_extents: tuple[float, float],
) -> np.ndarray:
    """
    rho_T on the grid's frequency mesh for a box T.

    T has the given centre, long axis along `tangent` and half extents
    (along, across). rho_T = 1 on (2 - 2 epsilon0) T and 0 outside 2T.
    """
    freqs = grid.frequencies()
    xi1 = freqs[:, None] - center[0]
    xi2 = freqs[None, :] - center[1]
    tx, ty = tangent
    along = xi1 * tx + xi2 * ty
    across = -xi1 * ty + xi2 * tx
    return bump(along / (2.0 * half_extents[0])) * bump(across / (2.0 * half_extents[1]))


def cutoff_kernel(cutoff: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Periodic inverse transform (1/R^2) sum_xi rho(xi) e^{2 pi i xi.x} on the grid nodes."""
    kernel = scipy.fft.ifft2(cutoff, norm="forward", workers=get_worker_count())
    return kernel / grid.cell_measure
