"""Spatially correlated Rayleigh channels and the cascaded reflection gain.

The two hops of a reflected link are zero-mean complex Gaussian vectors with a
sinc-kernel spatial correlation across the surface elements. The whole
reflected path collapses to one complex scalar per frame (block fading), which
is all the detector ever sees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0

__all__ = [
    "SPEED_OF_LIGHT",
    "RisGeometry",
    "LinkBudget",
    "ChannelRealization",
    "CorrelationMatrix",
    "path_gain",
    "correlation_matrix",
    "identity_correlation",
    "sample_channel",
    "cascaded_gain",
]


@dataclass(frozen=True)
class RisGeometry:
    """Element layout of one surface: counts, spacing and carrier wavelength."""

    n: int
    n_h: int
    d_h: float
    d_v: float
    wavelength: float

    def __post_init__(self):
        if self.n <= 0 or self.n_h <= 0 or self.n % self.n_h != 0:
            raise ValueError("element count must be positive and divisible by row length")
        if min(self.d_h, self.d_v, self.wavelength) <= 0:
            raise ValueError("spacings and wavelength must be positive")

    def element_positions(self) -> np.ndarray:
        """(N, 3) positions: x fixed at 0, columns along y, rows along z."""
        w = np.arange(self.n)
        i_h = w % self.n_h
        i_v = w // self.n_h
        return np.stack(
            [np.zeros(self.n), i_h * self.d_h, i_v * self.d_v], axis=1
        )


@dataclass(frozen=True)
class LinkBudget:
    """Per-hop and overall path gains of one UE-surface-BS link."""

    f_c: float
    d_ur: float
    d_rb: float
    beta_ur: float
    beta_rb: float

    def __post_init__(self):
        if min(self.f_c, self.d_ur, self.d_rb, self.beta_ur, self.beta_rb) <= 0:
            raise ValueError("link budget values must be positive")

    @property
    def beta(self) -> float:
        return self.beta_ur * self.beta_rb

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    @classmethod
    def from_distances(cls, f_c: float, d_ur: float, d_rb: float) -> "LinkBudget":
        """Split the overall path gain evenly between the two hops."""
        beta = path_gain(f_c, d_ur, d_rb)
        hop = float(np.sqrt(beta))
        return cls(f_c=f_c, d_ur=d_ur, d_rb=d_rb, beta_ur=hop, beta_rb=hop)


def path_gain(f_c: float, d_ur: float, d_rb: float) -> float:
    """Overall two-hop path gain: lambda^4 / (256 pi^2 d_ur^2 d_rb^2)."""
    if min(f_c, d_ur, d_rb) <= 0:
        raise ValueError("frequency and distances must be positive")
    lam = SPEED_OF_LIGHT / f_c
    return lam**4 / (256.0 * np.pi**2 * d_ur**2 * d_rb**2)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Element correlation matrix together with a sampling factor F, F F^T ~ R."""

    r: np.ndarray
    factor: np.ndarray

    @property
    def n(self) -> int:
        return self.r.shape[0]


def correlation_matrix(geom: RisGeometry, eig_floor: float = -1e-9) -> CorrelationMatrix:
    """Sinc-kernel correlation across elements with a PSD sampling factor.

    R[w, w~] = sinc(2 ||u_w - u_w~|| / lambda). The kernel is analytically
    PSD but numerically rank deficient at dense spacing, so the factor comes
    from a symmetric eigendecomposition with tiny negative eigenvalues
    (>= eig_floor) clipped to zero; anything below the floor indicates model
    misuse and raises.
    """
    pos = geom.element_positions()
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    r = np.sinc(2.0 * dist / geom.wavelength)  # np.sinc(x) = sin(pi x)/(pi x)
    r = (r + r.T) / 2.0
    np.fill_diagonal(r, 1.0)
    eigval, eigvec = np.linalg.eigh(r)
    if eigval.min() < eig_floor:
        raise ValueError(
            f"correlation matrix has eigenvalue {eigval.min():.3e} below the "
            f"PSD tolerance {eig_floor:.1e}"
        )
    factor = eigvec * np.sqrt(np.clip(eigval, 0.0, None))
    return CorrelationMatrix(r=r, factor=factor)


def identity_correlation(n: int) -> CorrelationMatrix:
    """Uncorrelated elements; used by all closed-form analysis."""
    eye = np.eye(n)
    return CorrelationMatrix(r=eye, factor=eye.copy())


def sample_channel(
    corr: CorrelationMatrix,
    beta_hop: float,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Draw CN(0, beta_hop * R) vectors: sqrt(beta_hop) * F @ z.

    With ``size`` given, returns a (size, N) batch; otherwise a single (N,)
    vector. Reproducible bit-for-bit for a given generator state.
    """
    n = corr.n
    shape = (n,) if size is None else (size, n)
    z = rng.standard_normal(shape + (2,)).view(np.complex128)[..., 0] / np.sqrt(2.0)
    return np.sqrt(beta_hop) * (z @ corr.factor.T)


@dataclass(frozen=True)
class ChannelRealization:
    """One frame's two hop vectors and the resulting cascaded scalar gain."""

    h_ur: np.ndarray
    h_rb: np.ndarray
    h_tilde: complex

    @classmethod
    def draw(
        cls,
        corr: CorrelationMatrix,
        link: LinkBudget,
        power_w: float,
        rng: np.random.Generator,
    ) -> "ChannelRealization":
        h_ur = sample_channel(corr, link.beta_ur, rng)
        h_rb = sample_channel(corr, link.beta_rb, rng)
        return cls(h_ur=h_ur, h_rb=h_rb, h_tilde=cascaded_gain(h_ur, h_rb, power_w))


def cascaded_gain(h_ur: np.ndarray, h_rb: np.ndarray, power_w: float) -> complex:
    """Scalar gain of the whole reflected path: sqrt(P) * sum_i h_ur_i h_rb_i."""
    h_ur = np.asarray(h_ur)
    h_rb = np.asarray(h_rb)
    if h_ur.shape != h_rb.shape:
        raise ValueError("hop vectors must have equal length")
    return complex(np.sqrt(power_w) * np.sum(h_ur * h_rb))
