"""Closed-form convolutional neural tangent kernel over grid coordinates.

The kernel is the infinite-width NTK of a depth-L convolutional network with
leaky-ReLU activations, evaluated between every pair of grid pixels. It is
computed by the standard layerwise recursion: a patchwise covariance
aggregation (the convolution), followed by the Gaussian dual of the
activation, accumulating the tangent kernel alongside the covariance.

Two padding conventions are supported for the aggregation. "extrapolate"
(the default) corresponds to a linear odd-reflection padding layer before
each convolution; it continues ramps through the grid border and leaves
constants invariant, which keeps boundary pixels as predictable as interior
ones. "zero" is plain zero padding; it decays boundary energy with depth
and is retained for reference and tests.

The input is a small stack of real feature planes built from the sparse
pilot image. `build_prior` produces the plain 5-plane stack (values, mask,
coordinates); `build_estimation_prior` produces the weighted 6-plane stack
(plus a constant bias plane) the channel estimator uses, where the plane
amplitudes set the kernel's length scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SparseChannelEstimate, _locked

#: Plane count of the plain prior: re, im, mask, row coordinate, column coordinate.
N_PRIOR_CHANNELS = 5

#: Tolerance on the Cauchy-Schwarz covariance validity check.
COV_TOL = 1e-8

PADDING_MODES = ("extrapolate", "zero")


@dataclass(frozen=True)
class CntkConfig:
    """Kernel hyperparameters of the underlying convolutional architecture.

    depth: number of conv+activation layers L.
    filter_size: odd spatial extent q of each conv filter.
    neg_slope / pos_slope: leaky-ReLU slopes for negative / positive inputs.
    eps_rho: variance floor below which a pixel is treated as zero-energy.
    padding: boundary handling of the patch aggregation, "extrapolate" or "zero".
    """

    depth: int = 8
    filter_size: int = 3
    neg_slope: float = 0.05
    pos_slope: float = 1.0
    eps_rho: float = 1e-9
    padding: str = "extrapolate"

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.filter_size < 1 or self.filter_size % 2 == 0:
            raise ValueError("filter_size must be odd and positive")
        if not (0 <= self.neg_slope <= self.pos_slope) or not (self.pos_slope > 0):
            raise ValueError("slopes must satisfy 0 <= neg_slope <= pos_slope, pos_slope > 0")
        if self.padding not in PADDING_MODES:
            raise ValueError(f"padding must be one of {PADDING_MODES}")

    def fingerprint(self) -> str:
        """Compact tag used in serialized estimate headers."""
        tag = (f"L{self.depth}q{self.filter_size}"
               f"a{self.neg_slope:g}b{self.pos_slope:g}")
        if self.padding != "extrapolate":
            tag += f"p{self.padding}"
        return tag


@dataclass(frozen=True)
class PriorWeights:
    """Amplitudes of the estimation prior's feature planes.

    The bias plane dominates, so pairwise feature gaps (hence kernel
    correlation gaps) scale like |delta features|^2 / (2 * bias^2): the
    coordinate weights set per-axis length scales, and the value/mask
    weights set how strongly observed pilot structure perturbs them. The
    column axis gets a larger weight because the channel decorrelates
    faster across OFDM symbols (Doppler) than across subcarriers.
    """

    value: float = 0.03
    mask: float = 0.03
    row: float = 1.0
    col: float = 2.0
    bias: float = 32.0


@dataclass(frozen=True)
class PriorTensor:
    """Real C x M x N feature stack fed to the kernel recursion.

    The plain construction (`build_prior`) has C = 5 planes: pilot real and
    imaginary values jointly scaled to combined max abs 1 (scale recorded),
    the 0/1 pilot mask, and normalized coordinates m/(M-1), n/(N-1). The
    estimation construction appends a constant bias plane (C = 6) and
    weights each plane.
    """

    planes: np.ndarray  # float64, shape (C, M, N)
    scale: float

    def __post_init__(self):
        planes = _locked(self.planes, np.float64)
        if planes.ndim != 3 or planes.shape[0] < 1:
            raise ValueError("prior must be a non-empty stack of M x N planes")
        if not np.all(np.isfinite(planes)):
            raise ValueError("prior entries must be finite")
        object.__setattr__(self, "planes", planes)

    @property
    def n_channels(self) -> int:
        return self.planes.shape[0]

    @property
    def dims(self) -> tuple[int, int]:
        return self.planes.shape[1], self.planes.shape[2]


@dataclass(frozen=True)
class CoordinateKernel:
    """Symmetric PSD Gram matrix over the P = M*N flattened grid pixels.

    Pixel (m, n) maps to flat index m*N + n (row-major).
    """

    gram: np.ndarray  # float64, shape (P, P)
    dims: tuple[int, int]

    def __post_init__(self):
        gram = _locked(self.gram, np.float64)
        M, N = self.dims
        if gram.shape != (M * N, M * N):
            raise ValueError("gram shape does not match dims")
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "dims", (int(M), int(N)))


def _coordinate_planes(M: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    rows = np.arange(M, dtype=np.float64) / (M - 1) if M > 1 else np.zeros(M)
    cols = np.arange(N, dtype=np.float64) / (N - 1) if N > 1 else np.zeros(N)
    return (np.repeat(rows[:, None], N, axis=1),
            np.repeat(cols[None, :], M, axis=0))


def build_prior(sparse: SparseChannelEstimate) -> PriorTensor:
    """Assemble the plain 5-plane prior for a sparse pilot image.

    The real/imag planes share one scale factor (their combined max absolute
    value becomes 1); an all-zero pilot image keeps scale 1. Coordinate
    planes span [0, 1], or 0 when the dimension is a single cell.
    """
    if sparse.n_pilots < 1:
        raise ValueError("prior needs at least one pilot")
    M, N = sparse.shape
    re = sparse.values.real.copy()
    im = sparse.values.imag.copy()
    scale = max(np.abs(re).max(), np.abs(im).max())
    if scale == 0.0:
        scale = 1.0
    re /= scale
    im /= scale
    row_plane, col_plane = _coordinate_planes(M, N)
    planes = np.stack([re, im, sparse.mask.astype(np.float64), row_plane, col_plane])
    return PriorTensor(planes, float(scale))


def build_estimation_prior(sparse: SparseChannelEstimate,
                           weights: PriorWeights = PriorWeights()) -> PriorTensor:
    """Assemble the weighted 6-plane prior used by the channel estimator.

    Same plane roles as `build_prior` plus a constant bias plane, with each
    plane multiplied by its weight. Values are expected to be pre-centered
    by the caller; the joint max-abs normalization and recorded scale work
    as in `build_prior`.
    """
    if sparse.n_pilots < 1:
        raise ValueError("prior needs at least one pilot")
    M, N = sparse.shape
    re = sparse.values.real.copy()
    im = sparse.values.imag.copy()
    scale = max(np.abs(re).max(), np.abs(im).max())
    if scale == 0.0:
        scale = 1.0
    re /= scale
    im /= scale
    row_plane, col_plane = _coordinate_planes(M, N)
    planes = np.stack([
        weights.value * re,
        weights.value * im,
        weights.mask * sparse.mask.astype(np.float64),
        weights.row * row_plane,
        weights.col * col_plane,
        weights.bias * np.ones((M, N)),
    ])
    return PriorTensor(planes, float(scale))


def leaky_relu_duals(lam11, lam22, lam12, neg_slope: float, pos_slope: float,
                     eps_rho: float = 1e-9):
    """Gaussian dual of the leaky ReLU: (Sigma, Sigma_dot).

    For (u, v) zero-mean bivariate normal with covariance
    [[lam11, lam12], [lam12, lam22]], returns E[act(u)act(v)] and
    E[act'(u)act'(v)] in closed form. With rho = lam12/sqrt(lam11*lam22)
    clamped to [-1, 1], theta = arccos(rho):

        kappa0 = (pi - theta)/pi
        kappa1 = (sqrt(1 - rho^2) + (pi - theta)*rho)/pi
        Sigma     = sqrt(lam11*lam22) * (a*b*rho + ((b-a)^2/2)*kappa1)
        Sigma_dot = a*b + ((b-a)^2/2)*kappa0

    Degenerate pixels (lam11*lam22 < eps_rho^2) take the rho = 0 limit:
    Sigma = 0 and Sigma_dot at independent inputs. Accepts scalars or
    broadcastable arrays; raises ValueError if |lam12| exceeds
    sqrt(lam11*lam22) beyond COV_TOL.
    """
    lam11 = np.asarray(lam11, dtype=np.float64)
    lam22 = np.asarray(lam22, dtype=np.float64)
    lam12 = np.asarray(lam12, dtype=np.float64)
    if np.any(lam11 < 0) or np.any(lam22 < 0):
        raise ValueError("variances must be non-negative")
    prod = lam11 * lam22
    root = np.sqrt(prod)
    if np.any(np.abs(lam12) > root + COV_TOL):
        raise ValueError("invalid covariance: |lam12| exceeds sqrt(lam11*lam22)")
    a, b = neg_slope, pos_slope
    degenerate = prod < eps_rho * eps_rho
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(degenerate, 0.0, lam12 / np.where(degenerate, 1.0, root))
    rho = np.clip(rho, -1.0, 1.0)
    theta = np.arccos(rho)
    kappa0 = (np.pi - theta) / np.pi
    kappa1 = (np.sqrt(np.maximum(1.0 - rho * rho, 0.0)) + (np.pi - theta) * rho) / np.pi
    sigma = root * (a * b * rho + 0.5 * (b - a) ** 2 * kappa1)
    sigma = np.where(degenerate, 0.0, sigma)
    sigma_dot = a * b + 0.5 * (b - a) ** 2 * kappa0
    if sigma.ndim == 0:
        return float(sigma), float(sigma_dot)
    return sigma, sigma_dot


def patch_aggregate(field: np.ndarray, dims: tuple[int, int], q: int,
                    padding: str = "extrapolate") -> np.ndarray:
    """Diagonal patch trace of a pixel-pair field: the conv layer's kernel map.

    out[i, j] = (1/q^2) * sum over offsets (a, b) in [-q//2, q//2]^2 of
    field[i + (a, b), j + (a, b)], where both pixel indices shift by the
    SAME offset. Out-of-bounds samples follow the padding mode: under
    "extrapolate" the field is continued by odd reflection (linear
    extrapolation through the border, the covariance map of an
    odd-reflection padding layer); under "zero" they contribute zero.
    """
    if q < 1 or q % 2 == 0:
        raise ValueError("q must be odd and positive")
    if padding not in PADDING_MODES:
        raise ValueError(f"padding must be one of {PADDING_MODES}")
    M, N = dims
    P = M * N
    if field.shape != (P, P):
        raise ValueError(f"field must be {P}x{P} for dims {dims}")
    if q == 1:
        return field.copy()
    r = q // 2
    f4 = field.reshape(M, N, M, N)
    if padding == "zero":
        padded = np.zeros((M + 2 * r, N + 2 * r, M + 2 * r, N + 2 * r))
        padded[r:r + M, r:r + N, r:r + M, r:r + N] = f4
    else:
        padded = np.pad(f4, r, mode="reflect", reflect_type="odd")
    out = np.zeros((M, N, M, N))
    for da in range(q):
        for db in range(q):
            out += padded[da:da + M, db:db + N, da:da + M, db:db + N]
    out /= q * q
    return out.reshape(P, P)


def compute_cntk(prior: PriorTensor, cfg: CntkConfig = CntkConfig()) -> CoordinateKernel:
    """Run the depth-L kernel recursion on a prior tensor.

    Layer 0: Sigma = A^T A over channels, Theta = Sigma. Each layer h then
    aggregates patches, pushes the covariance through the activation dual,
    and updates Theta = aggregate(Theta) * Sigma_dot + Sigma. The result is
    the pixelwise tangent kernel (no pooling), symmetrized as (G + G^T)/2.
    """
    M, N = prior.dims
    P = M * N
    A = prior.planes.reshape(prior.n_channels, P)
    sigma = A.T @ A
    theta = sigma.copy()
    a, b = cfg.neg_slope, cfg.pos_slope
    for _ in range(cfg.depth):
        cov = patch_aggregate(sigma, (M, N), cfg.filter_size, cfg.padding)
        theta_agg = patch_aggregate(theta, (M, N), cfg.filter_size, cfg.padding)
        # the aggregated covariance is PSD up to rounding; clip float dust
        diag = np.maximum(np.diag(cov).copy(), 0.0)
        sigma, sigma_dot = leaky_relu_duals(diag[:, None], diag[None, :], cov,
                                            a, b, cfg.eps_rho)
        theta = theta_agg * sigma_dot + sigma
    gram = 0.5 * (theta + theta.T)
    if not np.all(np.isfinite(gram)):
        raise ValueError("kernel recursion produced non-finite entries")
    return CoordinateKernel(gram, (M, N))


def normalize_kernel(kernel: CoordinateKernel) -> CoordinateKernel:
    """Rescale a kernel to unit diagonal (correlation form).

    D^-1/2 K D^-1/2 preserves symmetry and positive semi-definiteness and
    removes pixel-energy profiles, so regression weights depend only on the
    kernel's correlation structure. Zero-diagonal pixels pass through.
    """
    d = np.sqrt(np.maximum(np.diag(kernel.gram), 0.0))
    d = np.where(d > 0, d, 1.0)
    gram = kernel.gram / d[:, None] / d[None, :]
    return CoordinateKernel(gram, kernel.dims)


def mc_dual_oracle(lam11: float, lam22: float, lam12: float, neg_slope: float,
                   pos_slope: float, samples: int, seed: int):
    """Monte-Carlo estimate of the activation duals, with standard errors.

    Draws `samples` bivariate normal pairs and averages act(u)act(v) and
    act'(u)act'(v). Returns (sigma_mc, sigma_dot_mc, se_sigma, se_sigma_dot).
    Deterministic given seed; serves as the independent check on the closed
    forms in `leaky_relu_duals`.
    """
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    root = np.sqrt(lam11 * lam22)
    if abs(lam12) > root + COV_TOL:
        raise ValueError("invalid covariance")
    rng = np.random.default_rng(seed)
    z1 = rng.standard_normal(samples)
    z2 = rng.standard_normal(samples)
    if lam11 > 0:
        u = np.sqrt(lam11) * z1
        resid = max(lam22 - lam12 * lam12 / lam11, 0.0)
        v = (lam12 / np.sqrt(lam11)) * z1 + np.sqrt(resid) * z2
    else:
        u = np.zeros(samples)
        v = np.sqrt(lam22) * z2
    a, b = neg_slope, pos_slope

    def act(x):
        return np.where(x >= 0, b * x, a * x)

    def dact(x):
        return np.where(x >= 0, b, a)

    prod = act(u) * act(v)
    dprod = dact(u) * dact(v)
    sigma_mc = float(prod.mean())
    sigma_dot_mc = float(dprod.mean())
    se_sigma = float(prod.std(ddof=1) / np.sqrt(samples))
    se_sigma_dot = float(dprod.std(ddof=1) / np.sqrt(samples))
    return sigma_mc, sigma_dot_mc, se_sigma, se_sigma_dot
