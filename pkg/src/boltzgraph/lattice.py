"""Finite torus lattice, Fourier transforms, and the lattice dispersion.

Conventions
-----------
The box with half-width L at scale rho (1/rho a positive integer) is

    Lambda_{L,rho} = rho * {-L/rho, ..., L/rho}^3,    M = 2L/rho + 1 sites per axis.

Fourier transform pair (the e^{+-2 pi i k x} convention):

    fhat(k)  = rho^3 sum_x e^{-2 pi i k x} f(x)
    g_vee(x) = int dk g(k) e^{+2 pi i k x},   int dk := (rho^3 M^3)^{-1} sum_k.

The dual measure above is the unique choice making the pair an exact
inversion.  The dual grid is taken as

    k_m = 2 m / (rho M),   m in {-L/rho, ..., L/rho}^3,

spacing 2/(2L+rho) ~ 1/L inside rho^{-1}[-1, 1)^3.  Because M is odd,
m -> 2m mod M is a bijection, so {e^{-2 pi i k_m x}} is exactly the full
character set of the M^3-site torus: the literal spacing-1/L grid would be
a singular (non-invertible) transform and is not used.  With this measure,
Parseval reads  int dk |fhat|^2 = rho^3 sum_x |f|^2  (exact equality of the
plain sums at rho = 1).

delta convention: (1)^hat(k) vanishes off k = 0 and equals rho^3 M^3 at
k = 0, i.e. delta(0) = |Lambda_{L,rho}| up to the rho^3 prefactor.

Sites and dual points are stored row-major over the shifted cube
{0..M-1}^3 (index i <-> coordinate i - (M-1)/2); this order is part of the
serialization format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

MAGIC = b"BGF1"

POSITION = "position"
MOMENTUM = "momentum"


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry of Lambda_{L,rho} and its dual grid."""

    L: int
    rho: Fraction = Fraction(1)

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L}")
        rho = Fraction(self.rho)
        if rho <= 0 or (1 / rho).denominator != 1:
            raise ValueError(f"1/rho must be a positive integer, got rho={self.rho}")
        object.__setattr__(self, "rho", rho)

    @property
    def half_extent(self) -> int:
        # J = L/rho: sites are rho*{-J..J}
        return int(self.L / self.rho)

    @property
    def points_per_axis(self) -> int:
        return 2 * self.half_extent + 1

    @property
    def n_sites(self) -> int:
        return self.points_per_axis ** 3

    def site_coords_1d(self) -> np.ndarray:
        """Physical site coordinates along one axis, in storage order."""
        J = self.half_extent
        return float(self.rho) * np.arange(-J, J + 1)

    def dual_coords_1d(self) -> np.ndarray:
        """Dual grid coordinates k_m = 2m/(rho M) along one axis, in storage order."""
        J = self.half_extent
        M = self.points_per_axis
        return 2.0 * np.arange(-J, J + 1) / (float(self.rho) * M)

    @property
    def dual_measure(self) -> float:
        """Weight of one dual point in int dk = (rho^3 M^3)^{-1} sum_k."""
        return 1.0 / (float(self.rho) ** 3 * self.n_sites)

    def dual_index_maps(self):
        """Index maps between storage order and DFT character order.

        Returns (fwd, inv): fwd[mi] is the DFT frequency of dual point mi,
        inv is its inverse permutation.
        """
        J = self.half_extent
        M = self.points_per_axis
        m = np.arange(-J, J + 1)
        fwd = np.mod(2 * m, M)
        inv = np.empty(M, dtype=np.int64)
        inv[fwd] = np.arange(M)
        return fwd, inv


def make_lattice(L: int, rho=Fraction(1)) -> LatticeSpec:
    """Build a LatticeSpec, validating L >= 1 and 1/rho in N."""
    return LatticeSpec(int(L), Fraction(rho))


@dataclass
class Field:
    """Complex-valued function on Lambda_{L,rho} or its dual grid.

    values is a (M, M, M) complex array in storage order; axis i runs over
    the i-th coordinate's shifted cube.
    """

    lattice: LatticeSpec
    representation: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.representation not in (POSITION, MOMENTUM):
            raise ValueError(f"unknown representation {self.representation!r}")
        M = self.lattice.points_per_axis
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (M, M, M):
            raise ValueError(f"values shape {vals.shape} != {(M, M, M)}")
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise ValueError("Field values must be finite")
        self.values = vals

    def copy(self) -> "Field":
        return Field(self.lattice, self.representation, self.values.copy())

    def norm(self) -> float:
        """l2 norm: plain site sum in position, dual-measure sum in momentum."""
        s = np.vdot(self.values, self.values).real
        if self.representation == MOMENTUM:
            s *= self.lattice.dual_measure
        return float(np.sqrt(s))


def _require(f: Field, representation: str):
    if f.representation != representation:
        raise ValueError(
            f"expected a {representation}-representation Field, got {f.representation}"
        )


def forward_fourier(f: Field) -> Field:
    """fhat(k) = rho^3 sum_x e^{-2 pi i k x} f(x) on the dual grid."""
    _require(f, POSITION)
    lat = f.lattice
    J = lat.half_extent
    fwd, _ = lat.dual_index_maps()
    work = np.roll(f.values, (-J, -J, -J), axis=(0, 1, 2))
    G = np.fft.fftn(work)
    out = G[np.ix_(fwd, fwd, fwd)] * float(lat.rho) ** 3
    return Field(lat, MOMENTUM, out)


def inverse_fourier(g: Field) -> Field:
    """g_vee(x) = int dk g(k) e^{+2 pi i k x} with the exact-inversion measure."""
    _require(g, MOMENTUM)
    lat = g.lattice
    J = lat.half_extent
    M = lat.points_per_axis
    _, inv = lat.dual_index_maps()
    # scatter dual values to character order, then plain inverse DFT
    H = g.values[np.ix_(inv, inv, inv)]
    work = np.fft.ifftn(H) / float(lat.rho) ** 3
    out = np.roll(work, (J, J, J), axis=(0, 1, 2))
    return Field(lat, POSITION, out)


def fourier_reference(f: Field) -> Field:
    """Direct O(n^2) transform from the definition; small lattices only."""
    _require(f, POSITION)
    lat = f.lattice
    if lat.n_sites > 20000:
        raise ValueError("reference transform is O(n^2); use forward_fourier")
    x = lat.site_coords_1d()
    k = lat.dual_coords_1d()
    A = np.exp(-2j * np.pi * np.outer(k, x))  # (M, M) per axis
    out = np.einsum("ax,by,cz,xyz->abc", A, A, A, f.values, optimize=True)
    return Field(lat, MOMENTUM, out * float(lat.rho) ** 3)


def fine_momentum_samples(f: Field, factor: int) -> np.ndarray:
    """fhat evaluated on the refined grid k_q = 2q/(rho M factor), q mod M*factor.

    Returns an (N, N, N) array with N = M*factor indexed by the DFT
    character q' = (2q mod N); used to sample the trigonometric extension
    of fhat at off-grid points such as v +- xi/2.
    """
    _require(f, POSITION)
    lat = f.lattice
    M = lat.points_per_axis
    J = lat.half_extent
    N = M * factor
    big = np.zeros((N, N, N), dtype=np.complex128)
    idx = np.mod(np.arange(-J, J + 1), N)
    big[np.ix_(idx, idx, idx)] = f.values
    return np.fft.fftn(big) * float(lat.rho) ** 3


def dispersion(k) -> np.ndarray:
    """Lattice kinetic energy e_Delta(k) = sum_i (1 - cos 2 pi k_i), in [0, 6].

    k has shape (..., 3); the function is total (1/rho-periodic reduction is
    implicit in the cosine).
    """
    k = np.asarray(k, dtype=np.float64)
    return np.sum(1.0 - np.cos(2.0 * np.pi * k), axis=-1)


def dispersion_grid(lat: LatticeSpec) -> np.ndarray:
    """e_Delta on the lattice's dual grid, shape (M, M, M) in storage order."""
    k1 = lat.dual_coords_1d()
    e1 = 1.0 - np.cos(2.0 * np.pi * k1)
    return e1[:, None, None] + e1[None, :, None] + e1[None, None, :]


# -- serialization -----------------------------------------------------------
#
# Header: magic "BGF1", uint32 L, uint32 rho numerator, uint32 rho
# denominator, uint8 representation flag (0 position, 1 momentum); then
# M^3 little-endian (re, im) float64 pairs in row-major storage order.

_HEADER = struct.Struct("<4sIIIB")


def save_field(f: Field, path):
    with open(path, "wb") as fh:
        lat = f.lattice
        flag = 0 if f.representation == POSITION else 1
        fh.write(_HEADER.pack(MAGIC, lat.L, lat.rho.numerator, lat.rho.denominator, flag))
        flat = np.ascontiguousarray(f.values.reshape(-1))
        pairs = np.empty((flat.size, 2), dtype="<f8")
        pairs[:, 0] = flat.real
        pairs[:, 1] = flat.imag
        fh.write(pairs.tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ValueError("truncated field file")
        magic, L, num, den, flag = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
        lat = make_lattice(L, Fraction(num, den))
        M = lat.points_per_axis
        raw = np.frombuffer(fh.read(), dtype="<f8")
        if raw.size != 2 * M ** 3:
            raise ValueError("field payload size mismatch")
        vals = (raw[0::2] + 1j * raw[1::2]).reshape(M, M, M)
        return Field(lat, MOMENTUM if flag else POSITION, vals)
