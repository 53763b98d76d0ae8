"""Wigner transform in the (xi, v) representation and test-function pairing.

What(xi, v) = conj(psihat(v - xi/2)) phihat(v + xi/2) on the grid
Lambda*_{L,1/2} x Lambda*_L; the half-shifted arguments are samples of the
trigonometric extension of phihat, taken exactly on the refined grid with
M*M2 points per axis (M = 2L+1, M2 = 4L+1).  The position-space factor 8
of the definitional sum never enters here; it lives only in the test
oracle.

The pairing with a test function J(X, V) = J_X(X) * J_V(V) is

    <J, W^eta> = sum_{xi,v} mu_xi mu_v conj(Jhat(xi, v)) What(xi, v),
    Jhat(xi, v) = J_V(v) * (rho=1/2 transform of x -> J_X(eta x)),

normalized with the macroscopic Riemann cell (eta/2)^3, under which the
paper's eta^{-3} amplitude cancels and J == 1 pairs to the state's mass.
An exactly equivalent streaming form (pair_state) avoids materializing
What for large L.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .initial_data import GaussianMixture
from .lattice import (Field, LatticeSpec, MOMENTUM, POSITION, forward_fourier,
                      fine_momentum_samples, inverse_fourier, make_lattice)

MATERIALIZE_GUARD = 5e7  # max number of stored What entries


class PairingSymmetryError(RuntimeError):
    """Imaginary part of a pairing exceeded tolerance: upstream symmetry bug."""


@dataclass(frozen=True)
class TestFunction:
    """J(X, V) = J_X(X) * J_V(V): Gaussian mixture in X, trig polynomial in V.

    v_part maps integer 3-tuples a to coefficients c_a of e^{2 pi i a.V};
    realness (c_{-a} = conj(c_a)) is required.  x_part None means J_X == 1.
    """

    x_part: Optional[GaussianMixture] = None
    v_part: tuple = (((0, 0, 0), 1.0),)

    def __post_init__(self):
        coeffs = {tuple(int(x) for x in a): complex(c) for a, c in self.v_part}
        for a, c in coeffs.items():
            neg = tuple(-x for x in a)
            if neg not in coeffs or abs(np.conj(coeffs[neg]) - c) > 1e-12:
                raise ValueError("v_part must satisfy c(-a) = conj(c(a)) (real J)")
        object.__setattr__(self, "v_part", tuple(sorted(coeffs.items())))

    def eval_x(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.x_part is None:
            return np.ones(X.shape[:-1])
        return self.x_part(X)

    def eval_v(self, V) -> np.ndarray:
        V = np.asarray(V, dtype=np.float64)
        out = np.zeros(V.shape[:-1], dtype=np.complex128)
        for a, c in self.v_part:
            out += c * np.exp(2j * np.pi * (V @ np.asarray(a, dtype=np.float64)))
        return out.real  # realness enforced at construction

    def __call__(self, X, V) -> np.ndarray:
        return self.eval_x(X) * self.eval_v(V)

    def scaled(self, factor: float) -> "TestFunction":
        return TestFunction(self.x_part, tuple((a, factor * c) for a, c in self.v_part))


@dataclass
class WignerField:
    """What on Lambda*_{L,1/2} x Lambda*_L (axes: 3 xi then 3 v), plus grids."""

    lattice: LatticeSpec        # rho = 1/2 spec carrying the xi grid
    base_lattice: LatticeSpec   # rho = 1 spec carrying the v grid
    values: np.ndarray = field(repr=False)

    @property
    def xi_measure(self) -> float:
        return self.lattice.dual_measure

    @property
    def v_measure(self) -> float:
        return self.base_lattice.dual_measure

    def diagonal(self) -> np.ndarray:
        """What(0, v) over the v grid."""
        c = self.lattice.half_extent
        return self.values[c, c, c]

    def mass(self) -> float:
        return float(np.sum(self.diagonal().real) * self.v_measure)


def wigner_fourier(phi: Field, psi: Optional[Field] = None) -> WignerField:
    """What(xi, v) = conj(psihat(v - xi/2)) phihat(v + xi/2), exact on the grid."""
    if psi is None:
        psi = phi
    if phi.lattice != psi.lattice:
        raise ValueError("Wigner transform needs both states on the same lattice")
    if phi.representation != MOMENTUM or psi.representation != MOMENTUM:
        raise ValueError("wigner_fourier expects momentum-representation Fields")
    lat = phi.lattice
    if lat.rho != 1:
        raise ValueError("Wigner transform is defined for rho = 1 states")
    L = lat.L
    M = lat.points_per_axis
    xi_lat = make_lattice(L, Fraction(1, 2))
    M2 = xi_lat.points_per_axis
    if (M2 ** 3) * (M ** 3) > MATERIALIZE_GUARD:
        raise ValueError("Wigner field too large to materialize; use pair_state")
    nf = M * M2
    fphi = fine_momentum_samples(inverse_fourier(phi), M2)
    fpsi = fphi if psi is phi else fine_momentum_samples(inverse_fourier(psi), M2)
    a = np.arange(M) - L          # v index offsets
    m = np.arange(M2) - 2 * L     # xi index offsets
    qp = np.mod(2 * (a[None, :] * M2 + m[:, None] * M), nf)  # (xi, v) per axis
    qm = np.mod(2 * (a[None, :] * M2 - m[:, None] * M), nf)
    qp1 = qp[:, None, None, :, None, None]
    qp2 = qp[None, :, None, None, :, None]
    qp3 = qp[None, None, :, None, None, :]
    qm1 = qm[:, None, None, :, None, None]
    qm2 = qm[None, :, None, None, :, None]
    qm3 = qm[None, None, :, None, None, :]
    vals = np.conj(fpsi[qm1, qm2, qm3]) * fphi[qp1, qp2, qp3]
    return WignerField(lattice=xi_lat, base_lattice=lat, values=vals)


def _jx_hat(J: TestFunction, xi_lat: LatticeSpec, eta: float) -> np.ndarray:
    """rho = 1/2 transform of x -> J_X(eta x) on Lambda_{L,1/2}."""
    x1 = xi_lat.site_coords_1d()
    X = eta * np.stack(np.meshgrid(x1, x1, x1, indexing="ij"), axis=-1)
    samples = J.eval_x(X).astype(np.complex128)
    return forward_fourier(Field(xi_lat, POSITION, samples)).values


def pair(J: TestFunction, W: WignerField, eta: float) -> float:
    """<J, W^eta> over the materialized (xi, v) grid; real part after check."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    jxh = _jx_hat(J, W.lattice, eta)
    v1 = W.base_lattice.dual_coords_1d()
    V = np.stack(np.meshgrid(v1, v1, v1, indexing="ij"), axis=-1)
    jv = J.eval_v(V)
    acc = np.einsum("abc,xyz,abcxyz->", np.conj(jxh), jv, W.values, optimize=True)
    val = acc * W.xi_measure * W.v_measure
    return _check_real(val)


def pair_state(J: TestFunction, phi: Field, eta: float,
               psi: Optional[Field] = None) -> float:
    """Streaming <J, W^eta> from position-space states; exactly equals
    pair(J, wigner_fourier(phihat, psihat), eta) without materializing What.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if psi is None:
        psi = phi
    if phi.representation != POSITION or psi.representation != POSITION:
        raise ValueError("pair_state expects position-representation Fields")
    lat = phi.lattice
    L, M = lat.L, lat.points_per_axis
    x1 = lat.site_coords_1d()
    total = 0.0 + 0.0j
    for a, c in J.v_part:
        for d in _residue_shifts(a, M, L):
            sl_y, sl_z = _shift_slices(d, M)
            block = np.conj(psi.values[sl_y]) * phi.values[sl_z]
            mids = [x1[sz] + 0.5 * di for sz, di in zip(sl_z, d)]
            if J.x_part is None:
                jx = 1.0
            else:
                Xm = eta * np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1)
                jx = J.eval_x(Xm)
            total += np.conj(c) * np.sum(block * jx)
    return _check_real(total)


def _residue_shifts(a, M, L):
    """Integer shifts d = y - z with d == a (mod M) and |d_i| <= 2L, per axis."""
    per_axis = []
    for ai in a:
        r = ((ai + M // 2) % M) - M // 2  # centered residue
        opts = [r]
        for alt in (r - M, r + M):
            if abs(alt) <= 2 * L:
                opts.append(alt)
        per_axis.append([o for o in opts if abs(o) <= 2 * L])
    out = []
    for d0 in per_axis[0]:
        for d1 in per_axis[1]:
            for d2 in per_axis[2]:
                out.append((d0, d1, d2))
    return out


def _shift_slices(d, M):
    """Slices (y, z) with y = z + d, both inside [0, M)."""
    sl_y, sl_z = [], []
    for di in d:
        if di >= 0:
            sl_y.append(slice(di, M))
            sl_z.append(slice(0, M - di))
        else:
            sl_y.append(slice(0, M + di))
            sl_z.append(slice(-di, M))
    return tuple(sl_y), tuple(sl_z)


def _check_real(val: complex, tol: float = 1e-10) -> float:
    scale = max(1.0, abs(val))
    if abs(val.imag) > tol * scale:
        raise PairingSymmetryError(
            f"pairing has imaginary part {val.imag:.3e} (value {val!r})")
    return float(val.real)


def wigner_position_from_hat(W: WignerField) -> np.ndarray:
    """Inverse xi-transform: W(x, v) on Lambda_{L,1/2} x Lambda*_L."""
    xi_lat = W.lattice
    M2 = xi_lat.points_per_axis
    J2 = xi_lat.half_extent
    _, inv = xi_lat.dual_index_maps()
    vals = W.values[np.ix_(inv, inv, inv)]
    work = np.fft.ifftn(vals, axes=(0, 1, 2)) / float(xi_lat.rho) ** 3
    return np.roll(work, (J2, J2, J2), axis=(0, 1, 2))
