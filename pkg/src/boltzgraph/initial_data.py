"""WKB initial states and the concentration-of-singularity diagnostic.

A WKB state on the lattice is

    phi_0(x) = eta^{3/2} h(eta x) exp(2 pi i S(eta x)/eta) / ||.||,

normalized to unit l2(Lambda_L) norm exactly (the eta^3 Riemann-weight
ambiguity in the paper's ||h||_{l2(eta Z^3)} is moot after exact
normalization).  Envelopes are Gaussian mixtures; phases are linear (p.X),
quadratic (X.Q X/2 + p.X), or user-tabulated grids (no gradient data, so
the macroscopic sampler rejects them).

The singularity diagnostic is the l4 statistic || (|fhat|)^vee ||_{l4}^2,
equal to || |f|*|f| ||_{L2} under the module's measure conventions; for
plane-wave WKB data it scales like eta^{3/2}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lattice import (Field, LatticeSpec, MOMENTUM, POSITION, dispersion,
                      forward_fourier, inverse_fourier)
from .rng import stream

# envelope mass outside radius MASS_RADIUS_SIGMAS*sigma (3D Gaussian) < 1e-10
MASS_RADIUS_SIGMAS = 7.04


@dataclass(frozen=True)
class GaussianMixture:
    """sum_i w_i exp(-|X - c_i|^2 / (2 s_i^2)) on R^3."""

    centers: tuple  # of 3-vectors
    widths: tuple   # of positive floats
    weights: tuple  # of floats

    def __post_init__(self):
        if not (len(self.centers) == len(self.widths) == len(self.weights)) or not self.centers:
            raise ValueError("mixture descriptor lengths mismatch or empty")
        if any(s <= 0 for s in self.widths):
            raise ValueError("mixture widths must be positive")

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros(X.shape[:-1])
        for c, s, w in zip(self.centers, self.widths, self.weights):
            d2 = np.sum((X - np.asarray(c, dtype=np.float64)) ** 2, axis=-1)
            out += w * np.exp(-0.5 * d2 / (s * s))
        return out

    def mass_radius(self) -> float:
        """Radius containing all but ~1e-10 of every component's mass."""
        return max(np.max(np.abs(c)) + MASS_RADIUS_SIGMAS * s
                   for c, s in zip(self.centers, self.widths))


def gaussian_envelope(sigma=1.0, center=(0.0, 0.0, 0.0), weight=1.0) -> GaussianMixture:
    return GaussianMixture((tuple(center),), (float(sigma),), (float(weight),))


@dataclass(frozen=True)
class Phase:
    """Phase function S: linear, quadratic, or tabulated.

    kind = "linear":    S(X) = p.X
    kind = "quadratic": S(X) = X.Q X / 2 + p.X
    kind = "tabulated": values on a caller-supplied grid, no gradient data
    """

    kind: str
    p: tuple = (0.0, 0.0, 0.0)
    Q: Optional[tuple] = None
    table: Optional[object] = None  # (grid_coords_1d, values) for "tabulated"

    def __post_init__(self):
        if self.kind not in ("linear", "quadratic", "tabulated"):
            raise ValueError(f"unknown phase kind {self.kind!r}")
        if self.kind == "quadratic" and self.Q is None:
            raise ValueError("quadratic phase needs Q")
        if self.kind == "tabulated" and self.table is None:
            raise ValueError("tabulated phase needs table")

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.kind == "linear":
            return X @ np.asarray(self.p)
        if self.kind == "quadratic":
            Q = np.asarray(self.Q, dtype=np.float64)
            return 0.5 * np.einsum("...i,ij,...j->...", X, Q, X) + X @ np.asarray(self.p)
        grid, vals = self.table
        from scipy.interpolate import RegularGridInterpolator
        interp = RegularGridInterpolator((grid, grid, grid), vals,
                                         bounds_error=False, fill_value=0.0)
        return interp(X)

    @property
    def has_gradient(self) -> bool:
        return self.kind in ("linear", "quadratic")

    def gradient(self, X: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return np.broadcast_to(np.asarray(self.p, dtype=np.float64),
                                   np.asarray(X).shape).copy()
        if self.kind == "quadratic":
            return np.asarray(X) @ np.asarray(self.Q, dtype=np.float64).T \
                + np.asarray(self.p, dtype=np.float64)
        raise ValueError("tabulated phase specs carry no gradient data")


@dataclass(frozen=True)
class WkbSpec:
    h: GaussianMixture
    S: Phase
    eta: float

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")


@dataclass(frozen=True)
class SingularityDiagnostic:
    eta: float
    l4_norm_sq: float
    split: Optional[str] = None  # e.g. "f_inf=0 (plane wave)"

    def __post_init__(self):
        if self.l4_norm_sq < 0:
            raise ValueError("l4 statistic cannot be negative")


class SupportError(ValueError):
    """Envelope mass does not fit inside Lambda_L at the requested eta."""


def build_wkb(spec: WkbSpec, lattice: LatticeSpec) -> Field:
    """Unit-norm WKB state phi_0 on Lambda_L (rho = 1 lattices only)."""
    if lattice.rho != 1:
        raise ValueError("WKB states live on rho = 1 lattices")
    radius = spec.h.mass_radius() / spec.eta
    if radius > lattice.L:
        raise SupportError(
            f"envelope 1e-10 mass radius {radius:.1f} exceeds L = {lattice.L} "
            f"at eta = {spec.eta}")
    x1 = lattice.site_coords_1d()
    X = spec.eta * np.stack(np.meshgrid(x1, x1, x1, indexing="ij"), axis=-1)
    amp = spec.eta ** 1.5 * spec.h(X)
    vals = amp * np.exp(2j * np.pi * spec.S(X) / spec.eta)
    nrm = np.linalg.norm(vals)
    if nrm == 0:
        raise ValueError("envelope vanishes on the lattice")
    vals = vals / nrm
    # boundary shell carries < 1e-10 of the total mass when the radius gate holds
    shell = np.abs(vals) ** 2
    inner = shell[1:-1, 1:-1, 1:-1].sum()
    if 1.0 - inner > 1e-10:
        raise SupportError("boundary-shell mass exceeds 1e-10 after truncation")
    return Field(lattice, POSITION, vals)


def singularity_diagnostic(phi0_hat: Field, eta: float) -> SingularityDiagnostic:
    """l4 statistic || (|fhat|)^vee ||_{l4(Lambda_L)}^2 of a momentum field."""
    if phi0_hat.representation != MOMENTUM:
        raise ValueError("singularity_diagnostic expects a momentum-representation Field")
    absf = Field(phi0_hat.lattice, MOMENTUM, np.abs(phi0_hat.values).astype(np.complex128))
    g = inverse_fourier(absf).values
    stat = float(np.sqrt(np.sum(np.abs(g) ** 4)))
    return SingularityDiagnostic(eta=eta, l4_norm_sq=stat)


def momentum_profile(spec: WkbSpec):
    """Closed-form |phi_0_hat| on the continuum torus for linear-phase specs.

    For S = p.X the L -> infty transform is the periodized bump
    eta^{-3/2} hhat((k - p)/eta), normalized to unit L2(T^3) norm.  Returns
    a callable k(..., 3) -> |phi_0_hat|; used by the A_eps estimator where a
    lattice realization would be out of reach.
    """
    if spec.S.kind != "linear":
        raise ValueError("closed-form momentum profile requires a linear phase")
    p = np.asarray(spec.S.p, dtype=np.float64)
    eta = spec.eta
    centers = [np.asarray(c) for c in spec.h.centers]
    widths = spec.h.widths
    weights = spec.h.weights

    def hhat(kappa):
        # FT of the mixture with the e^{-2 pi i k x} convention
        out = np.zeros(kappa.shape[:-1], dtype=np.complex128)
        for c, s, w in zip(centers, widths, weights):
            mag = w * (2 * np.pi * s * s) ** 1.5 * np.exp(
                -2 * np.pi ** 2 * s * s * np.sum(kappa ** 2, axis=-1))
            out += mag * np.exp(-2j * np.pi * (kappa @ c))
        return out

    # normalization: int_{T^3} |profile|^2 dk = 1 with profile = A*eta^{-3/2} hhat((k-p)/eta)
    # <=> A^2 int |hhat|^2 dkappa = 1 (bump well inside one cell)
    half = 6.0 / (2 * np.pi * min(widths))  # |hhat_i| has kappa-width 1/(2 pi s_i)
    n = 64
    q1 = np.linspace(-half, half, n)
    dq = q1[1] - q1[0]
    Q = np.stack(np.meshgrid(q1, q1, q1, indexing="ij"), axis=-1)
    norm2 = np.sum(np.abs(hhat(Q)) ** 2) * dq ** 3
    A = 1.0 / np.sqrt(norm2)

    def profile(k):
        k = np.asarray(k, dtype=np.float64)
        # nearest-image periodization (bump width O(eta) << 1)
        d = k - p
        d = d - np.round(d)
        return A * eta ** -1.5 * np.abs(hhat(d / eta))

    return profile


def macroscopic_initial_sampler(spec: WkbSpec, count: int, seed: int):
    """Particle ensemble for the Boltzmann limit: X ~ |h|^2, V = grad S(X) mod 1.

    Returns a boltzmann.ParticleEnsemble with uniform weights summing to 1.
    """
    from .boltzmann import ParticleEnsemble

    if count < 1:
        raise ValueError("count must be >= 1")
    if not spec.S.has_gradient:
        raise ValueError("tabulated phase specs carry no gradient data")
    g = stream(seed, "macroscopic-init")
    X = _sample_h_squared(spec.h, count, g)
    V = spec.S.gradient(X)
    V = V - np.floor(V + 0.5)  # reduce to [-1/2, 1/2)
    w = np.full(count, 1.0 / count)
    return ParticleEnsemble(X=X, V=V, weight=w, time=0.0)


def _sample_h_squared(h: GaussianMixture, count: int, g: np.random.Generator) -> np.ndarray:
    """Exact rejection sampler for the density |h(X)|^2 / ||h||^2."""
    centers = np.asarray(h.centers, dtype=np.float64)
    widths = np.asarray(h.widths, dtype=np.float64)
    weights = np.asarray(h.weights, dtype=np.float64)
    n = len(widths)
    # envelope: |h|^2 <= n * sum_i w_i^2 G_i^2, and G_i^2 is a Gaussian of width s/sqrt(2)
    comp_mass = n * weights ** 2 * (np.pi * widths ** 2) ** 1.5  # integral of each bound term
    probs = comp_mass / comp_mass.sum()
    out = np.empty((0, 3))
    while out.shape[0] < count:
        todo = max(count - out.shape[0], 1024)
        comp = g.choice(n, size=todo, p=probs)
        X = centers[comp] + (widths[comp, None] / np.sqrt(2.0)) * g.standard_normal((todo, 3))
        envelope = np.zeros(todo)
        for i in range(n):
            d2 = np.sum((X - centers[i]) ** 2, axis=-1)
            envelope += n * weights[i] ** 2 * np.exp(-d2 / widths[i] ** 2)
        accept = g.random(todo) * envelope <= h(X) ** 2
        out = np.concatenate([out, X[accept]], axis=0)
    return out[:count]
