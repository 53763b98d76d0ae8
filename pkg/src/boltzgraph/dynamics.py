"""Gaussian disorder, H = -Delta/2 + lambda V, time evolution, and the
truncated Duhamel hierarchy.

The kinetic multiplier of H is the dispersion e_Delta(k) (spectral
convention: (-Delta f)^hat = 2 e_Delta fhat), so free evolution is the
momentum-space phase e^{-i t e_Delta}.  Split-step evolution is the Strang
composition V/2 - K - V/2 on a shared grid; the hierarchy

    d/dt phi_n = -i H_0 phi_n - i lambda V phi_{n-1},   phi_{-1} = 0

is integrated on the same grid, with the (nilpotent) potential coupling
exponentiated exactly, so each phi_n carries exactly the factor lambda^n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .lattice import (Field, LatticeSpec, MOMENTUM, POSITION, dispersion_grid,
                      forward_fourier, inverse_fourier)
from .rng import box_muller_normals

EXACT_DIAG_MAX_SITES = 2000


@dataclass(frozen=True)
class Disorder:
    """One realization of i.i.d. standard-normal site potentials omega_x."""

    lattice: LatticeSpec
    seed: int
    omega: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.omega is None:
            n = self.lattice.n_sites
            M = self.lattice.points_per_axis
            w = box_muller_normals(self.seed, "disorder", 0, n).reshape(M, M, M)
            object.__setattr__(self, "omega", w)
        if self.lattice.n_sites >= 1000:
            n = self.lattice.n_sites
            mean = self.omega.mean()
            var = self.omega.var()
            # 5 standard errors of the mean / variance of n standard normals
            if abs(mean) > 5.0 / np.sqrt(n) or abs(var - 1.0) > 5.0 * np.sqrt(2.0 / n):
                raise ValueError("disorder sample fails its moment invariant")


def sample_disorder(lattice: LatticeSpec, seed: int) -> Disorder:
    """Deterministic disorder realization keyed by (seed, lattice)."""
    return Disorder(lattice=lattice, seed=seed)


@dataclass(frozen=True)
class HamiltonianSpec:
    lam: float
    disorder: Disorder

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")

    @property
    def lattice(self) -> LatticeSpec:
        return self.disorder.lattice


def apply_hamiltonian(f: Field, spec: HamiltonianSpec) -> Field:
    """(H f)(x) = (e_Delta fhat)^vee (x) + lambda omega_x f(x)."""
    if f.representation != POSITION:
        raise ValueError("apply_hamiltonian expects a position-representation Field")
    lat = f.lattice
    e = dispersion_grid(lat)
    fh = forward_fourier(f)
    kin = inverse_fourier(Field(lat, MOMENTUM, e * fh.values))
    vals = kin.values + spec.lam * spec.disorder.omega * f.values
    return Field(lat, POSITION, vals)


def dense_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    """Dense matrix of H in the site basis (guarded small lattices)."""
    lat = spec.lattice
    n = lat.n_sites
    if n > EXACT_DIAG_MAX_SITES:
        raise ValueError(f"dense Hamiltonian limited to {EXACT_DIAG_MAX_SITES} sites")
    M = lat.points_per_axis
    H = np.empty((n, n), dtype=np.complex128)
    basis = np.zeros((M, M, M), dtype=np.complex128)
    for i in range(n):
        basis.reshape(-1)[i] = 1.0
        H[:, i] = apply_hamiltonian(Field(lat, POSITION, basis), spec).values.reshape(-1)
        basis.reshape(-1)[i] = 0.0
    return H


def _steps_for(t: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError("dt must be positive")
    return max(1, int(round(t / dt)))


class _SplitStepper:
    """Shared Strang grid: V/2 - K - V/2 phases for one (spec, dt) pair.

    All per-step work happens in DFT character order (position index
    x mod M); the roll to and from storage order happens once.
    """

    def __init__(self, spec: HamiltonianSpec, dt: float):
        lat = spec.lattice
        self.lat = lat
        self.dt = dt
        J = lat.half_extent
        self._roll = (-J, -J, -J)
        self._unroll = (J, J, J)
        _, inv = lat.dual_index_maps()
        self.half_v = self.to_char(np.exp(-0.5j * dt * spec.lam * spec.disorder.omega))
        self.omega = self.to_char(spec.disorder.omega)
        e_char = dispersion_grid(lat)[np.ix_(inv, inv, inv)]
        self.kin_char = np.exp(-1j * dt * e_char)

    def kinetic_full(self, vals_char: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(self.kin_char * np.fft.fftn(vals_char))

    def to_char(self, vals: np.ndarray) -> np.ndarray:
        return np.roll(vals, self._roll, axis=(0, 1, 2))

    def from_char(self, vals: np.ndarray) -> np.ndarray:
        return np.roll(vals, self._unroll, axis=(0, 1, 2))


def evolve(phi0: Field, spec: HamiltonianSpec, t: float, method: str = "split_step",
           dt: float = 1e-2) -> Field:
    """phi_t = e^{-i t H} phi_0 by exact diagonalization or split-step Strang."""
    if phi0.representation != POSITION:
        raise ValueError("evolve expects a position-representation Field")
    lat = phi0.lattice
    if t == 0:
        return phi0.copy()
    if method == "exact_diag":
        if lat.n_sites > EXACT_DIAG_MAX_SITES:
            raise ValueError(f"exact_diag limited to {EXACT_DIAG_MAX_SITES} sites")
        H = dense_hamiltonian(spec)
        w, U = np.linalg.eigh(H)
        vec = U @ (np.exp(-1j * t * w) * (U.conj().T @ phi0.values.reshape(-1)))
        M = lat.points_per_axis
        return Field(lat, POSITION, vec.reshape(M, M, M))
    if method != "split_step":
        raise ValueError(f"unknown method {method!r}")
    steps = _steps_for(t, dt)
    st = _SplitStepper(spec, t / steps)
    # fuse adjacent half-potential phases between steps
    full_v = st.half_v * st.half_v
    work = st.half_v * st.to_char(phi0.values)
    for s in range(steps):
        work = st.kinetic_full(work)
        if s + 1 < steps:
            work = full_v * work
    vals = st.from_char(st.half_v * work)
    return Field(lat, POSITION, vals)


@dataclass
class DuhamelResult:
    terms: List[Field]
    remainder: Field
    t: float
    N: int

    def total(self) -> np.ndarray:
        out = self.remainder.values.copy()
        for f in self.terms:
            out = out + f.values
        return out


def duhamel_hierarchy(phi0: Field, spec: HamiltonianSpec, t: float, N: int,
                      dt: float, full_method: Optional[str] = None) -> DuhamelResult:
    """Duhamel terms phi_{0,t}..phi_{N-1,t} plus the exact remainder.

    The hierarchy shares evolve()'s Strang grid; the lower-triangular
    potential coupling is exponentiated exactly (nilpotent), so phi_n is a
    degree-n homogeneous polynomial in lambda*omega.  The remainder is
    full evolution minus the partial sum, with the full evolution from
    exact diagonalization when the lattice allows it (else the same
    split-step grid).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if phi0.representation != POSITION:
        raise ValueError("duhamel_hierarchy expects a position-representation Field")
    lat = phi0.lattice
    steps = _steps_for(t, dt)
    st = _SplitStepper(spec, t / steps)
    lam_om = spec.lam * st.omega  # char order

    def half_coupling(states):
        # exp(dt/2 * B) with (B Phi)_n = -i lam V Phi_{n-1}: nilpotent, exact
        out = [s.copy() for s in states]
        for n in range(len(states) - 1, 0, -1):
            acc = np.zeros_like(states[0])
            coef = 1.0
            pw = np.ones_like(lam_om)
            for m in range(1, n + 1):
                coef *= (-0.5j * st.dt) / m
                pw = pw * lam_om
                acc += coef * pw * states[n - m]
            out[n] += acc
        return out

    states = [np.zeros_like(phi0.values) for _ in range(N)]
    states[0] = st.to_char(phi0.values)
    for _ in range(steps):
        states = half_coupling(states)
        states = [st.kinetic_full(s) for s in states]
        states = half_coupling(states)
    states = [st.from_char(s) for s in states]

    terms = [Field(lat, POSITION, s) for s in states]
    if full_method is None:
        full_method = "exact_diag" if lat.n_sites <= EXACT_DIAG_MAX_SITES else "split_step"
    full = evolve(phi0, spec, t, method=full_method, dt=t / steps)
    rem = full.values - sum(s for s in states)
    return DuhamelResult(terms=terms, remainder=Field(lat, POSITION, rem), t=t, N=N)
