"""boltzgraph: microscopic Anderson-model dynamics, Wigner observables,
contraction-graph amplitudes, and the macroscopic linear Boltzmann solver,
on a common finite-torus lattice."""

__version__ = "0.1.0"
