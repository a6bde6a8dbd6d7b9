"""Configuration-space geometry and potentials for N electrons about a fixed nucleus.

Walkers are arrays of shape ``(..., N, 3)`` in Bohr with the nucleus at the
origin. Energies are in Hartree.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NodeError, ParameterError, SingularityError


@dataclass(frozen=True)
class AtomSpec:
    """Nuclear charge ``Z`` and electron count ``N``.

    ``electron_repulsion=False`` drops the 1/r_ij terms (independent-electron
    model, used for exact-eigenfunction checks).
    """

    nuclear_charge: float
    n_electrons: int
    electron_repulsion: bool = True

    def __post_init__(self):
        if not self.nuclear_charge > 0:
            raise ParameterError("nuclear_charge must be positive")
        if int(self.n_electrons) != self.n_electrons or self.n_electrons < 1:
            raise ParameterError("n_electrons must be a positive integer")

    @property
    def shape(self):
        return (self.n_electrons, 3)

    @property
    def dim(self):
        return 3 * self.n_electrons

    def potential(self, coords):
        return coulomb_potential(coords, self)

    def too_close(self, coords, delta):
        """Mask of walkers with some r_i or r_ij below ``delta``."""
        r, rij = distances(coords)
        close = np.any(r < delta, axis=-1)
        if rij.shape[-1]:
            close |= np.any(rij < delta, axis=-1)
        return close


HELIUM = AtomSpec(2.0, 2)
HYDROGEN = AtomSpec(1.0, 1)


def norm3(v):
    """Euclidean norm over the last axis (length 3), written out elementwise."""
    return np.sqrt(v[..., 0] * v[..., 0] + v[..., 1] * v[..., 1] + v[..., 2] * v[..., 2])


def distances(coords):
    """Return ``(r, rij)``: electron-nucleus distances ``(..., N)`` and pair
    distances ``(..., N*(N-1)/2)`` in ``i<j`` order."""
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[-2]
    r = norm3(coords)
    pairs = [norm3(coords[..., i, :] - coords[..., j, :]) for i in range(n) for j in range(i + 1, n)]
    if pairs:
        rij = np.stack(pairs, axis=-1)
    else:
        rij = np.zeros(coords.shape[:-2] + (0,))
    return r, rij


def coulomb_potential(coords, atom):
    """Sum_i -Z/r_i + Sum_{i<j} 1/r_ij for walkers of shape ``(..., N, 3)``."""
    coords = np.asarray(coords, dtype=float)
    if coords.shape[-2:] != atom.shape:
        raise ParameterError(f"walker shape {coords.shape[-2:]} does not match atom {atom.shape}")
    r, rij = distances(coords)
    if np.any(r == 0) or (atom.electron_repulsion and np.any(rij == 0)):
        raise SingularityError("electron at the nucleus or two electrons coincide")
    v = -atom.nuclear_charge / r[..., 0]
    for i in range(1, r.shape[-1]):
        v = v - atom.nuclear_charge / r[..., i]
    if atom.electron_repulsion:
        for k in range(rij.shape[-1]):
            v = v + 1.0 / rij[..., k]
    return v


def perturbation_potential(coords, trial, lam0, atom):
    """V - lam0 - lap(phi) / (2 phi).

    Vanishes identically when ``(trial, lam0)`` is an exact eigenpair of
    H = -lap/2 + V.
    """
    ev = trial.evaluate(coords)
    if np.any(ev.value == 0):
        raise NodeError("trial function vanishes at walker")
    return coulomb_potential(coords, atom) - lam0 - ev.laplacian / (2.0 * ev.value)


@dataclass(frozen=True)
class LatticeToy:
    """A walker in ``dim`` flat dimensions under an arbitrary potential.

    Used for exhaustive path enumeration checks; has no singularities.
    """

    dim: int
    potential_fn: object

    @property
    def shape(self):
        return (self.dim,)

    def potential(self, coords):
        return self.potential_fn(np.asarray(coords, dtype=float))

    def too_close(self, coords, delta):
        return np.zeros(np.shape(coords)[:-1], dtype=bool)
