"""Trial wave functions with analytic Cartesian gradients and Laplacians.

Every family evaluates batches of walkers shaped ``(..., N, 3)`` and returns a
:class:`TrialEval`. The two-electron S-state families are written as
functions f(r1, r2, r12) of the interparticle distances; a shared assembler
turns their radial partial derivatives into Cartesian gradients and the
Laplacian via the chain rule.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NodeError, ParameterError
from .system import coulomb_potential, norm3


@dataclass
class TrialEval:
    value: np.ndarray
    gradient: np.ndarray
    laplacian: np.ndarray

    @property
    def drift(self):
        return self.gradient / self.value[..., None, None]


class Radial:
    """Value and partial derivatives of f(r1, r2, u) with u = r12.

    Mixed r1-r2 derivatives never enter the Laplacian and are not kept.
    """

    __slots__ = ("f", "f1", "f2", "fu", "f11", "f22", "fuu", "f1u", "f2u")

    def __init__(self, f, f1, f2, fu=0.0, f11=0.0, f22=0.0, fuu=0.0, f1u=0.0, f2u=0.0):
        self.f, self.f1, self.f2, self.fu = f, f1, f2, fu
        self.f11, self.f22, self.fuu = f11, f22, fuu
        self.f1u, self.f2u = f1u, f2u

    def swapped(self):
        """Relabel as a function of the exchanged arguments (r2, r1, u)."""
        return Radial(self.f, self.f2, self.f1, self.fu, self.f22, self.f11, self.fuu, self.f2u, self.f1u)

    def combine(self, other, sign):
        """self + sign * other, term by term."""
        if sign > 0:
            return Radial(*(getattr(self, k) + getattr(other, k) for k in Radial.__slots__))
        return Radial(*(getattr(self, k) - getattr(other, k) for k in Radial.__slots__))

    def scaled(self, c):
        return Radial(*(c * getattr(self, k) for k in Radial.__slots__))


def _two_electron(coords):
    coords = np.asarray(coords, dtype=float)
    if coords.shape[-2:] != (2, 3):
        raise ParameterError(f"two-electron trial function needs walkers of shape (..., 2, 3), got {coords.shape}")
    return coords


def _assemble(coords, rad, uses_r12):
    """Cartesian gradient and Laplacian of f(r1, r2, r12) from radial partials."""
    x1 = coords[..., 0, :]
    x2 = coords[..., 1, :]
    r1 = norm3(x1)[..., None]
    r2 = norm3(x2)[..., None]
    n1 = x1 / r1
    n2 = x2 / r2
    g1 = np.asarray(rad.f1)[..., None] * n1
    g2 = np.asarray(rad.f2)[..., None] * n2
    lap = rad.f11 + 2.0 * rad.f1 / r1[..., 0] + rad.f22 + 2.0 * rad.f2 / r2[..., 0]
    if uses_r12:
        d = x1 - x2
        u = norm3(d)[..., None]
        n12 = d / u
        gu = np.asarray(rad.fu)[..., None] * n12
        g1 = g1 + gu
        g2 = g2 - gu
        c1 = np.sum(n1 * n12, axis=-1)
        c2 = np.sum(n2 * n12, axis=-1)
        lap = lap + 2.0 * rad.fuu + 4.0 * rad.fu / u[..., 0] + 2.0 * rad.f1u * c1 - 2.0 * rad.f2u * c2
    grad = np.stack([g1, g2], axis=-2)
    return grad, np.asarray(lap, dtype=float) + np.zeros_like(r1[..., 0])


class TrialFunction:
    """Base class. Subclasses implement :meth:`evaluate`."""

    # Families whose zero set is a genuine nodal surface.
    noded = False
    n_electrons = 2

    def evaluate(self, coords):
        raise NotImplementedError

    def value(self, coords):
        return self.evaluate(coords).value

    def drift(self, coords):
        """grad(phi) / phi, same shape as ``coords``."""
        ev = self.evaluate(coords)
        if np.any(ev.value == 0):
            raise NodeError("drift undefined on the nodal surface")
        return ev.drift

    def local_energy(self, coords, atom):
        """-lap(phi) / (2 phi) + V."""
        ev = self.evaluate(coords)
        if np.any(ev.value == 0):
            raise NodeError("local energy undefined on the nodal surface")
        return -ev.laplacian / (2.0 * ev.value) + coulomb_potential(coords, atom)

    def crossed_node(self, before, after):
        return crossed_node(self, before, after)


def crossed_node(trial, before, after):
    """True where the trial function changed sign (or hit zero) between walkers."""
    v0 = trial.value(before)
    v1 = trial.value(after)
    return (np.sign(v0) != np.sign(v1)) | (v1 == 0)


class SymmetrizedRadial(TrialFunction):
    """phi = f(r1, r2, r12) + symmetry * f(r2, r1, r12).

    Subclasses provide ``_direct(r1, r2, u, tie_first)`` returning a
    :class:`Radial`; ``tie_first`` tells piecewise forms which branch to use
    when r1 == r2 exactly.
    """

    symmetry = 1
    uses_r12 = False

    def _direct(self, r1, r2, u, tie_first):
        raise NotImplementedError

    def radial(self, coords):
        coords = _two_electron(coords)
        r1 = norm3(coords[..., 0, :])
        r2 = norm3(coords[..., 1, :])
        u = norm3(coords[..., 0, :] - coords[..., 1, :]) if self.uses_r12 else None
        direct = self._direct(r1, r2, u, True)
        exchanged = self._direct(r2, r1, u, False).swapped()
        return direct.combine(exchanged, self.symmetry)

    def evaluate(self, coords):
        coords = _two_electron(coords)
        with np.errstate(divide="ignore", invalid="ignore"):
            rad = self.radial(coords)
            grad, lap = _assemble(coords, rad, self.uses_r12)
        return TrialEval(np.asarray(rad.f, dtype=float), grad, lap)


def _exp_monomial(r, power, rate):
    """g = r**power * exp(-rate r) with g'/g and g''/g."""
    g = np.exp(-rate * r)
    if power:
        g = g * r**power
        log1 = power / r - rate
        log2 = log1 * log1 - power / (r * r)
    else:
        log1 = np.full_like(r, -rate)
        log2 = np.full_like(r, rate * rate)
    return g, log1, log2


@dataclass(frozen=True)
class SlaterProduct(TrialFunction):
    """phi = exp(-sum_i a_i r_i) for any number of electrons.

    Exact for hydrogen-like and independent-electron atoms; with all
    exponents zero it is the constant function (zero drift).
    """

    exponents: tuple

    def __post_init__(self):
        if len(self.exponents) == 0:
            raise ParameterError("SlaterProduct needs at least one exponent")
        if any(a < 0 for a in self.exponents):
            raise ParameterError("Slater exponents must be non-negative")

    @property
    def n_electrons(self):
        return len(self.exponents)

    def evaluate(self, coords):
        coords = np.asarray(coords, dtype=float)
        if coords.shape[-2:] != (len(self.exponents), 3):
            raise ParameterError(f"walker shape {coords.shape[-2:]} does not match {len(self.exponents)} electrons")
        alpha = np.asarray(self.exponents, dtype=float)
        r = norm3(coords)
        with np.errstate(divide="ignore", invalid="ignore"):
            value = np.exp(-np.sum(alpha * r, axis=-1))
            unit = coords / r[..., None]
            logs = -alpha[:, None] * unit
            lap_ratio = np.sum(alpha * alpha - 2.0 * alpha / r, axis=-1)
        unit_safe = np.where(alpha[:, None] == 0, 0.0, logs)
        grad = unit_safe * value[..., None, None]
        return TrialEval(value, grad, lap_ratio * value)

    def drift(self, coords):
        coords = np.asarray(coords, dtype=float)
        alpha = np.asarray(self.exponents, dtype=float)
        r = norm3(coords)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = -alpha[:, None] * (coords / r[..., None])
        return np.where(alpha[:, None] == 0, 0.0, d)


@dataclass(frozen=True)
class NodePolynomial(SymmetrizedRadial):
    """(r0 - r1) e^{-a1 r1 - a2 r2} - (r0 - r2) e^{-a2 r1 - a1 r2}.

    Antisymmetric under exchange; its nodal surface is r1 = r2.
    """

    r0: float
    alpha1: float
    alpha2: float

    symmetry = -1
    noded = True

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.alpha2 > 0):
            raise ParameterError("NodePolynomial exponents must be positive")

    def _direct(self, r1, r2, u, tie_first):
        a1, a2 = self.alpha1, self.alpha2
        p = self.r0 - r1
        e1 = np.exp(-a1 * r1)
        b = np.exp(-a2 * r2)
        A = p * e1
        A1 = (-1.0 - a1 * p) * e1
        A11 = (2.0 * a1 + a1 * a1 * p) * e1
        return Radial(A * b, A1 * b, -a2 * A * b, f11=A11 * b, f22=a2 * a2 * A * b)


@dataclass(frozen=True)
class GoldmanTerm:
    """One CI basis function

    c * exp(-alpha r1 - beta r2 - sigma r< - tau r>) r1^a r2^b r<^s r>^t
    """

    c: float
    sigma: float
    tau: float
    s: int = 0
    t: int = 0
    alpha: float = 0.0
    beta: float = 0.0
    a: int = 0
    b: int = 0


@dataclass(frozen=True)
class GoldmanCI(SymmetrizedRadial):
    """Sum_i c_i [phi_i(r1, r2) + symmetry * phi_i(r2, r1)] over :class:`GoldmanTerm`.

    The r</r> basis has a derivative cusp on r1 = r2; there the one-sided
    limit from r1 < r2 is used.
    """

    terms: tuple
    symmetry: int = 1

    def __post_init__(self):
        if not self.terms:
            raise ParameterError("GoldmanCI needs at least one term")
        if self.symmetry not in (1, -1):
            raise ParameterError("symmetry must be +1 or -1")
        for term in self.terms:
            if term.sigma <= 0 or term.tau <= 0 or term.alpha < 0 or term.beta < 0:
                raise ParameterError(f"nonpositive exponential rate in {term}")
            if min(term.s, term.t, term.a, term.b) < 0:
                raise ParameterError(f"negative power in {term}")

    @property
    def noded(self):
        return self.symmetry < 0

    def _direct(self, r1, r2, u, tie_first):
        lower = (r1 <= r2) if tie_first else (r1 < r2)
        total = None
        for tm in self.terms:
            # r1 is r< on the `lower` branch, r> otherwise.
            p1 = np.where(lower, tm.a + tm.s, tm.a + tm.t)
            k1 = np.where(lower, tm.alpha + tm.sigma, tm.alpha + tm.tau)
            p2 = np.where(lower, tm.b + tm.t, tm.b + tm.s)
            k2 = np.where(lower, tm.beta + tm.tau, tm.beta + tm.sigma)
            rmin = np.minimum(r1, r2)
            rmax = np.maximum(r1, r2)
            f = np.exp(-tm.alpha * r1 - tm.beta * r2 - tm.sigma * rmin - tm.tau * rmax)
            if tm.a or tm.b or tm.s or tm.t:
                f = f * r1**tm.a * r2**tm.b * rmin**tm.s * rmax**tm.t
            l1 = np.where(p1 != 0, p1 / r1, 0.0) - k1
            l2 = np.where(p2 != 0, p2 / r2, 0.0) - k2
            q1 = l1 * l1 - np.where(p1 != 0, p1 / (r1 * r1), 0.0)
            q2 = l2 * l2 - np.where(p2 != 0, p2 / (r2 * r2), 0.0)
            rad = Radial(f, f * l1, f * l2, f11=f * q1, f22=f * q2).scaled(tm.c)
            total = rad if total is None else total.combine(rad, 1)
        return total


@dataclass(frozen=True)
class PadeExp(SymmetrizedRadial):
    """(1 + symmetry P12) exp(P / Q - alpha r1 - beta r2).

    ``numerator`` and ``denominator`` are sequences of ``(n, l, m, coef)``
    for monomials coef * r1^n r2^l r12^m.
    """

    numerator: tuple
    denominator: tuple
    alpha: float
    beta: float
    symmetry: int = 1

    uses_r12 = True

    def __post_init__(self):
        if not self.numerator or not self.denominator:
            raise ParameterError("PadeExp needs non-empty numerator and denominator")
        if self.symmetry not in (1, -1):
            raise ParameterError("symmetry must be +1 or -1")
        if not (self.alpha > 0 and self.beta > 0):
            raise ParameterError("PadeExp exponents must be positive")

    @property
    def noded(self):
        return self.symmetry < 0

    @staticmethod
    def _poly(terms, r1, r2, u):
        out = [0.0] * 9
        for n, l, m, coef in terms:
            p1 = _powers(r1, n)
            p2 = _powers(r2, l)
            pu = _powers(u, m)
            # value, d1, d2, du, d11, d22, duu, d1u, d2u
            parts = (
                p1[0] * p2[0] * pu[0],
                p1[1] * p2[0] * pu[0],
                p1[0] * p2[1] * pu[0],
                p1[0] * p2[0] * pu[1],
                p1[2] * p2[0] * pu[0],
                p1[0] * p2[2] * pu[0],
                p1[0] * p2[0] * pu[2],
                p1[1] * p2[0] * pu[1],
                p1[0] * p2[1] * pu[1],
            )
            out = [o + coef * q for o, q in zip(out, parts)]
        return out

    def _direct(self, r1, r2, u, tie_first):
        P = self._poly(self.numerator, r1, r2, u)
        Q = self._poly(self.denominator, r1, r2, u)
        R = P[0] / Q[0]
        # first derivatives of the quotient: index 1 -> r1, 2 -> r2, 3 -> u
        d = {k: (P[k] - R * Q[k]) / Q[0] for k in (1, 2, 3)}

        def second(kk, i, j):
            return (P[kk] - d[i] * Q[j] - d[j] * Q[i] - R * Q[kk]) / Q[0]

        F1 = d[1] - self.alpha
        F2 = d[2] - self.beta
        Fu = d[3]
        F11 = second(4, 1, 1)
        F22 = second(5, 2, 2)
        Fuu = second(6, 3, 3)
        F1u = second(7, 1, 3)
        F2u = second(8, 2, 3)
        f = np.exp(R - self.alpha * r1 - self.beta * r2)
        return Radial(
            f, f * F1, f * F2, f * Fu,
            f * (F11 + F1 * F1), f * (F22 + F2 * F2), f * (Fuu + Fu * Fu),
            f * (F1u + F1 * Fu), f * (F2u + F2 * Fu),
        )


def _powers(r, n):
    """(r^n, n r^(n-1), n(n-1) r^(n-2)) with vanishing coefficients exact."""
    if n == 0:
        one = np.ones_like(r)
        return one, 0.0 * r, 0.0 * r
    if n == 1:
        return r, np.ones_like(r), 0.0 * r
    return r**n, n * r ** (n - 1), n * (n - 1) * r ** (n - 2)


@dataclass(frozen=True)
class PzProduct(TrialFunction):
    """(z1 + z2) [exp(-a1 r1 - a2 r2) + exp(-a2 r1 - a1 r2)] for the P_z state."""

    alpha1: float
    alpha2: float

    noded = True

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.alpha2 > 0):
            raise ParameterError("PzProduct exponents must be positive")
        object.__setattr__(self, "_radial", _SymmetricPair(self.alpha1, self.alpha2))

    def evaluate(self, coords):
        coords = _two_electron(coords)
        g = self._radial.evaluate(coords)
        h = coords[..., 0, 2] + coords[..., 1, 2]
        grad = h[..., None, None] * g.gradient
        grad[..., :, 2] += g.value[..., None]
        lap = h * g.laplacian + 2.0 * (g.gradient[..., 0, 2] + g.gradient[..., 1, 2])
        return TrialEval(h * g.value, grad, lap)


@dataclass(frozen=True)
class _SymmetricPair(SymmetrizedRadial):
    alpha1: float
    alpha2: float

    symmetry = 1

    def _direct(self, r1, r2, u, tie_first):
        a1, a2 = self.alpha1, self.alpha2
        f = np.exp(-a1 * r1 - a2 * r2)
        return Radial(f, -a1 * f, -a2 * f, f11=a1 * a1 * f, f22=a2 * a2 * f)


@dataclass(frozen=True)
class Scaled(TrialFunction):
    """c * phi. Drift and perturbation potential do not depend on c."""

    inner: TrialFunction
    factor: float = field(default=1.0)

    def __post_init__(self):
        if self.factor == 0:
            raise ParameterError("scale factor must be nonzero")

    @property
    def noded(self):
        return self.inner.noded

    @property
    def n_electrons(self):
        return self.inner.n_electrons

    def evaluate(self, coords):
        ev = self.inner.evaluate(coords)
        c = self.factor
        return TrialEval(c * ev.value, c * ev.gradient, c * ev.laplacian)

    def drift(self, coords):
        return self.inner.drift(coords)


def evaluate(spec, coords):
    return spec.evaluate(coords)


def drift(spec, coords):
    return spec.drift(coords)


def local_energy(spec, coords, atom):
    return spec.local_energy(coords, atom)
