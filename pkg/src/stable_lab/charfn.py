"""Haar-averaged characteristic functions of the matrix ensembles.

For a test matrix S and Haar unitaries U this module evaluates

    w(U S U^dagger) = sum_k w_k nu_alpha(r_k . diag(U S U^dagger))

and from its Haar averages the finite-m characteristic function
``<exp(-w/m)>^m``, the limit ``exp(-<w>)``, the complex variance ``v(S)`` and
the log-ratio ``D`` between them.  All estimators accept one shared
:class:`HaarSample` so that differences between them are free of independent
Monte Carlo noise.
"""

from dataclasses import dataclass, field

import numpy as np

from ._parallel import map_blocks
from .matrix_core import (
    SupportTag,
    check_hermitian,
    conjugate_diagonals,
    from_coordinates,
    herm_basis,
    t_zero,
)
from .stable_core import CfEstimate, InvariantError, SpectralMeasureEig, check_alpha
from .stable_core import mean_with_se, nu_alpha

__all__ = [
    "CfEstimate",
    "HaarSample",
    "HaarAverages",
    "RegimeError",
    "cf_infinity",
    "cf_m",
    "d_term",
    "haar_averages",
    "haar_mean_w",
    "m_H_estimate",
    "mean_re_w",
    "orbital_measure",
    "project_diagonals",
    "variance_v",
    "w_alpha",
    "w_alpha_abs_bound",
    "w_on_rank_one",
]

R_HAT_FLOOR = 1e-8


class RegimeError(ValueError):
    """|r_m| fell below the floor where the principal logarithm is trustworthy."""


def default_n_haar(n):
    return 100_000 if n == 2 else 10_000


@dataclass(frozen=True, eq=False)
class HaarSample:
    """Immutable stack of Haar unitaries shared between estimators."""

    unitaries: np.ndarray
    seed: int = None
    abs2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        u = np.array(self.unitaries, dtype=complex)
        if u.ndim != 3 or u.shape[1] != u.shape[2] or u.shape[0] == 0:
            raise InvariantError("non-empty stack of square unitaries", f"shape {u.shape}")
        u.setflags(write=False)
        a = np.abs(u) ** 2
        a.setflags(write=False)
        object.__setattr__(self, "unitaries", u)
        object.__setattr__(self, "abs2", a)

    @classmethod
    def draw(cls, n, size, seed):
        from .matrix_core import sample_haar_unitary

        blocks = map_blocks(lambda k, rng: sample_haar_unitary(n, rng, size=k), size, seed)
        return cls(np.concatenate(blocks), seed=seed)

    @property
    def dim(self):
        return self.unitaries.shape[1]

    def __len__(self):
        return self.unitaries.shape[0]

    def diagonals(self, s):
        """``diag(U S U^dagger)`` for every unitary; shape ``(n, N)``."""
        return conjugate_diagonals(self.unitaries, s)

    def diagonals_from_eigs(self, eigs):
        """Diagonals for ``S = diag(eigs)``; ``eigs`` may be a stack ``(P, N)``."""
        return np.einsum("ujk,...k->...uj", self.abs2, np.asarray(eigs, dtype=float))


def _check_dims(measure, n):
    if measure.dim != n:
        raise InvariantError("measure.dim = X.dim", f"{measure.dim} != {n}")


def project_diagonals(diags, atoms):
    """``diags @ atoms.T`` with constant diagonals mapped exactly to ``d * sum(r_k)``.

    A fused multiply-add in the matmul would otherwise leave rounding noise
    where the projection cancels exactly, e.g. identity directions against
    sum-zero atoms.
    """
    diags = np.asarray(diags, dtype=float)
    first = diags[..., :1]
    return (diags - first) @ atoms.T + first * atoms.sum(axis=1)


def w_from_diagonals(diags, measure, alpha):
    """w evaluated from precomputed diagonals, vectorised over leading axes."""
    proj = project_diagonals(diags, measure.atoms)
    return nu_alpha(proj, alpha) @ measure.weights


def w_alpha(x, measure, alpha):
    """``sum_k w_k nu_alpha(sum_j r_kj X_jj)`` for a single Hermitian ``X``."""
    x = check_hermitian(np.asarray(x, dtype=complex), tol=1e-10)
    _check_dims(measure, x.shape[-1])
    return complex(w_from_diagonals(np.real(np.diagonal(x)), measure, alpha))


def w_alpha_abs_bound(x, alpha):
    """Upper bound on ``|w_alpha(X)|`` for a probability spectral measure.

    Depends on ``X`` only through ``tr X^2``.
    """
    alpha = check_alpha(alpha)
    x = np.asarray(x, dtype=complex)
    tr2 = float(np.real(np.trace(x @ x)))
    if alpha == 1.0:
        if tr2 <= 0.0:
            return 0.0
        return float(np.sqrt(tr2) * np.sqrt(1.0 + (np.log(tr2) / np.pi) ** 2))
    return float(tr2 ** (alpha / 2.0) / abs(np.cos(np.pi * alpha / 2.0)))


def _log1p(z):
    # numpy's complex log1p loses the real part for tiny arguments
    z = complex(z)
    x, y = z.real, z.imag
    return complex(0.5 * np.log1p(2.0 * x + x * x + y * y), np.arctan2(y, 1.0 + x))


@dataclass(frozen=True, eq=False)
class HaarAverages:
    """Per-unitary values of w at one test matrix, on one Haar sample.

    ``linear`` holds ``sum_k w_k r_k . diag(U S U^dagger)``, needed for the
    alpha = 1 rescaling; ``t0_trace`` is ``t_0 tr S``.
    """

    w: np.ndarray
    linear: np.ndarray
    t0_trace: float
    alpha: float

    def mean_w(self):
        return mean_with_se(self.w)

    def cf_infinity(self):
        mw = self.mean_w()
        val = np.exp(-mw.value)
        return CfEstimate(complex(val), abs(val) * mw.std_error, mw.n)

    def _exponent_m1(self, m, drift=True):
        """``exp(-w(m^{-1/a} S)) * drift phase^(1/m) - 1`` per unitary."""
        expo = -self.w / m
        if self.alpha == 1.0 and m != 1:
            shift = self.linear - (self.t0_trace if drift else 0.0)
            expo = expo + 2j / np.pi * (np.log(m) / m) * shift
        return np.expm1(expo)

    def r_hat(self, m, drift=True):
        """``<exp(-w/m)>`` (alpha = 1: with the exact log rescaling), as ``r - 1`` estimate."""
        return mean_with_se(self._exponent_m1(m, drift))

    def cf_m(self, m, drift=True):
        m = _check_m(m)
        e = self.r_hat(m, drift)
        r = 1.0 + e.value
        if abs(r) == 0.0:
            return CfEstimate(0j, 0.0, e.n)
        val = np.exp(m * _log1p(e.value))
        se = m * abs(r) ** (m - 1) * e.std_error
        return CfEstimate(complex(val), float(se), e.n)

    def variance(self):
        dev = self.w - self.w.mean()
        return mean_with_se(dev * dev)

    def d_term(self, m, drift=True):
        m = _check_m(m)
        e = self._exponent_m1(m, drift)
        ebar = e.mean()
        if abs(1.0 + ebar) <= R_HAT_FLOOR:
            raise RegimeError(f"|r_m| = {abs(1.0 + ebar):.3g} <= {R_HAT_FLOOR}; S too large for m={m}")
        wbar = self.w.mean()
        value = m * _log1p(ebar) + wbar
        # delta-method influence of each unitary on D
        psi = m * (e - ebar) / (1.0 + ebar) + (self.w - wbar)
        n = psi.shape[0]
        se = np.sqrt(np.mean(np.abs(psi) ** 2) / n) if n > 1 else 0.0
        return CfEstimate(complex(value), float(se), n)


def _check_m(m):
    if int(m) != m or m < 1:
        raise InvariantError("m >= 1", f"got {m!r}")
    return int(m)


def haar_averages(s, measure, alpha, haar):
    alpha = check_alpha(alpha)
    s = check_hermitian(np.asarray(s, dtype=complex), tol=1e-10)
    _check_dims(measure, s.shape[-1])
    if haar.dim != measure.dim:
        raise InvariantError("haar.dim = measure.dim", f"{haar.dim} != {measure.dim}")
    diags = haar.diagonals(s)
    return _averages_from_diagonals(diags, measure, alpha, float(np.real(np.trace(s))))


def _averages_from_diagonals(diags, measure, alpha, trace):
    proj = project_diagonals(diags, measure.atoms)
    w = nu_alpha(proj, alpha) @ measure.weights
    linear = proj @ measure.weights
    return HaarAverages(np.asarray(w), linear, t_zero(measure) * trace, alpha)


def haar_averages_eigs(eigs, measure, alpha, haar):
    """Like :func:`haar_averages` for ``S = diag(eigs)``, using ``|U|^2`` only."""
    eigs = np.asarray(eigs, dtype=float)
    return _averages_from_diagonals(haar.diagonals_from_eigs(eigs), measure, check_alpha(alpha), float(eigs.sum()))


def haar_mean_w(s, measure, alpha, haar):
    """Monte Carlo mean of ``w(U S U^dagger)`` over ``haar``."""
    return haar_averages(s, measure, alpha, haar).mean_w()


def cf_infinity(s, measure, alpha, haar):
    """Limit characteristic function ``exp(-<w(U S U^dagger)>)``."""
    return haar_averages(s, measure, alpha, haar).cf_infinity()


def cf_m(s, m, measure, alpha, haar, drift=True):
    """Characteristic function of ``Y_m`` at ``S``: ``<exp(-w/m)>^m``.

    At alpha = 1 the rescaling ``w(S/m)`` is applied exactly and the drift
    phase ``exp(-2i t_0 log(m) tr(S) / pi)`` is folded in; ``drift=False``
    drops it (diagnostic mode).
    """
    return haar_averages(s, measure, alpha, haar).cf_m(m, drift)


def variance_v(s, measure, alpha, haar):
    """Complex Haar variance ``<w^2> - <w>^2``."""
    return haar_averages(s, measure, alpha, haar).variance()


def d_term(s, m, measure, alpha, haar, drift=True):
    """``D = m log r_m(S) + <w>``, principal branch; ``exp(D) cf_inf = cf_m``."""
    return haar_averages(s, measure, alpha, haar).d_term(m, drift)


def mean_re_w(s, measure, alpha, haar):
    """``<Re w(U S U^dagger)>`` as a float."""
    proj = project_diagonals(haar.diagonals(s), measure.atoms)
    return float(np.mean(np.abs(proj) ** check_alpha(alpha) @ measure.weights))


def m_H_estimate(measure, alpha, workspace, n_directions, haar, rng=None, steps=100, starts=3):
    """Upper estimate of ``inf <Re w(U S U^dagger)>`` over the unit sphere of the workspace.

    Random search over ``n_directions`` unit directions, then coordinate
    descent from the ``starts`` best of them.  The step halves whenever a
    full sweep fails to improve.
    """
    alpha = check_alpha(alpha)
    if workspace.degenerate or workspace.tag not in (SupportTag.FULL_HERM, SupportTag.TRACELESS):
        raise InvariantError("workspace is FullHerm or TracelessHyperplane", str(workspace))
    rng = np.random.default_rng(rng)
    basis = herm_basis(measure.dim, workspace.tag is SupportTag.TRACELESS)
    atoms = measure.atoms
    weights = measure.weights
    u = haar.unitaries

    def objective(c):
        c = c / np.linalg.norm(c)
        s = from_coordinates(c, basis)
        proj = project_diagonals(conjugate_diagonals(u, s), atoms)
        return float(np.mean(np.abs(proj) ** alpha @ weights))

    dirs = rng.standard_normal((int(n_directions), basis.shape[0]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    # canonical axes and, on Herm(N), the identity direction are always tried
    extra = [np.eye(basis.shape[0])]
    if workspace.tag is SupportTag.FULL_HERM:
        ident = np.zeros(basis.shape[0])
        ident[: measure.dim] = 1.0 / np.sqrt(measure.dim)
        extra.append(ident[None, :])
    dirs = np.vstack([dirs] + extra)
    values = np.array([objective(c) for c in dirs])
    best_val = np.inf
    for idx in np.argsort(values)[: max(1, starts)]:
        c, val = dirs[idx].copy(), values[idx]
        h = 0.5
        for _ in range(steps):
            improved = False
            for i in range(c.shape[0]):
                for sgn in (1.0, -1.0):
                    trial = c.copy()
                    trial[i] += sgn * h
                    nrm = np.linalg.norm(trial)
                    if nrm == 0:
                        continue
                    trial /= nrm
                    tv = objective(trial)
                    if tv < val:
                        c, val, improved = trial, tv, True
            if not improved:
                h *= 0.5
                if h < 1e-6:
                    break
        best_val = min(best_val, val)
    return float(best_val)


def orbital_measure(t, n):
    """Mixture of the orbits of ``diag(+1,0,...)`` (mass t/2) and ``diag(-1,0,...)``.

    Atoms ``+e_j`` carry weight ``t/(2N)`` and ``-e_j`` carry ``(1-t)/(2N)``; the
    total mass is therefore 1/2.  Zero-weight atoms (t = 0 or 1) are dropped.
    """
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise InvariantError("0 <= t <= 1", f"got {t}")
    eye = np.eye(int(n))
    atoms, weights = [], []
    if t > 0:
        atoms.append(eye)
        weights.append(np.full(n, t / (2 * n)))
    if t < 1:
        atoms.append(-eye)
        weights.append(np.full(n, (1 - t) / (2 * n)))
    return SpectralMeasureEig(np.vstack(atoms), np.concatenate(weights))


def w_on_rank_one(u_col, t, alpha):
    """Closed form of ``w(U S_0 U^dagger)`` for the orbital measure, ``S_0 = diag(1,0,...,0)``.

    Only the first column of ``U`` enters, through ``|u_j|^2``.
    """
    alpha = check_alpha(alpha)
    u = np.asarray(u_col, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(u) - 1.0) > 1e-10:
        raise InvariantError("unit column", f"norm {np.linalg.norm(u)!r}")
    n = u.shape[0]
    p = np.abs(u) ** 2
    if alpha == 1.0:
        nz = p > 0
        ent = float(np.sum(p[nz] * np.log(np.sqrt(p[nz]))))
        return complex(1.0, 4.0 / np.pi * (2 * t - 1) * ent) / (2 * n)
    tan = 0.0 if alpha == 2.0 else np.tan(np.pi * alpha / 2.0)
    return complex(np.sum(p**alpha)) * complex(1.0, -(2 * t - 1) * tan) / (2 * n)
