"""Hermitian matrices, Haar unitaries, the standardised sum Y_m and support classes."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._parallel import as_rng, map_blocks
from .stable_core import InvariantError, SpectralMeasureEig, StableVectorSpec, check_alpha
from .stable_core import sample_stable_vector

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
RANK_TOL = 1e-10


def check_hermitian(x, tol=HERMITIAN_TOL):
    x = np.asarray(x)
    if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
        raise InvariantError("square matrix", f"shape {x.shape}")
    err = np.max(np.abs(x - np.conj(np.swapaxes(x, -1, -2)))) if x.size else 0.0
    if err > tol * max(1.0, float(np.max(np.abs(x)))):
        raise InvariantError("entries[j][k] = conj(entries[k][j])", f"asymmetry {err:.3g}")
    return x


def check_unitary(u, tol=UNITARY_TOL):
    u = np.asarray(u)
    n = u.shape[-1]
    gram = u @ np.conj(np.swapaxes(u, -1, -2))
    err = float(np.max(np.abs(gram - np.eye(n))))
    if err > tol:
        raise InvariantError("U U^dagger = I", f"max deviation {err:.3g}")
    return u


def sample_haar_unitary(n, rng=None, size=None):
    """Haar-distributed unitaries from QR of a complex Ginibre matrix.

    The phases of ``R``'s diagonal are moved into ``Q``; without that fix the
    QR factor is not Haar distributed.  Returns ``(n, n)`` or ``(size, n, n)``.
    """
    if int(n) < 1:
        raise InvariantError("N >= 1", f"got {n}")
    rng = as_rng(rng)
    shape = (1 if size is None else int(size), n, n)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (d / np.abs(d))[:, None, :]
    return q[0] if size is None else q


def trace_decompose(x):
    """Split ``x`` into ``(tr x, x - tr(x)/N I)``."""
    x = check_hermitian(np.asarray(x, dtype=complex), tol=1e-10)
    n = x.shape[-1]
    t = float(np.real(np.trace(x)))
    return t, x - (t / n) * np.eye(n)


def conjugate_diagonals(unitaries, s):
    """Diagonals of ``U S U^dagger`` for a stack of unitaries.

    The trace part of ``S`` is added back exactly, so multiples of the
    identity map to themselves without rounding.
    """
    s = np.asarray(s, dtype=complex)
    n = s.shape[-1]
    u = np.asarray(unitaries)
    if np.array_equal(s, s[0, 0] * np.eye(n)):
        # tr(s)/n can differ from s[0,0] in the last bit
        return np.full(u.shape[:-2] + (n,), float(np.real(s[0, 0])))
    t = np.real(np.trace(s)) / n
    s0 = s - t * np.eye(n)
    if not np.any(s0):
        diag = np.zeros(u.shape[:-2] + (n,))
    elif np.count_nonzero(s0 - np.diag(np.diagonal(s0))) == 0:
        diag = (np.abs(u) ** 2) @ np.real(np.diagonal(s0))
    else:
        diag = np.real(np.einsum("...jk,kl,...jl->...j", u, s0, np.conj(u)))
    return diag + t


class SupportTag(str, Enum):
    FULL_HERM = "FullHerm"
    TRACELESS = "TracelessHyperplane"
    IDENTITY_LINE = "IdentityLine"
    ZERO = "Zero"


@dataclass(frozen=True)
class SupportCase:
    """Support class of the ensemble generated by an eigenvalue measure.

    ``span_dim`` is the rank of the atom span in R^N.  ``degenerate`` is set
    when that span is none of R^N, R^N_0 or the diagonal line.
    """

    tag: SupportTag
    span_dim: int
    dim: int
    degenerate: bool = False

    @property
    def matrix_dim(self):
        """Dimension of the matrix-level support span."""
        n = self.dim
        if self.degenerate:
            return None
        return {
            SupportTag.FULL_HERM: n * n,
            SupportTag.TRACELESS: n * n - 1,
            SupportTag.IDENTITY_LINE: 1,
            SupportTag.ZERO: 0,
        }[self.tag]

    def __str__(self):
        if self.degenerate:
            return f"degenerate (span_dim={self.span_dim}, N={self.dim})"
        return f"{self.tag.value} (span_dim={self.span_dim}, N={self.dim})"


def span_rank(vectors, tol=RANK_TOL):
    sv = np.linalg.svd(np.asarray(vectors, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def classify_support(measure):
    n = measure.dim
    atoms = measure.atoms
    d = span_rank(atoms)
    if d == 0:
        return SupportCase(SupportTag.ZERO, 0, n)
    if d == n:
        return SupportCase(SupportTag.FULL_HERM, d, n)
    traceless = np.all(np.abs(atoms.sum(axis=1)) <= RANK_TOL)
    if d == n - 1 and traceless:
        return SupportCase(SupportTag.TRACELESS, d, n)
    ones = np.ones(n) / np.sqrt(n)
    if np.all(np.minimum(np.abs(atoms - ones).max(axis=1), np.abs(atoms + ones).max(axis=1)) <= RANK_TOL):
        return SupportCase(SupportTag.IDENTITY_LINE, d, n)
    return SupportCase(SupportTag.ZERO, d, n, degenerate=True)


def t_zero(measure):
    """Mean trace per dimension of the eigenvalue measure, ``(1/N) sum_k w_k sum_j r_kj``."""
    # fsum keeps symmetric measures at exactly zero drift
    return math.fsum(measure.weights * measure.atoms.sum(axis=1)) / measure.dim


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    alpha: float
    measure: SpectralMeasureEig
    m: int = 1
    mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        if self.measure.dim < 2:
            raise InvariantError("N >= 2", f"got N={self.measure.dim}")
        if int(self.m) < 1 or int(self.m) != self.m:
            raise InvariantError("m >= 1", f"got m={self.m}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def dim(self):
        return self.measure.dim

    def drift(self):
        """Scalar multiple of the identity subtracted at alpha = 1."""
        if self.alpha != 1.0:
            return 0.0
        return 2.0 * t_zero(self.measure) * np.log(self.m) / np.pi

    def to_dict(self):
        return {"alpha": self.alpha, "m": self.m, "mu": self.mu, "measure": self.measure.to_dict()}


def _sum_block(spec, size, rng, drift=True):
    n, m = spec.dim, spec.m
    vec_spec = StableVectorSpec(spec.alpha, spec.measure)
    u = sample_haar_unitary(n, rng, size=size * m).reshape(size, m, n, n)
    x = sample_stable_vector(vec_spec, rng, size=size * m).reshape(size, m, n)
    y = np.einsum("sajk,salk->sjl", u * x[:, :, None, :], np.conj(u)) * m ** (-1.0 / spec.alpha)
    y = 0.5 * (y + np.conj(np.swapaxes(y, -1, -2)))
    shift = spec.mu - (spec.drift() if drift else 0.0)
    idx = np.arange(n)
    y[:, idx, idx] += shift
    return y


def sample_Y_m(spec, rng=None, drift=True):
    """One draw of the standardised sum ``Y_m`` plus ``mu I``.

    ``drift=False`` omits the alpha = 1 log-drift; diagnostic use only.
    """
    return _sum_block(spec, 1, as_rng(rng), drift=drift)[0]


def sample_Y_m_batch(spec, n, seed, drift=True):
    """``n`` independent draws of ``Y_m``; block ``i`` uses substream ``(seed, i)``."""
    block = max(1, min(256, 65536 // spec.m))
    blocks = map_blocks(lambda size, rng: _sum_block(spec, size, rng, drift), n, seed, block=block)
    if not blocks:
        return np.empty((0, spec.dim, spec.dim), dtype=complex)
    return np.concatenate(blocks)


def herm_basis(n, traceless=False):
    """Orthonormal basis of Herm(N) (or its traceless part) for ``<A, B> = tr AB``.

    Diagonal directions come first, then the real and imaginary off-diagonal
    directions scaled by 1/sqrt(2).
    """
    if traceless:
        # orthonormal basis of the sum-zero diagonal vectors
        helmert = np.linalg.qr(np.eye(n) - 1.0 / n)[0][:, : n - 1]
        diag = [np.diag(helmert[:, k]).astype(complex) for k in range(n - 1)]
    else:
        diag = [np.diag(np.eye(n)[k]).astype(complex) for k in range(n)]
    off = []
    for j in range(n):
        for k in range(j + 1, n):
            re = np.zeros((n, n), dtype=complex)
            re[j, k] = re[k, j] = 1.0 / np.sqrt(2.0)
            im = np.zeros((n, n), dtype=complex)
            im[j, k] = -1j / np.sqrt(2.0)
            im[k, j] = 1j / np.sqrt(2.0)
            off += [re, im]
    return np.array(diag + off)


def from_coordinates(coords, basis):
    """Matrices ``sum_i c_i B_i`` for a stack of coordinate vectors."""
    return np.tensordot(np.asarray(coords, dtype=float), basis, axes=(-1, 0))


def random_unit_matrices(n, count, rng=None, traceless=False):
    """``count`` directions drawn uniformly from the unit sphere of the workspace."""
    rng = as_rng(rng)
    basis = herm_basis(n, traceless)
    c = rng.standard_normal((count, basis.shape[0]))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    return from_coordinates(c, basis)
