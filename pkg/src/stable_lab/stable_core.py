"""Scalar and vector alpha-stable machinery.

Conventions follow the characteristic function

    E exp(i xi.X) = exp(-sum_k w_k nu_alpha(r_k . xi) + i xi.shift)

for a discrete spectral measure with unit atoms ``r_k`` and positive weights
``w_k`` (the scale is folded into the weights).
"""

from dataclasses import dataclass, field

import numpy as np

from ._parallel import as_rng

_ATOM_TOL = 1e-12
_ANGLE_GUARD = 1e-12


class InvariantError(ValueError):
    """Raised when an input violates a documented invariant.

    The first argument names the invariant so the CLI can report it.
    """

    def __init__(self, invariant, detail=""):
        self.invariant = invariant
        msg = invariant if not detail else f"{invariant}: {detail}"
        super().__init__(msg)


def check_alpha(alpha):
    """Return ``alpha`` as a float, enforcing 0 < alpha <= 2."""
    try:
        a = float(alpha)
    except (TypeError, ValueError):
        raise InvariantError("0 < alpha <= 2", f"got {alpha!r}") from None
    if not (0.0 < a <= 2.0):
        raise InvariantError("0 < alpha <= 2", f"got {alpha!r}")
    return a


@dataclass(frozen=True)
class CfEstimate:
    """Monte Carlo estimate of a complex quantity.

    ``std_error`` is the standard error of the complex estimate, i.e. the
    square root of the summed real and imaginary variances over ``n``.
    """

    value: complex
    std_error: float
    n: int

    def __complex__(self):
        return complex(self.value)

    def __abs__(self):
        return abs(self.value)


@dataclass(frozen=True, eq=False)
class SpectralMeasureEig:
    """Finite spectral measure on the unit sphere of R^N.

    Parameters
    ----------
    atoms : array_like, shape (K, N)
        Unit vectors; stored unordered.
    weights : array_like, shape (K,)
        Positive masses.  Their sum is the scale of the stable law.
    """

    atoms: np.ndarray
    weights: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float, copy=True)
        weights = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        if atoms.ndim == 1:
            atoms = atoms[None, :]
        if atoms.ndim != 2 or atoms.shape[0] == 0 or atoms.shape[1] == 0:
            raise InvariantError("atoms list non-empty", f"shape {atoms.shape}")
        if weights.shape[0] != atoms.shape[0]:
            raise InvariantError(
                "weights aligned with atoms",
                f"{weights.shape[0]} weights for {atoms.shape[0]} atoms",
            )
        if not np.all(np.isfinite(atoms)) or not np.all(np.isfinite(weights)):
            raise InvariantError("finite atoms and weights")
        norms = np.linalg.norm(atoms, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > _ATOM_TOL)
        if bad.size:
            raise InvariantError(
                "every atom has unit norm", f"atom {bad[0]} has norm {norms[bad[0]]!r}"
            )
        if np.any(weights <= 0):
            raise InvariantError("every weight > 0")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "dim", atoms.shape[1])

    @property
    def total_mass(self):
        return float(self.weights.sum())

    def __len__(self):
        return self.weights.shape[0]

    def to_dict(self):
        return {
            "N": self.dim,
            "atoms": self.atoms.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        try:
            n = int(data["N"])
            atoms, weights = data["atoms"], data["weights"]
        except (KeyError, TypeError) as exc:
            raise InvariantError("measure JSON has keys N, atoms, weights", str(exc)) from None
        measure = cls(atoms, weights)
        if measure.dim != n:
            raise InvariantError("atom length equals N", f"N={n}, atoms have {measure.dim}")
        return measure


@dataclass(frozen=True, eq=False)
class StableVectorSpec:
    alpha: float
    measure: SpectralMeasureEig
    shift: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        shift = np.zeros(self.measure.dim) if self.shift is None else np.asarray(self.shift, float)
        if shift.shape != (self.measure.dim,):
            raise InvariantError("shift dimension equals measure.dim", f"shape {shift.shape}")
        object.__setattr__(self, "shift", shift)


def nu_alpha(u, alpha):
    """The stable exponent ``nu_alpha(u)``, vectorised over ``u``.

    For alpha != 1 this is ``|u|^a (1 - i sgn(u) tan(pi a / 2))``; for alpha == 1
    it is ``|u| (1 + (2i/pi) sgn(u) log|u|)`` with the value 0 at u = 0.
    """
    alpha = check_alpha(alpha)
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    sgn = np.sign(u)
    if alpha == 1.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            logu = np.where(au > 0, np.log(np.where(au > 0, au, 1.0)), 0.0)
        out = au + 1j * (2.0 / np.pi) * sgn * au * logu
    elif alpha == 2.0:
        # tan(pi) is not exactly zero in floating point
        out = (au * au).astype(complex)
    else:
        out = au**alpha * (1.0 - 1j * sgn * np.tan(np.pi * alpha / 2.0))
    if out.ndim == 0:
        return complex(out)
    return out


def target_cf_vector(spec, xi):
    """Characteristic function of ``spec`` at the rows of ``xi``."""
    xi = np.asarray(xi, dtype=float)
    proj = xi @ spec.measure.atoms.T
    expo = -(nu_alpha(proj, spec.alpha) * spec.measure.weights).sum(axis=-1)
    return np.exp(expo + 1j * (xi @ spec.shift))


def sample_skewed_stable(alpha, rng=None, size=None):
    """Totally skewed (beta = 1) standard stable draws via Chambers-Mallows-Stuck.

    The draws have characteristic function ``exp(-nu_alpha(u))``.
    Returns a float when ``size`` is None.
    """
    alpha = check_alpha(alpha)
    rng = as_rng(rng)
    half = np.pi / 2.0
    v = rng.uniform(-half, half, size=size)
    v = np.clip(v, -half + _ANGLE_GUARD, half - _ANGLE_GUARD)
    w = rng.standard_exponential(size=size)
    if alpha == 1.0:
        hv = half + v
        z = (2.0 / np.pi) * (hv * np.tan(v) - np.log(half * w * np.cos(v) / hv))
    elif alpha == 2.0:
        z = 2.0 * np.sin(v) * np.sqrt(w)
    else:
        tan_a = np.tan(np.pi * alpha / 2.0)
        b = np.arctan(tan_a) / alpha
        s = (1.0 + tan_a * tan_a) ** (1.0 / (2.0 * alpha))
        av = alpha * (v + b)
        z = (
            s
            * np.sin(av)
            / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - av) / w) ** ((1.0 - alpha) / alpha)
        )
    if size is None:
        return float(z)
    return z


def sample_stable_vector(spec, rng=None, size=None):
    """Exact draws of a stable vector with a discrete spectral measure.

    Uses ``X = shift + sum_k w_k^(1/a) r_k Z_k`` for alpha != 1 and
    ``X = shift + sum_k w_k r_k (Z_k + (2/pi) log w_k)`` for alpha == 1, with
    ``Z_k`` independent totally skewed standard stable variables.

    Returns shape ``(N,)`` when ``size`` is None, else ``(size, N)``.
    """
    rng = as_rng(rng)
    n = 1 if size is None else int(size)
    w = spec.measure.weights
    z = sample_skewed_stable(spec.alpha, rng, size=(n, w.shape[0]))
    if spec.alpha == 1.0:
        coef = w * (z + (2.0 / np.pi) * np.log(w))
    else:
        coef = w ** (1.0 / spec.alpha) * z
    x = coef @ spec.measure.atoms + spec.shift
    return x[0] if size is None else x


def symmetrize_measure(measure):
    """Mirror every atom, splitting its weight equally between ``r`` and ``-r``.

    Atoms that already appear with their mirror are merged, so a symmetric
    input comes back unchanged up to ordering.
    """
    merged = {}
    order = []
    for r, w in zip(measure.atoms, measure.weights):
        for atom in (r, -r):
            key = tuple(np.round(atom, 12) + 0.0)
            if key not in merged:
                merged[key] = [atom, 0.0]
                order.append(key)
            merged[key][1] += w / 2.0
    atoms = np.array([merged[k][0] for k in order])
    weights = np.array([merged[k][1] for k in order])
    return SpectralMeasureEig(atoms, weights)


def empirical_cf_vector(samples, xi):
    """Sample mean of ``exp(i xi.X)`` with its standard error."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise ValueError("empirical_cf_vector needs at least one sample")
    phase = np.exp(1j * (x @ np.atleast_1d(np.asarray(xi, dtype=float))))
    return mean_with_se(phase)


def mean_with_se(values):
    """Mean of complex ``values`` and the standard error of that mean."""
    values = np.asarray(values)
    n = values.shape[0]
    mean = values.mean()
    if n < 2:
        return CfEstimate(complex(mean), 0.0, n)
    dev = values - mean
    var = float(np.mean(dev.real**2 + dev.imag**2))
    return CfEstimate(complex(mean), float(np.sqrt(var / n)), n)
