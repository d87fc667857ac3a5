"""Covariance kernels: evaluation, Gram matrices and hyperparameter gradients.

Stationary families (SE, Matern, RQ) are parameterized by a signal variance
and one length-scale per input dimension (a single entry means isotropic).
Nonstationary families (Linear, Polynomial) reuse the length-scales as
per-dimension input scalings so that every family shares one spec type.

Hyperparameter gradients are taken with respect to the *logarithm* of each
positive parameter, which is also the parameterization the optimizer works in.
"""

from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gamma, kv

STATIONARY_FAMILIES = ("SE", "Matern12", "Matern32", "Matern52", "MaternGeneral", "RQ")
FAMILIES = STATIONARY_FAMILIES + ("Linear", "Polynomial")

_SQRT3 = np.sqrt(3.0)
_SQRT5 = np.sqrt(5.0)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its hyperparameters.

    Parameters
    ----------
    family : str
        One of ``SE, Matern12, Matern32, Matern52, MaternGeneral, RQ,
        Linear, Polynomial``.
    signal_variance : float
        Prior variance of the process, > 0.
    length_scales : array_like
        Characteristic length-scales; one entry for an isotropic kernel or
        one per input dimension for the anisotropic variant. All > 0.
    smoothness : float or (int, float), optional
        Matern order kappa (MaternGeneral), mixture parameter alpha (RQ),
        or ``(order p, offset c)`` for the Polynomial kernel.
    noise_variance : float
        Observation noise variance, >= 0.
    """

    family: str
    signal_variance: float = 1.0
    length_scales: Union[float, Tuple[float, ...]] = (1.0,)
    smoothness: Optional[Union[float, Tuple[int, float]]] = None
    noise_variance: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.signal_variance > 0:
            raise ValueError("signal_variance must be > 0")
        ells = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        if np.any(ells <= 0):
            raise ValueError("all length_scales must be > 0")
        object.__setattr__(self, "length_scales", tuple(ells.tolist()))
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")
        if self.family in ("MaternGeneral", "RQ"):
            if self.smoothness is None or not float(self.smoothness) > 0:
                raise ValueError(f"{self.family} needs smoothness > 0")
        if self.family == "Polynomial":
            if self.smoothness is None:
                raise ValueError("Polynomial needs smoothness=(order, offset)")
            p, c = self.smoothness
            if int(p) < 1:
                raise ValueError("Polynomial order must be >= 1")
            if c < 0:
                # c < 0 breaks positive semidefiniteness.
                raise ValueError("Polynomial offset must be >= 0")
            object.__setattr__(self, "smoothness", (int(p), float(c)))

    @property
    def is_stationary(self):
        return self.family in STATIONARY_FAMILIES

    def ell(self, d):
        """Length-scale vector broadcast to dimension d."""
        ells = np.asarray(self.length_scales, dtype=float)
        if ells.size == 1:
            return np.full(d, ells[0])
        if ells.size != d:
            raise ValueError(f"kernel has {ells.size} length-scales, input has dimension {d}")
        return ells

    def to_dict(self):
        sm = self.smoothness
        if isinstance(sm, tuple):
            sm = list(sm)
        return {
            "family": self.family,
            "signal_variance": self.signal_variance,
            "length_scales": list(self.length_scales),
            "smoothness": sm,
            "noise_variance": self.noise_variance,
        }

    @staticmethod
    def from_dict(d):
        sm = d.get("smoothness")
        if isinstance(sm, list):
            sm = (int(sm[0]), float(sm[1]))
        return KernelSpec(
            family=d["family"],
            signal_variance=float(d["signal_variance"]),
            length_scales=tuple(float(v) for v in d["length_scales"]),
            smoothness=sm,
            noise_variance=float(d.get("noise_variance", 0.0)),
        )


def _as_matrix(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array of points")
    return X


def _scaled_sq_dists(X, X2, ells):
    q = cdist(X / ells, X2 / ells, "sqeuclidean")
    return np.maximum(q, 0.0)


def _matern_general(q, kappa, s):
    r = np.sqrt(q)
    z = np.sqrt(2.0 * kappa) * r
    out = np.full_like(z, s)
    nz = z > 1e-12
    zz = z[nz]
    coef = s * 2.0 ** (1.0 - kappa) / gamma(kappa)
    out[nz] = coef * zz**kappa * kv(kappa, zz)
    return out


def _stationary_from_q(spec, q):
    s = spec.signal_variance
    fam = spec.family
    if fam == "SE":
        return s * np.exp(-0.5 * q)
    if fam == "Matern12":
        return s * np.exp(-np.sqrt(q))
    if fam == "Matern32":
        z = _SQRT3 * np.sqrt(q)
        return s * (1.0 + z) * np.exp(-z)
    if fam == "Matern52":
        r = np.sqrt(q)
        z = _SQRT5 * r
        return s * (1.0 + z + (5.0 / 3.0) * q) * np.exp(-z)
    if fam == "MaternGeneral":
        return _matern_general(q, float(spec.smoothness), s)
    if fam == "RQ":
        alpha = float(spec.smoothness)
        return s * (1.0 + q / (2.0 * alpha)) ** (-alpha)
    raise AssertionError(fam)


def gram_matrix(spec, X, X2=None, add_noise=False):
    """Covariance matrix of a kernel evaluated at all point pairs.

    Parameters
    ----------
    spec : KernelSpec
    X : (m, d) array
    X2 : (n, d) array, optional
        Defaults to ``X``.
    add_noise : bool
        Add ``noise_variance`` on the diagonal. Only meaningful when the
        rows of ``X`` are observation indices compared with themselves
        (the Kronecker-delta noise term), so it requires ``X2 is None``.

    Returns
    -------
    (m, n) ndarray
    """
    X = _as_matrix(X)
    same = X2 is None
    X2m = X if same else _as_matrix(X2, "X2")
    if X.shape[1] != X2m.shape[1]:
        raise ValueError("X and X2 have different dimensions")
    if add_noise and not same:
        raise ValueError("add_noise requires X2 to be the same observation set (pass X2=None)")
    d = X.shape[1]
    ells = spec.ell(d)

    if spec.is_stationary:
        K = _stationary_from_q(spec, _scaled_sq_dists(X, X2m, ells))
    else:
        B = (X / ells) @ (X2m / ells).T
        if spec.family == "Linear":
            K = spec.signal_variance * B
        else:
            p, c = spec.smoothness
            K = spec.signal_variance * (B + c) ** p

    if add_noise and spec.noise_variance > 0:
        K = K + spec.noise_variance * np.eye(X.shape[0])
    return K


def kernel_pairs(spec, X, X2):
    """Elementwise k(X[i], X2[i]) over matched rows (no noise)."""
    X = _as_matrix(X)
    X2 = _as_matrix(X2, "X2")
    if X.shape != X2.shape:
        raise ValueError("X and X2 must have matching shapes")
    ells = spec.ell(X.shape[1])
    if spec.is_stationary:
        q = np.sum(((X - X2) / ells) ** 2, axis=1)
        return _stationary_from_q(spec, q)
    B = np.sum((X / ells) * (X2 / ells), axis=1)
    if spec.family == "Linear":
        return spec.signal_variance * B
    p, c = spec.smoothness
    return spec.signal_variance * (B + c) ** p


def kernel_diag(spec, X):
    """Vector of k(x, x) over the rows of X (no observation noise)."""
    X = _as_matrix(X)
    if spec.is_stationary:
        return np.full(X.shape[0], spec.signal_variance)
    ells = spec.ell(X.shape[1])
    B = np.sum((X / ells) ** 2, axis=1)
    if spec.family == "Linear":
        return spec.signal_variance * B
    p, c = spec.smoothness
    return spec.signal_variance * (B + c) ** p


def kernel_eval(spec, x, x2):
    """Covariance k(x, x2) of two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape or x.ndim != 1:
        raise ValueError("x and x2 must be vectors of equal dimension")
    return float(gram_matrix(spec, x.reshape(1, -1), x2.reshape(1, -1))[0, 0])


# ---------------------------------------------------------------------------
# Hyperparameter machinery (log-parameterization)
# ---------------------------------------------------------------------------

def free_parameter_names(spec, include_noise=None):
    """Names of the hyperparameters optimized for this kernel.

    Signal variance and length-scales are always free; the RQ mixture
    parameter is free; Matern kappa and polynomial (p, c) stay fixed.
    Noise variance is free iff it is positive (or explicitly requested).
    """
    names = ["signal_variance"]
    names += [f"length_scale_{i}" for i in range(len(spec.length_scales))]
    if spec.family == "RQ":
        names.append("rq_alpha")
    if include_noise is None:
        include_noise = spec.noise_variance > 0
    if include_noise:
        names.append("noise_variance")
    return names


def get_log_params(spec, names):
    vals = []
    for nm in names:
        if nm == "signal_variance":
            vals.append(spec.signal_variance)
        elif nm.startswith("length_scale_"):
            vals.append(spec.length_scales[int(nm.rsplit("_", 1)[1])])
        elif nm == "rq_alpha":
            vals.append(float(spec.smoothness))
        elif nm == "noise_variance":
            vals.append(spec.noise_variance)
        else:
            raise ValueError(f"unknown hyperparameter {nm!r}")
    return np.log(np.asarray(vals, dtype=float))


def with_log_params(spec, names, log_vals):
    """New KernelSpec with the named hyperparameters set to exp(log_vals)."""
    vals = np.exp(np.asarray(log_vals, dtype=float))
    ells = list(spec.length_scales)
    kw = {}
    for nm, v in zip(names, vals):
        if nm == "signal_variance":
            kw["signal_variance"] = float(v)
        elif nm.startswith("length_scale_"):
            ells[int(nm.rsplit("_", 1)[1])] = float(v)
        elif nm == "rq_alpha":
            kw["smoothness"] = float(v)
        elif nm == "noise_variance":
            kw["noise_variance"] = float(v)
    kw["length_scales"] = tuple(ells)
    return replace(spec, **kw)


def _per_dim_weighted_dists(X, ells, iso):
    """W_i = tau_i^2 / ell_i^2 for each dimension (list of (m, m) arrays).

    For an isotropic kernel the single gradient aggregates all dimensions,
    so the list collapses to [q].
    """
    d = X.shape[1]
    Xs = X / ells
    if iso:
        return [_scaled_sq_dists(X, X, ells)]
    out = []
    for i in range(d):
        diff = Xs[:, i : i + 1] - Xs[:, i : i + 1].T
        out.append(diff * diff)
    return out


def gram_with_gradients(spec, X, names):
    """Noisy Gram matrix and its derivatives w.r.t. the named log-parameters.

    Returns
    -------
    sigma_y : (m, m) ndarray
        ``K(X, X) + noise_variance * I``.
    grads : list of (m, m) ndarray
        ``d sigma_y / d log(theta_j)`` in the order of ``names``.
    """
    X = _as_matrix(X)
    m, d = X.shape
    ells = spec.ell(d)
    s = spec.signal_variance
    iso = len(spec.length_scales) == 1

    if spec.is_stationary:
        q = _scaled_sq_dists(X, X, ells)
        K = _stationary_from_q(spec, q)
    else:
        Xs = X / ells
        B = Xs @ Xs.T
        if spec.family == "Linear":
            K = s * B
        else:
            p, c = spec.smoothness
            K = s * (B + c) ** p

    grads = []
    W = None
    for nm in names:
        if nm == "signal_variance":
            grads.append(K.copy())
        elif nm == "noise_variance":
            grads.append(spec.noise_variance * np.eye(m))
        elif nm == "rq_alpha":
            alpha = float(spec.smoothness)
            u = q / (2.0 * alpha)
            grads.append(K * alpha * (u / (1.0 + u) - np.log1p(u)))
        elif nm.startswith("length_scale_"):
            idx = int(nm.rsplit("_", 1)[1])
            if spec.is_stationary:
                if W is None:
                    W = _per_dim_weighted_dists(X, ells, iso)
                Wi = W[0] if iso else W[idx]
                fam = spec.family
                if fam == "SE":
                    g = K * Wi
                elif fam == "Matern12":
                    r = np.sqrt(q)
                    with np.errstate(invalid="ignore", divide="ignore"):
                        g = np.where(r > 0, s * np.exp(-r) * Wi / np.where(r > 0, r, 1.0), 0.0)
                elif fam == "Matern32":
                    g = 3.0 * s * np.exp(-_SQRT3 * np.sqrt(q)) * Wi
                elif fam == "Matern52":
                    r = np.sqrt(q)
                    g = (5.0 / 3.0) * s * (1.0 + _SQRT5 * r) * np.exp(-_SQRT5 * r) * Wi
                elif fam == "MaternGeneral":
                    kappa = float(spec.smoothness)
                    r = np.sqrt(q)
                    z = np.sqrt(2.0 * kappa) * r
                    coef = s * 2.0 ** (1.0 - kappa) / gamma(kappa)
                    g = np.zeros_like(q)
                    nzm = z > 1e-12
                    zz = z[nzm]
                    g[nzm] = (
                        coef
                        * np.sqrt(2.0 * kappa)
                        * zz**kappa
                        * kv(kappa - 1.0, zz)
                        * Wi[nzm]
                        / r[nzm]
                    )
                elif fam == "RQ":
                    alpha = float(spec.smoothness)
                    g = s * (1.0 + q / (2.0 * alpha)) ** (-alpha - 1.0) * Wi
                else:
                    raise AssertionError(fam)
            else:
                Xs = X / ells
                if iso:
                    P = Xs @ Xs.T
                else:
                    P = np.outer(Xs[:, idx], Xs[:, idx])
                if spec.family == "Linear":
                    g = -2.0 * s * P
                else:
                    p, c = spec.smoothness
                    B = Xs @ Xs.T
                    g = -2.0 * s * p * (B + c) ** (p - 1) * P
            grads.append(g)
        else:
            raise ValueError(f"unknown hyperparameter {nm!r}")

    sigma_y = K
    if spec.noise_variance > 0:
        sigma_y = K + spec.noise_variance * np.eye(m)
    return sigma_y, grads
