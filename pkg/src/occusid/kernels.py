"""Kernel families with the analytic derivatives the identification needs.

Four families are supported:

    gaussian_rbf  K(x, y) = exp(-||x - y||^2 / mu)
    exp_dot       K(x, y) = exp(mu * x.y)
    polynomial    K(x, y) = (1 + x.y / mu)^degree
    linear        K(x, y) = x.y

Beyond pointwise evaluation, each family exposes the first-argument gradient,
the mixed second derivative matrix grad1grad2[i][j] = d^2 K / dx_i dy_j, and
two closed-form integrands:

    pre_inner_integrand(x, y, a, b) = a^T grad1grad2(x, y) b
        (a contracts the x-derivative index, b the y-derivative index)
    rhs_integrand(x, (start, end), v) = (grad1(x, end) - grad1(x, start)) . v

These are the building blocks of the Gram-style inner-product systems; the
closed forms are written out per family rather than assembled from the
gradient matrices, and the test suite cross-checks the two routes.

FeatureMapKernel composes a base family with a finite center set to give the
separable kernel K(x, y) = sum_s k(x, c_s) k(y, c_s), whose Gram systems
factor exactly through the center-constraint matrix.

Vectorized helpers (matrix, grad1_contract, assemble_block, ...) accumulate
long time axes in fixed-size chunks, in time order, so results are
reproducible run to run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedKernelError

FAMILIES = ("gaussian_rbf", "exp_dot", "polynomial", "linear")

# Fixed chunk length for accumulating quadratures along long trajectories.
CHUNK = 8192


def _as_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a single point, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class Kernel:
    """A positive-definite kernel from one of the supported FAMILIES.

    mu is the width/scale parameter (ignored by `linear`); degree applies to
    `polynomial` only and must be an integer >= 2.
    """

    family: str
    mu: float = 1.0
    degree: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family != "linear" and not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.family == "polynomial":
            if int(self.degree) != self.degree or self.degree < 2:
                raise ValueError(f"polynomial degree must be an integer >= 2, got {self.degree}")

    # -- pointwise API ------------------------------------------------------

    def eval(self, x, y) -> float:
        x, y = _as_point(x), _as_point(y)
        if self.family == "gaussian_rbf":
            d = x - y
            return float(np.exp(-(d @ d) / self.mu))
        if self.family == "exp_dot":
            return float(np.exp(self.mu * (x @ y)))
        if self.family == "polynomial":
            return float((1.0 + (x @ y) / self.mu) ** self.degree)
        return float(x @ y)

    def grad1(self, x, y) -> np.ndarray:
        """Gradient in the first argument, shape (n,)."""
        x, y = _as_point(x), _as_point(y)
        if self.family == "gaussian_rbf":
            d = x - y
            return (-2.0 / self.mu) * d * np.exp(-(d @ d) / self.mu)
        if self.family == "exp_dot":
            return self.mu * y * np.exp(self.mu * (x @ y))
        if self.family == "polynomial":
            u = 1.0 + (x @ y) / self.mu
            return (self.degree / self.mu) * u ** (self.degree - 1) * y
        return y.copy()

    def grad2(self, x, y) -> np.ndarray:
        """Gradient in the second argument; equals grad1(y, x) by symmetry."""
        return self.grad1(_as_point(y), _as_point(x))

    def grad1grad2(self, x, y) -> np.ndarray:
        """Mixed second derivatives: entry (i, j) is d^2 K / dx_i dy_j."""
        x, y = _as_point(x), _as_point(y)
        n = x.shape[0]
        eye = np.eye(n)
        if self.family == "gaussian_rbf":
            d = x - y
            k = np.exp(-(d @ d) / self.mu)
            return (2.0 / self.mu) * (eye - (2.0 / self.mu) * np.outer(d, d)) * k
        if self.family == "exp_dot":
            k = np.exp(self.mu * (x @ y))
            return self.mu * (eye + self.mu * np.outer(y, x)) * k
        if self.family == "polynomial":
            u = 1.0 + (x @ y) / self.mu
            c = self.degree / self.mu
            return c * u ** (self.degree - 2) * (u * eye + ((self.degree - 1) / self.mu) * np.outer(y, x))
        return eye

    def pre_inner_integrand(self, x, y, a, b) -> float:
        """Closed form of a^T grad1grad2(x, y) b.

        `a` is the field value contracted against the x-derivative index and
        `b` the one against the y-derivative index; in the occupation inner
        product a carries Y_m'(x) at x = gamma(t) and b carries Y_m(y) at
        y = gamma(tau).
        """
        x, y, a, b = _as_point(x), _as_point(y), _as_point(a), _as_point(b)
        if self.family == "gaussian_rbf":
            d = x - y
            k = np.exp(-(d @ d) / self.mu)
            c = 2.0 / self.mu
            return float(c * ((a @ b) - c * (a @ d) * (d @ b)) * k)
        if self.family == "exp_dot":
            k = np.exp(self.mu * (x @ y))
            return float(self.mu * ((a @ b) + self.mu * (a @ y) * (x @ b)) * k)
        if self.family == "polynomial":
            u = 1.0 + (x @ y) / self.mu
            c = self.degree / self.mu
            return float(
                c * u ** (self.degree - 2) * (u * (a @ b) + ((self.degree - 1) / self.mu) * (a @ y) * (x @ b))
            )
        raise UnsupportedKernelError(
            "pre_inner_integrand has closed forms for gaussian_rbf, exp_dot and polynomial only"
        )

    def rhs_integrand(self, x, endpoints, v) -> float:
        """Closed form of (grad1(x, end) - grad1(x, start)) . v."""
        x, v = _as_point(x), _as_point(v)
        start, end = (_as_point(p) for p in endpoints)
        if self.family == "gaussian_rbf":
            de, ds = x - end, x - start
            return float(
                (-2.0 / self.mu)
                * ((de @ v) * np.exp(-(de @ de) / self.mu) - (ds @ v) * np.exp(-(ds @ ds) / self.mu))
            )
        if self.family == "exp_dot":
            return float(
                self.mu
                * ((end @ v) * np.exp(self.mu * (x @ end)) - (start @ v) * np.exp(self.mu * (x @ start)))
            )
        if self.family == "polynomial":
            ue = 1.0 + (x @ end) / self.mu
            us = 1.0 + (x @ start) / self.mu
            c = self.degree / self.mu
            return float(c * ((end @ v) * ue ** (self.degree - 1) - (start @ v) * us ** (self.degree - 1)))
        raise UnsupportedKernelError(
            "rhs_integrand has closed forms for gaussian_rbf, exp_dot and polynomial only"
        )

    # -- vectorized helpers -------------------------------------------------

    def matrix(self, X, Y) -> np.ndarray:
        """Kernel matrix [eval(X[p], Y[q])], shape (P, Q)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        with np.errstate(over="ignore", under="ignore"):
            if self.family == "gaussian_rbf":
                sq = (
                    np.sum(X * X, axis=1)[:, None]
                    + np.sum(Y * Y, axis=1)[None, :]
                    - 2.0 * (X @ Y.T)
                )
                return np.exp(-sq / self.mu)
            if self.family == "exp_dot":
                return np.exp(self.mu * (X @ Y.T))
            if self.family == "polynomial":
                return (1.0 + (X @ Y.T) / self.mu) ** self.degree
            return X @ Y.T

    def grad1_contract(self, X, C, V) -> np.ndarray:
        """Matrix of grad1(X[p], C[s]) . V[p], shape (P, S)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        C = np.atleast_2d(np.asarray(C, dtype=float))
        V = np.atleast_2d(np.asarray(V, dtype=float))
        with np.errstate(over="ignore", under="ignore"):
            if self.family == "gaussian_rbf":
                K = self.matrix(X, C)
                xv = np.sum(X * V, axis=1)[:, None]
                return (-2.0 / self.mu) * (xv - V @ C.T) * K
            if self.family == "exp_dot":
                return self.mu * (V @ C.T) * self.matrix(X, C)
            if self.family == "polynomial":
                u = 1.0 + (X @ C.T) / self.mu
                return (self.degree / self.mu) * (V @ C.T) * u ** (self.degree - 1)
            return V @ C.T

    def assemble_block(self, X, C, Vs, w) -> np.ndarray:
        """One trajectory's constraint rows: sum_p w[p] grad1(X[p], C[s]) . Vs[i, p].

        X  : (P, n) trajectory samples,
        C  : (S, n) centers,
        Vs : (M, P, n) basis values along the trajectory,
        w  : (P,) quadrature weights.
        Returns (S, M).
        """
        return self.assemble_block_multi(X, C, Vs, [w])[0]

    def assemble_block_multi(self, X, C, Vs, ws) -> list[np.ndarray]:
        """assemble_block for several weight vectors sharing one kernel pass."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        C = np.atleast_2d(np.asarray(C, dtype=float))
        Vs = np.asarray(Vs, dtype=float)
        ws = [np.asarray(w, dtype=float) for w in ws]
        P = X.shape[0]
        S = C.shape[0]
        M = Vs.shape[0]
        if self.family == "linear":
            # Exact: A[s, i] = sum_d C[s, d] * (sum_p w[p] Vs[i, p, d]).
            out = []
            for w in ws:
                Mq = np.tensordot(Vs, w, axes=(1, 0))  # (M, n)
                out.append(C @ Mq.T)
            return out
        acc = [np.zeros((S, M)) for _ in ws]
        Ct = C.T[None, :, :]  # (1, n, S), broadcast against (M, n, S) contractions
        with np.errstate(over="ignore", under="ignore"):
            for lo in range(0, P, CHUNK):
                hi = min(lo + CHUNK, P)
                Xc = X[lo:hi]
                Vc = Vs[:, lo:hi, :]
                if self.family == "gaussian_rbf":
                    K = self.matrix(Xc, C)
                    rd = np.sum(Vc * Xc[None, :, :], axis=2)  # (M, P_c)
                    for j, w in enumerate(ws):
                        wc = w[lo:hi]
                        B0 = (wc * rd) @ K  # (M, S)
                        B1 = np.tensordot(Vc * wc[None, :, None], K, axes=(1, 0))  # (M, n, S)
                        acc[j] += (-2.0 / self.mu) * (B0 - (B1 * Ct).sum(axis=1)).T
                else:
                    if self.family == "exp_dot":
                        G = self.mu * np.exp(self.mu * (Xc @ C.T))
                    else:  # polynomial
                        u = 1.0 + (Xc @ C.T) / self.mu
                        G = (self.degree / self.mu) * u ** (self.degree - 1)
                    for j, w in enumerate(ws):
                        wc = w[lo:hi]
                        B1 = np.tensordot(Vc * wc[None, :, None], G, axes=(1, 0))
                        acc[j] += (B1 * Ct).sum(axis=1).T
        return acc

    def pre_inner_pairwise(self, X, Y, A, B) -> np.ndarray:
        """Matrix of pre_inner_integrand(X[p], Y[q], A[p], B[q]), shape (P, Q)."""
        if self.family == "linear":
            raise UnsupportedKernelError(
                "pre_inner_pairwise is available for gaussian_rbf, exp_dot and polynomial only"
            )
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        with np.errstate(over="ignore", under="ignore"):
            AB = A @ B.T
            if self.family == "gaussian_rbf":
                K = self.matrix(X, Y)
                c = 2.0 / self.mu
                ad = np.sum(A * X, axis=1)[:, None] - A @ Y.T  # A[p] . (X[p]-Y[q])
                db = X @ B.T - np.sum(B * Y, axis=1)[None, :]  # (X[p]-Y[q]) . B[q]
                return c * (AB - c * ad * db) * K
            if self.family == "exp_dot":
                K = self.matrix(X, Y)
                return self.mu * (AB + self.mu * (A @ Y.T) * (X @ B.T)) * K
            # polynomial
            u = 1.0 + (X @ Y.T) / self.mu
            c = self.degree / self.mu
            return c * u ** (self.degree - 2) * (
                u * AB + ((self.degree - 1) / self.mu) * (A @ Y.T) * (X @ B.T)
            )


class FeatureMapKernel:
    """Separable kernel K(x, y) = sum_s k(x, c_s) k(y, c_s) over fixed centers.

    The feature map is psi(x) = (k(x, c_1), ..., k(x, c_S)); all derivative
    operations reduce to derivatives of the base family, and Gram systems
    built from this kernel factor exactly through the center-constraint
    matrix of the direct method.
    """

    def __init__(self, base: Kernel, centers):
        if not isinstance(base, Kernel):
            raise ValueError("base must be a Kernel")
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if centers.shape[0] < 1:
            raise ValueError("need at least one center")
        self.base = base
        self.centers = centers
        self.centers.setflags(write=False)

    @property
    def family(self) -> str:
        return "feature_map"

    def __eq__(self, other):
        return (
            isinstance(other, FeatureMapKernel)
            and self.base == other.base
            and np.array_equal(self.centers, other.centers)
        )

    def features(self, X) -> np.ndarray:
        return self.base.matrix(X, self.centers)

    def eval(self, x, y) -> float:
        return float(self.features(_as_point(x)[None])[0] @ self.features(_as_point(y)[None])[0])

    def _grad_rows(self, x) -> np.ndarray:
        """Rows grad1_base(x, c_s), shape (S, n)."""
        x = _as_point(x)
        return np.array([self.base.grad1(x, c) for c in self.centers])

    def grad1(self, x, y) -> np.ndarray:
        phi_y = self.features(_as_point(y)[None])[0]
        return phi_y @ self._grad_rows(x)

    def grad2(self, x, y) -> np.ndarray:
        return self.grad1(y, x)

    def grad1grad2(self, x, y) -> np.ndarray:
        return self._grad_rows(x).T @ self._grad_rows(y)

    def pre_inner_integrand(self, x, y, a, b) -> float:
        a, b = _as_point(a), _as_point(b)
        return float((self._grad_rows(x) @ a) @ (self._grad_rows(y) @ b))

    def rhs_integrand(self, x, endpoints, v) -> float:
        start, end = (_as_point(p) for p in endpoints)
        return float((self.grad1(x, end) - self.grad1(x, start)) @ _as_point(v))

    def matrix(self, X, Y) -> np.ndarray:
        return self.features(X) @ self.features(Y).T

    def grad1_contract(self, X, C, V) -> np.ndarray:
        inner = self.base.grad1_contract(X, self.centers, V)  # (P, S)
        return inner @ self.features(np.atleast_2d(np.asarray(C, dtype=float))).T

    def assemble_block(self, X, C, Vs, w) -> np.ndarray:
        return self.assemble_block_multi(X, C, Vs, [w])[0]

    def assemble_block_multi(self, X, C, Vs, ws) -> list[np.ndarray]:
        blocks = self.base.assemble_block_multi(X, self.centers, Vs, ws)
        phi_c = self.features(np.atleast_2d(np.asarray(C, dtype=float)))  # (|C|, S)
        return [phi_c @ blk for blk in blocks]

    def pre_inner_pairwise(self, X, Y, A, B) -> np.ndarray:
        ga = self.base.grad1_contract(X, self.centers, A)  # (P, S)
        gb = self.base.grad1_contract(Y, self.centers, B)  # (Q, S)
        return ga @ gb.T


def gaussian_rbf(mu: float) -> Kernel:
    return Kernel("gaussian_rbf", mu=mu)


def exp_dot(mu: float) -> Kernel:
    return Kernel("exp_dot", mu=mu)


def polynomial(mu: float, degree: int) -> Kernel:
    return Kernel("polynomial", mu=mu, degree=degree)


def linear() -> Kernel:
    return Kernel("linear")


_CLI_NAMES = {
    "gaussian": "gaussian_rbf",
    "expdot": "exp_dot",
    "poly": "polynomial",
    "linear": "linear",
}


def from_name(name: str, mu: float = 1.0, degree: int = 2) -> Kernel:
    """Build a kernel from its short command-line name."""
    if name in FAMILIES:
        return Kernel(name, mu=mu, degree=degree)
    if name in _CLI_NAMES:
        return Kernel(_CLI_NAMES[name], mu=mu, degree=degree)
    raise ValueError(f"unknown kernel name {name!r}")
