"""Exponential kernel on [0, 1] and finite kernel expansions in its RKHS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExponentialKernel:
    """K(x, x') = exp(-|x - x'| / scale).

    K(x, x) = 1 everywhere, so the bound R with K(x, x) <= R**2 is 1.
    """

    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"kernel scale must be positive, got {self.scale}")

    @property
    def R(self) -> float:
        return 1.0

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.exp(-np.abs(x - y) / self.scale)

    def diag(self, x):
        return np.ones_like(np.asarray(x, dtype=float))


KernelSpec = ExponentialKernel


def eval_kernel(k: ExponentialKernel, x: float, y: float) -> float:
    return float(k(x, y))


def gram(k: ExponentialKernel, xs, ys=None) -> np.ndarray:
    """Matrix G[i, j] = K(xs[i], ys[j]); ``ys`` defaults to ``xs``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = xs if ys is None else np.atleast_1d(np.asarray(ys, dtype=float))
    if xs.size == 0 or ys.size == 0:
        raise ValueError("gram needs non-empty point lists")
    return k(xs[:, None], ys[None, :])


class HFunction:
    """Finite expansion ``offset_scale * offset_fn(x) + sum_i coefs[i] K(centers[i], x)``.

    The offset function is kept by reference so that an SGD run started from a
    non-zero g0 only tracks one extra scalar. ``flatten`` inlines it.
    """

    __slots__ = ("kernel", "centers", "coefs", "offset_fn", "offset_scale")

    def __init__(self, kernel, centers=(), coefs=(), offset_fn=None, offset_scale=0.0):
        centers = np.asarray(centers, dtype=float).ravel()
        coefs = np.asarray(coefs, dtype=float).ravel()
        if centers.shape != coefs.shape:
            raise ValueError("centers and coefs must have the same length")
        if offset_fn is not None and offset_fn.kernel != kernel:
            raise ValueError("offset function lives in a different RKHS")
        self.kernel = kernel
        self.centers = centers
        self.coefs = coefs
        self.offset_fn = offset_fn
        self.offset_scale = float(offset_scale)

    @classmethod
    def zero(cls, kernel):
        return cls(kernel)

    @classmethod
    def feature(cls, kernel, x):
        """The representer K_x."""
        return cls(kernel, [x], [1.0])

    def __len__(self):
        return self.centers.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros(flat.shape)
        if self.centers.size:
            out += self.kernel(flat[:, None], self.centers[None, :]) @ self.coefs
        if self.offset_fn is not None and self.offset_scale != 0.0:
            out += self.offset_scale * self.offset_fn(flat)
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def flatten(self) -> tuple[np.ndarray, np.ndarray]:
        """Centers and coefficients with the offset chain inlined."""
        centers, coefs = [self.centers], [self.coefs]
        scale, fn = self.offset_scale, self.offset_fn
        while fn is not None and scale != 0.0:
            centers.append(fn.centers)
            coefs.append(scale * fn.coefs)
            scale, fn = scale * fn.offset_scale, fn.offset_fn
        return np.concatenate(centers), np.concatenate(coefs)

    def flattened(self) -> "HFunction":
        """Offset-free copy; coincident centers are merged into one atom."""
        return HFunction(self.kernel, *merge_atoms(*self.flatten()))

    def scaled(self, factor: float) -> "HFunction":
        return HFunction(self.kernel, self.centers, factor * self.coefs,
                         self.offset_fn, factor * self.offset_scale)

    def __mul__(self, factor):
        return self.scaled(float(factor))

    __rmul__ = __mul__

    def __neg__(self):
        return self.scaled(-1.0)

    def __add__(self, other: "HFunction") -> "HFunction":
        _check_same_kernel(self, other)
        c1, a1 = self.flatten()
        c2, a2 = other.flatten()
        return HFunction(self.kernel, np.concatenate([c1, c2]), np.concatenate([a1, a2]))

    def __sub__(self, other: "HFunction") -> "HFunction":
        return self + (-other)

    def __repr__(self):
        return (f"HFunction(n_centers={len(self)}, offset="
                f"{'none' if self.offset_fn is None else self.offset_scale})")


def _check_same_kernel(f, g, k=None):
    if f.kernel != g.kernel or (k is not None and f.kernel != k):
        raise ValueError("expansions use different kernels")


def h_inner(f: HFunction, g: HFunction, k=None) -> float:
    """<f, g>_H = sum_ij a_i b_j K(x_i, z_j) over the flattened expansions."""
    _check_same_kernel(f, g, k)
    cf, af = f.flatten()
    cg, ag = g.flatten()
    if af.size == 0 or ag.size == 0:
        return 0.0
    return float(af @ (f.kernel(cf[:, None], cg[None, :]) @ ag))


def merge_atoms(points, weights):
    """Sum the weights of coincident points so that exact cancellations stay exact."""
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    uniq, inv = np.unique(points, return_inverse=True)
    return uniq, np.bincount(inv, weights=weights, minlength=uniq.size)


def quad_form(k: ExponentialKernel, points, weights, power: int = 1) -> float:
    """sum_ij w_i w_j K(p_i, p_j)**power after merging coincident points.

    K**power is again exponential, so on sorted points the off-diagonal part is
    2 sum_j w_j r_j with r_j = e_j (r_{j-1} + w_{j-1}), e_j = exp(-power gap_j / scale).
    This is O(m) and needs no m x m matrix.
    """
    p, w = merge_atoms(points, weights)
    keep = w != 0.0
    p, w = p[keep], w[keep]
    if w.size == 0:
        return 0.0
    e = np.exp(-power * np.diff(p) / k.scale)
    r = np.zeros_like(w)
    acc = 0.0
    for j in range(1, w.size):
        acc = e[j - 1] * (acc + w[j - 1])
        r[j] = acc
    return float(w @ w + 2.0 * (w @ r))


def h_norm(f: HFunction) -> float:
    return float(np.sqrt(max(quad_form(f.kernel, *f.flatten()), 0.0)))


def h_dist(f: HFunction, g: HFunction, k=None) -> float:
    _check_same_kernel(f, g, k)
    return h_norm(f - g)
