"""Fiber Hilbert spaces over one cone and over products of cones.

Square-integrable fiber elements are represented by finite expansions in
compactly supported smooth bumps, which keeps support metadata exact.  The
inner product is the weighted integral against the invariant measure; for a
product of N cones the weight is the product of the per-block densities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .gamma import (
    InvariantMeasure,
    SignatureSpec,
    SymMatrix,
    _gate_support,
    signature,
)
from .quadrature import QuadConfig, gl_rule, intersect_interval, tensor_rule


@dataclass(frozen=True)
class BumpFunction:
    """The standard bump exp(-1/(1-t^2)) rescaled to [center-width, center+width]."""

    center: float
    width: float

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ValueError("bump width must be positive")

    @property
    def lo(self) -> float:
        return self.center - self.width

    @property
    def hi(self) -> float:
        return self.center + self.width

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, float)
        t = (u - self.center) / self.width
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        # values die smoothly at the edge; exp underflow to 0 is the right limit
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
        return out


def bump_values(centers: np.ndarray, widths: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized bump evaluation for per-point centers and widths."""
    t = (u - centers) / widths
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass(frozen=True)
class BumpTerm:
    coeff: complex
    factors: tuple[BumpFunction, ...]

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([f.lo for f in self.factors])
        hi = np.array([f.hi for f in self.factors])
        return lo, hi

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, float))
        vals = np.full(len(pts), self.coeff, dtype=complex)
        for k, f in enumerate(self.factors):
            vals *= f(pts[:, k])
        return vals


@dataclass(frozen=True)
class BumpExpansion:
    """Finite sum of products of per-dimension bumps; continuous, compact support."""

    dims: int
    terms: tuple[BumpTerm, ...] = ()

    def __post_init__(self) -> None:
        for t in self.terms:
            if len(t.factors) != self.dims:
                raise ValueError("every term needs one bump per dimension")

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, float))
        out = np.zeros(len(pts), dtype=complex)
        for t in self.terms:
            out += t(pts)
        return out

    def integrand_pieces(self) -> Iterator[tuple[np.ndarray, np.ndarray, BumpTerm]]:
        for t in self.terms:
            lo, hi = t.box()
            yield lo, hi, t

    def support_box(self) -> tuple[np.ndarray, np.ndarray] | None:
        if not self.terms:
            return None
        los, his = zip(*(t.box() for t in self.terms))
        return np.min(los, axis=0), np.max(his, axis=0)

    def scaled(self, z: complex) -> "BumpExpansion":
        return BumpExpansion(self.dims, tuple(BumpTerm(z * t.coeff, t.factors) for t in self.terms))

    def __add__(self, other: "BumpExpansion") -> "BumpExpansion":
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        return BumpExpansion(self.dims, self.terms + other.terms)

    def __mul__(self, z: complex) -> "BumpExpansion":
        return self.scaled(z)

    __rmul__ = __mul__

    # serialization: exact round-trip through repr-formatted floats
    def to_dict(self) -> dict:
        return {
            "dims": self.dims,
            "terms": [
                {
                    "coeff_re": t.coeff.real,
                    "coeff_im": t.coeff.imag,
                    "factors": [{"center": f.center, "width": f.width} for f in t.factors],
                }
                for t in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BumpExpansion":
        terms = tuple(
            BumpTerm(
                complex(t["coeff_re"], t["coeff_im"]),
                tuple(BumpFunction(f["center"], f["width"]) for f in t["factors"]),
            )
            for t in d["terms"]
        )
        return cls(int(d["dims"]), terms)

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "BumpExpansion":
        return cls.from_dict(json.loads(text))


def product_bump(coeff: complex, centers: Sequence[float], widths: Sequence[float]) -> BumpExpansion:
    if len(centers) != len(widths):
        raise ValueError("need one width per center")
    factors = tuple(BumpFunction(c, w) for c, w in zip(centers, widths))
    return BumpExpansion(len(centers), (BumpTerm(complex(coeff), factors),))


# -- fibers ------------------------------------------------------------------


@dataclass(frozen=True)
class FiberSpace:
    """L^2 of `n_blocks` independent cones with the product invariant measure."""

    measure: InvariantMeasure
    n_blocks: int = 1

    def __post_init__(self) -> None:
        if self.n_blocks < 1:
            raise ValueError("need at least one block")

    @property
    def spec(self) -> SignatureSpec:
        return self.measure.spec

    @property
    def gamma_dims(self) -> int:
        return self.n_blocks * self.spec.dim

    def block_slices(self) -> list[slice]:
        d = self.spec.dim
        return [slice(k * d, (k + 1) * d) for k in range(self.n_blocks)]


def _block_quad(
    factors1: Sequence[BumpFunction],
    factors2: Sequence[BumpFunction],
    measure: InvariantMeasure,
    m: int,
) -> float:
    """Integral over one block of the bump product against the density.

    Returns 0 when the supports do not overlap.
    """
    dim = measure.spec.dim
    lohi = []
    for f1, f2 in zip(factors1, factors2):
        iv = intersect_interval(f1.lo, f1.hi, f2.lo, f2.hi)
        if iv is None:
            return 0.0
        lohi.append(iv)
    if dim == 1:
        (lo, hi) = lohi[0]
        x, w = gl_rule(lo, hi, m)
        pts = x[:, None]
        absdets = _gate_support(pts, measure.spec)
        vals = factors1[0](x) * factors2[0](x) * measure.scale_c * absdets ** -1.0
        return float(np.dot(w, vals))
    lo = np.array([iv[0] for iv in lohi])
    hi = np.array([iv[1] for iv in lohi])
    pts, wts = tensor_rule(lo, hi, m)
    vals = np.ones(len(pts))
    for k in range(dim):
        vals *= factors1[k](pts[:, k]) * factors2[k](pts[:, k])
    mask = vals != 0
    if not mask.any():
        return 0.0
    absdets = _gate_support(pts[mask], measure.spec)
    weight = np.zeros(len(pts))
    n = measure.spec.n
    weight[mask] = measure.scale_c * absdets ** (-(n + 1) / 2)
    return float(np.dot(wts, vals * weight))


def fiber_inner(f1: BumpExpansion, f2: BumpExpansion, fiber: FiberSpace, quad: QuadConfig) -> complex:
    """Inner product <f1|f2> in the product fiber space.

    The weight factorizes over blocks, so each term pair is a product of
    per-block tensor quadratures over the support intersections.
    """
    if f1.dims != fiber.gamma_dims or f2.dims != fiber.gamma_dims:
        raise ValueError(
            f"expansions have dims {f1.dims}/{f2.dims}, fiber expects {fiber.gamma_dims}"
        )
    dim = fiber.spec.dim
    total = 0.0 + 0.0j
    for t1 in f1.terms:
        for t2 in f2.terms:
            prod = np.conj(t1.coeff) * t2.coeff
            for sl in fiber.block_slices():
                if prod == 0:
                    break
                prod *= _block_quad(t1.factors[sl], t2.factors[sl], fiber.measure, quad.nodes_per_dim)
            total += prod
    return complex(total)


def fiber_norm(f: BumpExpansion, fiber: FiberSpace, quad: QuadConfig) -> float:
    return float(np.sqrt(max(fiber_inner(f, f, fiber, quad).real, 0.0)))


def normalized(f: BumpExpansion, fiber: FiberSpace, quad: QuadConfig) -> BumpExpansion:
    nrm = fiber_norm(f, fiber, quad)
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero expansion")
    return f.scaled(1.0 / nrm)


# -- block-diagonal scalar products on the direct sum -------------------------


class BlockStructureError(ValueError):
    """Off-block entries too large: not a direct-sum scalar product."""


def split_blocks(m: SymMatrix, spec: SignatureSpec, n_blocks: int) -> tuple[SymMatrix, ...]:
    """Extract the per-block scalar products, in index order."""
    n = spec.n
    if m.n != n * n_blocks:
        raise ValueError(f"matrix size {m.n} is not {n_blocks} blocks of size {n}")
    a = m.a
    off = a.copy()
    for k in range(n_blocks):
        off[k * n : (k + 1) * n, k * n : (k + 1) * n] = 0.0
    if off.size and np.abs(off).max() > 1e-12:
        raise BlockStructureError("off-block entries exceed 1e-12")
    return tuple(SymMatrix(a[k * n : (k + 1) * n, k * n : (k + 1) * n]) for k in range(n_blocks))


def join_blocks(blocks: Sequence[SymMatrix]) -> SymMatrix:
    if not blocks:
        raise ValueError("need at least one block")
    n = blocks[0].n
    big = np.zeros((n * len(blocks), n * len(blocks)))
    for k, b in enumerate(blocks):
        if b.n != n:
            raise ValueError("blocks must share one size")
        big[k * n : (k + 1) * n, k * n : (k + 1) * n] = b.a
    return SymMatrix(big)


def block_signature(m: SymMatrix) -> tuple[int, int, int]:
    return signature(m)


# -- 1-D monotone maps and the push-forward product identity ------------------


@dataclass(frozen=True)
class MonotoneMap:
    """Closed-form strictly increasing map on an interval of the line.

    Tags: "identity"; "affine" with params (a, b), a > 0, x -> a x + b;
    "square" for x -> x^2 on (0, inf).
    """

    tag: str
    params: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.tag == "affine":
            if len(self.params) != 2 or not self.params[0] > 0:
                raise ValueError("affine map needs params (a, b) with a > 0")
        elif self.tag in ("identity", "square"):
            if self.params:
                raise ValueError(f"{self.tag} map takes no parameters")
        else:
            raise ValueError(f"unknown monotone map tag {self.tag!r}")

    def __call__(self, x):
        x = np.asarray(x, float)
        if self.tag == "identity":
            return x
        if self.tag == "affine":
            a, b = self.params
            return a * x + b
        return x * x

    def deriv(self, x):
        x = np.asarray(x, float)
        if self.tag == "identity":
            return np.ones_like(x)
        if self.tag == "affine":
            return np.full_like(x, self.params[0])
        return 2.0 * x

    def inverse(self, y):
        y = np.asarray(y, float)
        if self.tag == "identity":
            return y
        if self.tag == "affine":
            a, b = self.params
            return (y - b) / a
        return np.sqrt(y)

    def inverse_deriv(self, y):
        return 1.0 / self.deriv(self.inverse(y))


@dataclass(frozen=True)
class Weighted1D:
    """A measure w(x) dx on an interval of the line.

    Tags: "lebesgue" (w = 1); "reciprocal" (w = 1/|x|, the n=1 invariant
    density with constant `scale`).
    """

    tag: str
    scale: float = 1.0

    def density(self, x):
        x = np.asarray(x, float)
        if self.tag == "lebesgue":
            return np.full_like(x, self.scale)
        if self.tag == "reciprocal":
            return self.scale / np.abs(x)
        raise ValueError(f"unknown measure tag {self.tag!r}")


@dataclass(frozen=True)
class PushforwardReport:
    lhs: complex
    rhs: complex
    rel_err: float
    nodes: int


def pushforward_product_check(
    alpha: MonotoneMap,
    beta: MonotoneMap,
    h: BumpExpansion,
    mu: Weighted1D,
    nu: Weighted1D,
    quad: QuadConfig,
) -> PushforwardReport:
    """Both sides of the product push-forward identity, by quadrature.

    lhs integrates h against the product of the two transported measures,
    each realized exactly by its 1-D image density; rhs pulls h back through
    (alpha, beta) and integrates against the original product measure over
    the preimage box.  The node sets of the two sides are unrelated.
    """
    if h.dims != 2:
        raise ValueError("the product check is for two factors")
    m = quad.nodes_per_dim
    lhs = 0.0 + 0.0j
    rhs = 0.0 + 0.0j
    for t in h.terms:
        (lox, hix), (loy, hiy) = (t.factors[0].lo, t.factors[0].hi), (t.factors[1].lo, t.factors[1].hi)
        # forward side: image densities on the support of h
        x, wx = gl_rule(lox, hix, m)
        y, wy = gl_rule(loy, hiy, m)
        rho_x = mu.density(alpha.inverse(x)) * np.abs(alpha.inverse_deriv(x))
        rho_y = nu.density(beta.inverse(y)) * np.abs(beta.inverse_deriv(y))
        gx = t.factors[0](x) * rho_x
        gy = t.factors[1](y) * rho_y
        lhs += t.coeff * np.dot(wx, gx) * np.dot(wy, gy)
        # pulled-back side: integrate over the preimage box
        plox, phix = float(alpha.inverse(lox)), float(alpha.inverse(hix))
        ploy, phiy = float(beta.inverse(loy)), float(beta.inverse(hiy))
        u, wu = gl_rule(plox, phix, m)
        v, wv = gl_rule(ploy, phiy, m)
        if np.any(alpha.deriv(u) <= 0) or np.any(beta.deriv(v) <= 0):
            raise ValueError("map fails to be increasing on the pulled-back support")
        fu = t.factors[0](alpha(u)) * mu.density(u)
        fv = t.factors[1](beta(v)) * nu.density(v)
        rhs += t.coeff * np.dot(wu, fu) * np.dot(wv, fv)
    rel = abs(lhs - rhs) / max(abs(lhs), 1e-300)
    return PushforwardReport(lhs=complex(lhs), rhs=complex(rhs), rel_err=rel, nodes=m)
