"""Pointwise model functions: densities, coefficient profiles, the singular
potential, the gradient-coefficient transform and its convex split.

Nothing here knows about grids; every function maps numpy arrays (or
scalars) elementwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import xlogy

from .errors import DomainError, ValidationError

# 8-point Gauss-Legendre rule on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
GL_NODES = 0.5 * (_GL_X + 1.0)
GL_WEIGHTS = 0.5 * _GL_W

#: below this separation F(s, t) is evaluated as an integral mean
F_NEAR = 1e-8
KAPPA_SAFETY = 1.05


class Variant(str, enum.Enum):
    AGG = "AGG"
    APPENDIX = "AppendixModel"


@dataclass(frozen=True)
class CoefficientProfile:
    """A coefficient s -> c(s) on [-1, 1], clamped to its boundary values
    outside that interval.

    Either a constant or a monotone-cubic (C^1) interpolant through
    samples ``(nodes[i], values[i])`` whose nodes span [-1, 1].
    """

    constant: float | None = None
    nodes: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.constant is None:
            if len(self.nodes) < 2 or len(self.nodes) != len(self.values):
                raise ValidationError("table profile needs matching nodes/values (>= 2)")
            nodes = np.asarray(self.nodes, dtype=float)
            if np.any(np.diff(nodes) <= 0):
                raise ValidationError("table nodes must be strictly increasing")
            if nodes[0] != -1.0 or nodes[-1] != 1.0:
                raise ValidationError("table nodes must start at -1 and end at 1")
        elif not np.isfinite(self.constant):
            raise ValidationError("constant coefficient must be finite")

    @classmethod
    def const(cls, c: float) -> CoefficientProfile:
        return cls(constant=float(c))

    @classmethod
    def table(cls, nodes: Sequence[float], values: Sequence[float]) -> CoefficientProfile:
        return cls(nodes=tuple(float(x) for x in nodes),
                   values=tuple(float(x) for x in values))

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    @cached_property
    def _interp(self) -> PchipInterpolator:
        return PchipInterpolator(np.asarray(self.nodes), np.asarray(self.values))

    @cached_property
    def _dinterp(self):
        return self._interp.derivative()

    @property
    def knots(self) -> np.ndarray:
        if self.is_constant:
            return np.array([-1.0, 1.0])
        return np.asarray(self.nodes, dtype=float)

    def value(self, s):
        s = np.asarray(s, dtype=float)
        if self.is_constant:
            return np.full(s.shape, self.constant)
        return self._interp(np.clip(s, -1.0, 1.0))

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        if self.is_constant:
            return np.zeros(s.shape)
        inside = np.abs(s) <= 1.0
        return np.where(inside, self._dinterp(np.clip(s, -1.0, 1.0)), 0.0)

    def to_config(self):
        if self.is_constant:
            return self.constant
        return {"nodes": list(self.nodes), "values": list(self.values)}


@dataclass(frozen=True)
class PotentialSpec:
    """Homogeneous free energy density.

    ``logarithmic``: theta/2 ((1+s)ln(1+s) + (1-s)ln(1-s)) - theta_c/2 s^2 on [-1, 1].
    ``polynomial``: scale (1 - s^2)^2 / 4, a smooth double well used for
    convergence studies (it does not confine the order parameter).
    """

    kind: str = "logarithmic"
    theta: float = 1.0
    theta_c: float = 2.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind == "logarithmic":
            if not self.theta > 0:
                raise ValidationError(f"theta must be > 0, got {self.theta}")
            if not self.theta_c >= 0:
                raise ValidationError(f"theta_c must be >= 0, got {self.theta_c}")
        elif self.kind == "polynomial":
            if not self.scale > 0:
                raise ValidationError(f"scale must be > 0, got {self.scale}")
        else:
            raise ValidationError(f"unknown potential kind {self.kind!r}")

    @property
    def singular(self) -> bool:
        return self.kind == "logarithmic"

    @property
    def kappa(self) -> float:
        """Convexity defect: psi'' >= -kappa."""
        if self.singular:
            return max(0.0, self.theta_c - self.theta)
        return float(self.scale)

    def _check_open(self, s: np.ndarray) -> None:
        if self.singular and np.any(np.abs(s) >= 1.0):
            raise DomainError("logarithmic potential derivative needs |s| < 1")

    def psi(self, s):
        s = np.asarray(s, dtype=float)
        if self.singular:
            if np.any(np.abs(s) > 1.0):
                raise DomainError("logarithmic potential needs |s| <= 1")
            ent = xlogy(1.0 + s, 1.0 + s) + xlogy(1.0 - s, 1.0 - s)
            return 0.5 * self.theta * ent - 0.5 * self.theta_c * s * s
        return 0.25 * self.scale * (1.0 - s * s) ** 2

    def dpsi(self, s):
        s = np.asarray(s, dtype=float)
        self._check_open(s)
        if self.singular:
            return self.theta * np.arctanh(s) - self.theta_c * s
        return -self.scale * s * (1.0 - s * s)

    def d2psi(self, s):
        s = np.asarray(s, dtype=float)
        self._check_open(s)
        if self.singular:
            return self.theta / (1.0 - s * s) - self.theta_c
        return self.scale * (3.0 * s * s - 1.0)

    def to_config(self) -> dict:
        if self.singular:
            return {"kind": self.kind, "theta": self.theta, "theta_c": self.theta_c}
        return {"kind": self.kind, "scale": self.scale}


class TransformA:
    """A(s) = int_0^s sqrt(a(t)) dt with inverse and difference quotient.

    Constant ``a`` uses the closed form sqrt(a0) * s. Otherwise A is tabulated
    at the profile knots (refined to at least ``panels`` panels, always
    including 0) and completed inside each panel by Gauss-Legendre
    quadrature, so that dA/ds = sqrt(a) to quadrature accuracy.
    """

    def __init__(self, a_coeff: CoefficientProfile, panels: int = 512):
        self.a_coeff = a_coeff
        self.closed_form = a_coeff.is_constant
        if self.closed_form:
            self._sqrt_a0 = float(np.sqrt(a_coeff.constant))
            self._nodes = np.array([-1.0, 0.0, 1.0])
            self._A_nodes = self._sqrt_a0 * self._nodes
            return
        nodes = np.union1d(a_coeff.knots, np.linspace(-1.0, 1.0, 2 * (panels // 2) + 1))
        nodes = np.union1d(nodes, [0.0])
        left, right = nodes[:-1], nodes[1:]
        width = right - left
        pts = left[:, None] + width[:, None] * GL_NODES[None, :]
        panel = np.sqrt(a_coeff.value(pts)) @ GL_WEIGHTS * width
        cum = np.concatenate([[0.0], np.cumsum(panel)])
        i0 = int(np.searchsorted(nodes, 0.0))
        self._nodes = nodes
        self._A_nodes = cum - cum[i0]
        self._A_nodes[i0] = 0.0

    @property
    def lower(self) -> float:
        return float(self._A_nodes[0])

    @property
    def upper(self) -> float:
        return float(self._A_nodes[-1])

    def sqrt_a(self, s):
        return np.sqrt(self.a_coeff.value(s))

    def A(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(np.abs(s) > 1.0):
            raise DomainError("A(s) is defined for s in [-1, 1]")
        if self.closed_form:
            return self._sqrt_a0 * s
        idx = np.clip(np.searchsorted(self._nodes, s, side="right") - 1, 0, len(self._nodes) - 2)
        left = self._nodes[idx]
        d = s - left
        pts = left[..., None] + d[..., None] * GL_NODES
        return self._A_nodes[idx] + (np.sqrt(self.a_coeff.value(pts)) @ GL_WEIGHTS) * d

    def inverse(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self.lower, self.upper
        if np.any(r < lo) or np.any(r > hi):
            raise DomainError("r outside the range of A")
        if self.closed_form:
            return np.clip(r / self._sqrt_a0, -1.0, 1.0)
        s = np.interp(r, self._A_nodes, self._nodes)
        for _ in range(4):
            s = np.clip(s - (self.A(s) - r) / self.sqrt_a(s), -1.0, 1.0)
        return s

    def dA(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(np.abs(s) > 1.0):
            raise DomainError("dA(s) is defined for s in [-1, 1]")
        return self.sqrt_a(s)

    def d2A(self, s):
        """a'(s) / (2 sqrt(a(s)))."""
        s = np.asarray(s, dtype=float)
        if self.closed_form:
            return np.zeros(s.shape)
        return self.a_coeff.derivative(s) / (2.0 * self.sqrt_a(s))

    def F(self, s, t):
        """(A(s) - A(t)) / (s - t), extended by sqrt(a(s)) on the diagonal."""
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        if self.closed_form:
            return np.full(s.shape, self._sqrt_a0)
        d = s - t
        near = np.abs(d) < F_NEAR
        out = np.empty(s.shape)
        far = ~near
        out[far] = (self.A(s[far]) - self.A(t[far])) / d[far]
        if np.any(near):
            sn, tn = s[near], t[near]
            pts = tn[:, None] + (sn - tn)[:, None] * GL_NODES
            out[near] = self.sqrt_a(pts) @ GL_WEIGHTS
        return out

    def dF_ds(self, s, t):
        """Partial derivative of F(s, t) in its first argument."""
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        if self.closed_form:
            return np.zeros(s.shape)
        d = s - t
        near = np.abs(d) < 1e-3
        out = np.empty(s.shape)
        far = ~near
        out[far] = (self.sqrt_a(s[far]) - self.F(s[far], t[far])) / d[far]
        if np.any(near):
            sn, tn = s[near], t[near]
            pts = tn[:, None] + (sn - tn)[:, None] * GL_NODES
            out[near] = (self.d2A(pts) * GL_NODES) @ GL_WEIGHTS
        return out


@dataclass(frozen=True)
class ModelParams:
    rho1: float = 1.0
    rho2: float = 1.0
    a_coeff: CoefficientProfile = field(default_factory=lambda: CoefficientProfile.const(1.0))
    mobility: CoefficientProfile = field(default_factory=lambda: CoefficientProfile.const(1.0))
    viscosity: CoefficientProfile = field(default_factory=lambda: CoefficientProfile.const(1.0))
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    variant: Variant = Variant.AGG
    m0: float = 1e-3
    K: float = 1e3

    def __post_init__(self) -> None:
        if not (self.rho1 > 0 and self.rho2 > 0):
            raise ValidationError("densities must be positive")
        if not (0 < self.m0 <= self.K):
            raise ValidationError("need 0 < m0 <= K")
        object.__setattr__(self, "variant", Variant(self.variant))
        ladder = np.linspace(-1.0, 1.0, 2001)
        for name in ("a_coeff", "mobility", "viscosity"):
            vals = getattr(self, name).value(ladder)
            if vals.min() < self.m0 or vals.max() > self.K:
                raise ValidationError(f"{name} leaves [m0, K] = [{self.m0}, {self.K}]")

    def beta(self) -> float:
        return (self.rho2 - self.rho1) / 2.0

    @property
    def rho_mean(self) -> float:
        return (self.rho1 + self.rho2) / 2.0

    @cached_property
    def transform(self) -> TransformA:
        return TransformA(self.a_coeff)

    @cached_property
    def kappa_tilde(self) -> float:
        return kappa_tilde(self.potential, self.transform)


# -- pointwise operations ------------------------------------------------------

def rho_of_phi(phi, params: ModelParams):
    """Linear interpolation of the densities; exact at phi = -1 and phi = 1."""
    phi = np.asarray(phi, dtype=float)
    if params.rho1 == params.rho2:
        return np.full(phi.shape, params.rho1)
    return 0.5 * (params.rho1 * (1.0 - phi) + params.rho2 * (1.0 + phi))


def psi_eval(s, spec: PotentialSpec):
    return spec.psi(s), spec.dpsi(s), spec.d2psi(s)


def psi0_prime(s, spec: PotentialSpec):
    return spec.dpsi(s) + spec.kappa * np.asarray(s, dtype=float)


def transform_A(s, tA: TransformA):
    return tA.A(s)


def inverse_A(r, tA: TransformA):
    return tA.inverse(r)


def dA(s, tA: TransformA):
    return tA.dA(s)


def diff_quotient_F(s, t, tA: TransformA):
    return tA.F(s, t)


def kappa_tilde(spec: PotentialSpec, tA: TransformA) -> float:
    """Smallest convexity defect of the reparametrized potential.

    Exact for constant ``a``; otherwise the sampled minimum of its second
    derivative, with a 5% margin.
    """
    if tA.closed_form:
        return spec.kappa / tA.a_coeff.constant
    edge = 1e-6 if spec.singular else 0.0
    s = np.linspace(-1.0 + edge, 1.0 - edge, 4001)
    a = tA.a_coeff.value(s)
    second = spec.d2psi(s) / a - spec.dpsi(s) * tA.a_coeff.derivative(s) / (2.0 * a * a)
    return max(0.0, -float(second.min())) * KAPPA_SAFETY


def tilde_psi0_prime_at(s, spec: PotentialSpec, tA: TransformA, kt: float):
    """Derivative of the convexified reparametrized potential at r = A(s)."""
    s = np.asarray(s, dtype=float)
    return spec.dpsi(s) / tA.sqrt_a(s) + kt * tA.A(s)


def tilde_psi0_second_at(s, spec: PotentialSpec, tA: TransformA, kt: float):
    s = np.asarray(s, dtype=float)
    a = tA.a_coeff.value(s)
    da = tA.a_coeff.derivative(s)
    return spec.d2psi(s) / a - spec.dpsi(s) * da / (2.0 * a * a) + kt


def tilde_psi0_prime(r, spec: PotentialSpec, tA: TransformA, kt: float | None = None):
    r = np.asarray(r, dtype=float)
    if spec.singular and (np.any(r <= tA.lower) or np.any(r >= tA.upper)):
        raise DomainError("r must lie strictly inside (A(-1), A(1))")
    if kt is None:
        kt = kappa_tilde(spec, tA)
    s = tA.inverse(r)
    return spec.dpsi(s) / tA.sqrt_a(s) + kt * r


def free_energy_density(phi, grad_A_phi_sq, spec: PotentialSpec):
    phi = np.asarray(phi, dtype=float)
    if np.any(np.abs(phi) > 1.0):
        raise DomainError("free energy needs |phi| <= 1")
    return spec.psi(phi) + 0.5 * np.asarray(grad_A_phi_sq, dtype=float)
