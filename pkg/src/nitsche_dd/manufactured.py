"""Manufactured solution ``u = exp(xy) sin(pi x) sin(pi y)`` and derived data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PI = np.pi


def _split(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1]


def exact_u(x):
    x, y = _split(x)
    return np.exp(x * y) * np.sin(PI * x) * np.sin(PI * y)


def exact_grad(x):
    x, y = _split(x)
    E = np.exp(x * y)
    S, C = np.sin(PI * x), np.cos(PI * x)
    T, D = np.sin(PI * y), np.cos(PI * y)
    return np.stack([E * (y * S * T + PI * C * T), E * (x * S * T + PI * S * D)], axis=-1)


def exact_laplacian(x):
    x, y = _split(x)
    E = np.exp(x * y)
    S, C = np.sin(PI * x), np.cos(PI * x)
    T, D = np.sin(PI * y), np.cos(PI * y)
    return E * ((x * x + y * y - 2 * PI**2) * S * T + 2 * PI * (y * C * T + x * S * D))


@dataclass(frozen=True)
class ManufacturedCase:
    """Data making ``u`` solve the interface problem with diffusivities ``mu1, mu2``.

    ``u`` is one smooth field, so its trace is continuous but the flux jumps
    by ``(mu1 - mu2) du/dn`` across the interface whenever ``mu1 != mu2``.
    """

    mu1: float = 1.0
    mu2: float = 1.0

    def __post_init__(self):
        if not (self.mu1 > 0 and self.mu2 > 0):
            raise ValueError("diffusivities must be positive")

    u = staticmethod(exact_u)
    grad = staticmethod(exact_grad)

    @property
    def has_flux_jump(self) -> bool:
        return self.mu1 != self.mu2

    def f1(self, x):
        return -self.mu1 * exact_laplacian(x)

    def f2(self, x):
        return -self.mu2 * exact_laplacian(x)

    def flux_jump(self, x, n):
        """``[mu du/dn] = (mu1 - mu2) grad u . n`` with ``n`` pointing from 1 into 2."""
        return (self.mu1 - self.mu2) * np.sum(exact_grad(x) * np.asarray(n), axis=-1)


def manufactured_fields(mu1: float, mu2: float) -> ManufacturedCase:
    return ManufacturedCase(mu1, mu2)


@dataclass(frozen=True)
class AffineField:
    """``u = a + b x + c y``; used for patch tests."""

    a: float = 0.0
    b: float = 0.0
    c: float = 0.0

    def u(self, x):
        x, y = _split(x)
        return self.a + self.b * x + self.c * y

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        g = np.empty(x.shape)
        g[..., 0] = self.b
        g[..., 1] = self.c
        return g

