"""Error norms of two-field discrete solutions."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .fem import chunked
from .forms import TwoFieldSolution


class ErrorNorms(NamedTuple):
    l2: float
    h1: float
    jump: float
    triple: float


def _per_side(exact):
    if exact is None or isinstance(exact, (tuple, list)):
        return exact if exact is not None else (None, None)
    return exact, exact


def error_norms(sol: TwoFieldSolution, exact=None) -> ErrorNorms:
    """L2, H1-seminorm, interface-jump and triple norm of ``u - u_h``.

    ``exact`` has ``u(x)`` and ``grad(x)`` methods, or is a pair of such
    objects (one per subdomain); ``None`` measures ``u_h`` itself. The jump
    term is ``|| gamma^(1/2) [u - u_h] ||_Gamma``; the exact solutions are
    assumed continuous across the interface.
    """
    l2 = h1 = energy = 0.0
    for i, ex in enumerate(_per_side(exact)):
        space, c, quad, mu = sol.spaces[i], sol.coeffs[i], sol.volume[i], sol.mu[i]
        for sl in chunked(len(quad)):
            q = quad.take(sl)
            uh, guh = space.evaluate(c, q.elements, q.ref)
            if ex is not None:
                uh = ex.u(q.points) - uh
                guh = ex.grad(q.points) - guh
            a = float(np.sum(q.weights * uh**2))
            b = float(np.sum(q.weights * np.sum(guh**2, axis=-1)))
            l2 += a
            h1 += b
            energy += mu * b
    jump2 = interface_jump2(sol)
    return ErrorNorms(np.sqrt(l2), np.sqrt(h1), np.sqrt(jump2), np.sqrt(energy + jump2))


def interface_jump2(sol: TwoFieldSolution) -> float:
    """``gamma ||[u_h]||^2_Gamma``."""
    iq = sol.interface
    if len(iq) == 0:
        return 0.0
    u1, _ = sol.spaces[0].evaluate(sol.coeffs[0], iq.elements1, iq.ref1)
    u2, _ = sol.spaces[1].evaluate(sol.coeffs[1], iq.elements2, iq.ref2)
    return sol.weights.gamma * float(np.sum(iq.weights * (u1 - u2) ** 2))


def broken_energy(sol: TwoFieldSolution) -> float:
    """``sum_i mu_i ||grad u_h^i||^2`` over the physical subdomains."""
    total = 0.0
    for space, c, quad, mu in zip(sol.spaces, sol.coeffs, sol.volume, sol.mu):
        for sl in chunked(len(quad)):
            q = quad.take(sl)
            _, g = space.evaluate(c, q.elements, q.ref)
            total += mu * float(np.sum(q.weights * np.sum(g**2, axis=-1)))
    return total
