"""Logit choice map: softmax of negated scaled costs, its Jacobian and
Lipschitz constant.

The map sends a cost vector z to exp(-η z) / sum(exp(-η z)); lower costs get
larger shares, η >= 0 sets how sharply.  η = 0 ignores the costs entirely and
returns the uniform distribution.
"""

from __future__ import annotations

import numpy as np

__all__ = ["softmax", "softmax_jacobian", "lipschitz_bound"]


def softmax(z: np.ndarray, eta: float) -> np.ndarray:
    """Choice shares exp(-η z) / sum(exp(-η z)) along the last axis.

    Shift-invariant in z; evaluated with max-subtraction so that large η z
    cannot overflow.  Raises ValueError on non-finite input or negative η.
    """
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError(f"non-finite costs: {z!r}")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    w = -eta * z
    w -= w.max(axis=-1, keepdims=True)
    e = np.exp(w)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_jacobian(z: np.ndarray, eta: float) -> np.ndarray:
    """Jacobian -η (diag(σ) - σ σᵀ) of the choice map at cost vector z.

    Symmetric with zero row sums; its spectral norm is at most η/2.
    """
    s = softmax(z, eta)
    if s.ndim != 1:
        raise ValueError("softmax_jacobian expects a single cost vector")
    return -eta * (np.diag(s) - np.outer(s, s))


def lipschitz_bound(eta: float) -> float:
    """Global Lipschitz constant of the choice map: η/2.

    Tighter than the η bound quoted in earlier softmax literature; follows
    from the Gershgorin bound 2 η σ_j (1 - σ_j) <= η/2 on the Jacobian
    eigenvalues.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    return eta / 2.0
