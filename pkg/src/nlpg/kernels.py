"""Nonlocal kernel pair, manufactured solutions and forcing functions."""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def _const_diff_profile(r):
    return np.full_like(np.asarray(r, dtype=float), 1.5)


def _const_conv_profile(r):
    return 1.5 * np.asarray(r, dtype=float)


@dataclass(frozen=True)
class KernelPair:
    """Scaled diffusion/convection kernel pair with horizon ``delta``.

    The reference profiles live on [0, 1]; the scaled kernels are
    ``delta**-3 * diff_profile(|s|/delta)`` and
    ``delta**-2 * conv_profile(|s|/delta)`` (both zero outside the horizon).
    The built-in pair satisfies the unit second/first moment normalizations
    and the pointwise relation conv = |s| * diff / eta.
    """

    delta: float
    eta: float = 1.0
    diff_profile: Callable = field(default=_const_diff_profile)
    conv_profile: Callable = field(default=_const_conv_profile)

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError(f"horizon delta must be positive, got {self.delta}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"sector fraction eta must lie in (0, 1], got {self.eta}")

    def eval_diffusion(self, s):
        """Scaled diffusion kernel value at signed separation ``s``."""
        r = np.abs(np.asarray(s, dtype=float)) / self.delta
        val = self.diff_profile(np.minimum(r, 1.0)) / self.delta**3
        return np.where(r <= 1.0, val, 0.0)

    def eval_convection(self, s):
        """Scaled (unsigned) convection kernel value at signed separation ``s``."""
        r = np.abs(np.asarray(s, dtype=float)) / self.delta
        val = self.conv_profile(np.minimum(r, 1.0)) / self.delta**2
        return np.where(r <= 1.0, val, 0.0)

    def eval_convection_signed(self, s):
        """Convection kernel with the direction factor sign(s); sign(0) = 0."""
        s = np.asarray(s, dtype=float)
        return np.sign(s) * self.eval_convection(s)


def constant_kernel_pair(delta, eta=1.0):
    """Built-in pair: diffusion profile 3/2, convection profile 3|r|/(2 eta)."""
    if eta == 1.0:
        return KernelPair(delta)
    return KernelPair(delta, eta, _const_diff_profile,
                      lambda r: 1.5 * np.asarray(r, dtype=float) / eta)


def exact_smooth(x):
    """Smooth manufactured solution x**5."""
    return np.asarray(x, dtype=float) ** 5


def forcing_smooth_nonlocal(x, eps, delta):
    """Forcing that makes x**5 the exact nonlocal solution (built-in kernels)."""
    x = np.asarray(x, dtype=float)
    return (-eps * (20.0 * x**3 + 6.0 * delta**2 * x)
            + 5.0 * x**4 + 6.0 * delta**2 * x**2 + (3.0 / 7.0) * delta**4)


def forcing_smooth_local(x, eps):
    """Local-limit forcing for the x**5 solution."""
    x = np.asarray(x, dtype=float)
    return -20.0 * eps * x**3 + 5.0 * x**4


def exact_sharp(x, eps):
    """Boundary-layer solution (expm1((x-1)/eps)) / (expm1(-1/eps))."""
    x = np.asarray(x, dtype=float)
    return np.expm1((x - 1.0) / eps) / math.expm1(-1.0 / eps)


def _sharp_bracket(d):
    # 2 + cosh(d) - 3*sinh(d)/d, where d = delta/eps.  The closed form loses
    # all precision for small d (the value is Theta(d**4) against O(1) terms),
    # so use the power series sum_{k>=2} (2k-2) d^(2k) / (2k+1)! there.
    if d <= 0.5:
        total = 0.0
        d2 = d * d
        power = d2 * d2
        for k in range(2, 30):
            term = (2 * k - 2) * power / math.factorial(2 * k + 1)
            total += term
            if term < 1e-18 * total:
                break
            power *= d2
        return total
    return 2.0 + math.cosh(d) - 3.0 * math.sinh(d) / d


def forcing_sharp(x, eps, delta):
    """Forcing that makes ``exact_sharp`` the exact nonlocal solution."""
    x = np.asarray(x, dtype=float)
    denom = math.expm1(-1.0 / eps)
    d = delta / eps
    if d <= 500.0:
        bracket = (3.0 * eps / delta**2) * _sharp_bracket(d)
        return bracket * np.exp((x - 1.0) / eps) / denom
    # exp(d) overflows: fold the exponentials into e^{(x-1±delta)/eps} so the
    # result stays finite wherever it is representable.
    e0 = np.exp((x - 1.0) / eps)
    ep = np.exp((x - 1.0 + delta) / eps)
    em = np.exp((x - 1.0 - delta) / eps)
    return ((3.0 * eps / (2.0 * delta**2)) * (4.0 * e0 + ep + em)
            - (9.0 * eps**2 / (2.0 * delta**3)) * (ep - em)) / denom
