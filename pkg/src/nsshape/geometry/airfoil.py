"""NACA four-digit symmetric section and its closed wall curve."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OPEN_TE_COEFFS = (0.2969, -0.1260, -0.3516, 0.2843, -0.1015)
CLOSED_TE_COEFFS = (0.2969, -0.1260, -0.3516, 0.2843, -0.1036)


@dataclass(frozen=True)
class AirfoilGeometry:
    """Symmetric four-digit NACA section, chord ``chord``, thickness ratio ``thickness_ratio``.

    With ``closed_te`` the last coefficient is -0.1036, which makes the
    half-thickness vanish at the trailing edge.  In that case the quartic term is
    evaluated as ``sum_k a_k (x^k - x^4)`` so the trailing edge value is exactly 0.
    """

    thickness_ratio: float = 0.12
    chord: float = 1.0
    closed_te: bool = True
    coeffs: tuple = field(default=None)

    def __post_init__(self):
        if self.coeffs is None:
            object.__setattr__(self, "coeffs", CLOSED_TE_COEFFS if self.closed_te else OPEN_TE_COEFFS)
        if len(self.coeffs) != 5:
            raise ValueError("NACA thickness law takes 5 coefficients")
        if not 0 < self.thickness_ratio < 1:
            raise ValueError(f"thickness ratio must be in (0, 1), got {self.thickness_ratio}")

    def thickness(self, x: np.ndarray | float) -> np.ndarray:
        """Half-thickness y_t(x) for x in [0, chord]."""
        xc = np.asarray(x, dtype=float) / self.chord
        if np.any(xc < 0) or np.any(xc > 1):
            raise ValueError("thickness is defined on [0, chord]")
        a = self.coeffs
        if self.closed_te:
            x4 = xc**4
            s = a[0] * (np.sqrt(xc) - x4) + a[1] * (xc - x4) + a[2] * (xc**2 - x4) + a[3] * (xc**3 - x4)
        else:
            s = a[0] * np.sqrt(xc) + a[1] * xc + a[2] * xc**2 + a[3] * xc**3 + a[4] * xc**4
        return 5.0 * self.thickness_ratio * self.chord * s

    # Wall curve parameterised by theta in [0, 2 pi]: x = chord (1 + cos theta)/2,
    # lower surface for theta in [0, pi], upper for [pi, 2 pi].  With
    # c = cos(theta/2) one has sqrt(x/chord) = |c|, which keeps the leading edge smooth.
    def _half(self, c):
        a = self.coeffs
        s = np.sign(c)
        x = c * c
        if self.closed_te:
            x4 = x**4
            return a[0] * (c - s * x4) + s * (a[1] * (x - x4) + a[2] * (x**2 - x4) + a[3] * (x**3 - x4))
        return a[0] * c + s * (a[1] * x + a[2] * x**2 + a[3] * x**3 + a[4] * x**4)

    def _dhalf(self, c):
        a = self.coeffs
        s = np.sign(c)
        x = c * c
        if self.closed_te:
            dx4 = 8 * c**7
            return (a[0] * (1 - s * dx4)
                    + s * (a[1] * (2 * c - dx4) + a[2] * (4 * c**3 - dx4) + a[3] * (6 * c**5 - dx4)))
        return a[0] + s * (2 * a[1] * c + 4 * a[2] * c**3 + 6 * a[3] * c**5 + 8 * a[4] * c**7)

    def wall_point(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        c = np.cos(theta / 2)
        x = self.chord * c * c
        y = -5.0 * self.thickness_ratio * self.chord * self._half(c)
        return np.stack([x, y], axis=-1)

    def wall_tangent(self, theta: np.ndarray) -> np.ndarray:
        """Unit tangent along increasing theta (one-sided limits at the trailing edge)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.empty(theta.shape + (2,))
        te = np.isclose(np.mod(theta, 2 * np.pi), 0.0, atol=1e-12) | np.isclose(theta, 2 * np.pi, atol=1e-12)
        th = theta.copy()
        # the parameter speed vanishes at the trailing edge; use the limiting direction
        th[te & (theta < 1.0)] = 1e-6
        th[te & (theta > 1.0)] = 2 * np.pi - 1e-6
        c = np.cos(th / 2)
        dc = -0.5 * np.sin(th / 2)
        d = np.stack([2 * c * dc, -5.0 * self.thickness_ratio * self._dhalf(c) * dc], axis=-1) * self.chord
        out[:] = d / np.linalg.norm(d, axis=-1, keepdims=True)
        return out
