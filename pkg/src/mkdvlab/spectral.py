"""Fourier-side representation of 2*pi-periodic fields.

A field is the truncated mode vector u_hat(k), |k| <= K, of
u(x) = sum_k u_hat(k) exp(i k x) on [0, 2*pi). Real-valued functions carry
conjugate-symmetric coefficients, u_hat(-k) = conj(u_hat(k)), with a real
zero mode. Sobolev norms are pure sequence-space sums with the bracket
weight <k> = (1 + k^2)^(1/2); no 2*pi factors appear anywhere.

Arrays index modes as j = k + K. Coefficient arrays are treated as
immutable; operations return new objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FieldError, GridMismatchError

__all__ = [
    "REAL_SYMMETRY_TOL",
    "GridSpec",
    "FourierField",
    "Trajectory",
    "SobolevIndex",
    "field_from_samples",
    "to_samples",
    "to_real_samples",
    "spatial_derivative",
    "sobolev_norm",
    "check_real_symmetry",
    "cosine_field",
    "field_from_modes",
    "resize_field",
    "cumulative_trapezoid",
    "field_to_obj",
    "field_from_obj",
    "trajectory_to_obj",
    "trajectory_from_obj",
]

# Verified reality tolerance for operations that require real-valued input.
REAL_SYMMETRY_TOL = 1e-8


def _bracket_sq(k: np.ndarray | float) -> np.ndarray | float:
    """<k>^2 = 1 + k^2."""
    return 1.0 + np.asarray(k, dtype=float) ** 2


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time sampling: modes |k| <= K, frames t_n = n T / (M - 1)."""

    K: int
    M: int
    T: float

    def __post_init__(self) -> None:
        if int(self.K) != self.K or self.K < 1:
            raise ConfigError(f"K must be an integer >= 1, got {self.K!r}")
        if int(self.M) != self.M or self.M < 2:
            raise ConfigError(f"M must be an integer >= 2, got {self.M!r}")
        if not (self.T > 0):
            raise ConfigError(f"T must be positive, got {self.T!r}")

    @property
    def n_modes(self) -> int:
        return 2 * self.K + 1

    @property
    def dt(self) -> float:
        return self.T / (self.M - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.M)

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)


@dataclass(frozen=True)
class FourierField:
    """Mode vector u_hat(k) for |k| <= K, stored at index k + K.

    real_symmetric marks fields constructed to represent real-valued
    functions; the claim is checked (loosely) at construction time.
    """

    coeffs: np.ndarray
    real_symmetric: bool = False

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0:
            raise FieldError(
                f"coefficients must be a 1d array of odd length, got shape {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)
        if self.real_symmetric:
            asym = check_real_symmetry(self)
            if asym > REAL_SYMMETRY_TOL:
                raise FieldError(
                    f"field marked real_symmetric but max |u_hat(-k) - conj(u_hat(k))| = {asym:.3e}"
                )

    @property
    def K(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def mode(self, k: int) -> complex:
        if abs(k) > self.K:
            raise FieldError(f"mode {k} outside |k| <= {self.K}")
        return complex(self.coeffs[k + self.K])

    @staticmethod
    def zeros(K: int, real_symmetric: bool = True) -> "FourierField":
        return FourierField(np.zeros(2 * K + 1, dtype=complex), real_symmetric)

    def __add__(self, other: "FourierField") -> "FourierField":
        self._check_same_K(other)
        return FourierField(
            self.coeffs + other.coeffs, self.real_symmetric and other.real_symmetric
        )

    def __sub__(self, other: "FourierField") -> "FourierField":
        self._check_same_K(other)
        return FourierField(
            self.coeffs - other.coeffs, self.real_symmetric and other.real_symmetric
        )

    def __rmul__(self, scalar: float) -> "FourierField":
        keep = self.real_symmetric and isinstance(scalar, (int, float))
        return FourierField(scalar * self.coeffs, keep)

    def _check_same_K(self, other: "FourierField") -> None:
        if self.K != other.K:
            raise GridMismatchError(f"mode cutoffs differ: {self.K} vs {other.K}")


@dataclass(frozen=True)
class Trajectory:
    """M field frames on a shared grid, stored as an (M, 2K+1) complex array."""

    grid: GridSpec
    coeffs: np.ndarray
    real_symmetric: bool = False

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.M, self.grid.n_modes):
            raise FieldError(
                f"trajectory array shape {c.shape} does not match grid "
                f"({self.grid.M}, {self.grid.n_modes})"
            )
        object.__setattr__(self, "coeffs", c)

    @property
    def K(self) -> int:
        return self.grid.K

    def frame(self, n: int) -> FourierField:
        return FourierField(self.coeffs[n].copy(), self.real_symmetric)

    @property
    def frames(self) -> list[FourierField]:
        return [self.frame(n) for n in range(self.grid.M)]

    @staticmethod
    def zeros(grid: GridSpec, real_symmetric: bool = True) -> "Trajectory":
        return Trajectory(
            grid, np.zeros((grid.M, grid.n_modes), dtype=complex), real_symmetric
        )

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        if self.grid != other.grid:
            raise GridMismatchError("trajectories live on different grids")
        return Trajectory(
            self.grid,
            self.coeffs - other.coeffs,
            self.real_symmetric and other.real_symmetric,
        )


@dataclass(frozen=True)
class SobolevIndex:
    """Exponent set (s0, s1, b, delta) for the solution-space norms.

    Defaults derive the companion exponents from s0: s1 sits at the middle
    of its admissible window, delta is a tenth of the available slack above
    1/4, and b = 1/2 + 2 delta.
    """

    s0: float = 0.3
    s1: float | None = None
    b: float | None = None
    delta: float | None = None

    def __post_init__(self) -> None:
        if self.delta is None:
            object.__setattr__(self, "delta", (self.s0 - 0.25) / 10.0)
        if self.b is None:
            object.__setattr__(self, "b", 0.5 + 2.0 * self.delta)
        if self.s1 is None:
            lo = max(0.5, 1.0 - self.s0)
            hi = min(1.0, 3.0 * self.s0)
            object.__setattr__(self, "s1", 0.5 * (lo + hi))

    def validate(self) -> None:
        """Raise ConfigError unless the exponents sit in the admissible regime."""
        problems = []
        if not (0.25 < self.s0 < 0.5):
            problems.append(f"s0 = {self.s0} outside (1/4, 1/2)")
        if not (0.5 < 1.0 - self.s0 < self.s1 < min(1.0, 3.0 * self.s0)):
            problems.append(
                f"s1 = {self.s1} outside (max(1/2, 1 - s0), min(1, 3 s0))"
            )
        if not (0.0 < self.delta < self.s0 - 0.25):
            problems.append(f"delta = {self.delta} outside (0, s0 - 1/4)")
        if abs(self.b - (0.5 + 2.0 * self.delta)) > 1e-12:
            problems.append(f"b = {self.b} != 1/2 + 2 delta = {0.5 + 2 * self.delta}")
        if problems:
            raise ConfigError("; ".join(problems))


def field_from_samples(samples: np.ndarray, K: int) -> FourierField:
    """DFT of real point samples on a uniform grid of [0, 2*pi), truncated to |k| <= K.

    Requires at least 2K + 2 samples. Reality symmetry of the output is exact
    by construction (a half-spectrum transform is used and mirrored).
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise FieldError("samples must be a 1d array")
    n = x.size
    if n < 2 * K + 2:
        raise FieldError(f"need at least {2 * K + 2} samples for K = {K}, got {n}")
    half = np.fft.rfft(x) / n
    coeffs = np.zeros(2 * K + 1, dtype=complex)
    coeffs[K] = half[0].real
    pos = half[1 : K + 1]
    coeffs[K + 1 :] = pos
    coeffs[:K] = np.conj(pos[::-1])
    return FourierField(coeffs, real_symmetric=True)


def to_samples(u: FourierField, n: int) -> np.ndarray:
    """Complex point values of u on the uniform n-point grid of [0, 2*pi)."""
    K = u.K
    if n < 2 * K + 1:
        raise FieldError(f"need n >= {2 * K + 1} points to place all modes, got {n}")
    buf = np.zeros(n, dtype=complex)
    buf[u.wavenumbers % n] = u.coeffs
    return np.fft.ifft(buf) * n


def to_real_samples(u: FourierField, n: int) -> np.ndarray:
    """Real point values of a conjugate-symmetric field (half-spectrum transform)."""
    asym = check_real_symmetry(u)
    if asym > REAL_SYMMETRY_TOL:
        raise FieldError(f"field is not real-symmetric: asymmetry {asym:.3e}")
    K = u.K
    if n < 2 * K + 1:
        raise FieldError(f"need n >= {2 * K + 1} points to place all modes, got {n}")
    half = np.zeros(n // 2 + 1, dtype=complex)
    half[0] = u.coeffs[K].real
    half[1 : K + 1] = u.coeffs[K + 1 :]
    return np.fft.irfft(half, n) * n


def spatial_derivative(u: FourierField) -> FourierField:
    """Mode-wise derivative i k u_hat(k)."""
    return FourierField(1j * u.wavenumbers * u.coeffs, u.real_symmetric)


def sobolev_norm(u: FourierField, s: float) -> float:
    """Sequence-space H^s norm: sqrt(sum_k <k>^{2s} |u_hat(k)|^2)."""
    w = _bracket_sq(u.wavenumbers) ** s
    return float(math.sqrt(float(np.sum(w * np.abs(u.coeffs) ** 2))))


def check_real_symmetry(u: FourierField) -> float:
    """max_k |u_hat(-k) - conj(u_hat(k))|, zero for exactly real fields."""
    c = u.coeffs
    return float(np.max(np.abs(c[::-1] - np.conj(c))))


def cosine_field(K: int, amplitude: float = 1.0, harmonic: int = 1) -> FourierField:
    """amplitude * cos(harmonic * x) as a mode vector."""
    if not (1 <= harmonic <= K):
        raise FieldError(f"harmonic {harmonic} outside 1..{K}")
    c = np.zeros(2 * K + 1, dtype=complex)
    c[K + harmonic] = amplitude / 2.0
    c[K - harmonic] = amplitude / 2.0
    return FourierField(c, real_symmetric=True)


def field_from_modes(
    K: int, modes: dict[int, complex], symmetrize: bool = False
) -> FourierField:
    """Place explicit mode values; optionally mirror conjugates onto -k."""
    c = np.zeros(2 * K + 1, dtype=complex)
    for k, val in modes.items():
        if abs(k) > K:
            raise FieldError(f"mode {k} outside |k| <= {K}")
        c[K + k] = val
        if symmetrize and k != 0:
            c[K - k] = np.conj(val)
    if symmetrize:
        c[K] = c[K].real
    field = FourierField(c)
    if check_real_symmetry(field) == 0.0:
        return FourierField(c, real_symmetric=True)
    return field


def resize_field(u: FourierField, K: int) -> FourierField:
    """Truncate or zero-pad the mode vector to the cutoff K."""
    if K == u.K:
        return u
    c = np.zeros(2 * K + 1, dtype=complex)
    m = min(K, u.K)
    c[K - m : K + m + 1] = u.coeffs[u.K - m : u.K + m + 1]
    return FourierField(c, u.real_symmetric)


def cumulative_trapezoid(y: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative trapezoid rule along axis 0, anchored at zero."""
    y = np.asarray(y)
    out = np.zeros_like(y)
    np.cumsum((y[1:] + y[:-1]) * (0.5 * dt), axis=0, out=out[1:])
    return out


# ---------------------------------------------------------------------------
# JSON-facing serialization. Fields become [k, re, im] triples in ascending k;
# trajectories carry their grid header. Floats survive round trips exactly
# because json emits shortest round-trip decimals.

def field_to_obj(u: FourierField) -> list[list[float]]:
    return [
        [int(k), float(c.real), float(c.imag)]
        for k, c in zip(u.wavenumbers, u.coeffs)
    ]


def field_from_obj(obj: list[list[float]]) -> FourierField:
    if not obj:
        raise FieldError("empty mode list")
    ks = [int(row[0]) for row in obj]
    K = max(abs(k) for k in ks)
    if sorted(ks) != list(range(-K, K + 1)):
        raise FieldError("mode list must cover -K..K exactly once, ascending")
    c = np.zeros(2 * K + 1, dtype=complex)
    for k, re, im in obj:
        c[int(k) + K] = complex(re, im)
    asym = float(np.max(np.abs(c[::-1] - np.conj(c))))
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    return FourierField(c, real_symmetric=(asym <= 1e-12 * max(1.0, scale)))


def trajectory_to_obj(tr: Trajectory) -> dict:
    return {
        "grid": {"K": tr.grid.K, "M": tr.grid.M, "T": tr.grid.T},
        "frames": [field_to_obj(tr.frame(n)) for n in range(tr.grid.M)],
    }


def trajectory_from_obj(obj: dict) -> Trajectory:
    g = obj["grid"]
    grid = GridSpec(int(g["K"]), int(g["M"]), float(g["T"]))
    frames = [field_from_obj(f) for f in obj["frames"]]
    if len(frames) != grid.M or any(f.K != grid.K for f in frames):
        raise FieldError("frame list inconsistent with grid header")
    coeffs = np.stack([f.coeffs for f in frames])
    return Trajectory(grid, coeffs, all(f.real_symmetric for f in frames))
