"""Catalog entries for forcing terms, nonlinear perturbations, and impulse maps.

Every entry declares the constants the synthesis module consumes: a
Lipschitz bound with respect to the sup norm of the delay segment, a
growth envelope (alpha1, beta1, and a scalar envelope function), and
whether the entry reads the instantaneous control value.  Entries that
depend on the control are rejected by the exact-controllability driver,
which requires state-only perturbations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "Forcing",
    "Nonlinearity",
    "ImpulseMap",
    "ImpulseEvent",
    "make_forcing",
    "make_nonlinearity",
    "make_impulse_map",
    "FORCING_KINDS",
    "NONLINEARITY_KINDS",
    "IMPULSE_KINDS",
]

FORCING_KINDS = ("zero", "harmonic")
NONLINEARITY_KINDS = ("zero", "bounded_wave", "delayed_saturation", "control_saturation")
IMPULSE_KINDS = ("constant_kick", "velocity_kick", "saturating_kick", "control_kick")


def _profile(params: dict, n_modes: int, key: str = "coeffs") -> np.ndarray:
    coeffs = np.asarray(params.get(key, ()), dtype=float)
    if coeffs.ndim != 1 or coeffs.size == 0 or coeffs.size > n_modes:
        raise ConfigError(f"'{key}' must list 1..{n_modes} modal coefficients")
    out = np.zeros(n_modes)
    out[: coeffs.size] = coeffs
    return out


@dataclass(frozen=True)
class Forcing:
    """Bounded distributed load p(t) = cos(omega*t + phase) * profile."""

    kind: str
    profile: np.ndarray
    omega: float = 0.0
    phase: float = 0.0

    @property
    def bound(self) -> float:
        return float(np.linalg.norm(self.profile))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def __call__(self, t: float) -> np.ndarray:
        if self.is_zero:
            return np.zeros_like(self.profile)
        return np.cos(self.omega * t + self.phase) * self.profile


def make_forcing(kind: str, n_modes: int, params: dict | None = None) -> Forcing:
    params = params or {}
    if kind == "zero":
        return Forcing("zero", np.zeros(n_modes))
    if kind == "harmonic":
        return Forcing(
            "harmonic",
            _profile(params, n_modes),
            float(params.get("omega", 0.0)),
            float(params.get("phase", 0.0)),
        )
    raise ConfigError(f"unknown forcing catalog entry '{kind}' (known: {FORCING_KINDS})")


@dataclass(frozen=True)
class Nonlinearity:
    """Nonlinear perturbation f(t, segment, u) valued in modal coefficients.

    `lipschitz` bounds the increment in the X norm against the sup norm of
    the segment difference; `alpha1`, `beta1`, and `envelope` give the
    growth bound alpha1 * envelope(|segment(-r)|) + beta1.
    """

    kind: str
    amp: float
    profile: np.ndarray | None = None
    omega: float = 0.0
    phase: float = 0.0
    lipschitz: float = 0.0
    alpha1: float = 0.0
    beta1: float = 0.0
    envelope_kind: str = "zero"
    envelope_cap: float = 0.0
    u_dependent: bool = False

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def envelope(self, x: float) -> float:
        if self.envelope_kind == "zero":
            return 0.0
        if self.envelope_kind == "identity":
            return float(x)
        return float(min(x, self.envelope_cap))

    def evaluate(self, t: float, seg, u_val: np.ndarray | None) -> np.ndarray:
        if self.kind == "zero":
            raise RuntimeError("zero nonlinearity should be short-circuited by callers")
        if self.kind == "bounded_wave":
            return self.amp * np.cos(self.omega * t + self.phase) * self.profile
        if self.kind == "delayed_saturation":
            delayed = seg.value(-seg.span)
            return self.amp * np.tanh(delayed[1])
        # control_saturation
        if u_val is None:
            raise ValueError("catalog entry 'control_saturation' needs a control value")
        return self.amp * np.tanh(u_val)


def make_nonlinearity(
    kind: str,
    n_modes: int,
    params: dict | None = None,
    lipschitz: float | None = None,
    alpha1: float | None = None,
    beta1: float | None = None,
) -> Nonlinearity:
    """Build a catalog entry; explicit constants override the derived defaults."""
    params = params or {}
    amp = float(params.get("amp", 0.0))
    if kind == "zero":
        entry = Nonlinearity("zero", 0.0)
    elif kind == "bounded_wave":
        profile = _profile(params, n_modes) if "coeffs" in params else None
        if profile is None:
            profile = np.zeros(n_modes)
            profile[0] = 1.0
        norm = np.linalg.norm(profile)
        if norm == 0:
            raise ConfigError("bounded_wave profile must be nonzero")
        entry = Nonlinearity(
            "bounded_wave",
            amp,
            profile / norm,
            float(params.get("omega", 0.0)),
            float(params.get("phase", 0.0)),
            lipschitz=0.0,
            alpha1=0.0,
            beta1=abs(amp),
            envelope_kind="zero",
        )
    elif kind == "delayed_saturation":
        # tanh is 1-Lipschitz and bounded by sqrt(N) in the coefficient norm.
        entry = Nonlinearity(
            "delayed_saturation",
            amp,
            lipschitz=abs(amp),
            alpha1=abs(amp),
            beta1=0.0,
            envelope_kind="clip",
            envelope_cap=float(np.sqrt(n_modes)),
        )
    elif kind == "control_saturation":
        entry = Nonlinearity(
            "control_saturation",
            amp,
            lipschitz=0.0,
            alpha1=0.0,
            beta1=abs(amp) * float(np.sqrt(n_modes)),
            envelope_kind="zero",
            u_dependent=True,
        )
    else:
        raise ConfigError(
            f"unknown nonlinearity catalog entry '{kind}' (known: {NONLINEARITY_KINDS})"
        )
    overrides = {}
    if lipschitz is not None:
        overrides["lipschitz"] = float(lipschitz)
    if alpha1 is not None:
        overrides["alpha1"] = float(alpha1)
    if beta1 is not None:
        overrides["beta1"] = float(beta1)
    if overrides:
        from dataclasses import replace

        entry = replace(entry, **overrides)
    return entry


@dataclass(frozen=True)
class ImpulseMap:
    """Instantaneous velocity jump applied when the trajectory crosses t_k.

    `velocity_jump` consumes the left-limit state (a (2, N) pair) and the
    control value at the impulse time; `d_k` is the declared Lipschitz
    bound of the jump with respect to the state in the energy norm.
    """

    kind: str
    amp: float
    profile: np.ndarray | None
    d_k: float
    u_dependent: bool = False

    def velocity_jump(self, t: float, pair: np.ndarray, u_val: np.ndarray | None) -> np.ndarray:
        if self.kind == "constant_kick":
            return self.profile.copy()
        if self.kind == "velocity_kick":
            return self.amp * pair[1]
        if self.kind == "saturating_kick":
            return self.amp * np.tanh(pair[1])
        # control_kick
        if u_val is None:
            raise ValueError("catalog entry 'control_kick' needs a control value")
        return self.amp * u_val


def make_impulse_map(
    kind: str, n_modes: int, params: dict | None = None, d_k: float | None = None
) -> ImpulseMap:
    params = params or {}
    amp = float(params.get("amp", 0.0))
    if kind == "constant_kick":
        entry = ImpulseMap("constant_kick", 0.0, _profile(params, n_modes), d_k=0.0)
    elif kind == "velocity_kick":
        entry = ImpulseMap("velocity_kick", amp, None, d_k=abs(amp))
    elif kind == "saturating_kick":
        entry = ImpulseMap("saturating_kick", amp, None, d_k=abs(amp))
    elif kind == "control_kick":
        entry = ImpulseMap("control_kick", amp, None, d_k=0.0, u_dependent=True)
    else:
        raise ConfigError(f"unknown impulse catalog entry '{kind}' (known: {IMPULSE_KINDS})")
    if d_k is not None:
        from dataclasses import replace

        entry = replace(entry, d_k=float(d_k))
    return entry


@dataclass(frozen=True)
class ImpulseEvent:
    """An impulse map scheduled at a fixed time."""

    time: float
    map: ImpulseMap

    @property
    def d_k(self) -> float:
        return self.map.d_k
