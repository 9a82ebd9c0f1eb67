"""Array geometry for the BS / XL-IRS / user deployment.

The BS is a uniform linear array along the x axis and the IRS is a uniform
planar array in the x-z plane.  Both face the y axis, along which the BS,
the IRS and the first user are placed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ScenarioConfig",
    "ArrayLayout",
    "ApertureReport",
    "build_layout",
    "aperture_report",
    "dbm_to_watt",
]


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((float(dbm) - 30.0) / 10.0)


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical parameters of one deployment.

    Lengths are in meters and powers in linear watts.  ``element_spacing_m``
    defaults to half a wavelength.  ``noise_powers_w`` may be given as a
    scalar, which is broadcast to every user.
    """

    wavelength_m: float = 0.03
    bs_antennas: int = 64
    irs_horizontal: int = 120
    irs_vertical: int = 4
    users: int = 1
    tx_power_w: float = 1.0
    noise_powers_w: tuple = (1e-12,)
    bs_center: tuple = (0.0, 0.0, 0.0)
    irs_center: tuple = (0.0, 50.0, 0.0)
    user_positions: tuple = ((0.0, 150.0, 0.0),)
    element_spacing_m: float | None = None

    def __post_init__(self):
        set_ = lambda name, value: object.__setattr__(self, name, value)
        if self.element_spacing_m is None:
            set_("element_spacing_m", self.wavelength_m / 2.0)
        noise = np.atleast_1d(np.asarray(self.noise_powers_w, dtype=float))
        if noise.size == 1 and self.users > 1:
            noise = np.full(self.users, noise[0])
        set_("noise_powers_w", tuple(float(x) for x in noise))
        set_("bs_center", tuple(_vec3(self.bs_center)))
        set_("irs_center", tuple(_vec3(self.irs_center)))
        set_("user_positions", tuple(tuple(_vec3(u)) for u in self.user_positions))
        self.validate()

    def validate(self) -> None:
        if not self.wavelength_m > 0:
            raise ValueError("wavelength_m must be positive")
        if not self.element_spacing_m > 0:
            raise ValueError("element_spacing_m must be positive")
        for name in ("bs_antennas", "irs_horizontal", "irs_vertical", "users"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
        if not self.tx_power_w > 0:
            raise ValueError("tx_power_w must be positive")
        if len(self.noise_powers_w) != self.users:
            raise ValueError(
                f"noise_powers_w has {len(self.noise_powers_w)} entries for {self.users} users"
            )
        if any(not s > 0 for s in self.noise_powers_w):
            raise ValueError("every noise power must be positive")
        if len(self.user_positions) != self.users:
            raise ValueError(
                f"user_positions has {len(self.user_positions)} entries for {self.users} users"
            )

    @property
    def irs_elements(self) -> int:
        return self.irs_horizontal * self.irs_vertical

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_irs_at(self, x_irs: float) -> "ScenarioConfig":
        """Copy with the IRS center moved to ``x_irs`` along the y axis."""
        c = list(self.irs_center)
        c[1] = float(x_irs)
        return self.replace(irs_center=tuple(c))


@dataclass(frozen=True)
class ArrayLayout:
    bs_positions: np.ndarray  # (M, 3)
    irs_positions: np.ndarray  # (N, 3)
    user_positions: np.ndarray  # (K, 3)
    d_bi: float
    d_ik: np.ndarray = field(repr=False)  # (K,)


@dataclass(frozen=True)
class ApertureReport:
    D_R: float
    D_B: float
    D_U: float
    Z_B: float
    Z_U: float
    Z_B_sum_of_squares: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _centered_offsets(count: int, spacing: float) -> np.ndarray:
    return (np.arange(count) - (count - 1) / 2.0) * spacing


def build_layout(config: ScenarioConfig) -> ArrayLayout:
    """Element-level positions of every array in ``config``.

    IRS element ``n = n_z * N_x + n_x`` (zero based) sits at horizontal index
    ``n_x`` and vertical index ``n_z``.
    """
    d = config.element_spacing_m
    bs_center = np.asarray(config.bs_center)
    irs_center = np.asarray(config.irs_center)
    users = np.asarray(config.user_positions, dtype=float).reshape(-1, 3)

    M = config.bs_antennas
    bs = np.zeros((M, 3))
    bs[:, 0] = _centered_offsets(M, d)
    bs += bs_center

    nz, nx = np.divmod(np.arange(config.irs_elements), config.irs_horizontal)
    irs = np.zeros((config.irs_elements, 3))
    irs[:, 0] = _centered_offsets(config.irs_horizontal, d)[nx]
    irs[:, 2] = _centered_offsets(config.irs_vertical, d)[nz]
    irs += irs_center

    d_bi = float(np.linalg.norm(irs_center - bs_center))
    d_ik = np.linalg.norm(users - irs_center, axis=1)
    if d_bi == 0.0:
        raise ValueError("BS and IRS centers coincide (d_BI = 0)")
    if np.any(d_ik == 0.0):
        k = int(np.flatnonzero(d_ik == 0.0)[0])
        raise ValueError(f"user {k + 1} coincides with the IRS center (d_Ik = 0)")
    return ArrayLayout(bs, irs, users, d_bi, d_ik)


def aperture_report(config: ScenarioConfig) -> ApertureReport:
    """Array apertures and the two Rayleigh-distance readings.

    ``Z_B`` follows ``2 (D_R + D_B)^2 / lambda``.  ``Z_B_sum_of_squares`` is
    ``2 (D_R^2 + D_B^2) / lambda``, which is the variant that lands on 272 m
    for the default 64-antenna, 120 x 4 scenario.
    """
    d, lam = config.element_spacing_m, config.wavelength_m
    D_R = d * float(np.hypot(config.irs_horizontal - 1, config.irs_vertical - 1))
    D_B = (config.bs_antennas - 1) * d
    D_U = 0.0
    return ApertureReport(
        D_R=D_R,
        D_B=D_B,
        D_U=D_U,
        Z_B=2.0 * (D_R + D_B) ** 2 / lam,
        Z_U=2.0 * (D_R + D_U) ** 2 / lam,
        Z_B_sum_of_squares=2.0 * (D_R**2 + D_B**2) / lam,
    )
