"""Propagation channels: geometry, 3GPP UMi path loss, Rician fading, ULA
steering, and assembly of the equivalent AP-to-user channels through one or
more scattering surfaces.

All random draws go through counter-based Philox streams keyed by
(master seed, trial index, stream index), so any trial is reproducible in
isolation and trials can run concurrently without shared RNG state.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ValidationError


class LinkKind(enum.Enum):
    AP_TO_SURFACE = "ap_to_surface"
    SURFACE_TO_USER = "surface_to_user"
    AP_TO_USER = "ap_to_user"


# LoS links: favorable Rician; the direct AP-to-user link is a strongly
# attenuated NLoS Rayleigh link.
_LOS_KINDS = (LinkKind.AP_TO_SURFACE, LinkKind.SURFACE_TO_USER)


@dataclass(frozen=True)
class LinkSpec:
    """One propagation link: kind, distance, Rician factor, carrier."""

    kind: LinkKind
    distance_m: float
    rician_db: float | None  # None marks Rayleigh fading (K_f = 0 linear)
    carrier_ghz: float

    def __post_init__(self):
        if self.distance_m <= 0:
            raise ValidationError(f"link distance must be positive, got {self.distance_m}")
        if self.carrier_ghz <= 0:
            raise ValidationError(f"carrier frequency must be positive, got {self.carrier_ghz}")
        if self.kind is LinkKind.AP_TO_USER and self.rician_db is not None:
            raise ValidationError("direct AP-to-user links are Rayleigh (rician_db=None)")

    @property
    def rician_linear(self) -> float:
        if self.rician_db is None:
            return 0.0
        return 10.0 ** (self.rician_db / 10.0)

    @property
    def wavelength_m(self) -> float:
        return 299792458.0 / (self.carrier_ghz * 1e9)


def steering_vector(n: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response: element i = exp(-j pi i sin(angle))."""
    if n < 1:
        raise ValidationError(f"element count must be >= 1, got {n}")
    if not -np.pi / 2 <= angle <= np.pi / 2:
        raise ValidationError(f"angle {angle} outside [-pi/2, pi/2]")
    return np.exp(-1j * np.pi * np.arange(n) * np.sin(angle))


def path_loss_db(link: LinkSpec) -> float:
    """3GPP UMi path loss in dB (LoS for surface links, NLoS for direct)."""
    d = link.distance_m
    f = link.carrier_ghz
    if d <= 0:
        raise ValidationError(f"nonpositive distance {d}")
    if d < 10.0:
        warnings.warn(
            f"distance {d} m is below the nominal validity of the UMi model",
            stacklevel=2,
        )
    if link.kind in _LOS_KINDS:
        return 22.0 * np.log10(d) + 28.0 + 20.0 * np.log10(f)
    return 36.7 * np.log10(d) + 22.7 + 26.0 * np.log10(f)


def path_gain(link: LinkSpec) -> float:
    """Linear large-scale gain Upsilon(d) = 10^(-PL/10)."""
    return 10.0 ** (-path_loss_db(link) / 10.0)


def stream_rng(master_seed: int, trial: int, stream: int) -> np.random.Generator:
    """Independent Philox stream keyed by (master seed, trial, stream index)."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial, stream))
    return np.random.Generator(np.random.Philox(seq))


def draw_channel(rows: int, cols: int, link: LinkSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one Rician channel matrix with distance-dependent scaling.

    H = sqrt(Upsilon) (sqrt(Kf/(Kf+1)) H_LoS + sqrt(1/(Kf+1)) H_NLoS) with a
    rank-one ULA LoS component and unit-variance i.i.d. Gaussian NLoS entries.
    One (AoA, AoD) pair is drawn per call, i.e. per link per trial.
    """
    kf = link.rician_linear
    aoa = rng.uniform(-np.pi / 2, np.pi / 2)
    aod = rng.uniform(-np.pi / 2, np.pi / 2)
    a_rx = steering_vector(rows, aoa)
    a_tx = steering_vector(cols, aod)
    h_los = np.exp(-2j * np.pi * link.distance_m / link.wavelength_m) * np.outer(
        a_rx, a_tx.conj()
    )
    h_nlos = (
        rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    ) / np.sqrt(2.0)
    h = np.sqrt(kf / (kf + 1.0)) * h_los + np.sqrt(1.0 / (kf + 1.0)) * h_nlos
    return np.sqrt(path_gain(link)) * h


@dataclass(frozen=True)
class ChannelSet:
    """All channel draws for one trial.

    h_tx[b][l]: surface b <- AP l, R_b x N_a
    h_rx[b][k]: user k <- surface b, M x R_b
    h_direct[l][k]: user k <- AP l, M x N_a
    """

    h_tx: tuple
    h_rx: tuple
    h_direct: tuple
    include_direct: bool = True

    @property
    def num_surfaces(self) -> int:
        return len(self.h_tx)

    @property
    def num_aps(self) -> int:
        return len(self.h_direct)

    @property
    def num_users(self) -> int:
        return len(self.h_direct[0])

    def h_tx_bar(self, b: int) -> np.ndarray:
        """Aggregated AP-to-surface channel [H_TX,1 ... H_TX,L], R_b x N_t."""
        return np.hstack(self.h_tx[b])

    def h_bar_direct(self, k: int) -> np.ndarray:
        """Concatenated direct channel to user k (zeros if direct disabled)."""
        blocks = [self.h_direct[l][k] for l in range(self.num_aps)]
        out = np.hstack(blocks)
        if not self.include_direct:
            return np.zeros_like(out)
        return out


def draw_channel_set(
    num_aps: int,
    num_users: int,
    user_antennas: int,
    ap_antennas: int,
    surface_sizes: list[int],
    links: dict[LinkKind, LinkSpec],
    master_seed: int,
    trial: int,
    include_direct: bool = True,
) -> ChannelSet:
    """Draw every channel matrix for one trial from per-link Philox streams.

    Stream indices are assigned in a fixed order (all AP-surface links, then
    all surface-user links, then all direct links) so (master seed, trial,
    link) fully determines every draw.
    """
    stream = 0
    h_tx = []
    for r_b in surface_sizes:
        per_ap = []
        for _ in range(num_aps):
            rng = stream_rng(master_seed, trial, stream)
            per_ap.append(draw_channel(r_b, ap_antennas, links[LinkKind.AP_TO_SURFACE], rng))
            stream += 1
        h_tx.append(tuple(per_ap))
    h_rx = []
    for r_b in surface_sizes:
        per_user = []
        for _ in range(num_users):
            rng = stream_rng(master_seed, trial, stream)
            per_user.append(
                draw_channel(user_antennas, r_b, links[LinkKind.SURFACE_TO_USER], rng)
            )
            stream += 1
        h_rx.append(tuple(per_user))
    h_direct = []
    for _ in range(num_aps):
        per_user = []
        for _ in range(num_users):
            rng = stream_rng(master_seed, trial, stream)
            per_user.append(
                draw_channel(user_antennas, ap_antennas, links[LinkKind.AP_TO_USER], rng)
            )
            stream += 1
        h_direct.append(tuple(per_user))
    return ChannelSet(
        h_tx=tuple(h_tx),
        h_rx=tuple(h_rx),
        h_direct=tuple(h_direct),
        include_direct=include_direct,
    )


def assemble_equivalent(channels: ChannelSet, thetas: list, k: int) -> np.ndarray:
    """Equivalent channel E_k = [E_1k ... E_Lk], with
    E_lk = H_lk (if direct) + sum_b H_RX,k^(b) Theta^(b) H_TX,l^(b)."""
    if len(thetas) != channels.num_surfaces:
        raise ValidationError(
            f"expected {channels.num_surfaces} scattering matrices, got {len(thetas)}"
        )
    blocks = []
    for l in range(channels.num_aps):
        e_lk = (
            channels.h_direct[l][k].copy()
            if channels.include_direct
            else np.zeros_like(channels.h_direct[l][k])
        )
        for b, theta in enumerate(thetas):
            theta_m = getattr(theta, "theta", theta)
            if theta_m.shape[0] != channels.h_tx[b][l].shape[0]:
                raise ValidationError(
                    f"surface {b}: scattering matrix size {theta_m.shape[0]} does not "
                    f"match {channels.h_tx[b][l].shape[0]} elements"
                )
            e_lk = e_lk + channels.h_rx[b][k] @ theta_m @ channels.h_tx[b][l]
        blocks.append(e_lk)
    return np.hstack(blocks)


def slice_group(h_rx: np.ndarray, theta: np.ndarray, h_tx: np.ndarray, g: int, group_size: int):
    """Contiguous group-g slices (H_RX^(g), Theta_g, H_TX^(g)), g 1-based."""
    r = theta.shape[0]
    if r % group_size != 0:
        raise ConfigError(f"surface size {r} not divisible by group size {group_size}")
    n_groups = r // group_size
    if not 1 <= g <= n_groups:
        raise ValidationError(f"group index {g} outside 1..{n_groups}")
    lo = (g - 1) * group_size
    hi = g * group_size
    return h_rx[:, lo:hi], theta[lo:hi, lo:hi], h_tx[lo:hi, :]
