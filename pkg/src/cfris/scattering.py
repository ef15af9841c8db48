"""Reciprocal scattering matrices for single-, group-, and fully-connected
surfaces, their closed-form sum-rate gradients, and Riemannian ascent on the
symmetric-unitary manifold.

Each group block is parameterized in Takagi form Theta_g = U_g U_g^T with
U_g unitary, which guarantees reciprocity (symmetry) and losslessness
(unitarity) by construction. Gradients follow the convention that the
first-order change of the objective is 2 Re tr(G^H dTheta); the chain rule
to the unitary factor is grad_U = (G + G^T) conj(U).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ValidationError
from .linalg import haar_unitary, qr_retract, real_inner

CONSTRAINT_TOL = 1e-9


class Connectivity(enum.Enum):
    SINGLE = "sc"
    GROUP = "gc"
    FULL = "fc"


@dataclass(frozen=True)
class Architecture:
    """Connectivity class of a surface plus its group size R_G."""

    kind: Connectivity
    group_size: int

    def __post_init__(self):
        if self.group_size < 1:
            raise ConfigError(f"group size must be >= 1, got {self.group_size}")
        if self.kind is Connectivity.SINGLE and self.group_size != 1:
            raise ConfigError("single-connected surfaces have group size 1")

    @classmethod
    def from_label(cls, label: str, elements: int) -> "Architecture":
        """Parse 'sc', 'fc', or 'gcN' against a surface of a given size."""
        label = label.lower()
        if label == "sc":
            arch = cls(Connectivity.SINGLE, 1)
        elif label == "fc":
            arch = cls(Connectivity.FULL, elements)
        elif label.startswith("gc"):
            try:
                size = int(label[2:])
            except ValueError:
                raise ConfigError(f"bad architecture label {label!r}") from None
            arch = cls(Connectivity.GROUP, size)
        else:
            raise ConfigError(f"unknown architecture label {label!r}")
        arch.check_elements(elements)
        return arch

    @property
    def label(self) -> str:
        if self.kind is Connectivity.SINGLE:
            return "sc"
        if self.kind is Connectivity.FULL:
            return "fc"
        return f"gc{self.group_size}"

    def check_elements(self, elements: int) -> None:
        if elements % self.group_size != 0:
            raise ConfigError(
                f"surface size {elements} not divisible by group size {self.group_size}"
            )
        if self.kind is Connectivity.FULL and self.group_size != elements:
            raise ConfigError(
                f"fully-connected surface of {elements} elements requires group "
                f"size {elements}, got {self.group_size}"
            )

    def num_groups(self, elements: int) -> int:
        self.check_elements(elements)
        return elements // self.group_size


def assemble_theta(factors) -> np.ndarray:
    """Block-diagonal symmetric unitary from per-group Takagi factors."""
    blocks = [u @ u.T for u in factors]
    size = sum(b.shape[0] for b in blocks)
    theta = np.zeros((size, size), dtype=np.complex128)
    lo = 0
    for b in blocks:
        hi = lo + b.shape[0]
        theta[lo:hi, lo:hi] = b
        lo = hi
    return theta


@dataclass(frozen=True)
class ScatteringState:
    """Per-surface scattering matrix with its Takagi factors."""

    surface_index: int
    architecture: Architecture
    factors: tuple
    theta: np.ndarray

    @property
    def elements(self) -> int:
        return self.theta.shape[0]

    def with_factors(self, factors) -> "ScatteringState":
        return replace(self, factors=tuple(factors), theta=assemble_theta(factors))


def init_scattering(
    arch: Architecture, elements: int, rng: np.random.Generator, surface_index: int = 0
) -> ScatteringState:
    """Independent Haar-random unitary factor per group."""
    n_groups = arch.num_groups(elements)
    factors = tuple(haar_unitary(arch.group_size, rng) for _ in range(n_groups))
    return ScatteringState(
        surface_index=surface_index,
        architecture=arch,
        factors=factors,
        theta=assemble_theta(factors),
    )


@dataclass(frozen=True)
class ViolationReport:
    symmetry: float
    unitarity: float
    structure: float

    @property
    def passed(self) -> bool:
        return max(self.symmetry, self.unitarity, self.structure) <= CONSTRAINT_TOL


def validate(theta: np.ndarray, arch: Architecture) -> ViolationReport:
    """Measure reciprocity, losslessness, and block-pattern deviations."""
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ValidationError(f"scattering matrix must be square, got {theta.shape}")
    r = theta.shape[0]
    symmetry = float(np.linalg.norm(theta - theta.T))
    unitarity = float(np.linalg.norm(theta.conj().T @ theta - np.eye(r)))
    mask = np.zeros((r, r), dtype=bool)
    size = arch.group_size
    for g in range(r // size):
        lo, hi = g * size, (g + 1) * size
        mask[lo:hi, lo:hi] = True
    structure = float(np.linalg.norm(theta[~mask]))
    return ViolationReport(symmetry=symmetry, unitarity=unitarity, structure=structure)


def theta_gradient(h_rx, h_tx_bar, e_list, v_list, y_list, z_list) -> np.ndarray:
    """Full-matrix gradient of the frozen-auxiliary surrogate w.r.t. Theta.

    grad = sum_k H_RX,k^H Y_k (I+Z_k) [V_k^H - Y_k^H E_k C] Hbar_TX^H
    with C = sum_k' V_k' V_k'^H; first-order change is 2 Re tr(G^H dTheta).
    """
    m = y_list[0].shape[0]
    c = sum(v @ v.conj().T for v in v_list)
    grad = None
    for hr, e, v, y, z in zip(h_rx, e_list, v_list, y_list, z_list):
        lead = hr.conj().T @ y @ (np.eye(m) + z)
        term = lead @ (v.conj().T - y.conj().T @ e @ c) @ h_tx_bar.conj().T
        grad = term if grad is None else grad + term
    return grad


def grad_theta_group(h_rx, h_tx_bar, e_list, v_list, y_list, z_list, g: int, group_size: int) -> np.ndarray:
    """Group-g block of the surrogate gradient, computed from the sliced
    channels directly (g is 1-based)."""
    lo = (g - 1) * group_size
    hi = g * group_size
    if hi > h_tx_bar.shape[0]:
        raise ValidationError(f"group {g} exceeds surface size {h_tx_bar.shape[0]}")
    h_rx_g = [hr[:, lo:hi] for hr in h_rx]
    h_tx_g = h_tx_bar[lo:hi, :]
    return theta_gradient(h_rx_g, h_tx_g, e_list, v_list, y_list, z_list)


def local_grad_theta_b(h_rx_b, h_tx_bar_b, h_bar_direct, theta_b, v_list, y_list, z_list) -> np.ndarray:
    """Local (per-surface) gradient under the weak-coupling approximation.

    Uses only the direct channel and the channels of surface b; with a single
    surface this equals the exact full-matrix gradient.
    """
    m = y_list[0].shape[0]
    c = sum(v @ v.conj().T for v in v_list)
    grad = None
    for hr, hbar, v, y, z in zip(h_rx_b, h_bar_direct, v_list, y_list, z_list):
        e_local = hbar + hr @ theta_b @ h_tx_bar_b
        lead = hr.conj().T @ y @ (np.eye(m) + z)
        term = lead @ (v.conj().T - y.conj().T @ e_local @ c) @ h_tx_bar_b.conj().T
        grad = term if grad is None else grad + term
    return grad


def decompose_B(channels, thetas, y_k, z_k, k: int) -> dict:
    """Exact per-surface-pair decomposition of B_k.

    Index 0 is the direct path; term (b, c) is E_k^(b)H Y (I+Z) Y^H E_k^(c),
    and the terms sum to the full B_k.
    """
    m = y_k.shape[0]
    e_terms = [channels.h_bar_direct(k)]
    for b, theta in enumerate(thetas):
        theta_m = getattr(theta, "theta", theta)
        e_terms.append(channels.h_rx[b][k] @ theta_m @ channels.h_tx_bar(b))
    core = y_k @ (np.eye(m) + z_k) @ y_k.conj().T
    out = {}
    for b, eb in enumerate(e_terms):
        for c, ec in enumerate(e_terms):
            out[(b, c)] = eb.conj().T @ core @ ec
    return out


def coupling_diagnostic(decomposition: dict) -> dict:
    """Off-diagonal coupling ratios ||B^(b,c)||_F / ||B^(b,b)||_F, b != c >= 1."""
    num_terms = int(np.sqrt(len(decomposition)))
    ratios = {}
    for b in range(1, num_terms):
        diag = np.linalg.norm(decomposition[(b, b)])
        for c in range(1, num_terms):
            if b == c:
                continue
            cross = np.linalg.norm(decomposition[(b, c)])
            ratios[(b, c)] = float(cross / diag) if diag > 0 else np.inf
    return ratios


def _skew(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x - x.conj().T)


@dataclass(frozen=True)
class AscentResult:
    state: ScatteringState
    objective: float
    iterations: int
    accepted_steps: int
    stalled: bool


def riemannian_ascent(
    state: ScatteringState,
    grad_fn,
    objective_fn,
    max_iters: int = 50,
    initial_step: float = 1.0,
    shrink: float = 0.5,
    slope: float = 1e-4,
    max_halvings: int = 40,
    grad_tol_per_element: float = 1e-6,
) -> AscentResult:
    """Armijo-backtracked Riemannian ascent on the Takagi factors.

    grad_fn(theta) returns the Euclidean surrogate gradient (full matrix);
    objective_fn(theta) returns the true sum-rate, on which acceptance is
    judged so the trace is monotone non-decreasing.
    """
    size = state.architecture.group_size
    grad_tol = grad_tol_per_element * state.elements
    factors = list(state.factors)
    theta = state.theta
    f_cur = objective_fn(theta)
    accepted = 0
    stalled = False
    it = 0
    for it in range(1, max_iters + 1):
        g_full = grad_fn(theta)
        directions = []
        norm2 = 0.0
        for gi, u in enumerate(factors):
            lo, hi = gi * size, (gi + 1) * size
            g_block = g_full[lo:hi, lo:hi]
            egrad_u = (g_block + g_block.T) @ u.conj()
            xi = u @ _skew(u.conj().T @ egrad_u)
            directions.append(xi)
            norm2 += real_inner(xi, xi)
        if np.sqrt(norm2) < grad_tol:
            break
        t = initial_step
        improved = False
        for _ in range(max_halvings):
            trial_factors = [qr_retract(u + t * xi) for u, xi in zip(factors, directions)]
            trial_theta = assemble_theta(trial_factors)
            f_trial = objective_fn(trial_theta)
            if f_trial >= f_cur + slope * t * norm2:
                factors = trial_factors
                theta = trial_theta
                f_cur = f_trial
                accepted += 1
                improved = True
                break
            t *= shrink
        if not improved:
            stalled = True
            break
    new_state = state.with_factors(factors)
    return AscentResult(
        state=new_state,
        objective=f_cur,
        iterations=it,
        accepted_steps=accepted,
        stalled=stalled,
    )
