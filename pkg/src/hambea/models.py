r"""Semilinear Hamiltonian PDE models on the circle.

Each model describes an evolution

    d/dt U = A U + B(U)

on a symmetric Fourier band, where A is mode-diagonal and skew with respect to
the model's energy pairing and B collects everything else: the pointwise
nonlinear force, and for the wave system also the zero-mode coupling that A
cannot carry (the zero wavenumber block of the first-order wave operator is a
Jordan block, so it is bundled with B to keep A diagonal).

The three concrete systems:

* ``wave``      two components (u, v) with d/dt u = v, d/dt v = u_xx - V'(u);
                energy space H^1 x L^2, Gevrey exponent q = 1.
* ``nls``       one complex component with d/dt u = i u_xx - i lam |u|^{2 sigma} u;
                energy space H^1, q = 2.
* ``nonlocal_nls``  d/dt u = i u_xx - i V'(rho) u with rho = int |u|^2 dx and
                V(r) = 1/r, guarded away from rho = 0; q = 2.

Hamiltonians, gradients and the structure operator J^{-1} are expressed
against a fixed real pairing per model: the H^1 x L^2 inner product for the
wave system (zero modes unweighted) and the real L^2 pairing Re int u conj(w)
for the Schroedinger systems.  With these choices J grad H = A U + B(U) holds
exactly on the discretized band, which the consistency checks below verify by
finite differences.

Pointwise forces are evaluated pseudospectrally: transform to the physical
grid, apply the force, transform back, restrict to the band.  Grids created
through ``make_grid`` are padded so that polynomial products of band-limited
states are alias-free on the band and energy quadratures are exact; entire
(non-polynomial) forces use a fixed generous padding instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.integrate import solve_ivp

from .errors import DomainError
from ._seriesops import (
    series_mul,
    series_power,
    series_reciprocal,
    series_sin,
)
from .spectral import (
    FourierGrid,
    FourierState,
    GevreyIndex,
    band_mask,
    gevrey_norm,
    l2_inner,
    mode_eigenvalues,
    project,
    weighted_inner,
    y_norm,
)

_SQRT_2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# wave potentials


class PolyPotential:
    """Polynomial potential V(u) = sum_j c_j u^j with integer 2 <= j <= 8."""

    def __init__(self, coeffs: dict[int, float]):
        clean: dict[int, float] = {}
        for j, c in coeffs.items():
            j = int(j)
            if not 2 <= j <= 8:
                raise ValueError("polynomial potential powers must lie in 2..8")
            if c != 0.0:
                clean[j] = float(c)
        self.coeffs = dict(sorted(clean.items()))

    @property
    def degree(self) -> int:
        return max(self.coeffs, default=2)

    def value(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros_like(u)
        for j, c in self.coeffs.items():
            out = out + c * u**j
        return out

    def derivative(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros_like(u)
        for j, c in self.coeffs.items():
            out = out + j * c * u ** (j - 1)
        return out

    def derivative_series(self, u: np.ndarray) -> np.ndarray:
        """V'(u) for a truncated power series u (leading axis = series order)."""
        out = np.zeros_like(u)
        for j, c in self.coeffs.items():
            out = out + j * c * series_power(u, j - 1)
        return out

    def params_dict(self) -> dict:
        return {"kind": "poly", "coeffs": {str(j): c for j, c in self.coeffs.items()}}


class SineGordonPotential:
    """V(u) = gamma (1 - cos u), V'(u) = gamma sin u."""

    def __init__(self, gamma: float = 1.0):
        self.gamma = float(gamma)

    degree = None  # entire, not polynomial

    def value(self, u: np.ndarray) -> np.ndarray:
        return self.gamma * (1.0 - np.cos(u))

    def derivative(self, u: np.ndarray) -> np.ndarray:
        return self.gamma * np.sin(u)

    def derivative_series(self, u: np.ndarray) -> np.ndarray:
        return self.gamma * series_sin(u)

    def params_dict(self) -> dict:
        return {"kind": "sine_gordon", "gamma": self.gamma}


# ---------------------------------------------------------------------------
# real charts


class RealChart:
    """Orthonormal real coordinates on a band, isometric for the model pairing.

    Wave states are constrained to real fields (conjugate-symmetric bands), so
    their chart runs over k >= 0 with the +/-k pair folded into one (re, im)
    dof pair; Schroedinger states use independent (re, im) pairs for every
    band mode.  Scales are square roots of the pairing weights, which makes
    the chart Euclidean: dot(z1, z2) = pairing(state1, state2).
    """

    def __init__(self, model: "PdeModel", grid: FourierGrid, m: float | None):
        self.model = model
        self.grid = grid
        self.m = m
        mask = band_mask(grid, m, model.q)
        K = grid.n_modes
        dofs: list[tuple[int, int, int]] = []  # (component, k, 0=re / 1=im)
        scales: list[float] = []
        w2 = model._pairing_weights(grid)
        if model.components == 2 or model.is_real_field:
            for c in range(model.components):
                for k in range(K + 1):
                    if not mask[K + k]:
                        continue
                    if k == 0:
                        dofs.append((c, 0, 0))
                        scales.append(math.sqrt(w2[c, K]))
                    else:
                        s = math.sqrt(2.0 * w2[c, K + k])
                        dofs.append((c, k, 0))
                        scales.append(s)
                        dofs.append((c, k, 1))
                        scales.append(s)
        else:
            for c in range(model.components):
                for k in range(-K, K + 1):
                    if not mask[K + k]:
                        continue
                    s = math.sqrt(w2[c, K + k])
                    dofs.append((c, k, 0))
                    scales.append(s)
                    dofs.append((c, k, 1))
                    scales.append(s)
        self.dofs = dofs
        self.scales = np.array(scales)
        self.dim = len(dofs)

    def to_real(self, state: FourierState) -> np.ndarray:
        K = self.grid.n_modes
        z = np.empty(self.dim)
        for i, (c, k, part) in enumerate(self.dofs):
            v = state.coeffs[c, K + k]
            z[i] = (v.real if part == 0 else v.imag) * self.scales[i]
        return z

    def from_real(self, z: np.ndarray) -> FourierState:
        K = self.grid.n_modes
        coeffs = np.zeros((self.model.components, self.grid.band_size), dtype=complex)
        folded = self.model.components == 2 or self.model.is_real_field
        for i, (c, k, part) in enumerate(self.dofs):
            v = z[i] / self.scales[i]
            coeffs[c, K + k] += v if part == 0 else 1j * v
        if folded:
            for c in range(self.model.components):
                for k in range(1, K + 1):
                    coeffs[c, K - k] = np.conj(coeffs[c, K + k])
        return FourierState(self.grid, coeffs)

    def basis_state(self, i: int) -> FourierState:
        e = np.zeros(self.dim)
        e[i] = 1.0
        return self.from_real(e)

    def symplectic_matrix(self) -> np.ndarray:
        """Matrix of J^{-1} in chart coordinates (also the 2-form matrix)."""
        cols = []
        for i in range(self.dim):
            cols.append(self.to_real(self.model.apply_J_inv(self.basis_state(i))))
        return np.column_stack(cols)


# ---------------------------------------------------------------------------
# model base class


class PdeModel:
    name: str
    q: float
    components: int
    is_real_field: bool = False

    # -- grids ---------------------------------------------------------

    def _product_degree(self) -> int | None:
        """Highest polynomial degree occurring in energy densities, or None."""
        raise NotImplementedError

    def make_grid(self, n_modes: int, n_phys: int | None = None) -> FourierGrid:
        """Band of half-width n_modes with alias-safe physical padding."""
        if n_phys is None:
            deg = self._product_degree()
            factor = 6 if deg is None else max(2, deg)
            n_phys = scipy.fft.next_fast_len(factor * n_modes + 1)
        return FourierGrid(n_modes, n_phys)

    def eigenvalues(self, grid: FourierGrid) -> np.ndarray:
        return mode_eigenvalues(grid, self.q)

    def project(self, state: FourierState, m: float | None) -> FourierState:
        return project(state, m, self.q)

    def gevrey_index(self, tau: float, ell: float) -> GevreyIndex:
        return GevreyIndex(tau, ell, self.q)

    # -- linear part ----------------------------------------------------

    def a_blocks(self, grid: FourierGrid) -> np.ndarray:
        """Per-mode matrices of A, shape (band_size, components, components)."""
        raise NotImplementedError

    def apply_A(self, state: FourierState) -> FourierState:
        blocks = self.a_blocks(state.grid)
        out = np.einsum("mij,jm->im", blocks, state.coeffs)
        return FourierState(state.grid, out)

    # -- nonlinearity ----------------------------------------------------

    def apply_B(self, state: FourierState, m: float | None = None) -> FourierState:
        """Band-projected nonlinearity P_m B(P_m U)."""
        raise NotImplementedError

    def force_series_coeffs(
        self, grid: FourierGrid, coeff_series: np.ndarray, m: float | None
    ) -> np.ndarray:
        """B composed with a truncated power series of states.

        coeff_series has shape (order+1, components, band_size); entry j is the
        j-th series coefficient.  Returns the series of B(P_m U(h)) restricted
        to the band of radius m, using the same pseudospectral path as apply_B
        order by order.
        """
        raise NotImplementedError

    # -- energy and structure --------------------------------------------

    def hamiltonian(self, state: FourierState) -> float:
        raise NotImplementedError

    def apply_J_inv(self, state: FourierState) -> FourierState:
        raise NotImplementedError

    def _pairing_weights(self, grid: FourierGrid) -> np.ndarray:
        """Squared per-mode weights of the model pairing, shape (c, band)."""
        raise NotImplementedError

    def pairing(self, a: FourierState, b: FourierState) -> float:
        """The real pairing against which J^{-1} and gradients are defined."""
        raise NotImplementedError

    def chart(self, grid: FourierGrid, m: float | None = None) -> RealChart:
        return RealChart(self, grid, m)

    def params_dict(self) -> dict:
        raise NotImplementedError

    # -- helpers shared by subclasses -------------------------------------

    def _masked(self, state: FourierState, m: float | None) -> FourierState:
        return state if m is None else self.project(state, m)


# ---------------------------------------------------------------------------
# wave


class WaveModel(PdeModel):
    """Semilinear wave system u_tt = u_xx - V'(u) as a first-order pair (u, v).

    A carries the nonzero modes of [[0, 1], [d_xx, 0]]; the zero-mode coupling
    (d/dt u_hat_0 = v_hat_0) rides with B, as does the force (0, -V'(u)).
    """

    name = "wave"
    q = 1.0
    components = 2
    is_real_field = True

    def __init__(self, potential: PolyPotential | SineGordonPotential):
        self.potential = potential

    def _product_degree(self) -> int | None:
        return self.potential.degree

    def a_blocks(self, grid: FourierGrid) -> np.ndarray:
        k = grid.wavenumbers.astype(float)
        blocks = np.zeros((grid.band_size, 2, 2), dtype=complex)
        nz = k != 0
        blocks[nz, 0, 1] = 1.0
        blocks[nz, 1, 0] = -(k[nz] ** 2)
        return blocks

    def apply_B(self, state: FourierState, m: float | None = None) -> FourierState:
        um = self._masked(state, m)
        K = um.grid.n_modes
        u_phys = um.grid.to_phys(um.coeffs[0]).real
        force = -self.potential.derivative(u_phys)
        out = np.zeros_like(um.coeffs)
        out[1] = um.grid.to_coeffs(force)
        out[0, K] = um.coeffs[1, K]  # zero-mode coupling from the Jordan block
        return self._masked(FourierState(um.grid, out), m)

    def force_series_coeffs(
        self, grid: FourierGrid, coeff_series: np.ndarray, m: float | None
    ) -> np.ndarray:
        mask = band_mask(grid, m, self.q)
        cs = coeff_series * mask
        K = grid.n_modes
        u_phys = grid.to_phys(cs[:, 0, :]).real.astype(complex)
        force = -self.potential.derivative_series(u_phys)
        out = np.zeros_like(cs)
        out[:, 1, :] = grid.to_coeffs(force)
        out[:, 0, K] = cs[:, 1, K]
        return out * mask

    def hamiltonian(self, state: FourierState) -> float:
        grid = state.grid
        k = grid.wavenumbers.astype(float)
        u_phys = grid.to_phys(state.coeffs[0]).real
        v_phys = grid.to_phys(state.coeffs[1]).real
        ux_phys = grid.to_phys(1j * k * state.coeffs[0]).real
        density = 0.5 * v_phys**2 + 0.5 * ux_phys**2 + self.potential.value(u_phys)
        return float(np.real(grid.quadrature(density)))

    def apply_J_inv(self, state: FourierState) -> FourierState:
        k = state.grid.wavenumbers.astype(float)
        div = np.maximum(1.0, k**2)
        out = np.empty_like(state.coeffs)
        out[0] = -state.coeffs[1] / div
        out[1] = state.coeffs[0]
        return FourierState(state.grid, out)

    def _pairing_weights(self, grid: FourierGrid) -> np.ndarray:
        k = grid.wavenumbers.astype(float)
        w2 = np.ones((2, grid.band_size))
        w2[0] = np.maximum(1.0, k**2)
        return w2

    def pairing(self, a: FourierState, b: FourierState) -> float:
        return float(np.real(weighted_inner(a, b, GevreyIndex(0.0, 0.0, 1.0))))

    def params_dict(self) -> dict:
        return {"name": self.name, "potential": self.potential.params_dict()}


# ---------------------------------------------------------------------------
# Schroedinger family


class _SchroedingerBase(PdeModel):
    q = 2.0
    components = 1

    def a_blocks(self, grid: FourierGrid) -> np.ndarray:
        k = grid.wavenumbers.astype(float)
        return (-1j * k**2).reshape(-1, 1, 1)

    def apply_J_inv(self, state: FourierState) -> FourierState:
        return FourierState(state.grid, 1j * state.coeffs)

    def _pairing_weights(self, grid: FourierGrid) -> np.ndarray:
        return np.ones((1, grid.band_size))

    def pairing(self, a: FourierState, b: FourierState) -> float:
        return float(np.real(l2_inner(a, b)))


class NlsModel(_SchroedingerBase):
    """Nonlinear Schroedinger i u_t = -u_xx + lam |u|^{2 sigma} u, integer sigma >= 1.

    sigma = 1 is the cubic equation.  lam = 0 degenerates to the free linear
    flow, which is handy as an exactly solvable reference.
    """

    name = "nls"

    def __init__(self, sigma: int = 1, lam: float = 1.0):
        if int(sigma) != sigma or sigma < 0:
            raise ValueError("sigma must be a nonnegative integer")
        self.sigma = int(sigma)
        self.lam = float(lam)

    def _product_degree(self) -> int | None:
        return 2 * self.sigma + 2

    def apply_B(self, state: FourierState, m: float | None = None) -> FourierState:
        um = self._masked(state, m)
        if self.lam == 0.0:
            return FourierState.zeros(um.grid, 1)
        u = um.grid.to_phys(um.coeffs[0])
        force = -1j * self.lam * np.abs(u) ** (2 * self.sigma) * u
        out = um.grid.to_coeffs(force)[np.newaxis, :]
        return self._masked(FourierState(um.grid, out), m)

    def force_series_coeffs(
        self, grid: FourierGrid, coeff_series: np.ndarray, m: float | None
    ) -> np.ndarray:
        mask = band_mask(grid, m, self.q)
        cs = coeff_series * mask
        if self.lam == 0.0:
            return np.zeros_like(cs)
        u = grid.to_phys(cs[:, 0, :])
        mod2 = series_mul(u, np.conj(u))
        force = -1j * self.lam * series_mul(series_power(mod2, self.sigma), u)
        out = grid.to_coeffs(force)[:, np.newaxis, :]
        return out * mask

    def hamiltonian(self, state: FourierState) -> float:
        grid = state.grid
        k = grid.wavenumbers.astype(float)
        u = grid.to_phys(state.coeffs[0])
        ux = grid.to_phys(1j * k * state.coeffs[0])
        density = 0.5 * np.abs(ux) ** 2
        if self.lam != 0.0:
            density = density + (0.5 * self.lam / (self.sigma + 1)) * np.abs(u) ** (
                2 * self.sigma + 2
            )
        return float(np.real(grid.quadrature(density)))

    def params_dict(self) -> dict:
        return {"name": self.name, "sigma": self.sigma, "lam": self.lam}


class NonlocalNlsModel(_SchroedingerBase):
    """Schroedinger flow driven by the total mass: i u_t = -u_xx + V'(rho) u.

    rho = int |u|^2 dx and V(r) = 1/r, so the force is smooth only away from
    rho = 0; evaluations below rho_min raise DomainError.
    """

    name = "nonlocal_nls"

    def __init__(self, rho_min: float = 1e-3):
        if rho_min <= 0.0:
            raise ValueError("rho_min must be positive")
        self.rho_min = float(rho_min)

    def _product_degree(self) -> int | None:
        return 2

    def _mass(self, coeffs: np.ndarray) -> float:
        return float(np.sum(np.abs(coeffs) ** 2))

    def apply_B(self, state: FourierState, m: float | None = None) -> FourierState:
        um = self._masked(state, m)
        rho = self._mass(um.coeffs)
        if rho < self.rho_min:
            raise DomainError(
                f"total mass {rho:.3e} below the admissible floor {self.rho_min:.3e}"
            )
        # V'(rho) = -1/rho^2, force = -i V'(rho) u
        out = (1j / rho**2) * um.coeffs
        return FourierState(um.grid, out)

    def force_series_coeffs(
        self, grid: FourierGrid, coeff_series: np.ndarray, m: float | None
    ) -> np.ndarray:
        mask = band_mask(grid, m, self.q)
        cs = coeff_series * mask
        order = cs.shape[0]
        rho = np.einsum("acm,bcm->ab", cs, np.conj(cs))
        rho_series = np.array(
            [sum(rho[a, j - a] for a in range(j + 1)) for j in range(order)]
        )
        if rho_series[0].real < self.rho_min:
            raise DomainError(
                f"total mass {rho_series[0].real:.3e} below the admissible floor "
                f"{self.rho_min:.3e}"
            )
        inv = series_reciprocal(rho_series)
        vprime = -series_mul(inv, inv)
        out = np.zeros_like(cs)
        for j in range(order):
            for a in range(j + 1):
                out[j] += -1j * vprime[a] * cs[j - a]
        return out * mask

    def hamiltonian(self, state: FourierState) -> float:
        grid = state.grid
        k = grid.wavenumbers.astype(float)
        ux = grid.to_phys(1j * k * state.coeffs[0])
        rho = self._mass(state.coeffs)
        if rho < self.rho_min:
            raise DomainError(
                f"total mass {rho:.3e} below the admissible floor {self.rho_min:.3e}"
            )
        return float(np.real(grid.quadrature(0.5 * np.abs(ux) ** 2))) + 0.5 / rho

    def params_dict(self) -> dict:
        return {"name": self.name, "rho_min": self.rho_min}


# ---------------------------------------------------------------------------
# factory


def make_model(name: str, params: dict | None = None) -> PdeModel:
    params = dict(params or {})
    if name == "wave":
        pot = params.get("potential", {"kind": "poly", "coeffs": {"2": 0.5}})
        kind = pot.get("kind", "poly")
        if kind == "poly":
            coeffs = {int(j): float(c) for j, c in pot.get("coeffs", {}).items()}
            potential = PolyPotential(coeffs)
        elif kind == "sine_gordon":
            potential = SineGordonPotential(float(pot.get("gamma", 1.0)))
        else:
            raise ValueError(f"unknown wave potential kind {kind!r}")
        return WaveModel(potential)
    if name == "nls":
        return NlsModel(int(params.get("sigma", 1)), float(params.get("lam", 1.0)))
    if name == "nonlocal_nls":
        return NonlocalNlsModel(float(params.get("rho_min", 1e-3)))
    raise ValueError(f"unknown model {name!r}")


# ---------------------------------------------------------------------------
# structure diagnostics


def _fd_gradient(func, chart: RealChart, z0: np.ndarray, eps: float) -> np.ndarray:
    """Fourth-order central gradient of a scalar function of chart coordinates."""
    g = np.empty(chart.dim)
    for i in range(chart.dim):
        e = np.zeros(chart.dim)
        e[i] = 1.0
        f = lambda t: func(chart.from_real(z0 + t * e))
        g[i] = (-f(2 * eps) + 8 * f(eps) - 8 * f(-eps) + f(-2 * eps)) / (12 * eps)
    return g


def fd_jacobian(func, chart: RealChart, U: FourierState, eps0: float = 1e-5) -> np.ndarray:
    """Fourth-order central Jacobian of a state map in chart coordinates."""
    z0 = chart.to_real(U)
    eps = eps0 * (1.0 + float(np.linalg.norm(z0)))
    cols = []
    for i in range(chart.dim):
        e = np.zeros(chart.dim)
        e[i] = 1.0
        fv = lambda t: chart.to_real(func(chart.from_real(z0 + t * e)))
        cols.append((-fv(2 * eps) + 8 * fv(eps) - 8 * fv(-eps) + fv(-2 * eps)) / (12 * eps))
    return np.column_stack(cols)


def check_h2_selfadjoint(
    model: PdeModel, U: FourierState, m: float | None = None, eps0: float = 1e-5
) -> float:
    """Relative asymmetry of J^{-1} DB(U) against the model pairing.

    The linearized nonlinearity must be self-adjoint after composing with the
    structure operator; this builds the chart matrix Omega * DB by finite
    differences and returns max|S - S^T| / max(1, max|S|).
    """
    chart = model.chart(U.grid, m)
    db = fd_jacobian(lambda s: model.apply_B(s, m), chart, U, eps0)
    s = chart.symplectic_matrix() @ db
    return float(np.max(np.abs(s - s.T)) / max(1.0, np.max(np.abs(s))))


def grad_H_consistency(
    model: PdeModel, U: FourierState, m: float | None = None, eps: float = 1e-4
) -> float:
    """Residual of the Hamiltonian identity J grad H = A U + B(U) on the band.

    grad H is assembled by finite differences of the energy along chart
    directions; the residual is measured in the pairing norm, relative to
    max(1, ||grad H||).
    """
    um = model.project(U, m) if m is not None else U
    chart = model.chart(U.grid, m)
    z0 = chart.to_real(um)
    h_eps = eps * (1.0 + float(np.linalg.norm(z0)))
    grad = _fd_gradient(model.hamiltonian, chart, z0, h_eps)
    field = model.apply_A(um) + model.apply_B(um, m)
    lhs = chart.to_real(model.apply_J_inv(field))
    return float(np.linalg.norm(lhs - grad) / max(1.0, np.linalg.norm(grad)))


def check_skew_A(model: PdeModel, U: FourierState) -> float:
    """|Re <A U, U>_Y| normalized by ||U||_Y^2 (zero for skew A)."""
    au = model.apply_A(U)
    idx = GevreyIndex(0.0, 0.0, model.q)
    num = abs(float(np.real(weighted_inner(au, U, idx))))
    den = max(1.0, y_norm(U, model.q) ** 2)
    return num / den


def reference_flow(
    model: PdeModel,
    U: FourierState,
    T: float,
    m: float | None = None,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> FourierState:
    """High-accuracy integration of the band-truncated system over [0, T]."""
    chart = model.chart(U.grid, m)
    z0 = chart.to_real(model.project(U, m) if m is not None else U)

    def rhs(_t, z):
        s = chart.from_real(z)
        f = model.apply_A(s) + model.apply_B(s, m)
        return chart.to_real(f)

    sol = solve_ivp(rhs, (0.0, T), z0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"reference integration failed: {sol.message}")
    return chart.from_real(sol.y[:, -1])


def measure_force_scale(
    model: PdeModel, states: list[FourierState], m: float | None = None
) -> float:
    """sup over the sample of ||U||_{Y_1} + ||B(U)||_Y (field-size constant)."""
    best = 0.0
    for s in states:
        val = gevrey_norm(s, GevreyIndex(0.0, 1.0, model.q)) + y_norm(
            model.apply_B(s, m), model.q
        )
        best = max(best, val)
    return best
