"""Brute-force realization of the independent-oscillator heat bath.

The continuum memory kernel is discretized into N explicit oscillators with
weights chosen so the discrete cosine sum converges to the memory function;
the coupled classical system (particle + bath, bilinear coupling through
(q_j - x)^2) is then integrated symplectically from thermal initial data.
This provides an independent check of the fluctuation-dissipation structure:
the force on a frozen particle must satisfy <F(t)F(0)> = kT mu(t), and the
free-particle ensemble MSD must match the quadrature route.

The discrete bath is periodic: all comparisons are only meaningful below the
recurrence horizon t_rec = 2 pi / (frequency spacing).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import GridError, InsufficientStatisticsError, StepSizeError
from .kernels import MemoryKernel
from .motion import Trajectory
from .response import ParticleModel

# Symplectic step chosen against the fastest bath mode.
_DT_FACTOR = 0.05
_DRIFT_LIMIT = 1.0e-4

_DUMP_MAGIC = b"QLEB"
_DUMP_VERSION = 1


@dataclass(frozen=True)
class BathOscillator:
    """One bath mode: mass m_j, frequency omega_j, weight c_j = m_j omega_j^2."""

    m_j: float
    omega_j: float

    def __post_init__(self):
        if not (self.m_j > 0 and math.isfinite(self.m_j)):
            raise ValueError("bath oscillator mass must be positive and finite")
        if not (self.omega_j > 0 and math.isfinite(self.omega_j)):
            raise ValueError("bath oscillator frequency must be positive and finite")
        if not math.isfinite(self.m_j * self.omega_j ** 2):
            raise ValueError("bath oscillator weight m_j omega_j^2 must be finite")

    @property
    def weight(self) -> float:
        return self.m_j * self.omega_j ** 2


def discretize_bath(kernel: MemoryKernel, N: int, omega_max: float) -> list:
    """Uniform-frequency bath with weights m_j omega_j^2 = (2/pi) Re mu(omega_j) dw.

    Midpoint nodes omega_j = (j - 1/2) dw, j = 1..N, dw = omega_max / N; the
    uniform grid makes the recurrence time 2 pi/dw sharp.  omega_max must sit
    well beyond the kernel's support scale (>= 10 kernel.scale).
    """
    if not (isinstance(N, (int, np.integer)) and N >= 2):
        raise GridError("bath discretization needs N >= 2")
    if not (omega_max > 0 and math.isfinite(omega_max)):
        raise GridError("omega_max must be positive and finite")
    if omega_max < 10.0 * kernel.scale:
        raise GridError(
            f"omega_max = {omega_max:.6g} does not cover the kernel support "
            f"(need >= 10 * kernel scale = {10.0 * kernel.scale:.6g})")
    dw = omega_max / N
    nodes = (np.arange(1, N + 1) - 0.5) * dw
    re_mu = np.asarray(kernel.re_mu_real_axis(nodes), dtype=float)
    weights = (2.0 / math.pi) * re_mu * dw
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise ValueError(
            "kernel weight (2/pi) Re mu_tilde must be positive and finite at "
            "every grid node; this kernel cannot be discretized on (0, omega_max]")
    masses = weights / nodes ** 2
    return [BathOscillator(m_j=float(m), omega_j=float(w))
            for m, w in zip(masses, nodes)]


def _bath_arrays(oscillators):
    if len(oscillators) < 1:
        raise ValueError("need at least one bath oscillator")
    m = np.array([o.m_j for o in oscillators], dtype=float)
    w = np.array([o.omega_j for o in oscillators], dtype=float)
    return m, w, m * w ** 2


def recurrence_time(oscillators) -> float:
    """Poincare recurrence horizon 2 pi / (frequency spacing) of the bath."""
    _, w, _ = _bath_arrays(oscillators)
    if w.size < 2:
        return math.inf
    dw = float(np.mean(np.diff(np.sort(w))))
    if dw <= 0:
        raise ValueError("bath frequencies must be distinct")
    return 2.0 * math.pi / dw


def reconstructed_memory(oscillators, t):
    """Discrete memory function sum_j c_j cos(omega_j t) for t >= 0."""
    _, w, c = _bath_arrays(oscillators)
    t_arr = np.asarray(t, dtype=float)
    val = np.cos(np.multiply.outer(t_arr, w)) @ c
    return float(val) if t_arr.ndim == 0 else val


def reconstructed_mu_tilde(oscillators, z: complex) -> complex:
    """Discrete transform sum_j c_j i z / (z^2 - omega_j^2), Im z > 0."""
    z = complex(z)
    if not (z.imag > 0):
        raise ValueError("reconstructed mu_tilde needs Im z > 0 "
                         "(the discrete sum has poles on the real axis)")
    _, w, c = _bath_arrays(oscillators)
    return complex(np.sum(c * 1j * z / (z * z - w ** 2)))


@dataclass(frozen=True)
class Ensemble:
    """Particle trajectories from a thermal bath ensemble.

    x and v have shape (n_traj, n_times).  force is present only for
    frozen-particle runs and holds the bath force on the clamped particle.
    """

    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    seed: int
    N_bath: int
    T: float
    force: np.ndarray | None = None
    k_B: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if x.ndim != 2 or v.shape != x.shape or t.shape != (x.shape[1],):
            raise ValueError("x and v must be (n_traj, n_times) matching times")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def n_traj(self) -> int:
        return self.x.shape[0]

    @property
    def trajectories(self) -> list:
        """Per-realization views as Trajectory records (shared time grid)."""
        return [Trajectory(times=self.times, x=self.x[i], v=self.v[i])
                for i in range(self.n_traj)]


def _check_time_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise GridError("time grid must be 1-D with at least two points")
    if not np.all(np.isfinite(t)) or t[0] < 0:
        raise GridError("time grid must be finite and nonnegative")
    if not np.all(np.diff(t) > 0):
        raise GridError("time grid must be strictly increasing")
    return t


def simulate_classical_io(oscillators, model: ParticleModel, T: float, t_grid,
                          n_traj: int, seed: int, force=None,
                          freeze_particle: bool = False,
                          x0: float = 0.0, v0: float | None = None) -> Ensemble:
    """Integrate the coupled particle + bath system from thermal initial data.

    Bath coordinates start thermally distributed around the shifted
    equilibrium q_j = x(0) (no initial slip force); the particle velocity is
    drawn from its Maxwell distribution unless v0 overrides it.  Integration
    is velocity-Verlet with a step of 0.05 / max(omega_j); a full-system
    energy drift beyond 1e-4 relative aborts the run.

    freeze_particle clamps x at x0 and evolves the bath exactly (each mode is
    then free), recording the bath force on the particle in Ensemble.force.
    Identical seeds give bit-identical ensembles; each trajectory uses an
    independent child stream of the seed, so the result does not depend on
    execution order.
    """
    m, w, c = _bath_arrays(oscillators)
    t = _check_time_grid(t_grid)
    if not (T >= 0 and math.isfinite(T)):
        raise ValueError("temperature must be >= 0 and finite")
    if not (isinstance(n_traj, (int, np.integer)) and n_traj >= 1):
        raise ValueError("n_traj must be a positive integer")
    ext = None
    if force is not None:
        ext = force.f if hasattr(force, "f") else force
        if not callable(ext):
            raise TypeError("force must be callable or have a callable .f")

    kT = model.constants.k_B * T
    M, K = model.M, model.K
    N = len(oscillators)
    sigma_v = math.sqrt(kT / M)
    sigma_q = np.sqrt(kT / m) / w          # spread of q_j - x(0)
    sigma_p = np.sqrt(m * kT)

    streams = np.random.SeedSequence(seed).spawn(n_traj)
    y0 = np.empty((n_traj, N))             # q_j - x0 at t = 0
    u0 = np.empty((n_traj, N))             # bath velocities
    v_init = np.empty(n_traj)
    for i in range(n_traj):
        rng = np.random.default_rng(streams[i])
        if not freeze_particle:
            v_init[i] = rng.normal(0.0, sigma_v)
        y0[i] = rng.normal(0.0, sigma_q)
        u0[i] = rng.normal(0.0, sigma_p) / m

    if freeze_particle:
        # Clamped particle: every bath mode evolves freely and the force
        # F(t) = sum_j c_j (q_j(t) - x0) is available in closed form.
        cos_wt = np.cos(np.multiply.outer(t, w))       # (n_times, N)
        sin_wt = np.sin(np.multiply.outer(t, w))
        amp_cos = y0 * c                               # (n_traj, N)
        amp_sin = (u0 / w) * c
        F = amp_cos @ cos_wt.T + amp_sin @ sin_wt.T    # (n_traj, n_times)
        x_out = np.full((n_traj, t.size), float(x0))
        v_out = np.zeros((n_traj, t.size))
        return Ensemble(times=t, x=x_out, v=v_out, seed=int(seed),
                        N_bath=N, T=T, force=F, k_B=model.constants.k_B)

    if v0 is not None:
        v_init[:] = float(v0)

    x = np.full(n_traj, float(x0))
    v = v_init.copy()
    q = y0 + x0
    u = u0
    w2 = w ** 2
    c_row = c[np.newaxis, :]

    def accel(time_now, x_now, q_now):
        d = q_now - x_now[:, np.newaxis]
        ax = (d @ c - K * x_now) / M
        if ext is not None:
            ax = ax + ext(time_now) / M
        aq = -w2 * d
        return ax, aq

    def energy(x_now, v_now, q_now, u_now):
        d = q_now - x_now[:, np.newaxis]
        return (0.5 * M * v_now ** 2 + 0.5 * K * x_now ** 2
                + 0.5 * (u_now ** 2) @ m + 0.5 * (d ** 2) @ c)

    E0 = energy(x, v, q, u)
    drift_scale = np.maximum(np.abs(E0), 1.0e-300)

    x_out = np.empty((n_traj, t.size))
    v_out = np.empty((n_traj, t.size))
    dt_target = _DT_FACTOR / float(w.max())

    time_now = 0.0
    ax, aq = accel(time_now, x, q)
    save_idx = 0
    if t[0] == 0.0:
        x_out[:, 0] = x
        v_out[:, 0] = v
        save_idx = 1
    segments = np.concatenate(([0.0], t)) if t[0] > 0.0 else t
    for t_lo, t_hi in zip(segments[:-1], segments[1:]):
        span = t_hi - t_lo
        n_sub = max(1, int(math.ceil(span / dt_target)))
        h = span / n_sub
        for j in range(n_sub):
            v_half = v + 0.5 * h * ax
            u_half = u + 0.5 * h * aq
            x = x + h * v_half
            q = q + h * u_half
            time_now = t_lo + (j + 1) * h
            ax, aq = accel(time_now, x, q)
            v = v_half + 0.5 * h * ax
            u = u_half + 0.5 * h * aq
        # External drives do work on the system; the conservation guard only
        # applies to the autonomous ensemble.
        if ext is None:
            drift = np.max(np.abs(energy(x, v, q, u) - E0) / drift_scale)
            if drift > _DRIFT_LIMIT:
                raise StepSizeError(
                    f"step too large: relative energy drift {drift:.3e} "
                    f"exceeds {_DRIFT_LIMIT:.0e} at t = {t_hi:.6g}")
        x_out[:, save_idx] = x
        v_out[:, save_idx] = v
        save_idx += 1
    return Ensemble(times=t, x=x_out, v=v_out, seed=int(seed),
                    N_bath=N, T=T, force=None, k_B=model.constants.k_B)


def ensemble_msd(ens: Ensemble):
    """Mean-square displacement (x(t) - x(0))^2 with its standard error."""
    disp2 = (ens.x - ens.x[:, :1]) ** 2
    mean = disp2.mean(axis=0)
    if ens.n_traj > 1:
        stderr = disp2.std(axis=0, ddof=1) / math.sqrt(ens.n_traj)
    else:
        stderr = np.zeros_like(mean)
    return ens.times.copy(), mean, stderr


@dataclass(frozen=True)
class FdtReport:
    """Comparison of <F(t)F(0)> against the classical prediction kT mu(t)."""

    times: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    target: np.ndarray
    max_dev_sigma: float
    max_rel_dev: float
    n_traj: int

    def to_json(self) -> dict:
        return {
            "n_traj": self.n_traj,
            "window": [float(self.times[0]), float(self.times[-1])],
            "max_dev_sigma": self.max_dev_sigma,
            "max_rel_dev": self.max_rel_dev,
        }


def force_autocorrelation_check(ens: Ensemble, oscillators,
                                kernel: MemoryKernel) -> FdtReport:
    """Check <F(t)F(0)> = kT mu(t) on a frozen-particle ensemble.

    The window is t <= 5 / kernel.scale (clipped to the grid) and must stay
    below the bath recurrence horizon.  Raises InsufficientStatisticsError
    when the t = 0 standard error exceeds 30% of the target, i.e. when the
    ensemble cannot resolve the deviations being tested.
    """
    if ens.force is None:
        raise ValueError("ensemble was not generated with freeze_particle=True; "
                         "the bath force is not observable")
    window_end = 5.0 / kernel.scale
    t_rec = recurrence_time(oscillators)
    if window_end > t_rec:
        raise GridError(
            f"comparison window 5/scale = {window_end:.6g} exceeds the bath "
            f"recurrence horizon t_rec = {t_rec:.6g}; refine the bath grid")
    mask = ens.times <= window_end
    if int(mask.sum()) < 2:
        raise GridError("time grid has fewer than two points inside the "
                        "comparison window t <= 5/scale")
    t = ens.times[mask]
    F0 = ens.force[:, 0]
    prod = ens.force[:, mask] * F0[:, np.newaxis]
    estimate = prod.mean(axis=0)
    if ens.n_traj < 2:
        raise InsufficientStatisticsError(
            "insufficient statistics: need at least two trajectories")
    stderr = prod.std(axis=0, ddof=1) / math.sqrt(ens.n_traj)
    kT = ens.k_B * ens.T
    target = kT * reconstructed_memory(oscillators, t)
    scale0 = abs(target[0]) if target[0] != 0 else 1.0
    if stderr[0] > 0.3 * scale0:
        raise InsufficientStatisticsError(
            f"insufficient statistics: standard error {stderr[0]:.3g} at t=0 "
            f"exceeds 30% of the target {target[0]:.3g}")
    dev_sigma = np.abs(estimate - target) / np.where(stderr > 0, stderr, np.inf)
    rel_dev = np.abs(estimate - target) / scale0
    return FdtReport(times=t, estimate=estimate, stderr=stderr, target=target,
                     max_dev_sigma=float(dev_sigma.max()),
                     max_rel_dev=float(rel_dev.max()), n_traj=ens.n_traj)


def dump_ensemble(ens: Ensemble, path) -> None:
    """Write the raw trajectories in a documented binary layout.

    Little-endian throughout: magic b"QLEB", uint32 version, uint32 n_traj,
    uint32 n_times, uint32 N_bath, float64 dt, float64 T, uint64 seed,
    then x and v as row-major float64 arrays of shape (n_traj, n_times).
    Requires a uniform time grid (dt is stored in the header).
    """
    dts = np.diff(ens.times)
    if not np.allclose(dts, dts[0], rtol=1.0e-9, atol=0.0):
        raise ValueError("binary dump requires a uniform time grid")
    header = _DUMP_MAGIC + struct.pack(
        "<IIIIddQ", _DUMP_VERSION, ens.n_traj, ens.times.size, ens.N_bath,
        float(dts[0]), float(ens.T), int(ens.seed))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(ens.x, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ens.v, dtype="<f8").tobytes())


def load_ensemble(path) -> Ensemble:
    """Read back a dump_ensemble file (inverse of dump_ensemble)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _DUMP_MAGIC:
            raise ValueError("not an ensemble dump (bad magic)")
        header_fmt = "<IIIIddQ"
        version, n_traj, n_times, n_bath, dt, T, seed = struct.unpack(
            header_fmt, fh.read(struct.calcsize(header_fmt)))
        if version != _DUMP_VERSION:
            raise ValueError(f"unsupported dump version {version}")
        count = n_traj * n_times
        x = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(n_traj, n_times)
        v = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(n_traj, n_times)
    times = dt * np.arange(n_times)
    return Ensemble(times=times, x=x.copy(), v=v.copy(), seed=int(seed),
                    N_bath=int(n_bath), T=float(T))
