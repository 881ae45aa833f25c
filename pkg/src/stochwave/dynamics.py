"""Time integration of the spectral Galerkin system and per-path energy diagnostics.

The modal coefficients ``(a, b)`` of displacement and velocity satisfy, per
mode j,

    da_j = b_j dt
    db_j = ( -mu_j a_j - (damping(v), e_j) + (source(u), e_j) ) dt
           + eps (sigma(t) dW, e_j)

where damping is the odd power map of the velocity (optionally its Yosida
regularization) and source the odd power map of the displacement (optionally
gradient-norm truncated).  One step of the integrator is semi-implicit
Euler-Maruyama: the stiff linear wave part is implicit (a per-mode 2x2
solve), the monotone damping and the source are explicit at the current
state, and the noise enters by its left-point projection.  This is
unconditionally stable on the linear part and needs no nonlinear solves.

Each path records the energy series and the left-endpoint Riemann sums of
every integral appearing in the velocity energy identity

    |grad u|^2 + |u_t|^2 + 2 int (damping(u_s), u_s)
        - 2 int (source(u), u_s)
    = |grad u_0|^2 + |u_1|^2 + 2 int (u_s, eps sigma dW)
        + eps^2 sum_i lambda_i int int e_i^2 sigma^2,

whose discrete residual is the module's central correctness check: it
vanishes under dt refinement at order one for eps = 0 and at order one half
in the stochastic case.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .basis import SpectralBasis
from .nonlinear import CutoffLevel, Exponents, cutoff_weight, odd_power, resolvent
from .noise import NoiseSpec, ito_correction_rate, amplitude_field, path_rng

__all__ = [
    "SimConfig",
    "ModalState",
    "StopInfo",
    "TrajectoryRecord",
    "ResidualReport",
    "drift",
    "step",
    "simulate_path",
    "energy_identity_residual",
    "stopping_time",
    "TRAJECTORY_COLUMNS",
]

TRAJECTORY_COLUMNS = (
    "t",
    "v_l2_sq",
    "grad_u_l2_sq",
    "u_lp_p",
    "v_lq_q",
    "inner_uv",
    "e_total",
    "e_signed",
    "cum_damping_work",
    "cum_source_work",
    "cum_noise_work",
    "cum_ito",
)

STATUS_COMPLETED = "completed"
STATUS_THRESHOLD = "threshold_crossed"
STATUS_NONFINITE = "nonfinite"


@dataclass(frozen=True)
class SimConfig:
    """Full description of one simulation: discretization, physics, noise, data.

    ``cutoff`` of None means the raw source term; ``yosida_lam`` of None means
    the exact damping map.  The default blow-up threshold on the gradient norm
    is high enough that spectral truncation error is irrelevant by the time
    it trips.
    """

    basis: SpectralBasis
    exponents: Exponents
    noise: NoiseSpec
    u0: np.ndarray
    u1: np.ndarray
    dt: float
    T: float
    cutoff: CutoffLevel | None = None
    yosida_lam: float | None = None
    blowup_threshold: float = 1.0e6

    def __post_init__(self):
        u0 = np.asarray(self.u0, dtype=float)
        u1 = np.asarray(self.u1, dtype=float)
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "u1", u1)
        m = self.basis.m
        if u0.shape != (m,) or u1.shape != (m,):
            raise ValueError(f"initial data must be modal vectors of length {m}")
        if not (np.all(np.isfinite(u0)) and np.all(np.isfinite(u1))):
            raise ValueError("initial data must be finite")
        if self.exponents.d != self.basis.d:
            raise ValueError(
                f"exponent condition checked for d={self.exponents.d} "
                f"but the basis is {self.basis.d}-dimensional"
            )
        if self.noise.lam.shape[0] != m:
            raise ValueError("noise spectrum length does not match the basis")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        if not self.blowup_threshold > 0:
            raise ValueError(f"blow-up threshold must be positive, got {self.blowup_threshold}")
        if self.yosida_lam is not None and not self.yosida_lam > 0:
            raise ValueError(f"yosida_lam must be positive, got {self.yosida_lam}")
        dt_cap = 1.0 / math.sqrt(float(self.basis.mu[-1]))
        if self.dt > dt_cap:
            warnings.warn(
                f"dt={self.dt:g} exceeds the resolution cap 1/sqrt(mu_max)={dt_cap:g}; "
                "the linear part stays stable but nonlinear terms may be underresolved",
                stacklevel=2,
            )

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.T / self.dt)))


@dataclass
class ModalState:
    """Time and the modal coefficient vectors of displacement and velocity."""

    t: float
    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class StopInfo:
    """How a trajectory ended: ran to the horizon, hit the gradient-norm
    threshold, or produced a non-finite state."""

    status: str
    time: float
    step_index: int


@dataclass
class TrajectoryRecord:
    """Recorded series of one path, one row per recorded grid time.

    ``aligned_rows`` counts the rows at stride-aligned times; a threshold
    crossing detected off stride appends one extra final row so the crossing
    state itself is preserved.
    """

    t: np.ndarray
    series: dict[str, np.ndarray]
    stop: StopInfo
    seed: int
    path_index: int
    dt: float
    record_stride: int
    aligned_rows: int
    q: float = 2.0
    p: float = 4.0

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        return self.series[name]

    @property
    def max_e_total(self) -> float:
        n = self.n_live_rows
        return float(np.max(self.series["e_total"][:n])) if n else math.nan

    @property
    def n_live_rows(self) -> int:
        """Aligned rows strictly before the stop time; all of them for a completed path."""
        if self.stop.status == STATUS_COMPLETED:
            return self.aligned_rows
        return int(np.searchsorted(self.t[: self.aligned_rows], self.stop.time, side="left"))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("# stochwave trajectory v1\n")
            fh.write(
                f"# seed={self.seed} path_index={self.path_index} dt={self.dt!r} "
                f"record_stride={self.record_stride} aligned_rows={self.aligned_rows} "
                f"q={self.q!r} p={self.p!r} "
                f"stop_status={self.stop.status} stop_time={self.stop.time!r} "
                f"stop_step={self.stop.step_index}\n"
            )
            fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
            cols = [self.column(name) for name in TRAJECTORY_COLUMNS]
            for row in zip(*cols):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_trajectory_csv(path) -> TrajectoryRecord:
    """Read back a trajectory written by :meth:`TrajectoryRecord.to_csv`."""
    with open(path) as fh:
        fh.readline()
        meta_line = fh.readline().lstrip("# ").strip()
        meta = dict(item.split("=", 1) for item in meta_line.split())
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if tuple(header) != TRAJECTORY_COLUMNS:
        raise ValueError(f"unexpected trajectory columns in {path}")
    if data.size == 0:
        data = data.reshape(0, len(TRAJECTORY_COLUMNS))
    series = {name: data[:, j].copy() for j, name in enumerate(TRAJECTORY_COLUMNS) if j > 0}
    stop = StopInfo(
        status=meta["stop_status"],
        time=float(meta["stop_time"]),
        step_index=int(meta["stop_step"]),
    )
    return TrajectoryRecord(
        t=data[:, 0].copy(),
        series=series,
        stop=stop,
        seed=int(meta["seed"]),
        path_index=int(meta["path_index"]),
        dt=float(meta["dt"]),
        record_stride=int(meta["record_stride"]),
        aligned_rows=int(meta["aligned_rows"]),
        q=float(meta["q"]),
        p=float(meta["p"]),
    )


def _odd_power_fn(expnt: float):
    """Pointwise ``|x|^(expnt-2) x`` with fast paths for small integer exponents."""
    if expnt == 2.0:
        return lambda v: v
    if expnt == 3.0:
        return lambda v: v * np.abs(v)
    if expnt == 4.0:
        return lambda v: v * v * v
    return lambda v: odd_power(v, expnt)


def _abs_power_fn(expnt: float):
    """Pointwise ``|x|^expnt`` with fast paths for small integer exponents."""
    if expnt == 2.0:
        return lambda v: v * v
    if expnt == 3.0:
        return lambda v: np.abs(v) * v * v
    if expnt == 4.0:
        return lambda v: (v * v) * (v * v)
    return lambda v: np.abs(v) ** expnt


class _Kernel:
    """Precomputed arrays and closures for the per-step update of one path."""

    def __init__(self, cfg: SimConfig):
        basis = cfg.basis
        self.cfg = cfg
        self.m = basis.m
        self.mu = basis.mu
        self.dt = cfg.dt
        self.dtmu = cfg.dt * basis.mu
        self.denom = 1.0 / (1.0 + cfg.dt * cfg.dt * basis.mu)
        self.q = cfg.exponents.q
        self.p = cfg.exponents.p
        self.source_pow = _odd_power_fn(self.p)
        self.damping_pow = _odd_power_fn(self.q)
        self.abs_pow_p = _abs_power_fn(self.p)
        self.abs_pow_q = _abs_power_fn(self.q)
        self.linear_damping = self.q == 2.0 and cfg.yosida_lam is None
        self.cut_level = None if cfg.cutoff is None else cfg.cutoff.level
        self.threshold_sq = cfg.blowup_threshold**2

        self._E1d = None
        if basis.d == 1:
            E = basis._sines[0]  # sorted order coincides with index order in 1D
            w = basis.weights
            self._E1d = E
            self.to_grid = lambda c: c @ E
            self.project = lambda f: E @ (w * f)
        else:
            self.to_grid = basis.to_grid
            self.project = basis.to_coeffs
        self.weights = basis.weights

        spec = cfg.noise
        self.noise_active = spec.eps > 0 and bool(np.any(spec.lam > 0))
        self.kappa = spec.kappa
        if self.noise_active:
            self.sqrt_lam_dt = np.sqrt(spec.lam * cfg.dt)
            sigma0 = amplitude_field(spec, 0.0, basis)
            self.eps_sigma0 = spec.eps * sigma0
            self._noise_pre = basis.weights * self.eps_sigma0
            self.ito_rate0 = ito_correction_rate(spec, 0.0, basis)
        else:
            self.ito_rate0 = 0.0

    def damping_coeffs(self, b: np.ndarray):
        """Modal damping projection and the damping work ``(damping(v), v)``."""
        if self.linear_damping:
            return b, float(b @ b)
        v_grid = self.to_grid(b)
        if self.cfg.yosida_lam is None:
            d_grid = self.damping_pow(v_grid)
        else:
            y = resolvent(v_grid, self.q, self.cfg.yosida_lam)
            d_grid = (v_grid - y) / self.cfg.yosida_lam
        coeffs = self.project(d_grid)
        return coeffs, float(coeffs @ b)

    def source_coeffs(self, a: np.ndarray, u_grid: np.ndarray, grad_sq: float):
        """Modal source projection, zero above the cutoff band."""
        if self.cut_level is not None:
            chi = cutoff_weight(math.sqrt(grad_sq), self.cut_level)
            if chi == 0.0:
                return np.zeros(self.m)
            return chi * self.project(self.source_pow(u_grid))
        return self.project(self.source_pow(u_grid))

    def noise_coeffs(self, t: float, rng: np.random.Generator, xi: np.ndarray | None = None):
        """Left-point modal projection of ``eps sigma(t) dW`` over one step."""
        if xi is None:
            xi = rng.standard_normal(self.m)
        inc = self.sqrt_lam_dt * xi
        decay = math.exp(-self.kappa * t) if self.kappa else 1.0
        if self._E1d is not None:
            return decay * (self._E1d @ (self._noise_pre * (inc @ self._E1d)))
        return decay * self.project(self.eps_sigma0 * self.to_grid(inc))

    def ito_rate(self, t: float) -> float:
        if not self.noise_active:
            return 0.0
        return self.ito_rate0 * math.exp(-2.0 * self.kappa * t)


def drift(state: ModalState, cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic drift ``(da, db)`` of the modal system at the given state."""
    krn = _Kernel(cfg)
    a = np.asarray(state.a, dtype=float)
    b = np.asarray(state.b, dtype=float)
    u_grid = krn.to_grid(a)
    grad_sq = float(krn.mu @ (a * a))
    s_coef = krn.source_coeffs(a, u_grid, grad_sq)
    d_coef, _ = krn.damping_coeffs(b)
    return b.copy(), -krn.mu * a - d_coef + s_coef


def step(state: ModalState, cfg: SimConfig, rng: np.random.Generator) -> ModalState:
    """One semi-implicit Euler-Maruyama step from the given state."""
    krn = _Kernel(cfg)
    a, b, _works = _advance(krn, np.asarray(state.a, float), np.asarray(state.b, float), state.t, rng)
    return ModalState(t=state.t + cfg.dt, a=a, b=b)


def _advance(krn: _Kernel, a, b, t, rng, grad_sq=None, xi=None):
    """Advance (a, b) by one step; returns the new state and the work terms
    (damping work, source work, noise work, ito rate) evaluated at the left point."""
    with np.errstate(over="ignore", invalid="ignore"):
        u_grid = krn.to_grid(a)
        if grad_sq is None:
            grad_sq = float(krn.mu @ (a * a))
        s_coef = krn.source_coeffs(a, u_grid, grad_sq)
        d_coef, damp_work = krn.damping_coeffs(b)
        rhs = b + krn.dt * (s_coef - d_coef) - krn.dtmu * a
        if krn.noise_active:
            n_coef = krn.noise_coeffs(t, rng, xi)
            rhs = rhs + n_coef
            noise_work = float(b @ n_coef)
        else:
            noise_work = 0.0
        b_new = rhs * krn.denom
        a_new = a + krn.dt * b_new
        src_work = float(s_coef @ b)
    return a_new, b_new, (damp_work, src_work, noise_work, krn.ito_rate(t))


def simulate_path(cfg: SimConfig, seed: int, path_index: int = 0, record_stride: int = 1) -> TrajectoryRecord:
    """Integrate one path to the horizon, a threshold crossing, or a non-finite state.

    Bit-reproducible from ``(seed, path_index)``: the path owns a
    counter-based generator keyed by both.  Diagnostics are recorded every
    ``record_stride`` steps; the cumulative integrals are accumulated every
    step regardless of the stride.
    """
    if record_stride < 1:
        raise ValueError(f"record_stride must be >= 1, got {record_stride}")
    krn = _Kernel(cfg)
    rng = path_rng(seed, path_index)
    basis = cfg.basis
    n_steps = cfg.n_steps
    dt = cfg.dt
    q, p = cfg.exponents.q, cfg.exponents.p

    n_rows = n_steps // record_stride + 2
    t_arr = np.empty(n_rows)
    data = {name: np.empty(n_rows) for name in TRAJECTORY_COLUMNS[1:]}

    a = cfg.u0.copy()
    b = cfg.u1.copy()
    cum_damp = cum_src = cum_noise = cum_ito = 0.0
    row = 0

    def record(k: int) -> bool:
        nonlocal row
        with np.errstate(over="ignore", invalid="ignore"):
            u_grid = krn.to_grid(a)
            v2 = float(b @ b)
            grad2 = float(krn.mu @ (a * a))
            ulp = float(krn.weights @ krn.abs_pow_p(u_grid))
            if krn.linear_damping:
                vlq = v2
            else:
                vlq = float(krn.weights @ krn.abs_pow_q(krn.to_grid(b)))
        if not (math.isfinite(v2) and math.isfinite(grad2) and math.isfinite(ulp)):
            return False
        t_arr[row] = k * dt
        data["v_l2_sq"][row] = v2
        data["grad_u_l2_sq"][row] = grad2
        data["u_lp_p"][row] = ulp
        data["v_lq_q"][row] = vlq
        data["inner_uv"][row] = float(a @ b)
        data["e_total"][row] = v2 + grad2 + 2.0 / p * ulp
        data["e_signed"][row] = 0.5 * v2 + 0.5 * grad2 - ulp / p
        data["cum_damping_work"][row] = cum_damp
        data["cum_source_work"][row] = cum_src
        data["cum_noise_work"][row] = cum_noise
        data["cum_ito"][row] = cum_ito
        row += 1
        return True

    record(0)
    stop = None
    aligned = 1
    xi_chunk = None
    chunk = 4096
    for k in range(n_steps):
        with np.errstate(over="ignore", invalid="ignore"):
            grad_sq = float(krn.mu @ (a * a))
            state_sq = grad_sq + float(b @ b)
        if not math.isfinite(state_sq):
            stop = StopInfo(STATUS_NONFINITE, k * dt, k)
            break
        if grad_sq >= krn.threshold_sq:
            if k % record_stride != 0:
                record(k)  # keep the crossing state as an extra, unaligned row
            stop = StopInfo(STATUS_THRESHOLD, k * dt, k)
            break
        if krn.noise_active:
            j = k % chunk
            if j == 0:
                xi_chunk = rng.standard_normal((min(chunk, n_steps - k), krn.m))
            xi = xi_chunk[j]
        else:
            xi = None
        a, b, works = _advance(krn, a, b, k * dt, rng, grad_sq=grad_sq, xi=xi)
        cum_damp += dt * works[0]
        cum_src += dt * works[1]
        cum_noise += works[2]
        cum_ito += dt * works[3]
        if (k + 1) % record_stride == 0 and record(k + 1):
            aligned = row

    if stop is None:
        stop = StopInfo(STATUS_COMPLETED, n_steps * dt, n_steps)
    if stop.status == STATUS_THRESHOLD and stop.step_index % record_stride == 0:
        aligned = row  # crossing landed on a stride point; all rows aligned

    t_arr = t_arr[:row].copy()
    series = {name: arr[:row].copy() for name, arr in data.items()}
    return TrajectoryRecord(
        t=t_arr,
        series=series,
        stop=stop,
        seed=int(seed),
        path_index=int(path_index),
        dt=dt,
        record_stride=record_stride,
        aligned_rows=aligned,
        q=q,
        p=p,
    )


@dataclass(frozen=True)
class ResidualReport:
    """Discrete energy-identity residual along a trajectory."""

    t: np.ndarray
    residual: np.ndarray
    max_abs: float


def energy_identity_residual(rec: TrajectoryRecord) -> ResidualReport:
    """Residual of the velocity energy identity along a recorded trajectory.

    Combines the recorded norm series with the left-endpoint cumulative
    integrals; the result is identically zero for the zero trajectory and
    shrinks under dt refinement at the scheme's order.
    """
    s = rec.series
    res = (
        s["grad_u_l2_sq"]
        + s["v_l2_sq"]
        + 2.0 * s["cum_damping_work"]
        - 2.0 * s["cum_source_work"]
        - s["grad_u_l2_sq"][0]
        - s["v_l2_sq"][0]
        - 2.0 * s["cum_noise_work"]
        - s["cum_ito"]
    )
    return ResidualReport(t=rec.t.copy(), residual=res, max_abs=float(np.max(np.abs(res))) if res.size else 0.0)


def stopping_time(rec: TrajectoryRecord, threshold: float) -> float | None:
    """First recorded time at which the gradient norm reaches the threshold, if any."""
    hits = np.nonzero(rec.series["grad_u_l2_sq"] >= threshold * threshold)[0]
    if hits.size == 0:
        return None
    return float(rec.t[hits[0]])
