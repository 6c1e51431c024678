"""Numerical experiments: propagation, perturbation, collisions, resolution
of Gaussian data and spatial convergence.

A run is described by an :class:`ExperimentSpec`. :func:`run_experiment`
builds the initial data, marches it, tracks the wave crests and writes a
self-describing output directory::

    meta.json        parameters, grid, solver and integrator settings
    snapshots/       (x, zeta, u) CSVs at the snapshot times
    tracks/          one CSV per tracked crest (t, amplitude, position, speed)
    invariants.csv   t, E_h, I_h
    summary.json     amplitude and speed readings

Nothing time-dependent (wall clock, hostnames) is written, so repeated runs
produce identical files.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import io
from .errors import StepFailure
from .integrator import EvolveConfig, evolve
from .params import AbcdSystem, reduced_parameters
from .solitary import ProfileSolveConfig, SolitaryWave, solve_profile
from .spectral import (PeriodicGrid, WaveState, forward_transform, inverse_transform,
                       refine_maximum)

log = logging.getLogger(__name__)

KINDS = ("propagate", "perturb", "collide", "gaussian")
PERTURBATIONS = ("both", "zeta_only", "u_only")
NO_PEAK_LEVEL = 1e-14
SPEED_WINDOW = 10
TRACK_DROP_RATIO = 0.5


@dataclass(frozen=True)
class WaveSpec:
    """One solitary wave of the initial data.

    ``c_s`` is the (positive) profile speed, ``direction`` is +1 for a
    right-moving and -1 for a left-moving wave.
    """

    c_s: float
    center: float = 0.0
    direction: int = 1

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        if not self.c_s > 0:
            raise ValueError("c_s must be positive; use direction for left movers")

    @property
    def velocity(self) -> float:
        return self.direction * self.c_s


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    waves: tuple = ()
    amplitude_factor: float = 1.0
    perturbation: str = "both"
    gaussian: tuple | None = None  # (A, tau)
    gamma: float = 0.8
    eps_db: float = 0.0
    L: float = 256.0
    N: int = 4096
    dt: float = 6.25e-3
    t_final: float = 100.0
    record_every: int = 160
    snapshot_times: tuple = ()
    readout_times: tuple = ()
    solver_tolerance: float = 1e-12
    mpe_width: int = 6
    guess_width: float = 0.3
    stage_tolerance: float = 1e-13
    n_tracks: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.perturbation not in PERTURBATIONS:
            raise ValueError(f"perturbation must be one of {PERTURBATIONS}")
        object.__setattr__(self, "waves", tuple(
            w if isinstance(w, WaveSpec) else WaveSpec(*w) for w in self.waves))
        if self.kind == "gaussian":
            if self.gaussian is None or len(self.gaussian) != 2:
                raise ValueError("gaussian runs need gaussian=(A, tau)")
            if not self.gaussian[1] > 0:
                raise ValueError("tau must be positive")
        elif not self.waves:
            raise ValueError(f"{self.kind} runs need at least one wave")
        if self.kind == "collide" and len(self.waves) != 2:
            raise ValueError("collisions need exactly two waves")
        if self.kind == "perturb" and len(self.waves) != 1:
            raise ValueError("perturbation runs take a single wave")
        if self.kind != "perturb" and self.amplitude_factor != 1.0:
            raise ValueError("amplitude_factor only applies to perturbation runs")

    @property
    def grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.L, self.N)

    @property
    def system(self) -> AbcdSystem:
        return reduced_parameters(self.eps_db, self.gamma)[1]

    @property
    def tracks(self) -> int:
        if self.n_tracks is not None:
            return self.n_tracks
        return max(1, len(self.waves))

    def evolve_config(self) -> EvolveConfig:
        return EvolveConfig(dt=self.dt, t_final=self.t_final, record_every=self.record_every,
                            stage_tolerance=self.stage_tolerance)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["waves"] = [asdict(w) for w in self.waves]
        return d


# -- initial data ----------------------------------------------------------------

def _solve_wave(spec: ExperimentSpec, sys: AbcdSystem, grid: PeriodicGrid, w: WaveSpec) -> SolitaryWave:
    cfg = ProfileSolveConfig(grid=grid, c_s=w.velocity, tolerance=spec.solver_tolerance,
                             mpe_width=spec.mpe_width, guess_width=spec.guess_width)
    return solve_profile(cfg, sys)


def overlap(a, b) -> float:
    """Normalized mutual mass of two crests, <|a|, |b|> / (|a| |b|)."""
    a, b = np.abs(a), np.abs(b)
    den = math.sqrt(float(np.dot(a, a) * np.dot(b, b)))
    return float(np.dot(a, b)) / den if den > 0 else 0.0


def build_initial(spec: ExperimentSpec, sys: AbcdSystem | None = None,
                  grid: PeriodicGrid | None = None) -> tuple[WaveState, list[SolitaryWave]]:
    """Initial state of a run and the solitary waves it was built from."""
    sys = sys or spec.system
    grid = grid or spec.grid
    if spec.kind == "gaussian":
        A, tau = spec.gaussian
        g = A * np.exp(-tau * grid.x ** 2)
        return WaveState(g, g.copy()), []
    profiles = [_solve_wave(spec, sys, grid, w) for w in spec.waves]
    parts = []
    for w, prof in zip(spec.waves, profiles):
        z, u = prof.zeta, prof.u
        if w.center != 0.0:
            st = prof.state.translated(w.center, grid)
            z, u = st.zeta, st.u
        parts.append((z, u))
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            ov = overlap(parts[i][0], parts[j][0])
            if ov > 1e-10:
                warnings.warn(f"waves {i} and {j} overlap (normalized mutual mass {ov:.2e})",
                              stacklevel=2)
    zeta = np.zeros(grid.N)
    u = np.zeros(grid.N)
    for z, v in parts:
        zeta = zeta + z
        u = u + v
    if spec.kind == "perturb":
        A = spec.amplitude_factor
        if spec.perturbation in ("both", "zeta_only"):
            zeta = A * zeta
        if spec.perturbation in ("both", "u_only"):
            u = A * u
    return WaveState(zeta, u), profiles


# -- crest tracking ------------------------------------------------------------

@dataclass(frozen=True)
class WaveTrackRecord:
    t: float
    amplitude: float
    position: float
    speed_estimate: float | None = None


def _periodic_offset(x, x0, L):
    return (np.asarray(x) - x0 + L) % (2.0 * L) - L


def locate_peak(zeta, grid: PeriodicGrid, *, near: float | None = None,
                half_width: float | None = None, exclude: Sequence[float] = (),
                exclude_half_width: float | None = None, spectrum=None):
    """Tallest crest of ``zeta`` inside an optional window.

    Only nodal local maxima qualify, so the flank of a crest that lies in an
    excluded zone is never mistaken for a crest of its own. Returns
    ``(position, amplitude)`` with sub-grid accuracy, or ``None`` when no
    admissible crest rises above :data:`NO_PEAK_LEVEL`.
    """
    z = np.asarray(zeta, dtype=float)
    allowed = (z >= np.roll(z, 1)) & (z >= np.roll(z, -1))
    if near is not None and half_width is not None:
        allowed &= np.abs(_periodic_offset(grid.x, near, grid.L)) <= half_width
    if exclude_half_width is not None:
        for xe in exclude:
            allowed &= np.abs(_periodic_offset(grid.x, xe, grid.L)) > exclude_half_width
    if not np.any(allowed):
        return None
    masked = np.where(allowed, z, -np.inf)
    i = int(np.argmax(masked))
    if not masked[i] > NO_PEAK_LEVEL:
        return None
    x, amp = refine_maximum(z, grid, i, spectrum)
    x = float(_periodic_offset(x, 0.0, grid.L))
    return x, amp


def speed_from_history(records: Sequence[WaveTrackRecord], positions: Sequence[float]) -> float | None:
    """Least-squares slope of the unwrapped positions over the recent records."""
    n = min(len(records), SPEED_WINDOW)
    if n < 2:
        return None
    t = np.array([r.t for r in records[-n:]])
    x = np.asarray(positions[-n:])
    if np.ptp(t) == 0:
        return None
    return float(np.polyfit(t, x, 1)[0])


def track_peak(zeta, grid: PeriodicGrid, t: float,
               previous: Sequence[WaveTrackRecord] = ()) -> WaveTrackRecord | None:
    """Crest record of a single-crest snapshot; ``None`` for a flat field.

    ``previous`` holds earlier records of the same crest. The position is
    unwrapped against the last of them modulo 2L, and the speed estimate is
    the least-squares slope over the most recent records.
    """
    found = locate_peak(zeta, grid)
    if found is None:
        return None
    x, amp = found
    history = list(previous)
    if history:
        prev = history[-1].position
        x = prev + float(_periodic_offset(x, prev, grid.L))
    rec = WaveTrackRecord(t, amp, x, None)
    positions = [r.position for r in history] + [x]
    return WaveTrackRecord(t, amp, x, speed_from_history(history + [rec], positions))


class PeakTracker:
    """Follows one crest through a sequence of snapshots.

    The crest is searched for within ``4 / guess_width`` of the position
    predicted from the last speed estimate. Crests claimed by other trackers
    are masked over a zone of full width ``8 * guess_width``. With
    ``drop_ratio`` set, a candidate lower than that fraction of the last
    recorded amplitude is taken to belong to something else (two crests
    merged during a collision); the tracker then skips the record and coasts
    on its prediction.
    """

    def __init__(self, grid: PeriodicGrid, position: float, velocity: float,
                 guess_width: float = 0.3, drop_ratio: float | None = None):
        self.grid = grid
        self.half_width = 4.0 / guess_width
        self.exclude_half_width = 4.0 * guess_width
        self.drop_ratio = drop_ratio
        self.records: list[WaveTrackRecord] = []
        self._last = (0.0, position, velocity)

    @property
    def last_amplitude(self) -> float:
        return self.records[-1].amplitude if self.records else math.inf

    def predict(self, t: float) -> float:
        t0, x0, v = self._last
        return float(_periodic_offset(x0 + v * (t - t0), 0.0, self.grid.L))

    def update(self, t: float, zeta, *, exclude: Sequence[float] = (), spectrum=None):
        found = locate_peak(zeta, self.grid, near=self.predict(t), half_width=self.half_width,
                            exclude=exclude, exclude_half_width=self.exclude_half_width,
                            spectrum=spectrum)
        if found is None:
            return None
        x, amp = found
        if self.drop_ratio is not None and self.records and \
                amp < self.drop_ratio * self.records[-1].amplitude:
            return None
        prev = self.records[-1].position if self.records else self._last[1]
        x = prev + float(_periodic_offset(x, prev, self.grid.L))
        rec = WaveTrackRecord(t, amp, x, None)
        positions = [r.position for r in self.records] + [x]
        speed = speed_from_history(self.records + [rec], positions)
        rec = WaveTrackRecord(t, amp, x, speed)
        self.records.append(rec)
        self._last = (t, x, self._last[2] if speed is None else speed)
        return rec

    def at(self, t: float) -> WaveTrackRecord | None:
        """Record closest in time to ``t``."""
        if not self.records:
            return None
        return min(self.records, key=lambda r: abs(r.t - t))

    def rows(self):
        return [(r.t, r.amplitude, r.position, math.nan if r.speed_estimate is None else r.speed_estimate)
                for r in self.records]


def _initial_trackers(spec: ExperimentSpec, initial: WaveState, grid: PeriodicGrid) -> list[PeakTracker]:
    if spec.waves:
        seeds = [(w.center, w.velocity) for w in spec.waves[: spec.tracks]]
    else:
        seeds = []
        claimed: list[float] = []
        for _ in range(spec.tracks):
            found = locate_peak(initial.zeta, grid, exclude=claimed,
                                exclude_half_width=4.0 * spec.guess_width)
            if found is None:
                break
            seeds.append((found[0], 0.0))
            claimed.append(found[0])
    drop = TRACK_DROP_RATIO if len(seeds) > 1 else None
    return [PeakTracker(grid, x, v, spec.guess_width, drop) for x, v in seeds]


# -- runs ----------------------------------------------------------------------

@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    profiles: list
    trackers: list
    times: np.ndarray
    energy: np.ndarray
    momentum: np.ndarray
    final: WaveState
    summary: dict = field(default_factory=dict)
    out_dir: Path | None = None


def _summary(spec, trackers, times, energy, momentum, profiles, failure=None) -> dict:
    waves = []
    for i, tr in enumerate(trackers):
        entry = {"index": i, "records": len(tr.records)}
        if tr.records:
            first, last = tr.records[0], tr.records[-1]
            entry.update(initial_amplitude=first.amplitude, initial_position=first.position,
                         final_amplitude=last.amplitude, final_position=last.position,
                         final_speed=last.speed_estimate)
            readings = []
            for t in spec.readout_times:
                r = tr.at(t)
                if r is not None:
                    readings.append({"t": r.t, "amplitude": r.amplitude, "position": r.position,
                                     "speed": r.speed_estimate})
            entry["readings"] = readings
        waves.append(entry)
    out = {
        "kind": spec.kind,
        "waves": waves,
        "profiles": [{"c_s": p.c_s, "amplitude_zeta": p.amplitude_zeta,
                      "amplitude_u": p.amplitude_u, "iterations": p.iterations,
                      "residual": p.residual} for p in profiles],
        "energy_initial": energy[0] if len(energy) else None,
        "momentum_initial": momentum[0] if len(momentum) else None,
        "max_energy_drift": float(np.max(np.abs(energy - energy[0]))) if len(energy) else None,
        "max_momentum_drift": float(np.max(np.abs(momentum - momentum[0]))) if len(momentum) else None,
        "t_reached": float(times[-1]) if len(times) else 0.0,
        "completed": failure is None,
    }
    if failure is not None:
        out["failure"] = failure
    return out


def _write_outputs(out: Path, spec, grid, sys, trackers, times, energy, momentum, summary):
    (out / "tracks").mkdir(parents=True, exist_ok=True)
    io.write_json(out / "meta.json", {
        "spec": spec.to_dict(), "system": sys.to_dict(), "digest": sys.digest(),
        "grid": {"L": grid.L, "N": grid.N, "h": grid.h},
    })
    io.write_table(out / "invariants.csv", ["t", "E_h", "I_h"],
                   np.column_stack([times, energy, momentum]) if len(times) else np.empty((0, 3)))
    for i, tr in enumerate(trackers):
        rows = tr.rows()
        io.write_table(out / "tracks" / f"wave{i}.csv", ["t", "amplitude", "position", "speed"],
                       rows if rows else np.empty((0, 4)))
    io.write_json(out / "summary.json", summary)


def run_experiment(spec: ExperimentSpec, out_dir=None, *, initial: WaveState | None = None) -> ExperimentResult:
    """Run ``spec``; write the output directory when ``out_dir`` is given.

    On a failing time step the outputs gathered so far are still written,
    together with a ``FAILED`` marker, and the :class:`StepFailure` is
    re-raised.
    """
    sys = spec.system
    grid = spec.grid
    profiles: list = []
    if initial is None:
        initial, profiles = build_initial(spec, sys, grid)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "snapshots").mkdir(parents=True, exist_ok=True)
    trackers = _initial_trackers(spec, initial, grid)
    snap_targets = sorted(spec.snapshot_times)
    digest = sys.digest()

    def on_record(t, st):
        spectrum = forward_transform(st.zeta)
        claimed: list[float] = []
        # taller crests claim their window first
        for tr in sorted(trackers, key=lambda tr: -tr.last_amplitude):
            rec = tr.update(t, st.zeta, exclude=claimed, spectrum=spectrum)
            if rec is not None:
                claimed.append(rec.position)
        if out is not None:
            while snap_targets and t >= snap_targets[0] - 0.5 * spec.dt:
                snap_targets.pop(0)
                io.write_state(out / "snapshots" / f"t{t:012.4f}.csv", grid, st,
                               meta={"t": repr(t), "digest": digest})

    failure = None
    try:
        traj, inv = evolve(initial, sys, grid, spec.evolve_config(), on_record=on_record,
                           keep_snapshots=False)
    except StepFailure as exc:
        traj, inv = exc.partial
        failure = {"step": exc.step, "time": exc.time, "last_increment": exc.last_increment,
                   "message": str(exc)}
        times, energy, momentum = inv.arrays()
        summary = _summary(spec, trackers, times, energy, momentum, profiles, failure)
        if out is not None:
            _write_outputs(out, spec, grid, sys, trackers, times, energy, momentum, summary)
            (out / "FAILED").write_text(str(exc) + "\n")
        raise
    times, energy, momentum = inv.arrays()
    summary = _summary(spec, trackers, times, energy, momentum, profiles)
    if out is not None:
        _write_outputs(out, spec, grid, sys, trackers, times, energy, momentum, summary)
    final = traj.state(len(traj) - 1) if traj.spectra else None
    return ExperimentResult(spec, profiles, trackers, times, energy, momentum, final, summary, out)


# -- spatial convergence ---------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    error_zeta: float
    error_u: float
    rate: float | None


@dataclass
class ConvergenceTable:
    rows: list
    reference_N: int
    dt: float

    def errors(self) -> np.ndarray:
        return np.array([max(r.error_zeta, r.error_u) for r in self.rows])

    def to_rows(self):
        return [(r.N, r.error_zeta, r.error_u, math.nan if r.rate is None else r.rate) for r in self.rows]


def restrict(fine_values, fine: PeriodicGrid, coarse: PeriodicGrid) -> np.ndarray:
    """Truncate a fine-grid field to the modes representable on ``coarse``.

    The coarse Nyquist coefficient is taken as the sum of the +/- N/2
    coefficients of the fine field, so the result is the coarse-grid
    interpolant of the band-limited part.
    """
    if fine.L != coarse.L or coarse.N > fine.N:
        raise ValueError("coarse grid must share L and have no more modes")
    fh = forward_transform(fine_values)
    ch = np.zeros(coarse.N, dtype=complex)
    half = coarse.N // 2
    ch[:half] = fh[:half]
    ch[-half + 1:] = fh[-half + 1:]
    ch[half] = fh[half] + fh[-half] if coarse.N < fine.N else fh[half]
    return inverse_transform(ch)


def _discrete_l2(v, grid):
    return math.sqrt(grid.h * float(np.dot(v, v)))


def convergence_study(sys: AbcdSystem, initial: Callable[[np.ndarray], tuple], L: float,
                      N_list: Sequence[int], reference_N: int, dt: float, t_final: float, *,
                      refine_dt: bool = False, max_halvings: int = 4,
                      stage_tolerance: float = 1e-13) -> ConvergenceTable:
    """Errors at ``t_final`` of runs on each N against a fine reference run.

    ``initial(x)`` returns the nodal ``(zeta, u)`` pair. With ``refine_dt``
    the step is halved until no table entry changes by more than 1 %.
    """
    N_list = sorted(int(n) for n in N_list)
    if reference_N < 4 * N_list[-1]:
        raise ValueError("reference_N must be at least four times the finest N")

    def run(N, step):
        grid = PeriodicGrid(L, N)
        z, u = initial(grid.x)
        cfg = EvolveConfig(dt=step, t_final=t_final, record_every=max(1, int(round(t_final / step))),
                           stage_tolerance=stage_tolerance)
        traj, _ = evolve(WaveState(z, u), sys, grid, cfg)
        return grid, traj.state(len(traj) - 1)

    def table(step):
        ref_grid, ref = run(reference_N, step)
        rows = []
        for N in N_list:
            grid, st = run(N, step)
            ez = _discrete_l2(st.zeta - restrict(ref.zeta, ref_grid, grid), grid)
            eu = _discrete_l2(st.u - restrict(ref.u, ref_grid, grid), grid)
            rate = None
            if rows:
                prev = rows[-1]
                e0, e1 = max(prev.error_zeta, prev.error_u), max(ez, eu)
                if e0 > 0 and e1 > 0:
                    rate = -math.log(e1 / e0) / math.log(N / prev.N)
            rows.append(ConvergenceRow(N, ez, eu, rate))
        return ConvergenceTable(rows, reference_N, step)

    result = table(dt)
    if refine_dt:
        for _ in range(max_halvings):
            finer = table(result.dt / 2)
            a, b = result.errors(), finer.errors()
            result = finer
            if np.all(np.abs(a - b) <= 0.01 * np.abs(b)):
                break
    return result


# -- canned setups ---------------------------------------------------------------

def collision_spec(mode: str, c1: float = 0.1, c2: float = 0.2, x1: float | None = None,
                   x2: float | None = None, **kw) -> ExperimentSpec:
    """Head-on or overtaking collision of two waves.

    Head-on: wave 1 moves right from ``x1``, wave 2 moves left from ``x2``.
    Overtaking: both move right, wave 2 (faster) starts behind wave 1.
    """
    if mode == "head-on":
        x1 = -20.0 if x1 is None else x1
        x2 = 20.0 if x2 is None else x2
        waves = (WaveSpec(c1, x1, 1), WaveSpec(c2, x2, -1))
    elif mode == "overtake":
        x1 = 20.0 if x1 is None else x1
        x2 = -20.0 if x2 is None else x2
        waves = (WaveSpec(c1, x1, 1), WaveSpec(c2, x2, 1))
    else:
        raise ValueError("mode must be 'head-on' or 'overtake'")
    kw.setdefault("t_final", 400.0)
    # readings before (t = 100) and after (t_final) the interaction
    kw.setdefault("readout_times", tuple(sorted({0.0, min(100.0, kw["t_final"]), kw["t_final"]})))
    return ExperimentSpec(kind="collide", waves=waves, **kw)
