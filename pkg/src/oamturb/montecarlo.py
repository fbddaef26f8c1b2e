"""Seeded Monte Carlo ensemble engine for the hybrid-qubit pipeline.

Every screen is keyed by (master_seed, strength index, realization index)
through a counter-based generator, so results are a pure function of the
configuration: the engine may split realizations across threads in any
way without changing a single bit of the output.  Within a cell the same
screens are shared by all states (paired comparison): each realization
computes the two screened basis profiles LG_{+l} e^{i phi} and
LG_{-l} e^{i phi} once and assembles every state's field from them by
scalar combination before the literal decode step.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from .analytic import DEFAULT_STRENGTHS
from .elements import MUB_LABELS, HybridQubit, decode, fidelity, mub_states
from .errors import DomainError, RangeError, StatisticsError
from .fields import GridSpec, ScalarField, VectorField, make_lg_mode, rotate_modal
from .turbulence import TurbulenceParams, generate_screen

# success_prob below this is a total-loss event, excluded from fidelity
LOSS_THRESHOLD = 1e-12


@dataclass(frozen=True)
class EnsembleStats:
    mean: float
    stderr: float
    n: int
    min: float
    max: float

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "EnsembleStats":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        if n == 0:
            nan = float("nan")
            return cls(nan, nan, 0, nan, nan)
        stderr = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(
            float(samples.mean()), stderr, int(n),
            float(samples.min()), float(samples.max()),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one ensemble run."""

    strengths: tuple = DEFAULT_STRENGTHS
    states: tuple = ()
    state_labels: tuple = ()
    n_realizations: int = 500
    master_seed: int = 2
    grid: GridSpec = field(default_factory=GridSpec)
    angles: tuple = ()

    def __post_init__(self) -> None:
        strengths = tuple(float(s) for s in self.strengths)
        if not strengths:
            raise DomainError("at least one turbulence strength is required")
        if any(s < 0 for s in strengths):
            raise DomainError("turbulence strengths must be nonnegative")
        object.__setattr__(self, "strengths", strengths)
        states = tuple(self.states) if self.states else tuple(mub_states(1))
        labels = tuple(str(x) for x in self.state_labels)
        if not labels:
            if len(states) == len(MUB_LABELS) and not self.states:
                labels = MUB_LABELS
            else:
                labels = tuple(f"state{i}" for i in range(len(states)))
        if len(labels) != len(states):
            raise DomainError("state_labels length must match states")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "state_labels", labels)
        if self.n_realizations < 1:
            raise DomainError("n_realizations must be >= 1")
        if self.master_seed < 0:
            raise RangeError("master_seed must be a nonnegative integer")
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))


@dataclass(frozen=True)
class FidelityScanRow:
    w_over_r0: float
    state_label: str
    fidelity: EnsembleStats
    success_prob: EnsembleStats
    n_loss: int


@dataclass(frozen=True)
class RotationScanRow:
    theta: float
    state_label: str
    fidelity: EnsembleStats
    success_prob: EnsembleStats


@dataclass(frozen=True)
class CoefficientEstimate:
    """Ensemble estimates of the +/-l coupling weights.

    Iterable as (c0, c2l) for tuple-style use; c2l_reverse carries the
    opposite cross term |<l|psi_{-l}>|^2 and mirror_dev the largest
    per-realization |<l|psi_l> - <-l|psi_{-l}>| (an exact identity up to
    rounding).
    """

    c0: EnsembleStats
    c2l: EnsembleStats
    c2l_reverse: EnsembleStats
    mirror_dev: float
    n: int

    def __iter__(self):
        return iter((self.c0, self.c2l))


def _cell_screen(master_seed: int, strength_idx: int, realization: int,
                 params: TurbulenceParams, grid: GridSpec):
    ss = np.random.SeedSequence(
        entropy=[int(master_seed), int(strength_idx), int(realization)]
    )
    return generate_screen(params, grid, ss)


def _parallel_fill(n_items: int, worker, n_workers: int) -> None:
    """Run worker(start, stop) over a fixed chunking of range(n_items).

    Chunk boundaries depend only on n_items, and workers write to
    preallocated per-index slots, so the result is identical for any
    worker count.
    """
    if n_workers <= 1:
        worker(0, n_items)
        return
    chunk = max(1, math.ceil(n_items / (4 * n_workers)))
    spans = [(s, min(s + chunk, n_items)) for s in range(0, n_items, chunk)]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        for f in [pool.submit(worker, a, b) for a, b in spans]:
            f.result()


def _assemble(state: HybridQubit, base_r: np.ndarray, base_l: np.ndarray,
              grid: GridSpec, phase: complex | None = None) -> VectorField:
    a, b = state.alpha, state.beta
    if phase is not None:
        a = a * phase
        b = b * np.conj(phase)
    return VectorField(
        ScalarField(grid, a * base_r), ScalarField(grid, b * base_l)
    )


def run_fidelity_scan(config: ExperimentConfig, n_workers: int = 1) -> list[FidelityScanRow]:
    """Fidelity and success probability per (strength, state) cell.

    Total-loss realizations (success below LOSS_THRESHOLD) are excluded
    from the fidelity statistics and counted in n_loss; success statistics
    include every realization.
    """
    grid = config.grid
    n_states = len(config.states)
    n_real = config.n_realizations
    ls = sorted({s.l for s in config.states})
    modes = {l: (make_lg_mode(l, grid).samples, make_lg_mode(-l, grid).samples)
             for l in ls}
    rows: list[FidelityScanRow] = []
    for si, strength in enumerate(config.strengths):
        params = TurbulenceParams(w_over_r0=strength)
        fid = np.full((n_states, n_real), np.nan)
        suc = np.empty((n_states, n_real))

        def worker(start: int, stop: int) -> None:
            for i in range(start, stop):
                screen = _cell_screen(config.master_seed, si, i, params, grid)
                u = screen.phase_factor
                bases = {l: (lp * u, lm * u) for l, (lp, lm) in modes.items()}
                for k, state in enumerate(config.states):
                    base_r, base_l = bases[state.l]
                    res = decode(_assemble(state, base_r, base_l, grid), state.l)
                    suc[k, i] = res.success_prob
                    if res.success_prob >= LOSS_THRESHOLD:
                        fid[k, i] = fidelity(res, state)

        _parallel_fill(n_real, worker, n_workers)
        for k, label in enumerate(config.state_labels):
            kept = fid[k][~np.isnan(fid[k])]
            rows.append(FidelityScanRow(
                w_over_r0=strength,
                state_label=label,
                fidelity=EnsembleStats.from_samples(kept),
                success_prob=EnsembleStats.from_samples(suc[k]),
                n_loss=n_real - kept.size,
            ))
    return rows


def run_rotation_scan(config: ExperimentConfig, n_workers: int = 1) -> list[RotationScanRow]:
    """Fidelity per (angle, state) with rotate_frame inserted between
    screen and decode, at a single turbulence strength.

    The theta = 0 column follows the identical arithmetic path as
    run_fidelity_scan, so those rows match it bitwise for the same seed.
    """
    if len(config.strengths) != 1:
        raise DomainError("rotation scan runs at a single turbulence strength")
    if not config.angles:
        raise DomainError("rotation scan requires at least one angle")
    grid = config.grid
    params = TurbulenceParams(w_over_r0=config.strengths[0])
    n_states = len(config.states)
    n_real = config.n_realizations
    angles = config.angles
    ls = sorted({s.l for s in config.states})
    modes = {l: (make_lg_mode(l, grid).samples, make_lg_mode(-l, grid).samples)
             for l in ls}
    fid = np.full((len(angles), n_states, n_real), np.nan)
    suc = np.empty((len(angles), n_states, n_real))

    def worker(start: int, stop: int) -> None:
        for i in range(start, stop):
            screen = _cell_screen(config.master_seed, 0, i, params, grid)
            u = screen.phase_factor
            bases = {l: (lp * u, lm * u) for l, (lp, lm) in modes.items()}
            for j, theta in enumerate(angles):
                if theta == 0.0:
                    rot = bases
                    phase = None
                else:
                    rot = {
                        l: (rotate_modal(ScalarField(grid, br), theta).samples,
                            rotate_modal(ScalarField(grid, bl), theta).samples)
                        for l, (br, bl) in bases.items()
                    }
                    phase = complex(np.exp(1j * theta))
                for k, state in enumerate(config.states):
                    base_r, base_l = rot[state.l]
                    res = decode(
                        _assemble(state, base_r, base_l, grid, phase), state.l
                    )
                    suc[j, k, i] = res.success_prob
                    if res.success_prob >= LOSS_THRESHOLD:
                        fid[j, k, i] = fidelity(res, state)

    _parallel_fill(n_real, worker, n_workers)
    rows: list[RotationScanRow] = []
    for j, theta in enumerate(angles):
        for k, label in enumerate(config.state_labels):
            kept = fid[j, k][~np.isnan(fid[j, k])]
            rows.append(RotationScanRow(
                theta=theta,
                state_label=label,
                fidelity=EnsembleStats.from_samples(kept),
                success_prob=EnsembleStats.from_samples(suc[j, k]),
            ))
    return rows


def rotation_preset(strength: float = 0.6, n_realizations: int = 30,
                    master_seed: int = 2) -> ExperimentConfig:
    """Six states x five angles = 30 points, the desk-scale mirror of the
    rotated-frame experiment, locked at strength 0.6 by default."""
    return ExperimentConfig(
        strengths=(strength,),
        n_realizations=n_realizations,
        master_seed=master_seed,
        angles=tuple(2 * np.pi * k / 5 for k in range(5)),
    )


def run_coefficient_estimate(
    l: int,
    params: TurbulenceParams,
    n: int,
    master_seed: int,
    grid: GridSpec | None = None,
    n_workers: int = 1,
) -> CoefficientEstimate:
    """Monte Carlo estimate of the coupling weights from raw overlaps.

    Per screen: c0 sample |<l|psi_l>|^2, c2l sample |<-l|psi_l>|^2, and
    the reverse cross term |<l|psi_{-l}>|^2; psi_m is LG_m times the
    screen phase.  Screens are keyed by (master_seed, realization index).
    """
    if n < 100:
        raise StatisticsError(f"need >= 100 realizations, got {n}")
    if grid is None:
        grid = GridSpec()
    lg_p = make_lg_mode(l, grid).samples
    lg_m = make_lg_mode(-l, grid).samples
    pitch_sq = grid.pitch**2
    c0_s = np.empty(n)
    c2l_s = np.empty(n)
    rev_s = np.empty(n)
    dev_s = np.empty(n)

    def worker(start: int, stop: int) -> None:
        for i in range(start, stop):
            ss = np.random.SeedSequence(entropy=[int(master_seed), int(i)])
            screen = generate_screen(params, grid, ss)
            u = screen.phase_factor
            psi_p = lg_p * u
            psi_m = lg_m * u
            keep_p = np.vdot(lg_p, psi_p) * pitch_sq
            keep_m = np.vdot(lg_m, psi_m) * pitch_sq
            c0_s[i] = abs(keep_p) ** 2
            c2l_s[i] = abs(np.vdot(lg_m, psi_p) * pitch_sq) ** 2
            rev_s[i] = abs(np.vdot(lg_p, psi_m) * pitch_sq) ** 2
            dev_s[i] = abs(keep_p - keep_m)

    _parallel_fill(n, worker, n_workers)
    return CoefficientEstimate(
        c0=EnsembleStats.from_samples(c0_s),
        c2l=EnsembleStats.from_samples(c2l_s),
        c2l_reverse=EnsembleStats.from_samples(rev_s),
        mirror_dev=float(dev_s.max()),
        n=int(n),
    )
