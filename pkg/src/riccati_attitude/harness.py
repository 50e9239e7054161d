"""Batch runner: truth, sensors, observers, observability sweep, trace files."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .observability import ObservabilityReport, observability_report
from .observers import ObserverConfig, Variant, error_metrics, estimate_from_errors, initial_state, observer_step
from .riccati import RiccatiDivergenceError
from .scenario import Scenario
from .sensors import SensorSampler
from .so3 import euler_zyx, quat_to_rot

FLOAT_FMT = "%.9g"

TRUTH_COLUMNS = (
    ["t"]
    + [f"R{i}{j}" for i in range(1, 4) for j in range(1, 4)]
    + ["V1", "V2", "V3", "v1", "v2", "v3", "omega1", "omega2", "omega3", "aB1", "aB2", "aB3"]
)
OBSERVER_COLUMNS = [
    "t",
    "roll_deg",
    "pitch_deg",
    "yaw_deg",
    "roll_hat_deg",
    "pitch_hat_deg",
    "yaw_hat_deg",
    "V1",
    "V2",
    "V3",
    "V1_hat",
    "V2_hat",
    "V3_hat",
    "vel_err",
    "att_err_deg",
    "trace_P",
    "min_eig_P",
    "variant",
]
OBSERVABILITY_COLUMNS = ["t", "min_eig_D", "window_min_eig", "R33", "v_cross_e3", "omega_norm"]

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG_ERROR, EXIT_DIVERGED = 0, 1, 2, 3


@dataclass
class ObserverTrace:
    variant: Variant
    t: np.ndarray
    att_err_deg: np.ndarray
    vel_err: np.ndarray
    cond_P: np.ndarray
    P: np.ndarray
    rows: list
    runtime: float
    diverged: str | None = None


@dataclass
class ObserverSummary:
    variant: int
    final_att_err_deg: float
    final_vel_err: float
    max_att_err_deg: float
    max_vel_err: float
    time_to_threshold: float | None
    rms_att_deg: float | None
    rms_vel: float | None
    cond_P_min: float
    cond_P_max: float
    runtime_s: float
    diverged: str | None


@dataclass
class RunSummary:
    scenario: str
    seed: int
    config_hash: str
    observers: list = field(default_factory=list)
    observability: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def diverged(self) -> bool:
        return any(o.diverged for o in self.observers)

    @property
    def exit_code(self) -> int:
        if self.diverged:
            return EXIT_DIVERGED
        return EXIT_OK if self.passed else EXIT_CHECK_FAILED

    def text(self) -> str:
        lines = [f"scenario: {self.scenario}", f"seed: {self.seed}", f"config_sha256: {self.config_hash}"]
        for o in self.observers:
            ttt = "never" if o.time_to_threshold is None else f"{o.time_to_threshold:.2f} s"
            lines.append(
                f"observer {o.variant}: final att err {o.final_att_err_deg:.4g} deg, final |V err| {o.final_vel_err:.4g} m/s, "
                f"settled at {ttt}, cond(P) in [{o.cond_P_min:.4g}, {o.cond_P_max:.4g}], runtime {o.runtime_s:.2f} s"
                + (f", rms att {o.rms_att_deg:.4g} deg, rms |V err| {o.rms_vel:.4g} m/s" if o.rms_att_deg is not None else "")
                + (f", DIVERGED: {o.diverged}" if o.diverged else "")
            )
        for block in self.observability:
            lines.append("observability:")
            lines.extend("  " + s for s in block)
        lines.append("checks:")
        lines.extend(f"  {'PASS' if ok else 'FAIL'} {name}" for name, ok in self.checks.items())
        lines.append(f"result: {'PASS' if self.passed and not self.diverged else 'FAIL'}")
        return "\n".join(lines)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT % x


def _write_csv(path: Path, header_note: str, columns, rows):
    with path.open("w", newline="") as fh:
        fh.write(f"# {header_note}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


class TruthCache:
    """Memoised ``trajectory.state`` keyed on the exact float time."""

    def __init__(self, trajectory):
        self.trajectory = trajectory
        self._cache: dict = {}

    def __call__(self, t: float):
        s = self._cache.get(t)
        if s is None:
            s = self._cache[t] = self.trajectory.state(t)
        return s


def measurement_stream(scn: Scenario, truth: TruthCache) -> list:
    return list(SensorSampler(scn.trajectory, scn.sensors, scn.dt, truth_fn=truth).frames(scn.n_steps))


def run_observer(scn: Scenario, variant: Variant, frames: list, truth: TruthCache) -> ObserverTrace:
    """Run one observer over a precomputed measurement stream."""
    cfg = ObserverConfig(
        variant=variant, gains=scn.gains[variant], m_I=scn.sensors.m_I, g=scn.trajectory.g, use_magnetometer=scn.use_magnetometer
    )
    dt = scn.dt
    R0, V0 = estimate_from_errors(truth(0.0), quat_to_rot(scn.init.q_err), scn.init.V_err)
    st = initial_state(cfg, R0, V0)
    n = len(frames)
    t = np.empty(n + 1)
    att = np.empty(n + 1)
    vel = np.empty(n + 1)
    cond = np.empty(n + 1)
    P_hist = np.empty((n + 1, 6, 6))
    rows = []
    diverged = None

    def record(k, state):
        tk = k * dt
        tr = truth(tk)
        em = error_metrics(tr, state.R_hat, state.V_hat)
        P_hist[k] = state.riccati.P
        w = np.linalg.eigvalsh(state.riccati.P)
        t[k], att[k], vel[k], cond[k] = tk, np.rad2deg(em.attitude_error), em.velocity_error, w[-1] / w[0]
        e = np.rad2deg(euler_zyx(tr.R)[:3])
        eh = np.rad2deg(euler_zyx(state.R_hat)[:3])
        rows.append((tk, *e, *eh, *tr.V, *state.V_hat, vel[k], att[k], w.sum(), w[0], int(variant)))

    t0 = time.perf_counter()
    record(0, st)
    k = 0
    try:
        for k, m in enumerate(frames, start=1):
            st, _ = observer_step(st, m, cfg, dt)
            record(k, st)
    except RiccatiDivergenceError as exc:
        diverged = str(exc)
        k -= 1
    runtime = time.perf_counter() - t0
    m = k + 1
    return ObserverTrace(variant, t[:m], att[:m], vel[:m], cond[:m], P_hist[:m], rows, runtime, diverged)


def _first_settle_time(t, att, vel, att_thr, vel_thr) -> float | None:
    """Earliest time after which both errors stay below their thresholds."""
    bad = np.nonzero((att >= att_thr) | (vel >= vel_thr))[0]
    if len(bad) == 0:
        return float(t[0])
    if bad[-1] == len(t) - 1:
        return None
    return float(t[bad[-1] + 1])


def monotone_envelope(t, err, start: float, block: float, slack: float = 1e-6) -> bool:
    """Block maxima of ``err`` over ``[start, end]`` never increase (up to ``slack``)."""
    edges = np.arange(start, t[-1] + 1e-12, block)
    maxima = [err[(t >= a) & (t < a + block)].max() for a in edges if np.any((t >= a) & (t < a + block))]
    return all(b <= a + slack for a, b in zip(maxima, maxima[1:]))


def _rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def summarize_observer(scn: Scenario, tr: ObserverTrace) -> tuple[ObserverSummary, dict]:
    c = scn.checks
    rms_att = rms_vel = None
    if c.rms_from is not None:
        sel = tr.t >= c.rms_from - 1e-9
        if sel.any():
            rms_att, rms_vel = _rms(tr.att_err_deg[sel]), _rms(tr.vel_err[sel])
    settle = _first_settle_time(tr.t, tr.att_err_deg, tr.vel_err, c.att_threshold_deg, c.vel_threshold)
    summ = ObserverSummary(
        variant=int(tr.variant),
        final_att_err_deg=float(tr.att_err_deg[-1]),
        final_vel_err=float(tr.vel_err[-1]),
        max_att_err_deg=float(tr.att_err_deg.max()),
        max_vel_err=float(tr.vel_err.max()),
        time_to_threshold=settle,
        rms_att_deg=rms_att,
        rms_vel=rms_vel,
        cond_P_min=float(tr.cond_P.min()),
        cond_P_max=float(tr.cond_P.max()),
        runtime_s=tr.runtime,
        diverged=tr.diverged,
    )
    v = int(tr.variant)
    checks = {f"observer{v}: no Riccati divergence": tr.diverged is None}
    if c.converge_by is not None:
        checks[f"observer{v}: settled below {c.att_threshold_deg:g} deg / {c.vel_threshold:g} m/s by t={c.converge_by:g} s"] = (
            settle is not None and settle <= c.converge_by
        )
    if c.monotone_after is not None:
        checks[f"observer{v}: monotone error envelope after t={c.monotone_after:g} s"] = monotone_envelope(
            tr.t, tr.att_err_deg, c.monotone_after, c.monotone_block
        ) and monotone_envelope(tr.t, tr.vel_err, c.monotone_after, c.monotone_block)
    if c.rms_from is not None:
        checks[f"observer{v}: RMS errors after t={c.rms_from:g} s below {c.rms_att_deg:g} deg / {c.rms_vel:g} m/s"] = (
            rms_att is not None and rms_att < c.rms_att_deg and rms_vel < c.rms_vel
        )
    if c.equilibrium_tol is not None:
        checks[f"observer{v}: errors stay below {c.equilibrium_tol:g} (deg, m/s)"] = bool(
            tr.att_err_deg.max() < c.equilibrium_tol and tr.vel_err.max() < c.equilibrium_tol
        )
    if c.max_runtime is not None:
        checks[f"observer{v}: runtime below {c.max_runtime:g} s"] = tr.runtime < c.max_runtime
    return summ, checks


def observability_checks(scn: Scenario, rep: ObservabilityReport) -> dict:
    c = scn.checks
    v = int(rep.variant)
    out = {f"observability{v}: analytic/oracle D and sufficient-condition cross-checks consistent": rep.consistent}
    if c.expect_uniform is not None:
        out[f"observability{v}: uniform verdict {'pass' if c.expect_uniform else 'fail'}"] = rep.uniform.passed == c.expect_uniform
    if c.expect_cases:
        want = set(c.expect_cases) - {"none"}
        got = set(rep.cases_report.cases)
        if want:
            ok = want <= got and rep.cases_report.guaranteed and rep.cases_report.min_eig_D > 0
        else:
            ok = not rep.cases_report.guaranteed
        out[f"observability{v}: pointwise sufficient cases {', '.join(sorted(want)) or 'none'}"] = ok
    if c.expect_excitation is not None:
        out[f"observability{v}: windowed guarantee {c.expect_excitation}"] = rep.excitation.guaranteed == c.expect_excitation
    if c.expect_singular_ablation is not None and rep.ablation is not None:
        out[f"observability{v}: ablated Gramian singular"] = rep.ablation.singular == c.expect_singular_ablation
    return out


PLOT_STUB = '''"""Plot the traces written next to this file (requires matplotlib)."""

import csv
import sys
from pathlib import Path

# panel title -> (file, [columns]); edit freely
PANELS = {PANELS}


def load(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(l for l in fh if not l.startswith("#"))]
    header, data = rows[0], rows[1:]
    return {{c: [float(r[i]) for r in data] for i, c in enumerate(header)}}


def main(out_dir="."):
    import matplotlib.pyplot as plt

    here = Path(out_dir)
    fig, axes = plt.subplots(len(PANELS), 1, figsize=(8, 2.5 * len(PANELS)), sharex=True, squeeze=False)
    for ax, (title, (fname, cols)) in zip(axes[:, 0], PANELS.items()):
        if not (here / fname).exists():
            continue
        data = load(here / fname)
        for col in cols:
            ax.plot(data["t"], data[col], label=col)
        ax.set_title(title)
        ax.legend(loc="upper right", fontsize="small")
    axes[-1, 0].set_xlabel("t (s)")
    fig.tight_layout()
    fig.savefig(here / "traces.png", dpi=120)


if __name__ == "__main__":
    main(*sys.argv[1:])
'''


def _plot_panels(scn: Scenario) -> dict:
    panels = {}
    for v in scn.variants:
        f = f"observer_v{int(v)}.csv"
        panels[f"observer {int(v)}: roll"] = (f, ["roll_deg", "roll_hat_deg"])
        panels[f"observer {int(v)}: pitch"] = (f, ["pitch_deg", "pitch_hat_deg"])
        panels[f"observer {int(v)}: yaw"] = (f, ["yaw_deg", "yaw_hat_deg"])
        panels[f"observer {int(v)}: velocity"] = (f, ["V1", "V1_hat", "V2", "V2_hat", "V3", "V3_hat"])
        panels[f"observer {int(v)}: errors"] = (f, ["att_err_deg", "vel_err"])
    return panels


def run_observability(scn: Scenario, out_dir: Path | None = None, summary: RunSummary | None = None) -> RunSummary:
    """Observability sweep of the zero-error pair; writes CSV and summary lines.

    The sweep runs in the inertial-error chart (observer 1).  The body-frame
    chart differs by the bounded, boundedly invertible change of variables
    ``diag(R^T, I)``, which preserves uniform observability and the rank of
    the Gramian, but not the windowed D bound, so it is not swept separately.
    """
    out = Path(out_dir or scn.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = summary or RunSummary(scn.name, scn.sensors.seed, scn.config_hash)
    note = f"scenario={scn.name} config_sha256={scn.config_hash} seed={scn.sensors.seed}"
    for v in (Variant.LAMBDA_TILDE,):
        rep = observability_report(scn.trajectory, scn.obs, v, scn.sensors.m_I, scn.use_magnetometer, scn.ablate_mag)
        path = out / f"observability_v{int(v)}.csv"
        _write_csv(path, note, OBSERVABILITY_COLUMNS, rep.rows())
        summary.files.append(str(path))
        summary.observability.append(rep.summary_lines())
        summary.checks.update(observability_checks(scn, rep))
    return summary


def run_scenario(scn: Scenario, out_dir: Path | None = None) -> RunSummary:
    """Execute a scenario and write its trace files.

    Files: ``truth.csv``, ``observer_v<k>.csv`` per observer,
    ``observability_v<k>.csv`` when the sweep is enabled, ``summary.txt``,
    ``summary.json``, ``scenario.ini`` (normalised config) and
    ``plot_traces.py``.
    """
    out = Path(out_dir or scn.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = RunSummary(scn.name, scn.sensors.seed, scn.config_hash)
    note = f"scenario={scn.name} config_sha256={scn.config_hash} seed={scn.sensors.seed}"
    (out / "scenario.ini").write_text(scn.source + "\n")

    if scn.run_observers:
        truth = TruthCache(scn.trajectory)
        frames = measurement_stream(scn, truth)
        grid = [truth(k * scn.dt) for k in range(scn.n_steps + 1)]
        path = out / "truth.csv"
        _write_csv(
            path,
            note,
            TRUTH_COLUMNS,
            ((s.t, *s.R.ravel(), *s.V, *s.v, *s.omega, *s.a_B) for s in grid),
        )
        summary.files.append(str(path))
        for v in scn.variants:
            tr = run_observer(scn, v, frames, truth)
            path = out / f"observer_v{int(v)}.csv"
            _write_csv(path, note, OBSERVER_COLUMNS, tr.rows)
            summary.files.append(str(path))
            obs_summary, checks = summarize_observer(scn, tr)
            summary.observers.append(obs_summary)
            summary.checks.update(checks)
        (out / "plot_traces.py").write_text(PLOT_STUB.replace("{PANELS}", repr(_plot_panels(scn))).replace("{{", "{").replace("}}", "}"))

    if scn.observability:
        run_observability(scn, out, summary)

    (out / "summary.txt").write_text(summary.text() + "\n")
    payload = asdict(summary)
    payload["passed"] = summary.passed
    (out / "summary.json").write_text(json.dumps(payload, indent=2, default=float) + "\n")
    return summary
