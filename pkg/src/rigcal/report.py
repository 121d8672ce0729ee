"""Error metrics, CSV/SVG output and the synthetic noise-sweep experiment."""

from __future__ import annotations

import configparser
import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ParseError
from .geometry import SimilarityTransform, UnitQuaternion, angle_between, geodesic_angle, quat_angle, quat_axis
from .online import CalibrationEstimate, CalibratorConfig, calibrate_online
from .simulate import NoiseModel, SimConfig, simulate_pair

AXIS_GATE_RAD = 1e-8

ERROR_COLUMNS = [
    "frame",
    "rot_geodesic_deg",
    "rot_axis_angle_deg",
    "trans_direction_deg",
    "trans_norm_err",
    "scale_rel_err",
    "conditioning",
    "translation_active",
]
METRICS = ERROR_COLUMNS[1:6]

ESTIMATE_COLUMNS = [
    "frame",
    "qw",
    "qx",
    "qy",
    "qz",
    "tx",
    "ty",
    "tz",
    "scale",
    "conditioning",
    "translation_active",
    "translation_ratio",
]


@dataclass(frozen=True)
class FrameErrorRecord:
    frame: int
    rot_geodesic_deg: float
    rot_axis_angle_deg: float
    trans_direction_deg: float
    trans_norm_err: float
    scale_rel_err: float
    conditioning: float
    translation_active: bool

    def validate(self) -> None:
        for name in ("rot_geodesic_deg", "rot_axis_angle_deg", "trans_direction_deg"):
            v = getattr(self, name)
            if not 0.0 <= v <= 180.0:
                raise ValueError(f"{name}={v} outside [0, 180]")


def axis_angle_error(est: UnitQuaternion, truth: UnitQuaternion) -> float:
    """Angle in degrees between the rotation axes; 0 if either rotation is ~identity."""
    if quat_angle(est) < AXIS_GATE_RAD or quat_angle(truth) < AXIS_GATE_RAD:
        return 0.0
    return angle_between(quat_axis(est), quat_axis(truth))


def direction_error(est, truth) -> float:
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    ne, nt = np.linalg.norm(est), np.linalg.norm(truth)
    if ne == 0.0 and nt == 0.0:
        return 0.0
    if ne == 0.0 or nt == 0.0:
        return 180.0
    return min(180.0, angle_between(est, truth))


def compute_frame_errors(estimate: CalibrationEstimate, truth: SimilarityTransform) -> FrameErrorRecord:
    return FrameErrorRecord(
        frame=estimate.frame,
        rot_geodesic_deg=min(180.0, geodesic_angle(estimate.rotation, truth.rotation)),
        rot_axis_angle_deg=axis_angle_error(estimate.rotation, truth.rotation),
        trans_direction_deg=direction_error(estimate.translation, truth.translation),
        trans_norm_err=float(np.linalg.norm(np.asarray(estimate.translation) - truth.translation)),
        scale_rel_err=abs(estimate.scale - truth.scale) / truth.scale,
        conditioning=estimate.rotation_conditioning,
        translation_active=estimate.translation_active,
    )


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_error_csv(path, records: Sequence[FrameErrorRecord], prefix: Optional[Dict[str, object]] = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        extra = list(prefix) if prefix else []
        w.writerow(extra + ERROR_COLUMNS)
        for r in records:
            w.writerow([_fmt(prefix[k]) for k in extra] + [_fmt(v) for v in astuple(r)])


def read_error_csv(path) -> List[FrameErrorRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                FrameErrorRecord(
                    int(row["frame"]),
                    *(float(row[c]) for c in ERROR_COLUMNS[1:7]),
                    row["translation_active"] == "1",
                )
            )
    return out


def write_estimates_csv(path_or_file, estimates: Sequence[CalibrationEstimate]) -> None:
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATE_COLUMNS)
        for e in estimates:
            q, t = e.rotation, e.translation
            w.writerow(
                [
                    _fmt(e.frame),
                    *(_fmt(v) for v in (q.w, q.x, q.y, q.z, t[0], t[1], t[2], e.scale, e.rotation_conditioning)),
                    _fmt(e.translation_active),
                    _fmt(e.translation_ratio),
                ]
            )

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


def read_estimates_csv(path) -> List[CalibrationEstimate]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(ESTIMATE_COLUMNS[:11]) - set(reader.fieldnames or [])
        if missing:
            raise ParseError(f"estimates CSV lacks columns {sorted(missing)}", path=path)
        for row in reader:
            cond = float(row["conditioning"])
            out.append(
                CalibrationEstimate(
                    frame=int(row["frame"]),
                    rotation=UnitQuaternion(*(float(row[k]) for k in ("qw", "qx", "qy", "qz"))),
                    translation=np.array([float(row[k]) for k in ("tx", "ty", "tz")]),
                    scale=float(row["scale"]),
                    rotation_conditioning=cond,
                    translation_active=row["translation_active"] == "1",
                    ill_conditioned=False,
                    translation_ratio=float(row.get("translation_ratio", "nan") or "nan"),
                )
            )
    return out


# -- SVG ---------------------------------------------------------------------

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"]


def _nice_ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (step * m) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step) + 1)]


def svg_plot(
    curves: Dict[str, Tuple[Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "frame",
    ylabel: str = "",
    log_y: bool = False,
    width: int = 640,
    height: int = 400,
) -> str:
    """Render line curves as a standalone SVG document (one polyline per curve)."""
    ml, mr, mt, mb = 70, 160, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs_all = [float(x) for xs, _ in curves.values() for x in xs]
    ys_all = [float(y) for _, ys in curves.values() for y in ys if math.isfinite(float(y))]
    if log_y:
        pos = [y for y in ys_all if y > 0]
        floor = min(pos) if pos else 1e-12
        ty = lambda y: math.log10(max(float(y), floor))  # noqa: E731
    else:
        ty = float
    xlo, xhi = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    tys = [ty(y) for y in ys_all] or [0.0, 1.0]
    ylo, yhi = min(tys), max(tys)
    if xhi == xlo:
        xhi = xlo + 1
    if yhi == ylo:
        yhi = ylo + 1

    def px(x):
        return ml + (float(x) - xlo) / (xhi - xlo) * pw

    def py(v):
        return mt + ph - (v - ylo) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml + pw / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for xt in _nice_ticks(xlo, xhi):
        out.append(f'<line x1="{px(xt):.2f}" y1="{mt + ph}" x2="{px(xt):.2f}" y2="{mt + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(xt):.2f}" y="{mt + ph + 16}" text-anchor="middle">{xt:g}</text>')
    if log_y:
        yticks = [float(e) for e in range(math.ceil(ylo), math.floor(yhi) + 1)] or [ylo]
        ylab = lambda v: f"1e{int(round(v))}" if v == round(v) else f"{10 ** v:.3g}"  # noqa: E731
    else:
        yticks = _nice_ticks(ylo, yhi)
        ylab = lambda v: f"{v:g}"  # noqa: E731
    for yt in yticks:
        out.append(f'<line x1="{ml - 4}" y1="{py(yt):.2f}" x2="{ml}" y2="{py(yt):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{py(yt) + 4:.2f}" text-anchor="end">{ylab(yt)}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(
        f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{ylabel}</text>'
    )
    for i, (label, (xs, ys)) in enumerate(curves.items()):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(
            f"{px(x):.2f},{py(ty(y)):.2f}" for x, y in zip(xs, ys) if math.isfinite(float(y))
        )
        out.append(f'<polyline class="curve" fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = mt + 14 + 16 * i
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 34}" y="{ly + 4}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- experiment --------------------------------------------------------------


@dataclass(frozen=True)
class NoiseLevel:
    rot_std_deg: float
    trans_std: float

    @property
    def label(self) -> str:
        return f"rot {self.rot_std_deg:g} deg / trans {self.trans_std:g}"


DEFAULT_NOISE_LEVELS = (
    NoiseLevel(0.1, 0.001),
    NoiseLevel(0.5, 0.005),
    NoiseLevel(1.0, 0.01),
    NoiseLevel(2.0, 0.02),
)


@dataclass
class ExperimentReport:
    noise_levels: List[NoiseLevel]
    trials: int
    frames: int
    # errors[level][trial, frame, metric], metrics ordered as METRICS
    errors: List[np.ndarray]
    files: List[Path]

    def metric(self, level: int, name: str) -> np.ndarray:
        """trials × frames array for one metric."""
        return self.errors[level][:, :, METRICS.index(name)]

    def median_curve(self, level: int, name: str) -> np.ndarray:
        return np.median(self.metric(level, name), axis=0)


def trial_seeds(master_seed: int, trials: int) -> List[Tuple[int, int, int]]:
    """(trajectory, rig, noise) seeds per trial, shared by all noise levels."""
    out = []
    for child in np.random.SeedSequence(master_seed).spawn(trials):
        a, b, c = (int(v) for v in child.generate_state(3))
        out.append((a, b, c))
    return out


def run_trial(
    sim_config: SimConfig,
    level: NoiseLevel,
    calibrator_config: CalibratorConfig,
    seeds: Tuple[int, int, int],
) -> List[FrameErrorRecord]:
    traj_seed, rig_seed, noise_seed = seeds
    cfg = SimConfig(
        frames=sim_config.frames,
        damping=sim_config.damping,
        process_noise_rot=sim_config.process_noise_rot,
        process_noise_trans=sim_config.process_noise_trans,
        seed=traj_seed,
        initial_twist=sim_config.initial_twist,
    )
    noise = NoiseModel(level.rot_std_deg, level.trans_std, noise_seed)
    pair = simulate_pair(cfg, noise, rig_seed=rig_seed)
    estimates = calibrate_online(pair.traj0, pair.traj1, calibrator_config)
    return [compute_frame_errors(e, pair.rig) for e in estimates]


def _run_trial_packed(args):
    return run_trial(*args)


def run_experiment(
    sim_config: SimConfig,
    noise_levels: Sequence[NoiseLevel] = DEFAULT_NOISE_LEVELS,
    calibrator_config: Optional[CalibratorConfig] = None,
    trials: int = 20,
    out_dir=None,
    master_seed: int = 0,
    log_y: bool = True,
    jobs: int = 1,
) -> ExperimentReport:
    """Noise sweep: simulate, calibrate online, collect per-frame errors.

    With ``out_dir`` set, writes one CSV per (level, trial), a combined
    ``frames.csv``, ``median_curves.csv`` and one SVG per metric.
    """
    calibrator_config = CalibratorConfig() if calibrator_config is None else calibrator_config
    noise_levels = list(noise_levels)
    seeds = trial_seeds(master_seed, trials)
    tasks = [(sim_config, lvl, calibrator_config, s) for lvl in noise_levels for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial_packed, tasks))
    else:
        results = [run_trial(*t) for t in tasks]

    frames = sim_config.frames
    errors = []
    for i in range(len(noise_levels)):
        block = results[i * trials : (i + 1) * trials]
        arr = np.array([[[getattr(r, m) for m in METRICS] for r in recs] for recs in block])
        errors.append(arr.reshape(trials, frames, len(METRICS)))
    report = ExperimentReport(noise_levels, trials, frames, errors, [])
    if out_dir is not None:
        report.files = _write_experiment(Path(out_dir), report, results, log_y)
    return report


def _write_experiment(out: Path, report: ExperimentReport, results, log_y: bool) -> List[Path]:
    out.mkdir(parents=True, exist_ok=True)
    files = []
    combined = out / "frames.csv"
    with open(combined, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["noise_level", "trial"] + ERROR_COLUMNS)
        for i in range(len(report.noise_levels)):
            level_dir = out / f"level{i}"
            level_dir.mkdir(exist_ok=True)
            for j in range(report.trials):
                recs = results[i * report.trials + j]
                path = level_dir / f"trial{j:03d}.csv"
                write_error_csv(path, recs)
                files.append(path)
                for r in recs:
                    w.writerow([str(i), str(j)] + [_fmt(v) for v in astuple(r)])
    files.insert(0, combined)

    medians = out / "median_curves.csv"
    with open(medians, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["noise_level", "rot_std_deg", "trans_std", "frame"] + METRICS)
        for i, lvl in enumerate(report.noise_levels):
            curves = [report.median_curve(i, m) for m in METRICS]
            for f in range(report.frames):
                w.writerow([str(i), _fmt(lvl.rot_std_deg), _fmt(lvl.trans_std), str(f + 1)] + [_fmt(c[f]) for c in curves])
    files.append(medians)

    frames = list(range(1, report.frames + 1))
    for m in METRICS:
        curves = {lvl.label: (frames, report.median_curve(i, m)) for i, lvl in enumerate(report.noise_levels)}
        path = out / f"{m}.svg"
        path.write_text(svg_plot(curves, title=f"median {m} over {report.trials} trials", ylabel=m, log_y=log_y))
        files.append(path)
    return files


@dataclass
class ExperimentConfig:
    sim: SimConfig
    noise_levels: List[NoiseLevel]
    calibrator: CalibratorConfig
    trials: int = 20
    seed: int = 0
    log_y: bool = True


def _float_list(s: str) -> List[float]:
    return [float(v) for v in s.replace(",", " ").split()]


def load_experiment_config(path) -> ExperimentConfig:
    """Read an INI experiment description (sections: experiment, simulation, noise, calibrator)."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(path)
    try:
        exp = cp["experiment"] if cp.has_section("experiment") else {}
        sim = cp["simulation"] if cp.has_section("simulation") else {}
        cal = cp["calibrator"] if cp.has_section("calibrator") else {}
        sim_cfg = SimConfig(
            frames=int(sim.get("frames", 128)),
            damping=float(sim.get("damping", SimConfig.damping)),
            process_noise_rot=float(sim.get("process_noise_rot", SimConfig.process_noise_rot)),
            process_noise_trans=float(sim.get("process_noise_trans", SimConfig.process_noise_trans)),
        )
        if cp.has_section("noise"):
            rots = _float_list(cp["noise"]["rot_std_deg"])
            trans = _float_list(cp["noise"]["trans_std"])
            if len(rots) != len(trans):
                raise ParseError("noise.rot_std_deg and noise.trans_std differ in length", path=path)
            levels = [NoiseLevel(r, t) for r, t in zip(rots, trans)]
        else:
            levels = list(DEFAULT_NOISE_LEVELS)
        cal_cfg = CalibratorConfig(
            forgetting=float(cal.get("forgetting", 1.0)),
            warmup_frames=int(cal.get("warmup_frames", 60)),
            c0_scale=float(cal.get("c0_scale", 1.0)),
            conditioning_threshold=float(cal.get("conditioning_threshold", 10.0)),
            use_relative_constraints=str(cal.get("use_relative_constraints", "false")).lower() in ("1", "true", "yes"),
            buffer_warmup=str(cal.get("buffer_warmup", "false")).lower() in ("1", "true", "yes"),
        )
        return ExperimentConfig(
            sim=sim_cfg,
            noise_levels=levels,
            calibrator=cal_cfg,
            trials=int(exp.get("trials", 20)),
            seed=int(exp.get("seed", 0)),
            log_y=str(exp.get("log_y", "true")).lower() in ("1", "true", "yes"),
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"bad experiment config: {exc}", path=path) from None
