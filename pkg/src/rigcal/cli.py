"""rigcal command line.

Exit status: 0 success, 1 usage error, 2 data error. Diagnostics go to
stderr; results go to files or stdout.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .batch import calibrate_batch
from .errors import CalibrationError, IllConditionedWarning
from .online import CalibratorConfig, calibrate_online
from .poseio import read_rig_ground_truth, read_trajectory, write_rig_ground_truth, write_trajectory
from .report import (
    compute_frame_errors,
    load_experiment_config,
    read_estimates_csv,
    run_experiment,
    svg_plot,
    write_error_csv,
    write_estimates_csv,
)
from .simulate import NoiseModel, SimConfig, simulate_pair

log = logging.getLogger("rigcal")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_pose_inputs(p):
    p.add_argument("poses0", type=Path, help="pose file of camera 0 (master)")
    p.add_argument("poses1", type=Path, help="pose file of camera 1 (slave)")
    p.add_argument("--format", choices=["kitti", "tum"], default="kitti")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rigcal", description="Online calibration of non-overlapping camera rigs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("simulate", help="write a synthetic trajectory pair and its rig sidecar")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--format", choices=["kitti", "tum"], default="kitti")
    p.add_argument("--frames", type=int, default=SimConfig.frames)
    p.add_argument("--damping", type=float, default=SimConfig.damping)
    p.add_argument("--process-noise-rot", type=float, default=SimConfig.process_noise_rot)
    p.add_argument("--process-noise-trans", type=float, default=SimConfig.process_noise_trans)
    p.add_argument("--seed", type=int, default=0, help="trajectory seed")
    p.add_argument("--rig-seed", type=int, default=None, help="rig seed (defaults to --seed)")
    p.add_argument("--rot-noise", type=float, default=0.0, help="pose rotation noise std, degrees")
    p.add_argument("--trans-noise", type=float, default=0.0, help="pose translation noise std")
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--relative-noise", action="store_true", help="perturb frame-to-frame motions")

    p = sub.add_parser("calibrate", help="online calibration; writes one estimate per frame as CSV")
    _add_pose_inputs(p)
    p.add_argument("-o", "--output", type=Path, default=None, help="estimates CSV (default: stdout)")
    p.add_argument("--forgetting", type=float, default=1.0)
    p.add_argument("--warmup", type=int, default=60)
    p.add_argument("--c0-scale", type=float, default=1.0)
    p.add_argument("--conditioning-threshold", type=float, default=10.0)
    p.add_argument("--use-relative-constraints", action="store_true")
    p.add_argument("--buffer-warmup", action="store_true")

    p = sub.add_parser("batch", help="batch calibration; prints 'qw qx qy qz tx ty tz scale'")
    _add_pose_inputs(p)

    p = sub.add_parser("report", help="per-frame errors of an estimates CSV against a rig sidecar")
    p.add_argument("estimates", type=Path)
    p.add_argument("rig", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True, help="error CSV")
    p.add_argument("--svg", type=Path, default=None, help="error plot (default: next to the CSV)")
    p.add_argument("--log-y", action="store_true")

    p = sub.add_parser("experiment", help="run a noise sweep described by an INI config")
    p.add_argument("config", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config's master seed")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    return parser


def _cmd_simulate(args) -> int:
    cfg = SimConfig(
        frames=args.frames,
        damping=args.damping,
        process_noise_rot=args.process_noise_rot,
        process_noise_trans=args.process_noise_trans,
        seed=args.seed,
    )
    noise = NoiseModel(args.rot_noise, args.trans_noise, args.noise_seed)
    pair = simulate_pair(cfg, noise, rig_seed=args.rig_seed, relative_noise=args.relative_noise)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    ext = "txt"
    write_trajectory(args.out_dir / f"cam0.{ext}", pair.traj0, args.format)
    write_trajectory(args.out_dir / f"cam1.{ext}", pair.traj1, args.format)
    write_rig_ground_truth(args.out_dir / "rig.json", pair.rig)
    log.info("wrote %s/cam0.%s, cam1.%s, rig.json", args.out_dir, ext, ext)
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    cfg = CalibratorConfig(
        forgetting=args.forgetting,
        warmup_frames=args.warmup,
        c0_scale=args.c0_scale,
        conditioning_threshold=args.conditioning_threshold,
        use_relative_constraints=args.use_relative_constraints,
        buffer_warmup=args.buffer_warmup,
    )
    t0 = read_trajectory(args.poses0, args.format)
    t1 = read_trajectory(args.poses1, args.format)
    estimates = calibrate_online(t0, t1, cfg)
    ill = sum(e.ill_conditioned for e in estimates)
    if ill:
        log.warning("%d of %d frames had sigma3/sigma4 below %g", ill, len(estimates), cfg.conditioning_threshold)
    if args.output is None:
        write_estimates_csv(sys.stdout, estimates)
    else:
        write_estimates_csv(args.output, estimates)
    return EXIT_OK


def _cmd_batch(args) -> int:
    t0 = read_trajectory(args.poses0, args.format)
    t1 = read_trajectory(args.poses1, args.format)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IllConditionedWarning)
        rig = calibrate_batch(t0, t1)
    for w in caught:
        log.warning("%s", w.message)
    q, t = rig.rotation, rig.translation
    print(" ".join(f"{v:.17g}" for v in (q.w, q.x, q.y, q.z, t[0], t[1], t[2], rig.scale)))
    return EXIT_OK


def _cmd_report(args) -> int:
    estimates = read_estimates_csv(args.estimates)
    truth = read_rig_ground_truth(args.rig)
    records = [compute_frame_errors(e, truth) for e in estimates]
    for r in records:
        r.validate()
    write_error_csv(args.output, records)
    svg = args.svg if args.svg is not None else args.output.with_suffix(".svg")
    frames = [r.frame for r in records]
    curves = {
        name: (frames, [getattr(r, name) for r in records])
        for name in ("rot_geodesic_deg", "rot_axis_angle_deg", "trans_direction_deg")
    }
    svg.write_text(svg_plot(curves, title="calibration error", ylabel="degrees", log_y=args.log_y))
    if records:
        last = records[-1]
        log.info(
            "final frame %d: rotation %.4g deg, translation direction %.4g deg, scale rel %.4g",
            last.frame,
            last.rot_geodesic_deg,
            last.trans_direction_deg,
            last.scale_rel_err,
        )
    return EXIT_OK


def _cmd_experiment(args) -> int:
    cfg = load_experiment_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    trials = cfg.trials if args.trials is None else args.trials
    report = run_experiment(
        cfg.sim,
        cfg.noise_levels,
        cfg.calibrator,
        trials=trials,
        out_dir=args.out_dir,
        master_seed=seed,
        log_y=cfg.log_y,
        jobs=args.jobs,
    )
    for i, lvl in enumerate(report.noise_levels):
        rot = float(np.median(report.metric(i, "rot_geodesic_deg")[:, -1]))
        tr = float(np.median(report.metric(i, "trans_direction_deg")[:, -1]))
        tn = float(np.median(report.metric(i, "trans_norm_err")[:, -1]))
        log.info("%s: median final rotation %.4g deg, translation direction %.4g deg, |dT err| %.4g", lvl.label, rot, tr, tn)
    return EXIT_OK


COMMANDS = {
    "simulate": _cmd_simulate,
    "calibrate": _cmd_calibrate,
    "batch": _cmd_batch,
    "report": _cmd_report,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (CalibrationError, ValueError, OSError) as exc:
        print(f"rigcal {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
