"""Command-line surface: experiment orchestration and file emission.

Subcommands: cues, localize, sweep, beamform, track, validate.  All angle
arguments are taken in degrees; config files hold radians.  Outputs are
CSV (9 significant digits, fixed column order) or JSON for localize, and
are written atomically (temp file + rename) so failures never leave
partial files.
"""

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import beamform, localize as loc, solver, track
from .field import CueSynthesizer, evaluate_exterior, evaluate_interior
from .scene import ConfigError, default_scene, load_config
from .solver import GeometryError


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_spherecue_")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x):
    return f"{x:.9g}"


def _csv(header, rows):
    lines = [header]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _angles(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'theta,phi' in degrees, got {text!r}")
    return float(parts[0]), float(parts[1])


def _load(args):
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = default_scene()
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_cues(args):
    cfg = _load(args)
    synth = CueSynthesizer(cfg)
    th, ph = np.deg2rad(args.source[0]), np.deg2rad(args.source[1])
    c = synth.cues(th, ph)
    rows = [
        (f, hl.real, hl.imag, hr.real, hr.imag, i, t)
        for f, hl, hr, i, t in zip(c.freqs, c.H_L, c.H_R, c.ild, c.itd)
    ]
    _atomic_write(args.out, _csv("f_hz,h_l_re,h_l_im,h_r_re,h_r_im,ild_db,itd_s", rows))
    print(f"wrote {args.out}")
    return 0


def cmd_localize(args):
    cfg = _load(args)
    synth = CueSynthesizer(cfg)
    truth = (np.deg2rad(args.source[0]), np.deg2rad(args.source[1]))
    clean = synth.cues(*truth)
    if np.isinf(args.snr):
        obs = loc.observe(clean)
    else:
        obs = loc.add_cue_noise(clean, args.snr, cfg.seed)
    starts = ((np.deg2rad(args.init[0]), np.deg2rad(args.init[1])),) if args.init else None
    ocfg = loc.OptimizerConfig(
        learning_rate=args.lr,
        max_iters=args.iters,
        patience=min(args.patience, args.iters),
        starts=starts or loc.DEFAULT_STARTS,
    )
    res = loc.localize(obs, synth, ocfg)
    err = loc.angular_error((res.theta_hat, res.phi_hat), truth)
    doc = {
        "estimate_deg": {"theta": float(np.rad2deg(res.theta_hat)),
                         "phi": float(np.rad2deg(res.phi_hat))},
        "truth_deg": {"theta": args.source[0], "phi": args.source[1]},
        "angular_error_deg": err,
        "final_loss": res.final_loss,
        "iterations": res.iterations,
        "converged": res.converged,
        "start_index": res.start_index,
        "trajectory": [[float(a), float(b), float(c)] for a, b, c in res.trajectory],
    }
    _atomic_write(args.out, json.dumps(doc, indent=2) + "\n")
    print(f"wrote {args.out} (error {err:.3f} deg)")
    return 0


def cmd_sweep(args):
    cfg = _load(args)
    synth = CueSynthesizer(cfg)
    snrs = tuple(float(s) for s in args.snr.split(","))
    table = loc.sweep(
        synth, snrs_db=snrs, trials=args.trials, master_seed=cfg.seed, threads=args.threads
    )
    _atomic_write(args.out, _csv(table.CSV_HEADER, table.rows()))
    print(f"wrote {args.out}")
    return 0


def cmd_beamform(args):
    cfg = _load(args)
    grid = beamform.make_grid(args.grid)
    look = (np.deg2rad(args.look[0]), np.deg2rad(args.look[1]))
    freqs, wng_db, df, di_db = beamform.band_metrics(cfg, look, grid)
    rows = list(zip(freqs, wng_db, df, di_db))
    _atomic_write(args.out, _csv("f_hz,wng_db,df,di_db", rows))
    print(f"wrote {args.out}")
    return 0


def cmd_track(args):
    cfg = _load(args)
    synth = CueSynthesizer(cfg)
    traj = track.linear_trajectory(
        np.deg2rad(110.0), np.deg2rad(140.0), np.deg2rad(50.0), np.deg2rad(110.0), args.steps
    )
    run = track.run_tracker(
        synth, traj, args.sigma_ild, args.sigma_itd * 1e-6,
        init=(2.2, 2.6), seed=cfg.seed,
    )
    rows = [
        (t, run.truth[t, 0], run.truth[t, 1], run.estimates[t, 0], run.estimates[t, 1],
         run.errors_deg[t], run.p_traces[t])
        for t in range(len(run.truth))
    ]
    _atomic_write(
        args.out, _csv("t,theta_true,phi_true,theta_hat,phi_hat,err_deg,p_trace", rows)
    )
    print(f"wrote {args.out} (post-transient median "
          f"{np.median(run.errors_deg[len(run.errors_deg) // 3:]):.3f} deg)")
    return 0


def cmd_validate(args):
    cfg = _load(args)
    failures = []
    failures += _validate_geometry(cfg)
    failures += _validate_boundary(cfg)
    failures += _validate_gradient(cfg)
    failures += _validate_translation(cfg)
    if failures:
        for f in failures:
            print(f"FAIL: {f}")
        return 1
    print("all validation suites passed")
    return 0


def _surface_points(n, radius, center, seed=0):
    idx = np.arange(n) + 0.5
    th = np.arccos(1 - 2 * idx / n)
    ph = np.pi * (1 + 5**0.5) * idx
    pts = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)
    return center + radius * pts


def boundary_residuals(cfg, f, p=None, n_points=120, direction=(1.2, 0.7)):
    """Max relative boundary residuals of the solved fields at frequency f.

    Returns a dict with Neumann residuals on S2/S3 (scaled by k_i |psi|)
    and the transmission residuals on S1 (velocity scaled by the exterior
    normal derivative, pressure by the exterior pressure).
    """
    g, med = cfg.geometry, cfg.media
    if p is None:
        p = solver.truncation_degree(med, g, f, cfg.truncation_override)
    k_o, k_i = med.wavenumbers(f)
    inc = solver.plane_wave_from_source(direction[0], direction[1], k_o, p)
    sol = solver.solve_scattering(med, g, f, inc, p)
    h = 1e-6 * g.a1
    out = {}

    for name, radius, center in (
        ("S2", g.a2, np.zeros(3)),
        ("S3", g.a3, np.array([0.0, 0.0, g.offset3_z])),
    ):
        pts = _surface_points(n_points, radius, center)
        res, scale = [], []
        for x in pts:
            nrm = (x - center) / radius
            dv = (evaluate_interior(sol, x + h * nrm) - evaluate_interior(sol, x - h * nrm)) / (2 * h)
            res.append(abs(dv))
            scale.append(abs(k_i * evaluate_interior(sol, x)))
        out[name] = max(res) / max(scale)

    pts = _surface_points(n_points, g.a1, np.zeros(3))
    vres, vscale, pres, pscale = [], [], [], []
    d = med.density_ratio
    for x in pts:
        nrm = x / g.a1
        di = (evaluate_interior(sol, x + h * nrm) - evaluate_interior(sol, x - h * nrm)) / (2 * h)
        de = (evaluate_exterior(sol, inc, x + h * nrm) - evaluate_exterior(sol, inc, x - h * nrm)) / (2 * h)
        vres.append(abs(di - de))
        vscale.append(abs(de))
        pi = evaluate_interior(sol, x)
        po = evaluate_exterior(sol, inc, x)
        pres.append(abs(d * pi - po))
        pscale.append(abs(po))
    out["S1_velocity"] = max(vres) / max(vscale)
    out["S1_pressure"] = max(pres) / max(pscale)
    return out


def _validate_geometry(cfg):
    v = cfg.validate()
    if v:
        return [f"scene: {msg}" for msg in v]
    print("PASS: scene validation")
    return []


def _validate_boundary(cfg):
    failures = []
    f = float(np.mean([cfg.freq_min, cfg.freq_max]))
    p = solver.truncation_degree(cfg.media, cfg.geometry, f, cfg.truncation_override)
    r0 = boundary_residuals(cfg, f, p)
    r1 = boundary_residuals(cfg, f, p + 4)
    for key, val in r0.items():
        if val >= 1e-3:
            failures.append(f"boundary residual {key} = {val:.2e} >= 1e-3 at f={f}")
        if r1[key] >= val:
            failures.append(f"residual {key} did not decrease from p={p} to p={p + 4}")
    if not failures:
        print(f"PASS: boundary residuals at f={f:.0f} Hz (max {max(r0.values()):.2e})")
        print("PASS: truncation convergence (residuals decrease at p+4)")
    return failures


def _validate_gradient(cfg):
    synth = CueSynthesizer(cfg)
    obs = loc.observe(synth.cues(1.9, 0.8))
    failures = []
    step = 1e-5
    for th, ph in [(1.2, 0.5), (2.0, 3.9), (0.9, 5.2)]:
        g = loc.loss_gradient(th, ph, obs, synth)
        fd_t = (loc.normalized_loss(th + step, ph, obs, synth)
                - loc.normalized_loss(th - step, ph, obs, synth)) / (2 * step)
        fd_p = (loc.normalized_loss(th, ph + step, obs, synth)
                - loc.normalized_loss(th, ph - step, obs, synth)) / (2 * step)
        for a, b in ((g[0], fd_t), (g[1], fd_p)):
            if abs(b) > 1e-8 and abs(a - b) / abs(b) > 1e-4:
                failures.append(f"gradient mismatch at ({th},{ph}): {a} vs {b}")
    if not failures:
        print("PASS: analytic gradient matches finite differences")
    return failures


def _validate_translation(cfg):
    from . import specfun, translation

    rng = np.random.default_rng(cfg.seed)
    failures = []
    for kind in ("RR", "SR"):
        k = rng.uniform(2.0, 15.0)
        tau = rng.uniform(0.2, 0.8)
        m0, s = 2, 1
        p = max(int(np.ceil(3 * k * tau)) + 6, 24)
        mat = (translation.coaxial_rr if kind == "RR" else translation.coaxial_sr)(s, k, tau, p)
        coeffs = np.zeros(p - s, complex)
        coeffs[m0 - s] = 1.0
        tgt = mat.apply(coeffs)
        worst = 0.0
        vals = []
        for _ in range(20):
            y = rng.normal(size=3)
            y *= rng.uniform(0.1, 0.4) * tau / np.linalg.norm(y)
            r = np.linalg.norm(y + np.array([0, 0, tau]))
            th = np.arccos((y[2] + tau) / r)
            phn = np.arctan2(y[1], y[0])
            rad, _ = (specfun.bessel_j_arr if kind == "RR" else specfun.hankel_h1_arr)(m0, k * r)
            Y = specfun.harmonic_row(m0, th, phn)
            direct = rad[m0] * Y[specfun.flat_index(m0, s)]
            ry = np.linalg.norm(y)
            thy = np.arccos(y[2] / ry)
            phy = np.arctan2(y[1], y[0])
            rady, _ = specfun.bessel_j_arr(p - 1, k * ry)
            Yy = specfun.harmonic_row(p - 1, thy, phy)
            series = sum(
                tgt[i] * rady[s + i] * Yy[specfun.flat_index(s + i, s)] for i in range(p - s)
            )
            vals.append(abs(direct))
            worst = max(worst, abs(series - direct))
        if worst / max(vals) > 1e-5:
            failures.append(f"addition theorem {kind}: rel err {worst / max(vals):.2e}")
    if not failures:
        print("PASS: translation addition theorem (both kinds)")
    return failures


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="spherecue",
        description="Binaural cues, localization, beamforming and tracking "
                    "on a layered-sphere scattering model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p, out_default):
        p.add_argument("--config", help="scene config JSON (default: built-in scene)")
        p.add_argument("--out", default=out_default, help="output file path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads")

    p = sub.add_parser("cues", help="cue spectrum for a source direction")
    shared(p, "cues.csv")
    p.add_argument("--source", type=_angles, default=(90.0, 45.0),
                   help="source direction 'theta,phi' in degrees")
    p.set_defaults(func=cmd_cues)

    p = sub.add_parser("localize", help="gradient-based localization run")
    shared(p, "localize.json")
    p.add_argument("--source", type=_angles, default=(122.04, 63.03),
                   help="true source direction in degrees")
    p.add_argument("--init", type=_angles, default=None,
                   help="single start 'theta,phi' in degrees (default: multi-start)")
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--patience", type=int, default=100)
    p.add_argument("--snr", type=float, default=np.inf, help="cue SNR in dB")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("sweep", help="direction/noise robustness sweep")
    shared(p, "sweep.csv")
    p.add_argument("--snr", default="20,10,0", help="comma-separated SNR list in dB")
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("beamform", help="matched-filter WNG/DF/DI over the band")
    shared(p, "beamform.csv")
    p.add_argument("--look", type=_angles, default=(122.0, 63.0),
                   help="look direction in degrees")
    p.add_argument("--grid", type=int, default=162, help="direction-grid size")
    p.set_defaults(func=cmd_beamform)

    p = sub.add_parser("track", help="EKF tracking of the reference trajectory")
    shared(p, "track.csv")
    p.add_argument("--steps", type=int, default=60)
    p.add_argument("--sigma-ild", type=float, default=0.5, help="ILD noise in dB")
    p.add_argument("--sigma-itd", type=float, default=10.0, help="ITD noise in microseconds")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("validate", help="run the numerical validation suites")
    shared(p, "validate.txt")
    p.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
