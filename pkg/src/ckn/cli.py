"""Command-line driver: symmetric curves, branch runs, diagram analysis.

Subcommands: symmetric-curve, branch, analyze, gn-limit, reproduce-figures.
A JSON config file provides the run parameters; command-line flags win
over the file.  Exit codes: 0 success, 2 configuration error, 3 solver
non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, continuation, gn, io, svg
from .errors import CknError, ConfigError, NonConvergenceError, StepFailureError
from .eigensolver import SolverCache
from .model import ProblemParams, build_grid, theta_critical
from .symmetric import mu_FS, soliton, soliton_norms, t_symmetric

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _theta_tag(theta: float) -> str:
    return f"{theta:.6f}"


def _load_config(args) -> io.RunConfig:
    if args.config:
        config = io.RunConfig.load(args.config)
    else:
        config = io.RunConfig()
    overrides = {}
    for flag, name in [
        ("d", "d"), ("p", "p"), ("theta", "theta_list"),
        ("measure_mode", "measure_mode"), ("L", "L"), ("ns", "n_s"),
        ("nphi", "n_phi"), ("mu0_factor", "mu0_factor"), ("eps", "eps"),
        ("eta", "eta"), ("kappa_stop", "kappa_stop"), ("out", "out"),
    ]:
        v = getattr(args, flag, None)
        if v is not None:
            overrides[name] = v
    if overrides:
        data = dataclasses.asdict(config)
        data.update(overrides)
        config = io.RunConfig(**data)
    return config


def _grid(config: io.RunConfig):
    params = config.params()
    mu_fs = mu_FS(config.p, config.d)
    L = config.half_length(mu_fs * config.mu_min_factor)
    return build_grid(L, config.n_s, config.n_phi, params), params


def _mu_grid(config: io.RunConfig, mu_max: float | None = None):
    mu_fs = mu_FS(config.p, config.d)
    hi = mu_max if mu_max is not None else 40.0 * mu_fs
    return np.geomspace(config.mu_min_factor * mu_fs * 0.5, hi, 400)


def cmd_symmetric_curve(config: io.RunConfig, out: Path) -> list[Path]:
    """Closed-form symmetric curve tables, one CSV per theta."""
    params = config.params()
    files = []
    mus = _mu_grid(config)
    for theta in config.theta_list:
        rows = []
        for mu in mus:
            X, Y, Z = soliton_norms(mu, config.p, config.d, config.measure_mode)
            lam, J = analysis.curve_values(theta, mu, X, Y, Z, config.p)
            rows.append((float(mu), float(lam), float(J),
                         t_symmetric(mu, config.p), X, Y, Z))
        path = out / f"sym_curve_{_theta_tag(theta)}.csv"
        io.write_csv(path, io.config_echo(config) + [f"theta: {theta!r}"],
                     ["mu", "Lambda", "J", "t", "X", "Y", "Z"], rows)
        files.append(path)
    return files


def cmd_branch(config: io.RunConfig, out: Path) -> list[Path]:
    """Initialize and continue the non-symmetric branch; emit branch.csv."""
    grid, params = _grid(config)
    store = io.FieldStore(out / "checkpoints")
    cache = SolverCache()
    mu_fs = mu_FS(config.p, config.d)

    t0 = time.time()
    start, fp = continuation.initialize(
        config.mu0_factor * mu_fs, config.eps, grid, params, store, cache)
    eta = config.eta if config.eta is not None else start.kappa / 200.0
    kappa_stop = config.kappa_stop if config.kappa_stop is not None else 2.0 * start.kappa
    down = continuation.continue_branch(
        start, eta, "down", 0.0, grid, params, store, start_result=fp,
        cache=cache, mu_min_factor=config.mu_min_factor, tol=config.tol)
    up = continuation.continue_branch(
        start, eta, "up", kappa_stop, grid, params, store, start_result=fp,
        cache=cache, mu_min_factor=config.mu_min_factor, tol=config.tol)
    branch = continuation.merge_branches(down, up)
    elapsed = time.time() - t0

    header = ["kappa", "mu"]
    for theta in config.theta_list:
        header.append(f"Lambda_{_theta_tag(theta)}")
    for theta in config.theta_list:
        header.append(f"J_{_theta_tag(theta)}")
    header += ["t", "asymmetry", "checkpoint"]
    rows = []
    for pt in branch.points:
        row = [pt.kappa, pt.mu]
        for theta in config.theta_list:
            lam, _ = analysis.curve_values(theta, pt.mu, pt.X, pt.Y, pt.Z, config.p)
            row.append(float(lam))
        for theta in config.theta_list:
            _, J = analysis.curve_values(theta, pt.mu, pt.X, pt.Y, pt.Z, config.p)
            row.append(float(J))
        row += [pt.t, pt.asymmetry, pt.field_ref]
        rows.append(row)
    path = out / "branch.csv"
    io.write_csv(path, io.config_echo(config), header, rows)

    manifest = out / "manifest.json"
    io.write_manifest(manifest, config, {
        "timings": {"branch_seconds": elapsed},
        "convergence": {
            "eta": eta,
            "eta_halvings": down.provenance["halvings"] + up.provenance["halvings"],
            "points_down": len(down.points),
            "points_up": len(up.points),
            "kappa_range": [branch.points[0].kappa, branch.points[-1].kappa],
        },
        "provenance": {
            "mu0": config.mu0_factor * mu_fs, "eps": config.eps,
            "seed_direction": "transverse mode phi1(s) cos(phi)",
        },
    })
    return [path, manifest]


def _branch_curves_from_csv(path, theta: float, params: ProblemParams):
    comments, header, rows = io.read_csv(path)
    tag = f"Lambda_{_theta_tag(theta)}"
    if tag not in header:
        raise ConfigError(f"{path} has no columns for theta={theta}")
    iL, iJ = header.index(tag), header.index(f"J_{_theta_tag(theta)}")
    i_mu, i_asym = header.index("mu"), header.index("asymmetry")
    mu = np.array([r[i_mu] for r in rows])
    Lam = np.array([r[iL] for r in rows])
    J = np.array([r[iJ] for r in rows])
    asym = np.array([r[i_asym] for r in rows])
    order = np.argsort(mu)
    return analysis.ThetaCurve(
        theta=theta, mu=mu[order], Lambda=Lam[order], J=J[order],
        symmetric=asym[order] <= analysis.SYMMETRIC_FLAG_ASYMMETRY,
        source=str(path), params=params)


def _field_contour_csv(config, out: Path, name: str, field) -> Path:
    rows = []
    g = field.grid
    for i, s in enumerate(g.s):
        for j, phi in enumerate(g.phi):
            rows.append((float(s), float(phi), float(field.values[i, j])))
    path = out / name
    io.write_csv(path, io.config_echo(config), ["s", "phi", "u"], rows)
    return path


def cmd_analyze(config: io.RunConfig, out: Path) -> list[Path]:
    """Crossings, envelopes, existence threshold, and SVG diagrams."""
    branch_csv = out / "branch.csv"
    if not branch_csv.exists():
        raise FileNotFoundError(f"{branch_csv} not found: run the branch command first")
    files = []
    params = config.params()
    mu_fs = mu_FS(config.p, config.d)

    profile = gn.radial_ground_state(config.p, config.d)
    theta_c = theta_critical(config.p, config.d)
    j_inf = gn.J_infinity(config.p, config.d, config.measure_mode, profile)
    lam_gn = analysis.lambda_GN(config.p, config.d, j_inf, config.measure_mode)
    gn_path = out / "gn.csv"
    io.write_csv(gn_path, io.config_echo(config),
                 ["Theta", "J_inf", "Lambda_GN"], [(theta_c, j_inf, lam_gn)])
    files.append(gn_path)

    # Symmetric reference resolved by the same discrete functional as the
    # branch, so the tiny J gaps near a crossing are bias-cancelled.
    grid, _ = _grid(config)
    store = io.FieldStore(out / "checkpoints")
    cache = SolverCache()
    kappa_fs = float(soliton_norms(mu_fs, config.p, config.d, config.measure_mode)[2]
                     ** ((config.p - 2.0) / config.p))
    _, header_b, rows_b = io.read_csv(branch_csv)
    kap_branch = np.array([r[header_b.index("kappa")] for r in rows_b], dtype=float)
    kap_hi = max(kap_branch.max(), 1.5 * kappa_fs)
    kappas = np.concatenate([
        np.geomspace(0.3 * kappa_fs, kap_hi, 60),
        np.linspace(0.985 * kappa_fs, 1.02 * kappa_fs, 40),
    ])
    sym_branch = continuation.symmetric_discrete_branch(kappas, grid, params, store, cache)

    crossing_rows = []
    for theta in config.theta_list:
        nonsym = _branch_curves_from_csv(branch_csv, theta, params)
        mu_hi = max(nonsym.mu.max() * 1.2, 4.0 * mu_fs)
        sym_smooth = analysis.symmetric_theta_curve(
            params, theta, np.geomspace(config.mu_min_factor * mu_fs * 0.5, mu_hi, 600))
        sym = analysis.map_to_theta(sym_branch, theta)
        try:
            crossing = analysis.detect_crossing(sym, nonsym)
            flagged = False
        except analysis.AmbiguousCrossingError as exc:
            crossing = exc.crossings[0] if exc.crossings else None
            flagged = True
        if crossing is None:
            crossing_rows.append((theta, float("nan"), float("nan"), float("nan"),
                                  "false", "true" if flagged else "false"))
        else:
            crossing_rows.append((theta, crossing.Lambda1, crossing.mu1_star,
                                  crossing.mu1, "true", "true" if flagged else "false"))

        lo = max(np.min(nonsym.Lambda), np.min(sym.Lambda))
        hi = min(np.max(nonsym.Lambda), np.max(sym.Lambda))
        grid_l = np.linspace(lo, hi, 400)
        rows, jumps = analysis.min_envelope([sym, nonsym], grid_l)
        env_path = out / f"envelope_{_theta_tag(theta)}.csv"
        io.write_csv(env_path, io.config_echo(config) + [f"jumps: {jumps!r}"],
                     ["Lambda", "J_min", "source"],
                     [(l, j, ("symmetric", "branch")[s] if s >= 0 else "none")
                      for (l, j, s) in rows])
        files.append(env_path)

        diagram = out / f"diagram_{_theta_tag(theta)}.svg"
        ok = np.isfinite([r[1] for r in rows])
        env_xy = (np.array([r[0] for r in rows])[ok], np.array([r[1] for r in rows])[ok])
        svg.render_diagram(
            diagram, (nonsym.Lambda, nonsym.J), (sym_smooth.Lambda, sym_smooth.J), env_xy,
            title=f"d={config.d} p={config.p} theta={theta:.4f}")
        files.append(diagram)

        if crossing is not None and not flagged:
            i_mu, i_cp = header_b.index("mu"), header_b.index("checkpoint")
            cands = [r for r in rows_b if isinstance(r[i_cp], str) and r[i_cp]]
            near = min(cands, key=lambda r: abs(r[i_mu] - crossing.mu1))
            try:
                fld = store.load(near[i_cp])
                files.append(_field_contour_csv(
                    config, out, f"crossing_field_mu1_{_theta_tag(theta)}.csv", fld))
            except CknError:
                pass
            u_star = soliton(crossing.mu1_star, config.p).sample(grid)
            files.append(_field_contour_csv(
                config, out, f"crossing_field_mu1_star_{_theta_tag(theta)}.csv", u_star))

    cr_path = out / "crossings.csv"
    io.write_csv(cr_path, io.config_echo(config),
                 ["theta", "Lambda1", "mu1_star", "mu1", "found", "ambiguous"],
                 crossing_rows)
    files.append(cr_path)
    return files


def cmd_gn_limit(config: io.RunConfig, out: Path) -> list[Path]:
    profile = gn.radial_ground_state(config.p, config.d)
    theta_c = theta_critical(config.p, config.d)
    j_inf = gn.J_infinity(config.p, config.d, config.measure_mode, profile)
    lam_gn = analysis.lambda_GN(config.p, config.d, j_inf, config.measure_mode)
    path = out / "gn.csv"
    io.write_csv(path, io.config_echo(config),
                 ["Theta", "J_inf", "Lambda_GN"], [(theta_c, j_inf, lam_gn)])
    return [path]


def cmd_reproduce_figures(config: io.RunConfig, out: Path) -> list[Path]:
    """Canonical d=5 sweep: theta family at p=2.8 plus the three regimes
    p in {2.8, 2.78, 2.7} at the critical theta, and the near-critical
    theta comparison."""
    files = []
    theta_c = theta_critical(2.8, 5)
    scenarios = [
        ("p2.8_theta_family", 2.8, sorted(set([round(theta_c, 6)] + list(config.theta_list)))),
        ("p2.78_theta_critical", 2.78, [round(theta_c, 6)]),
        ("p2.7_theta_critical", 2.7, [round(theta_c, 6)]),
        ("p2.8_theta_near_critical", 2.8, [round(theta_c, 6), 0.7213, 0.7283]),
    ]
    base = dataclasses.asdict(config)
    for name, p, thetas in scenarios:
        sub = dict(base)
        sub.update({"p": p, "theta_list": thetas, "out": str(out / name),
                    "run_id": f"{config.run_id}/{name}"})
        sub_cfg = io.RunConfig(**sub)
        sub_out = out / name
        sub_out.mkdir(parents=True, exist_ok=True)
        files += cmd_symmetric_curve(sub_cfg, sub_out)
        files += cmd_branch(sub_cfg, sub_out)
        files += cmd_analyze(sub_cfg, sub_out)
    return files


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ckn",
        description="Critical points and symmetry breaking of the "
                    "Caffarelli-Kohn-Nirenberg quotient on the cylinder",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in [
        ("symmetric-curve", cmd_symmetric_curve),
        ("branch", cmd_branch),
        ("analyze", cmd_analyze),
        ("gn-limit", cmd_gn_limit),
        ("reproduce-figures", cmd_reproduce_figures),
    ]:
        sp = sub.add_parser(name, help=fn.__doc__)
        sp.set_defaults(fn=fn)
        sp.add_argument("--config", type=str, default=None, help="JSON config file")
        sp.add_argument("--d", type=int)
        sp.add_argument("--p", type=float)
        sp.add_argument("--theta", type=float, nargs="+")
        sp.add_argument("--L", type=float)
        sp.add_argument("--ns", type=int)
        sp.add_argument("--nphi", type=int)
        sp.add_argument("--measure-mode", dest="measure_mode",
                        choices=("probability", "surface"))
        sp.add_argument("--mu0-factor", dest="mu0_factor", type=float)
        sp.add_argument("--eps", type=float)
        sp.add_argument("--eta", type=float)
        sp.add_argument("--kappa-stop", dest="kappa_stop", type=float)
        sp.add_argument("--out", type=str)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        files = args.fn(config, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, StepFailureError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, FileNotFoundError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CknError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
