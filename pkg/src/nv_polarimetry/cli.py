"""Command-line front end: ``nv-polarimetry <command> [options]``.

Every command writes CSV to ``--output`` (stdout when omitted). Physical
parameters come from ``--config`` (or the file named by
``NV_POLARIMETRY_CONFIG``); explicit flags override the file.

Exit codes: 0 success, 2 usage, 3 bad data, 4 I/O.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import sys

from . import dynamics, inference, montecarlo, optics, spectra
from .dynamics import Averaging, Branch, Weighting
from .model import DomainError, EmitterConfig, load_config

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


def parse_angles(text: str) -> list[float]:
    """``"0:180:5"`` (stop excluded) or ``"0,45,90"``."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"bad range {text!r}; expected start:stop:step")
        start, stop, step = parts
        n = int(math.ceil((stop - start) / step - 1e-9))
        return [start + i * step for i in range(max(n, 0))]
    return [float(p) for p in text.split(",") if p.strip()]


def _angles_arg(text: str) -> list[float]:
    try:
        return parse_angles(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _physics_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("emitter")
    g.add_argument("--config", help="key=value config file")
    g.add_argument("--delta", type=float, help="branch splitting, GHz")
    g.add_argument("--tau", type=float, help="radiative lifetime, ns")
    g.add_argument("--temperature", type=float, help="bath temperature, K")
    rate = g.add_mutually_exclusive_group()
    rate.add_argument("--gamma", type=float, help="bath flip rate, 1/ns")
    rate.add_argument("--gamma-inv", type=float, help="inverse bath flip rate, ns")
    g.add_argument("--dipole-x", type=float, dest="dipole_x_angle", help="E_x dipole angle, deg")
    g.add_argument("--linewidth", type=float, help="line FWHM, MHz")


def _model_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--averaging", choices=[a.value for a in Averaging], default=Averaging.POINT.value,
                   help="pre-emission population average (default: value at t=tau)")
    p.add_argument("--weighting", choices=[w.value for w in Weighting], default=Weighting.SQUARED.value,
                   help="power of the populations in the polarizer law (default: squared)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nv-polarimetry", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("-o", "--output", help="output CSV (default stdout)")
        p.add_argument("--seed", type=int, default=0, help="seed for every random stream")
        _physics_options(p)
        return p

    p = add("fig4", "contrast and population ratio against gamma^-1")
    p.add_argument("--grid", type=_angles_arg, help="explicit gamma^-1 values, ns (list or start:stop:step)")
    p.add_argument("--grid-min", type=float, default=1.0)
    p.add_argument("--grid-max", type=float, default=1000.0)
    p.add_argument("--points", type=int, default=200)

    p = add("sweep", "polarizer (emission) or laser-polarization (excitation) sweep")
    p.add_argument("--mode", required=True, help="emission or excitation")
    p.add_argument("--angles", type=_angles_arg, default=parse_angles("0:180:5"))
    p.add_argument("--qwp", type=float, help="quarter-wave plate fast axis before the polarizer, deg")
    p.add_argument("--mc", action="store_true", help="use Monte Carlo photons instead of the analytic law")
    p.add_argument("--n", type=int, default=montecarlo.DEFAULT_N, help="Monte Carlo photons")
    p.add_argument("--branch", choices=["X", "Y"], default="X", help="pumped branch / S_z line")
    p.add_argument("--half-width", type=float, default=0.2, help="excitation window half width, GHz")
    p.add_argument("--points", type=int, default=801)
    p.add_argument("--drift", type=float, default=0.0, help="laser drift per sweep, MHz")
    p.add_argument("--noise", type=float, default=0.0, help="Poisson count scale (0: noiseless)")
    _model_options(p)

    p = add("qwp", "contrast against quarter-wave-plate angle")
    p.add_argument("--qwp-angles", type=_angles_arg, default=parse_angles("0:180:1"))
    p.add_argument("--angles", type=_angles_arg, default=parse_angles("0:180:5"), help="polarizer angles")
    p.add_argument("--hypothesis", choices=["mixture", "elliptical"], default="mixture")
    _model_options(p)

    p = add("spectrum", "excitation spectrum over all six lines")
    p.add_argument("--f-start", type=float)
    p.add_argument("--f-stop", type=float)
    p.add_argument("--points", type=int, default=4001)
    p.add_argument("--laser-angle", type=float, default=45.0)
    p.add_argument("--noise", type=float, default=0.0)

    p = add("mc", "Monte Carlo trajectories or occupation curve")
    p.add_argument("--n", type=int, default=montecarlo.DEFAULT_N)
    p.add_argument("--branch", choices=["X", "Y"], default="X", help="initially pumped branch")
    p.add_argument("--occupation", type=_angles_arg, metavar="TIMES",
                   help="write p_x(t) estimates on these times (ns) instead of raw samples")
    p.add_argument("--symmetric", action="store_true", help="equal up/down rates (ignore detailed balance)")

    p = add("fit", "fit sweep CSVs and invert contrast to gamma")
    p.add_argument("inputs", nargs="+", help="angle_deg,intensity CSV files")
    _model_options(p)
    return parser


def _emitter(args) -> EmitterConfig:
    gamma = args.gamma
    if getattr(args, "gamma_inv", None) is not None:
        if not args.gamma_inv > 0:
            raise DomainError("--gamma-inv must be positive")
        gamma = 1.0 / args.gamma_inv
    return load_config(
        args.config, delta=args.delta, tau=args.tau, temperature=args.temperature,
        gamma=gamma, dipole_x_angle=args.dipole_x_angle, linewidth=args.linewidth,
    )


@contextlib.contextmanager
def _open_output(path):
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        yield fh


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_fig4(args, cfg: EmitterConfig) -> int:
    if args.grid is not None:
        grid = args.grid
    elif args.points >= 1:
        grid = dynamics.log_grid(args.grid_min, args.grid_max, args.points)
    else:
        grid = []
    if len(grid) == 0:
        raise UsageError("empty gamma^-1 grid")
    rows = dynamics.figure4_table(cfg.level.tau, grid)
    with _open_output(args.output) as fh:
        dynamics.write_figure4_csv(rows, fh)
    return EXIT_OK


def emission_stokes(cfg: EmitterConfig, branch: Branch, averaging, weighting) -> optics.StokesVector:
    avg = dynamics.averages(cfg.gamma, cfg.level.tau, branch, averaging)
    return optics.mixture_to_stokes(optics.emission_mixture(avg, cfg.level, weighting))


def cmd_sweep(args, cfg: EmitterConfig) -> int:
    branch = Branch(args.branch)
    if args.mode == "emission":
        if args.mc:
            if args.qwp is not None:
                raise UsageError("--qwp is only available for the analytic emission sweep")
            mc_cfg = montecarlo.McConfig(args.n, args.seed, cfg.rates(), cfg.level.tau, branch)
            samples = montecarlo.simulate(mc_cfg)
            rows = montecarlo.empirical_polarizer_sweep(samples, cfg.level.dipole_x_angle, args.angles, seed=args.seed)
            _note(f"emitted from E_x: {samples.fraction_x:.6f} of {len(samples)} photons")
        else:
            stokes = emission_stokes(cfg, branch, args.averaging, args.weighting)
            rows = optics.polarizer_sweep(stokes, args.qwp, args.angles)
        with _open_output(args.output) as fh:
            optics.write_sweep_csv(rows, fh)
    elif args.mode == "excitation":
        lines = spectra.build_lines(cfg.level)
        line = spectra.sz_line(lines, branch)
        plan = spectra.plan_around(line, args.half_width, args.points, drift_rate=args.drift, noise=args.noise)
        acc = spectra.polarization_accumulation(plan, args.angles, cfg.level, lines, seed=args.seed)
        with _open_output(args.output) as fh:
            spectra.write_accumulation_csv(acc, fh)
    else:
        raise UsageError(f"unknown sweep mode {args.mode!r}; expected emission or excitation")
    return EXIT_OK


def cmd_qwp(args, cfg: EmitterConfig) -> int:
    stokes = emission_stokes(cfg, Branch.X, args.averaging, args.weighting)
    if args.hypothesis == "elliptical":
        # same linear part, remaining intensity put into a coherent circular component
        q = stokes.degree_of_linear_polarization
        phi = math.radians(cfg.level.dipole_x_angle)
        stokes = optics.StokesVector(1.0, q * math.cos(2 * phi), q * math.sin(2 * phi), math.sqrt(max(0.0, 1 - q * q)))
    rows = optics.qwp_contrast_scan(stokes, args.qwp_angles, args.angles)
    best = max(rows, key=lambda r: r[1])
    _note(f"{args.hypothesis}: DOP {stokes.degree_of_polarization:.6f}, "
          f"max contrast {best[1]:.6f} at QWP {best[0]:g} deg")
    with _open_output(args.output) as fh:
        optics.write_sweep_csv(rows, fh, header=("qwp_deg", "contrast"))
    return EXIT_OK


def cmd_spectrum(args, cfg: EmitterConfig) -> int:
    lines = spectra.build_lines(cfg.level)
    centers = [ln.center for ln in lines]
    f_start = args.f_start if args.f_start is not None else min(centers) - 1.0
    f_stop = args.f_stop if args.f_stop is not None else max(centers) + 1.0
    plan = spectra.SweepPlan(f_start, f_stop, args.points, args.laser_angle, noise=args.noise)
    rng = spectra.row_rng(args.seed, 0) if args.noise > 0 else None
    f, y = spectra.spectrum(plan, lines, cfg.level, rng=rng)
    with _open_output(args.output) as fh:
        spectra.write_spectrum_csv(f, y, fh)
    return EXIT_OK


def cmd_mc(args, cfg: EmitterConfig) -> int:
    rates = cfg.rates()
    if args.symmetric:
        rates = type(rates).symmetric(cfg.gamma)
    mc_cfg = montecarlo.McConfig(args.n, args.seed, rates, cfg.level.tau, Branch(args.branch))
    with _open_output(args.output) as fh:
        if args.occupation is not None:
            if not args.occupation:
                raise UsageError("empty occupation time grid")
            montecarlo.write_occupation_csv(montecarlo.occupation_curve(mc_cfg, args.occupation), fh)
        else:
            samples = montecarlo.simulate(mc_cfg)
            _note(f"emitted from E_x: {samples.fraction_x:.6f}; mean flips {samples.n_flips.mean():.4f}")
            montecarlo.write_samples_csv(samples, fh)
    return EXIT_OK


def cmd_fit(args, cfg: EmitterConfig) -> int:
    tau = cfg.level.tau
    rows = inference.batch_report(args.inputs, tau, args.averaging, args.weighting)
    failed = False
    for r in rows:
        if r.flag.startswith("error:"):
            failed = True
            _note(f"{r.id}: {r.flag}")
            continue
        line = (f"{r.id}: contrast {r.contrast:.6f} +/- {r.contrast_sigma:.2g}, "
                f"gamma^-1 {r.gamma_inv:.4g} ns [{r.ci_low:.4g}, {r.ci_high:.4g}] (tau = {tau:g} ns)")
        if r.flag:
            line += f"  [{r.flag}]"
        _note(line)
    with _open_output(args.output) as fh:
        inference.write_report_csv(rows, fh)
    return EXIT_DATA if failed else EXIT_OK


COMMANDS = {
    "fig4": cmd_fig4,
    "sweep": cmd_sweep,
    "qwp": cmd_qwp,
    "spectrum": cmd_spectrum,
    "mc": cmd_mc,
    "fit": cmd_fit,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _emitter(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        parser.error(str(exc))  # exits with EXIT_USAGE
    except OSError as exc:
        _note(f"error: {exc.filename or ''}: {exc.strerror or exc}")
        return EXIT_IO
    except (ValueError, DomainError) as exc:
        _note(f"error: {exc}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
