"""``hinf`` command-line interface.

Exit codes: 0 success, 1 infeasible or failed property, 2 input error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import re
import sys

import numpy as np

from . import pencil as _pencil
from .analysis import hinf_norm, sigma_grid
from .errors import (
    CenterIsPole,
    HinfError,
    InfeasibleError,
    InputError,
    NumericalError,
    SingularPencil,
    UnstableSystem,
)
from .realization import (
    CenteredRealization,
    DescriptorRealization,
    evaluate,
    from_descriptor,
    gamma_scale,
    poles,
)
from .riccati import riccati_residual
from .synthesis import (
    central_controller,
    check_hypotheses,
    minimal_gamma,
    synthesize,
    verify_closed_loop,
)
from .sysfile import SchemaError, SystemFile, format_sigma_csv, load_system, save_system

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


def _code(exc) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "-", type(exc).__name__).lower()


def _complex_arg(text: str) -> complex:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}") from None
    if len(parts) == 1:
        return complex(parts[0], 0.0)
    if len(parts) == 2:
        return complex(parts[0], parts[1])
    raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")


def _gamma_arg(text: str):
    if text == "auto":
        return text
    try:
        g = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("gamma must be a positive number or 'auto'") from None
    if not g > 0:
        raise argparse.ArgumentTypeError("gamma must be positive")
    return g


def _fmt(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.10g}"
    return f"{z.real:.10g}{z.imag:+.10g}j"


def _centered(sf: SystemFile, z0=None) -> CenteredRealization:
    s = sf.system
    if isinstance(s, DescriptorRealization):
        return from_descriptor(s, 1.0 if z0 is None else z0)
    return s


def _matching_center(sys, alpha):
    """Bring a controller file to the plant's center."""
    if isinstance(sys, DescriptorRealization):
        return from_descriptor(sys, alpha * alpha, alpha)
    if abs(sys.alpha - alpha) > 1e-12:
        raise InputError("controller and plant are centered at different points")
    return sys


def cmd_convert(args) -> int:
    sf = load_system(args.input)
    if sf.kind != "descriptor":
        raise SchemaError("convert expects a descriptor file")
    try:
        sys_c = from_descriptor(sf.system, args.z0)
    except (CenterIsPole, SingularPencil) as exc:
        print(f"error[{_code(exc)}]: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = SystemFile(sys_c, sf.partition)
    if args.output:
        save_system(out, args.output)
    print(f"order {sys_c.n}")
    for row in sys_c.D:
        print("D " + " ".join(_fmt(v) for v in row))
    return EXIT_OK


def cmd_check(args) -> int:
    plant = load_system(args.plant).plant()
    rep = check_hypotheses(plant)
    print(f"h1 stabilizable={str(rep.h1_stab).lower()} detectable={str(rep.h1_detect).lower()}")
    print(f"h2={str(rep.h2).lower()} worst_sigma_min={rep.worst_h2_sigma_min:.6g}")
    print(f"h3={str(rep.h3).lower()} worst_sigma_min={rep.worst_h3_sigma_min:.6g}")
    return EXIT_OK if rep.all_pass else EXIT_FAIL


def cmd_synth(args) -> int:
    plant = load_system(args.plant).plant()
    rep = check_hypotheses(plant)
    if not rep.all_pass:
        print("hypotheses fail; run 'hinf check' for details", file=sys.stderr)
        return EXIT_FAIL
    gamma = minimal_gamma(plant) if args.gamma == "auto" else args.gamma
    scaled = gamma_scale(plant, gamma)
    gen = synthesize(scaled)
    d = gen.data
    print(f"gamma {gamma:.10g}")
    print(f"residual_X {riccati_residual(d.sigma_c, d.X):.3e}")
    print(f"residual_Z {riccati_residual(d.sigma_cross, d.Z):.3e}")
    print(f"lambda_max_X {np.linalg.eigvalsh(d.X)[-1]:.6g}")
    print(f"lambda_max_Z {np.linalg.eigvalsh(d.Z)[-1]:.6g}")
    g = gen.gen
    if args.output:
        save_system(SystemFile(g.sys, {"m1": g.m1, "m2": g.m2, "p1": g.p1, "p2": g.p2}),
                    args.output)
    if args.central:
        save_system(SystemFile(central_controller(gen)), args.central)
    return EXIT_OK


def cmd_verify(args) -> int:
    plant = load_system(args.plant).plant()
    K = _matching_center(load_system(args.controller).system, plant.sys.alpha)
    stable, nr, G = verify_closed_loop(plant, K, tol=args.tol)
    spec = poles(G)
    moduli = sorted(np.abs(spec.finite)) + [np.inf] * spec.infinite_count
    if not stable:
        print("unstable")
        print("pole moduli " + " ".join(f"{r:.6g}" for r in moduli))
        return EXIT_FAIL
    print(f"stable, norm {nr.value:.4f}")
    print(f"norm_bracket {nr.lower:.10g} {nr.upper:.10g}")
    print("pole moduli " + " ".join(f"{r:.6g}" for r in moduli))
    return EXIT_OK if nr.upper < args.gamma else EXIT_FAIL


def cmd_sigma(args) -> int:
    s = _centered(load_system(args.system), args.z0)
    if args.points < 1:
        raise InputError("--points must be at least 1")
    theta, sv = sigma_grid(s, args.points)
    text = format_sigma_csv(theta, sv)
    if args.output:
        with open(args.output, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_norm(args) -> int:
    s = _centered(load_system(args.system), args.z0)
    try:
        nr = hinf_norm(s, tol=args.tol)
    except UnstableSystem:
        print("unstable")
        return EXIT_FAIL
    print(f"{nr.value:.10g}")
    return EXIT_OK


def cmd_eval(args) -> int:
    sf = load_system(args.system)
    if isinstance(sf.system, DescriptorRealization):
        G = sf.system(args.z)
    else:
        G = evaluate(sf.system, args.z)
    for row in G:
        print(" ".join(_fmt(v) for v in row))
    return EXIT_OK


def cmd_poles(args) -> int:
    s = load_system(args.system).system
    spec = _pencil.generalized_spectrum(_pencil.MatrixPencil(s.A, s.E))
    for lam in sorted(spec.finite, key=lambda v: (abs(v), np.angle(v))):
        print(_fmt(lam))
    print(f"infinite {spec.infinite_count}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hinf", description="H-infinity synthesis for centered "
                                "discrete-time realizations.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("convert", help="descriptor file -> centered file")
    c.add_argument("input")
    c.add_argument("--z0", type=_complex_arg, default=1.0)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_convert)

    c = sub.add_parser("check", help="regularity hypotheses of a partitioned plant")
    c.add_argument("plant")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("synth", help="controller generator and central controller")
    c.add_argument("plant")
    c.add_argument("--gamma", type=_gamma_arg, default=1.0,
                   help="performance level, or 'auto' for feasibility bisection")
    c.add_argument("-o", "--output", help="generator file")
    c.add_argument("--central", help="central controller file")
    c.set_defaults(func=cmd_synth)

    c = sub.add_parser("verify", help="closed-loop stability and norm")
    c.add_argument("plant")
    c.add_argument("controller")
    c.add_argument("--gamma", type=float, default=1.0)
    c.add_argument("--tol", type=float, default=1e-6)
    c.set_defaults(func=cmd_verify)

    c = sub.add_parser("sigma", help="singular values on the unit circle as CSV")
    c.add_argument("system")
    c.add_argument("--points", type=int, default=256)
    c.add_argument("--z0", type=_complex_arg, default=None)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_sigma)

    c = sub.add_parser("norm", help="H-infinity norm")
    c.add_argument("system")
    c.add_argument("--tol", type=float, default=1e-6)
    c.add_argument("--z0", type=_complex_arg, default=None)
    c.set_defaults(func=cmd_norm)

    c = sub.add_parser("eval", help="evaluate the transfer matrix")
    c.add_argument("system")
    c.add_argument("--z", type=_complex_arg, required=True)
    c.set_defaults(func=cmd_eval)

    c = sub.add_parser("poles", help="generalized eigenvalues of the pole pencil")
    c.add_argument("system")
    c.set_defaults(func=cmd_poles)
    return p


_COMPLEX_FLAGS = ("--z0", "--z")


def _join_complex_flags(argv):
    """``--z0 -1,0`` -> ``--z0=-1,0`` so argparse does not read the value as an option."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _COMPLEX_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    seed = os.environ.get("HINF_SEED")
    if seed:
        try:
            _pencil.REGULARITY_SEED = int(seed, 0)
        except ValueError:
            print(f"error: HINF_SEED must be an integer, got {seed!r}", file=sys.stderr)
            return EXIT_INPUT
    parser = build_parser()
    try:
        args = parser.parse_args(_join_complex_flags(sys.argv[1:] if argv is None else list(argv)))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error[{_code(exc)}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleError as exc:
        print(f"infeasible[{_code(exc)}]: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except NumericalError as exc:
        print(f"numerical[{_code(exc)}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except HinfError as exc:
        print(f"error[{_code(exc)}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
