"""Command-line interface: ``knotbend check|energy|variation|mesh FILE``.

Reports go to standard output (or ``--report PATH``) as ``[section]``
blocks of ``key = value`` lines.  ``--figures DIR`` additionally renders
PNG figures.  Exit codes: 0 success, 2 bad input, 3 geometry error,
4 near-self-intersection, 5 write failure.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, energies, exprlang, meshout
from .bendfield import NotBendingFieldError, bend, bend_report, build_field, require_bending
from .curvegeom import GeometryError, sample_curve
from .knotfile import KnotFileError, load_knot
from .report import Report
from .variations import fd_variation

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_GEOMETRY = 3
EXIT_INTERSECTION = 4
EXIT_WRITE = 5

DEFAULT_SAMPLES = 512
FD_EPS = (1e-2, 1e-3, 1e-4)
ISOMETRY_EPS = (1e-2, 5e-3, 2.5e-3)
ENERGY_KINDS = {"willmore": "W", "mobius": "E"}
VARIATION_KINDS = ("k", "tau", "t", "n1", "n2", "willmore", "mobius")


class InputError(ValueError):
    """Command-line input that cannot be acted on."""


def _load(args):
    spec = load_knot(args.file)
    c = sample_curve(spec.curve, args.samples)
    return spec, c


def _field(spec, c, required=True):
    if spec.field is None:
        if required:
            raise InputError(f"{spec.source} has no [field] section")
        return None
    return build_field(c, spec.field)


def _header(report, spec, c, command):
    report.update(
        "input",
        {"command": command, "file": Path(spec.source).name, "samples": c.n, "period": c.param_period},
    )


def _slopes(values):
    return [("%.6g" % s) if np.isfinite(s) else "n/a" for s in values]


def _fd_section(report, name, vr):
    report.add(name, "scheme", vr.scheme)
    report.add(name, "eps", list(vr.eps))
    report.add(name, "errors", [float(e) for e in vr.errors])
    report.add(name, "slopes", ", ".join(_slopes(vr.slopes)))


# --------------------------------------------------------------------------
# commands


def cmd_check(args):
    spec, c = _load(args)
    rep = Report()
    _header(rep, spec, c, "check")
    rep.update(
        "curve",
        {
            "biregular": True,
            "length": c.length,
            "closure_gap": c.closure_gap,
            "closed": c.is_closed(),
            "speed_min": float(np.min(c.speed)),
            "k_min": float(np.min(c.k)),
            "k_max": float(np.max(c.k)),
            "tau_min": float(np.min(c.tau)),
            "tau_max": float(np.max(c.tau)),
        },
    )
    f = _field(spec, c, required=False)
    if f is not None:
        br = bend_report(c, f, ISOMETRY_EPS)
        fields = {
            "kind": spec.field.variant,
            "closure_defect": br.closure_defect,
            "open_family": br.open_family,
            "bending_residual": br.bending_residual,
        }
        try:
            f = require_bending(c, f)
            comps = f.components
            fields.update(
                {
                    "is_bending_field": True,
                    "tangential_residual": comps.theorem_residual,
                    "tangential_tolerance": comps.theorem_tol,
                }
            )
        except NotBendingFieldError:
            fields["is_bending_field"] = False
        rep.update("field", fields)
        for eps, iso in br.isometry.items():
            rep.add("isometry", f"length_change_over_eps2[{eps:g}]", iso.delta_length / eps**2)
        rep.add("isometry", "min_line_element_change", min(float(np.min(i.increments)) for i in br.isometry.values()))
    if args.figures:
        from . import plotting

        out = Path(args.figures)
        out.mkdir(parents=True, exist_ok=True)
        path = plotting.plot_curvature(c, out / f"{spec.stem}_curvature.png", spec.stem)
        rep.add("figures", "curvature", path.name)
    return rep


def _energy_value(kind, c, workers):
    if kind == "willmore":
        return energies.willmore(c)
    return energies.mobius(c, workers=workers)


def cmd_energy(args):
    spec, c = _load(args)
    rep = Report()
    _header(rep, spec, c, "energy")
    ev = _energy_value(args.kind, c, args.workers)
    rep.update("energy", {"kind": args.kind, "value": ev.value, "refinement_delta": ev.refinement_delta})
    if args.eps is not None:
        f = require_bending(c, _field(spec, c))
        eps = float(args.eps)
        vr = fd_variation(ENERGY_KINDS[args.kind], c, f, (eps, eps / 10.0), scheme="forward")
        bent = bend(c, f, eps)
        if args.kind == "willmore":
            bent_value = energies.willmore(bent, allow_open=True).value
        else:
            bent_value = energies.mobius(bent, workers=args.workers).value
        rep.update(
            "variation",
            {
                "eps": eps,
                "bent_value": bent_value,
                "analytic": float(vr.analytic),
                "fd_estimate": float(vr.estimates[0]),
                "fd_estimate_eps_over_10": float(vr.estimates[1]),
            },
        )
        rep.add("variation", "slope", ", ".join(_slopes(vr.slopes)))
    return rep


def _variation_scalar(kind, c, f, workers):
    if kind == "willmore":
        direct = energies.willmore_variation_direct(c, f).value
        thm = energies.willmore_variation_theorem(c, f)
        total = thm.interior + thm.boundary
        scale = max(abs(direct), abs(total), np.finfo(float).tiny)
        return direct, {
            "direct": direct,
            "interior": thm.interior,
            "boundary": thm.boundary,
            "interior_plus_boundary": total,
            "relative_difference": abs(direct - total) / scale,
        }
    value = energies.mobius_variation(c, f, workers=workers).value
    return value, {"value": value}


def cmd_variation(args):
    spec, c = _load(args)
    rep = Report()
    _header(rep, spec, c, "variation")
    f = require_bending(c, _field(spec, c))
    rep.update("field", {"closure_defect": f.closure_defect, "open_family": f.is_open_family(c)})
    kind = args.kind
    if kind in ENERGY_KINDS:
        _, items = _variation_scalar(kind, c, f, args.workers)
        rep.update("variation", {"kind": kind, **items})
        quantity, scheme = ENERGY_KINDS[kind], "forward"
    else:
        from .variations import analytic_variation

        values = analytic_variation(kind, c, f)
        mag = values if values.ndim == 1 else np.linalg.norm(values, axis=1)
        rep.update(
            "variation",
            {
                "kind": kind,
                "min": float(np.min(mag)),
                "max": float(np.max(mag)),
                "max_abs": float(np.max(np.abs(mag))),
                "mean_abs": float(np.mean(np.abs(mag))),
            },
        )
        quantity, scheme = kind, "central"
    vr = None
    if args.fd_check:
        vr = fd_variation(quantity, c, f, FD_EPS, scheme=scheme)
        _fd_section(rep, "fd_check", vr)
    if args.figures:
        from . import plotting

        out = Path(args.figures)
        out.mkdir(parents=True, exist_ok=True)
        if kind not in ENERGY_KINDS:
            path = plotting.plot_variation(c, mag, out / f"{spec.stem}_delta_{kind}.png", f"variation of {kind}")
            rep.add("figures", "variation", path.name)
        if vr is not None:
            order = 2 if scheme == "central" else 1
            path = plotting.plot_convergence(
                vr.eps, vr.errors, out / f"{spec.stem}_fd_{kind}.png", kind, reference_order=order
            )
            rep.add("figures", "convergence", path.name)
    return rep


def _parse_eps_list(text):
    try:
        values = [float(exprlang.constant_value(exprlang.parse(v))) for v in text.split(",") if v.strip()]
    except (exprlang.ParseError, ValueError) as exc:
        raise InputError(f"bad --eps-list {text!r}: {exc}") from exc
    if not values:
        raise InputError("--eps-list is empty")
    return values


def cmd_mesh(args):
    spec, c = _load(args)
    rep = Report()
    _header(rep, spec, c, "mesh")
    eps_list = _parse_eps_list(args.eps_list)
    f = None
    if any(e != 0 for e in eps_list):
        f = require_bending(c, _field(spec, c))
    c.require_closed()
    curves = [c if e == 0 else bend(c, f, e) for e in eps_list]
    if args.radius == "auto":
        radius = meshout.auto_radius(curves)
    else:
        try:
            radius = float(args.radius)
        except ValueError as exc:
            raise InputError(f"bad --radius {args.radius!r}") from exc
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise WriteError(str(exc)) from exc
    meshes = [meshout.tube_mesh(cc, radius, args.rings, args.segments, allow_open=True) for cc in curves]
    rep.update("mesh", {"radius": radius, "rings": args.rings, "segments": args.segments})
    if f is not None:
        rep.add("mesh", "open_family", f.is_open_family(c))
    for e, mesh in zip(eps_list, meshes):
        name = meshout.obj_name(spec.stem, e)
        try:
            meshout.export_obj(mesh, out / name)
        except OSError as exc:
            raise WriteError(f"cannot write {out / name}: {exc}") from exc
        rep.update(
            f"eps {e:g}",
            {
                "file": name,
                "closed_tube": mesh.closed,
                "vertices": len(mesh.vertices),
                "faces": len(mesh.faces),
                "euler_characteristic": mesh.euler_characteristic(),
                "outward_fraction": mesh.outward_fraction(),
                "ring_orthogonality": mesh.ring_orthogonality(),
                "min_face_area": float(mesh.face_areas().min()),
            },
        )
    if args.figures:
        from . import plotting

        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        path = plotting.plot_family(
            curves, [f"eps = {e:g}" for e in eps_list], fig_dir / f"{spec.stem}_family.png", spec.stem
        )
        rep.add("figures", "family", path.name)
    return rep


class WriteError(OSError):
    """An output file could not be written."""


# --------------------------------------------------------------------------
# argument parsing and dispatch


def _samples(text):
    n = int(text)
    if n < 32 or n % 2:
        raise argparse.ArgumentTypeError(f"samples must be even and >= 32, got {n}")
    return n


def build_parser():
    parser = argparse.ArgumentParser(prog="knotbend", description="Infinitesimal bending of knots.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="knot definition file")
        p.add_argument("--samples", "-N", type=_samples, default=DEFAULT_SAMPLES, help="sample count (even)")
        p.add_argument("--report", help="also write the report to this path")
        p.add_argument("--figures", metavar="DIR", help="render PNG figures into DIR")
        return p

    p = common(sub.add_parser("check", help="curve and field diagnostics"))
    p.set_defaults(run=cmd_check)

    p = common(sub.add_parser("energy", help="Willmore or Mobius energy"))
    p.add_argument("--kind", choices=sorted(ENERGY_KINDS), default="willmore")
    p.add_argument("--eps", type=float, help="also bend by eps and compare with the first variation")
    p.add_argument("--workers", type=int, default=None, help="threads for the Mobius double sum")
    p.set_defaults(run=cmd_energy)

    p = common(sub.add_parser("variation", help="first variation under the file's field"))
    p.add_argument("--kind", choices=VARIATION_KINDS, default="k")
    p.add_argument("--fd-check", action="store_true", help="compare with finite differences")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(run=cmd_variation)

    p = common(sub.add_parser("mesh", help="tube meshes of the bent family as OBJ files"))
    p.add_argument("--radius", default="auto", help="tube radius or 'auto' (default)")
    p.add_argument("--eps-list", default="0", help="comma-separated bending parameters")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--rings", type=int, default=meshout.DEFAULT_RINGS)
    p.add_argument("--segments", type=int, default=meshout.DEFAULT_SEGMENTS)
    p.set_defaults(run=cmd_mesh)
    return parser


def run(argv=None):
    """Run a command and return ``(exit_code, report_or_None)``."""
    args = build_parser().parse_args(argv)
    try:
        rep = args.run(args)
        text = rep.render()
        if args.report:
            try:
                meshout.atomic_write(args.report, text)
            except OSError as exc:
                raise WriteError(f"cannot write {args.report}: {exc}") from exc
    except (KnotFileError, InputError, exprlang.ParseError) as exc:
        print(f"knotbend: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    except energies.SelfIntersectionError as exc:
        print(f"knotbend: {exc}", file=sys.stderr)
        return EXIT_INTERSECTION, None
    except (GeometryError, NotBendingFieldError) as exc:
        print(f"knotbend: geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY, None
    except WriteError as exc:
        print(f"knotbend: write error: {exc}", file=sys.stderr)
        return EXIT_WRITE, None
    except ValueError as exc:
        print(f"knotbend: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    sys.stdout.write(text)
    return EXIT_OK, rep


def main(argv=None):
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
