"""Command-line entry point: ``coneradon <subcommand> ...``.

Exit codes: 0 success, 2 invalid arguments or data, 3 file errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .grids import ConeData, Image2D, PolarCoefficients, Volume3D, VlineSinogram, open_grid, vline_psi_grid

log = logging.getLogger("coneradon")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _apply_thread_cap():
    raw = os.environ.get("CRT_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"CRT_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("CRT_THREADS must be >= 0")
    if n > 0:
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _expect(obj, kind, path):
    if not isinstance(obj, kind):
        raise ValueError(f"{path}: expected {kind.__name__}, found {type(obj).__name__}")
    return obj


# --- subcommands ----------------------------------------------------------

def cmd_phantom(a):
    from . import phantoms
    if a.smiley:
        out = phantoms.phantom_smiley(a.n)
    elif a.disc is not None:
        out = phantoms.phantom_disc(a.n, a.disc, tuple(a.center[:2]) if a.center else (0.0, 0.0),
                                    supersample=a.supersample)
    elif a.gaussian2d is not None:
        out = phantoms.phantom_gaussian2d(a.n, a.gaussian2d, tuple(a.center[:2]) if a.center else (0.0, 0.0))
    elif a.ball is not None:
        center = tuple(a.center) if a.center else (0.0, 0.0, 0.0)
        if len(center) != 3:
            raise ValueError("--center needs three values for --ball")
        out = phantoms.phantom_ball3d((a.n,) * 3, center, a.ball, phantoms.BallKind(a.kind),
                                      supersample=a.supersample)
    else:
        out = phantoms.random_smooth_phantom3d(a.random3d, (a.n,) * 3)
    io.write(a.output, out)


def _noisy(data, a):
    if a.noise:
        from .phantoms import add_noise
        return add_noise(data, a.noise, a.seed)
    return data


def _forward_2d(a, fn):
    from .forward import RayQuadratureSpec
    img = _expect(io.read(a.input), Image2D, a.input)
    out = fn(img, a.nphi, vline_psi_grid(a.npsi), RayQuadratureSpec(step=a.step))
    io.write(a.output, _noisy(out, a))


def cmd_forward_vline(a):
    from .forward import vline_forward
    _forward_2d(a, vline_forward)


def cmd_forward_xray(a):
    from .forward import xray_forward
    _forward_2d(a, xray_forward)


def cmd_forward_cone(a):
    from .forward import ConeQuadratureSpec, conical_forward
    vol = _expect(io.read(a.input), Volume3D, a.input)
    z = np.linspace(-a.zmax, a.zmax, a.nz)
    q = ConeQuadratureSpec(n_eta=a.neta, step_r=a.step)
    out = conical_forward(vol, a.k, a.nphi, z, open_grid(a.nbeta), open_grid(a.npsi), q)
    io.write(a.output, _noisy(out, a))


def _vline_config(a):
    from .vline import VlineInversionConfig
    return VlineInversionConfig(epsilon=a.epsilon, n_max=a.nmax, m=a.m)


def cmd_invert_vline(a):
    from .vline import invert_vline
    s = _expect(io.read(a.input), VlineSinogram, a.input)
    io.write(a.output, invert_vline(s, _vline_config(a), a.nx))


def cmd_invert_xray(a):
    from .vline import invert_xray
    s = _expect(io.read(a.input), VlineSinogram, a.input)
    io.write(a.output, invert_xray(s, _vline_config(a), a.nx))


def cmd_invert_cone(a):
    from . import conical
    c = _expect(io.read(a.input), ConeData, a.input)
    if a.method == "vline":
        kt = conical.kernel_table(c.k_weight, c.beta_nodes, c.psi_nodes, a.ngamma,
                                  vline_psi_grid(a.npsi_v or max(2, c.psi_nodes.size // 2)))
        out = conical.invert_cone_method1(c, kt, _vline_config(a), a.n)
    else:
        zr = (-a.zrange, a.zrange)
        out = conical.invert_cone_method2(c, (a.n,) * 3, zr)
    io.write(a.output, out)


def cmd_norms(a):
    from .conical import stability_norms
    f = _expect(io.read(a.volume), Volume3D, a.volume)
    c = _expect(io.read(a.cone), ConeData, a.cone)
    res = stability_norms(f, c)
    res["ratio"] = res["sobolev_minus_1"] / res["cone_norm"] if res["cone_norm"] else float("nan")
    text = json.dumps(res, indent=2)
    if a.output:
        Path(a.output).write_text(text + "\n")
    print(text)


def _render_array(obj, a):
    if isinstance(obj, Image2D):
        arr = obj.values
    elif isinstance(obj, VlineSinogram):
        arr = obj.data
    elif isinstance(obj, Volume3D):
        iz = obj.shape[2] // 2 if a.slice is None else a.slice
        arr = obj.values[:, :, iz]
    elif isinstance(obj, PolarCoefficients):
        arr = np.abs(obj.coeffs)
    elif isinstance(obj, ConeData):
        iz = obj.z_nodes.size // 2 if a.slice is None else a.slice
        arr = obj.data[0, iz]
    else:
        arr = np.abs(np.asarray(getattr(obj, "data", obj)))
        while arr.ndim > 2:
            arr = arr[arr.shape[0] // 2]
    return arr


def cmd_render(a):
    obj = io.read(a.input)
    io.write_pgm(a.output, _render_array(obj, a))


def cmd_reproduce_fig4(a):
    from .reproduce import fig4_experiment
    out = Path(a.outdir)
    out.mkdir(parents=True, exist_ok=True)
    res = fig4_experiment(a.n, a.nphi, a.npsi, seed=a.seed)
    io.write_pgm(out / "phantom.pgm", res.phantom.values)
    for name, img in res.images.items():
        io.write_pgm(out / f"{name}.pgm", img.values)
        io.write(out / f"{name}.crtd", img)
    m = res.metrics
    m["noisy_ge_clean"] = bool(m["vline_noisy_error"] >= m["vline_clean_error"])
    (out / "metrics.json").write_text(json.dumps(m, indent=2) + "\n")
    print(json.dumps({k: v for k, v in m.items() if k.endswith("_error")}, indent=2))


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coneradon", description="V-line and conical Radon transforms: forward models and inversion.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("phantom", help="write a test phantom")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--smiley", action="store_true")
    g.add_argument("--disc", type=float, metavar="RADIUS")
    g.add_argument("--gaussian2d", type=float, metavar="SIGMA")
    g.add_argument("--ball", type=float, metavar="RADIUS")
    g.add_argument("--random3d", type=int, metavar="SEED")
    s.add_argument("-n", type=int, default=201, help="samples per axis")
    s.add_argument("--center", type=float, nargs="+")
    s.add_argument("--kind", choices=["indicator", "gaussian"], default="indicator")
    s.add_argument("--supersample", type=int, default=1)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_phantom)

    for name, func, hlp in (("forward-vline", cmd_forward_vline, "V-line data of a 2D image"),
                            ("forward-xray", cmd_forward_xray, "one-sided X-ray data of a 2D image")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("-i", "--input", required=True)
        s.add_argument("-o", "--output", required=True)
        s.add_argument("--nphi", type=int, default=256)
        s.add_argument("--npsi", type=int, default=201)
        s.add_argument("--step", type=float, default=1e-3)
        s.add_argument("--noise", type=float, default=0.0, help="noise level relative to max|data|")
        s.add_argument("--seed", type=int, default=0)
        s.set_defaults(func=func)

    s = sub.add_parser("forward-cone", help="weighted conical Radon data of a volume")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("-k", type=int, default=1, help="radial weight exponent")
    s.add_argument("--nphi", type=int, default=32)
    s.add_argument("--nz", type=int, default=32)
    s.add_argument("--nbeta", type=int, default=16)
    s.add_argument("--npsi", type=int, default=32)
    s.add_argument("--zmax", type=float, default=1.0, help="vertex heights span [-zmax, zmax]")
    s.add_argument("--neta", type=int, default=48)
    s.add_argument("--step", type=float, default=1 / 32)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_forward_cone)

    for name, func in (("invert-vline", cmd_invert_vline), ("invert-xray", cmd_invert_xray)):
        s = sub.add_parser(name, help=f"{name.split('-')[1]} inversion on the unit disc")
        s.add_argument("-i", "--input", required=True)
        s.add_argument("-o", "--output", required=True)
        s.add_argument("--epsilon", type=float, default=0.005)
        s.add_argument("--nmax", type=int)
        s.add_argument("-m", type=int)
        s.add_argument("--nx", type=int, default=201)
        s.set_defaults(func=func)

    s = sub.add_parser("invert-cone", help="reconstruct a volume from conical data")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--method", choices=["vline", "radon"], default="radon")
    s.add_argument("-n", type=int, default=32, help="output samples per axis")
    s.add_argument("--zrange", type=float, default=1.0, help="radon method: output z in [-zrange, zrange]")
    s.add_argument("--epsilon", type=float, default=0.005)
    s.add_argument("--nmax", type=int)
    s.add_argument("-m", type=int)
    s.add_argument("--npsi-v", type=int, help="vline method: V-line opening angles per slice")
    s.add_argument("--ngamma", type=int, default=512)
    s.set_defaults(func=cmd_invert_cone)

    s = sub.add_parser("norms", help="stability norms of a volume and its conical data")
    s.add_argument("--volume", required=True)
    s.add_argument("--cone", required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_norms)

    s = sub.add_parser("render", help="write an 8-bit PGM of a 2D array or a volume slice")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--slice", type=int)
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("reproduce-fig4", help="Smiley experiment: clean and noisy V-line and X-ray inversions")
    s.add_argument("--outdir", default="fig4")
    s.add_argument("-n", type=int, default=201)
    s.add_argument("--nphi", type=int, default=256)
    s.add_argument("--npsi", type=int, default=201)
    s.add_argument("--seed", type=int, default=2024)
    s.set_defaults(func=cmd_reproduce_fig4)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _apply_thread_cap()
        args.func(args)
    except io.DataFileError as exc:
        print(f"coneradon: file error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"coneradon: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"coneradon: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
