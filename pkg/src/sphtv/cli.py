"""``spherecli``: transforms, single inpainting runs, experiments and rendering.

Exit codes: 0 success, 2 malformed container, 3 kind/scheme mismatch,
4 solver divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from sphtv.container import ContainerError, Signal, atomic_write, read_signal, write_signal
from sphtv.grid import SamplingScheme, build_grid, quadrature_weights
from sphtv.harmonic import conj_sym_extend, get_transform
from sphtv.inpaint import (
    DOMAINS,
    ExperimentConfig,
    inpaint_once,
    run_experiment,
    snr_harmonic,
    snr_image,
)
from sphtv.prox import SolverDivergence
from sphtv.render import png_bytes, render_mollweide

EXIT_OK, EXIT_MALFORMED, EXIT_MISMATCH, EXIT_DIVERGED = 0, 2, 3, 4
DENSIFY_MAX_L = 8

# direction -> (input kind, output kind)
DIRECTIONS = {
    "forward": ("image", "coeffs"),
    "inverse": ("coeffs", "image"),
    "forward-adjoint": ("coeffs", "image"),
    "inverse-adjoint": ("image", "coeffs"),
}


class KindMismatch(Exception):
    pass


def _check_grid(sig: Signal, scheme: str | None, L: int | None) -> None:
    if scheme is not None and SamplingScheme.parse(scheme) != sig.scheme:
        raise KindMismatch(f"container scheme {sig.scheme.value} != --scheme {scheme}")
    if L is not None and L != sig.L:
        raise KindMismatch(f"container L={sig.L} != --bandlimit {L}")


def _operator(tr, direction: str):
    return {
        "forward": tr.forward,
        "inverse": tr.inverse,
        "forward-adjoint": tr.forward_adjoint,
        "inverse-adjoint": tr.inverse_adjoint,
    }[direction]


def densify(op, n_in: int, shape_in=None) -> np.ndarray:
    """Matrix of a linear map given as a function, column by column."""
    cols = []
    for j in range(n_in):
        e = np.zeros(n_in, dtype=complex)
        e[j] = 1.0
        cols.append(np.asarray(op(e.reshape(shape_in) if shape_in else e)).reshape(-1))
    return np.stack(cols, axis=1)


def adjoint_mismatch(tr, direction: str, grid) -> float:
    """Max-abs difference between a densified adjoint and the conjugate transpose of its operator."""
    base = direction.replace("-adjoint", "")
    fwd, adj = _operator(tr, base), _operator(tr, base + "-adjoint")
    n_img, n_lm = grid.n_samples, tr.L * tr.L
    if base == "forward":
        A = densify(fwd, n_img, grid.shape)
        B = densify(adj, n_lm)
    else:
        A = densify(fwd, n_lm)
        B = densify(adj, n_img, grid.shape)
    return float(np.max(np.abs(B - A.conj().T)))


def cmd_transform(args) -> int:
    sig = read_signal(args.input)
    _check_grid(sig, args.scheme, args.bandlimit)
    kind_in, kind_out = DIRECTIONS[args.direction]
    if sig.kind != kind_in:
        raise KindMismatch(f"{args.direction} expects {kind_in} input, got {sig.kind}")
    tr = get_transform(sig.scheme, sig.L)
    grid = build_grid(sig.scheme, sig.L)
    out = _operator(tr, args.direction)(sig.data)
    write_signal(args.output, Signal(sig.scheme, sig.L, kind_out, out))
    diag = {"direction": args.direction, "max_abs_output": float(np.max(np.abs(out)))}
    if args.direction == "inverse":
        diag["round_trip_error"] = float(np.max(np.abs(tr.forward(out) - sig.data)))
    elif args.direction == "forward":
        diag["round_trip_error"] = float(np.max(np.abs(tr.inverse(out) - sig.data)))
    if args.check_adjoint:
        if sig.L > DENSIFY_MAX_L:
            print(f"adjoint check skipped: L > {DENSIFY_MAX_L}", file=sys.stderr)
        else:
            diag["adjoint_mismatch"] = adjoint_mismatch(tr, args.direction, grid)
    print(json.dumps(diag))
    return EXIT_OK


def _truth_image(sig: Signal) -> tuple[np.ndarray, np.ndarray]:
    """Truth as (real image, full coefficients)."""
    tr = get_transform(sig.scheme, sig.L)
    if sig.kind == "image":
        img = np.real(sig.data)
        return img, tr.forward(img)
    flm = conj_sym_extend(sig.data, sig.L) if sig.kind == "half-coeffs" else sig.data
    img = tr.inverse(flm).real
    return img, tr.forward(img)


def cmd_inpaint(args) -> int:
    sig = read_signal(args.truth)
    _check_grid(sig, args.scheme, args.bandlimit)
    overrides = {}
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
    grid = build_grid(sig.scheme, sig.L)
    w = quadrature_weights(grid)
    x_true, flm_true = _truth_image(sig)
    M = int(round(args.ratio * sig.L * sig.L))
    if M > grid.n_distinct:
        print(f"ratio {args.ratio} needs {M} samples, grid has {grid.n_distinct}", file=sys.stderr)
        return EXIT_MISMATCH
    try:
        run = inpaint_once(x_true, grid, args.domain, M, args.seed, args.sigma_n, args.alpha, overrides)
    except SolverDivergence as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    res = run.result
    flm_rec = conj_sym_extend(res.half_coeffs, sig.L)
    report = res.report.to_dict()
    report.pop("wall_time", None)  # keeps the report byte-identical across runs
    report.update(
        scheme=sig.scheme.value, L=sig.L, domain=args.domain, ratio=args.ratio, M=M,
        seed=args.seed, sigma_n=args.sigma_n, alpha=args.alpha,
        snr_db=snr_harmonic(flm_true, flm_rec), snr_image_db=snr_image(x_true, res.image, w),
    )
    write_signal(args.output, Signal(sig.scheme, sig.L, "image", res.image))
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.report:
        atomic_write(args.report, text.encode())
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    with open(args.config) as fh:
        cfg = ExperimentConfig.from_json(fh.read())

    def progress(rec):
        print(f"{rec.scheme} {rec.domain} ratio={rec.ratio:g} trial={rec.trial} snr={rec.snr_db:.3f}",
              file=sys.stderr, flush=True)

    results = run_experiment(cfg, progress=progress)
    atomic_write(args.csv, results.to_csv().encode())
    if args.summary:
        atomic_write(args.summary, (json.dumps(results.summary(), indent=2) + "\n").encode())
    return EXIT_OK


def cmd_render(args) -> int:
    sig = read_signal(args.input)
    if sig.kind != "image":
        raise KindMismatch(f"render expects image input, got {sig.kind}")
    rgb = render_mollweide(sig.data, build_grid(sig.scheme, sig.L), args.width, args.vmin, args.vmax)
    atomic_write(args.output, png_bytes(rgb))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spherecli", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def grid_flags(sp):
        sp.add_argument("--scheme", choices=[s.value for s in SamplingScheme],
                        help="must match the container (defaults to it)")
        sp.add_argument("--bandlimit", type=int, help="must match the container (defaults to it)")

    t = sub.add_parser("transform", help="apply a harmonic transform or its adjoint")
    t.add_argument("input")
    t.add_argument("output")
    t.add_argument("--direction", choices=list(DIRECTIONS), default="forward")
    t.add_argument("--check-adjoint", action="store_true",
                   help=f"densify and compare with the transpose (L <= {DENSIFY_MAX_L})")
    grid_flags(t)
    t.set_defaults(func=cmd_transform)

    i = sub.add_parser("inpaint", help="one random-mask inpainting run")
    i.add_argument("truth")
    i.add_argument("output")
    i.add_argument("--report", help="report JSON path (stdout if omitted)")
    i.add_argument("--ratio", type=float, default=0.5)
    i.add_argument("--domain", choices=DOMAINS, default="harmonic")
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--sigma-n", type=float, default=0.01)
    i.add_argument("--alpha", type=float, default=0.99)
    i.add_argument("--config", help="JSON solver overrides")
    grid_flags(i)
    i.set_defaults(func=cmd_inpaint)

    e = sub.add_parser("experiment", help="full multi-trial experiment")
    e.add_argument("--config", required=True)
    e.add_argument("--csv", required=True)
    e.add_argument("--summary")
    e.set_defaults(func=cmd_experiment)

    r = sub.add_parser("render", help="Mollweide PNG of an image container")
    r.add_argument("input")
    r.add_argument("output")
    r.add_argument("--width", type=int, default=800)
    r.add_argument("--vmin", type=float, default=0.0)
    r.add_argument("--vmax", type=float, default=1.0)
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except ContainerError as exc:
        print(f"malformed container: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except KindMismatch as exc:
        print(f"mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
