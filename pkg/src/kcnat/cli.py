"""Command-line interface: ``kcnat {analyze,verify,noise,denoise,loss}``.

Exit codes: 0 success, 1 configuration/input error, 2 partial failure,
3 verification tolerance failure, 4 optimizer divergence.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .denoise import DenoiseConfig, denoise, psnr
from .exceptions import DivergenceError, KCError
from .gsm import GsmSpec, verify_lemma1, verify_lemma2
from .image import load_image, save_pgm, save_raw_f32
from .kc import (dataset_kc_summary, kc_loss, subband_rows,
                 write_boxplot_csv, write_subband_csv)
from .stats import estimate_noise_sigma
from .wavelet import DEFAULT_KERNELS, FilterBank, get_kernel, load_filter_table

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL, EXIT_VERIFY_FAILED, EXIT_DIVERGED = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    # argparse's default usage-error status (2) collides with "partial failure"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _fmt(obj):
    """Round floats to 9 significant digits; non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _fmt(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_fmt(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(f"{v:.9g}") if math.isfinite(v) else None
    return obj


def envelope(command, inputs, seed, payload):
    return {"tool_version": __version__, "command": command,
            "inputs": [str(i) for i in inputs], "seed": seed, "payload": payload}


def dump_json(obj, indent=2):
    return json.dumps(_fmt(obj), indent=indent, allow_nan=False)


def _err(msg):
    print(f"kcnat: error: {msg}", file=sys.stderr)


def _parse_shape(text):
    if text is None:
        return None
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise KCError(f"--shape must look like HxW, got {text!r}") from None
    return h, w


def _bank_from_args(args):
    if args.filter_table:
        table = {k.name: k for k in load_filter_table(args.filter_table)}
        names = args.bank.split(",") if args.bank else list(table)
        kernels = []
        for name in (n.strip() for n in names):
            kernels.append(table[name] if name in table else get_kernel(name))
        return FilterBank(tuple(kernels), args.include_ll)
    return FilterBank.from_names(args.bank or ",".join(DEFAULT_KERNELS), args.include_ll)


def _add_bank_flags(p):
    p.add_argument("--bank", default=None,
                   help="comma-separated kernel names (default: %(default)s -> "
                        + ",".join(DEFAULT_KERNELS) + ")")
    p.add_argument("--include-ll", action="store_true",
                   help="include LL planes in the kurtosis statistics")
    p.add_argument("--filter-table", default=None,
                   help="text file of extra kernels: name followed by lowpass coefficients")


def _expand_paths(paths):
    out = []
    for p in paths:
        if os.path.isdir(p):
            out.extend(sorted(os.path.join(p, f) for f in os.listdir(p)
                              if f.lower().endswith((".pgm", ".f32", ".raw"))))
        else:
            out.append(p)
    return out


def cmd_analyze(args):
    if not args.paths:
        _err("analyze needs at least one image path")
        return EXIT_ERROR
    bank = _bank_from_args(args)
    shape = _parse_shape(args.shape)
    paths = _expand_paths(args.paths)
    if not paths:
        _err("no images found in the given directories")
        return EXIT_ERROR
    loaders = [lambda p=p: load_image(p, shape) for p in paths]
    try:
        summary = dataset_kc_summary(loaders, bank, image_ids=paths)
    except KCError as exc:
        _err(str(exc))
        return EXIT_ERROR

    images = []
    for image_id, rep in zip(paths, summary.reports):
        if rep is None:
            continue
        images.append({"image_id": image_id, "report": rep.to_dict()})
    payload = {"bank": {"kernels": list(bank.names), "include_ll": bank.include_ll},
               "images": images,
               "failures": [{"image_id": i, "error": m} for i, m in summary.failures]}
    if len(paths) > 1:
        payload["summary"] = summary.to_dict()
    text = dump_json(envelope("analyze", paths, args.seed, payload))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.csv:
        rows = [r for image_id, rep in zip(paths, summary.reports) if rep is not None
                for r in subband_rows(image_id, rep)]
        write_subband_csv(args.csv, rows)
    if args.boxplot_csv:
        write_boxplot_csv(args.boxplot_csv, summary.boxplot_records())
    for image_id, msg in summary.failures:
        _err(f"skipped {image_id}: {msg}")
    return EXIT_PARTIAL if summary.failures else EXIT_OK


def cmd_verify(args):
    try:
        with open(args.spec, encoding="utf-8") as fh:
            spec = GsmSpec.from_dict(json.load(fh))
        if args.noise_sigma2 is not None:
            spec = GsmSpec(spec.dimension, spec.mixing_values, spec.mixing_probs,
                           spec.base_covariance, args.noise_sigma2)
        if args.lemma == 1:
            record = verify_lemma1(spec, args.samples, args.directions or 10,
                                   args.seed, args.tolerance or 0.05)
        else:
            record = verify_lemma2(spec, args.samples, args.seed,
                                   n_directions=args.directions or 32,
                                   tolerance=args.tolerance or 0.1)
    except (KCError, OSError, json.JSONDecodeError) as exc:
        _err(str(exc))
        return EXIT_ERROR
    payload = {"spec": spec.to_dict(), **record.to_dict()}
    print(dump_json(envelope("verify", [args.spec], args.seed, payload)))
    return EXIT_OK if record.passed else EXIT_VERIFY_FAILED


def cmd_noise(args):
    if not args.paths:
        _err("noise needs at least one image path")
        return EXIT_ERROR
    shape = _parse_shape(args.shape)
    status = EXIT_OK
    for path in _expand_paths(args.paths):
        try:
            est = estimate_noise_sigma(load_image(path, shape))
        except (KCError, OSError, ValueError) as exc:
            _err(f"{path}: {exc}")
            status = EXIT_ERROR
            continue
        payload = {"image_id": path, "sigma": est.sigma,
                   "kernel_used": est.kernel_used, "subband_used": est.subband_used}
        print(dump_json(envelope("noise", [path], args.seed, payload), indent=None))
    return status


def _save_image(path, img):
    if path.lower().endswith(".pgm"):
        save_pgm(path, img)
    else:
        save_raw_f32(path, img)


def _trace_summary(trace, noisy, ground_truth):
    summary = {"iterations_logged": len(trace.entries),
               "initial_deviation": trace.initial.deviation,
               "final_deviation": trace.final.deviation,
               "initial_objective": trace.initial.objective,
               "final_objective": trace.final.objective}
    if ground_truth is not None:
        summary["psnr_noisy"] = psnr(noisy, ground_truth)
        summary["psnr_final"] = trace.final.psnr
        summary["snr_noisy"] = trace.initial.snr
        summary["snr_final"] = trace.final.snr
    return summary


def cmd_denoise(args):
    shape = _parse_shape(args.shape)
    try:
        noisy = load_image(args.path, shape)
        gt = load_image(args.ground_truth, shape) if args.ground_truth else None
        config = DenoiseConfig(bank=_bank_from_args(args), lambda_kc=args.lambda_kc,
                               step_size=args.step_size, max_iters=args.max_iters,
                               fidelity_weight=args.fidelity_weight, seed=args.seed,
                               log_every=args.log_every)
    except (KCError, OSError) as exc:
        _err(str(exc))
        return EXIT_ERROR
    trace_path = args.trace or args.output + ".trace.csv"
    inputs = [args.path] + ([args.ground_truth] if args.ground_truth else [])
    try:
        trace = denoise(noisy, config, gt)
    except DivergenceError as exc:
        exc.trace.write_csv(trace_path)
        payload = {"status": "diverged", "iteration": exc.iteration,
                   "trace": trace_path}
        print(dump_json(envelope("denoise", inputs, args.seed, payload)))
        _err(str(exc))
        return EXIT_DIVERGED
    except KCError as exc:
        _err(str(exc))
        return EXIT_ERROR
    _save_image(args.output, trace.final_image)
    trace.write_csv(trace_path)
    payload = {"status": "ok", "output": args.output, "trace": trace_path,
               **_trace_summary(trace, noisy, gt)}
    print(dump_json(envelope("denoise", inputs, args.seed, payload)))
    return EXIT_OK


def cmd_loss(args):
    shape = _parse_shape(args.shape)
    try:
        img = load_image(args.path, shape)
        lg = kc_loss(img, _bank_from_args(args))
    except (KCError, OSError) as exc:
        _err(str(exc))
        return EXIT_ERROR
    payload = {"loss": lg.loss, "argmax_subband": lg.argmax_subband,
               "argmin_subband": lg.argmin_subband,
               "gradient_norm": float(np.linalg.norm(lg.gradient)),
               "shape": list(img.shape)}
    if args.dump_grad:
        save_raw_f32(args.dump_grad, lg.gradient)
        payload["gradient_file"] = args.dump_grad
    print(dump_json(envelope("loss", [args.path], args.seed, payload)))
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="kcnat", description=(
        "Kurtosis-concentration analysis of wavelet subbands, GSM checks, "
        "noise estimation and KC denoising."))
    parser.add_argument("--version", action="version", version=f"kcnat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="per-subband kurtosis report")
    p.add_argument("paths", nargs="*", help="PGM/raw files or directories")
    _add_bank_flags(p)
    p.add_argument("--shape", help="HxW for raw float32 inputs")
    p.add_argument("--output", "-o", help="write JSON here instead of stdout")
    p.add_argument("--csv", help="per-subband CSV (image_id,kernel,plane,kurtosis)")
    p.add_argument("--boxplot-csv", help="per-image box-plot statistics CSV")
    p.add_argument("--seed", type=int, default=0, help="recorded in the report")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="Monte-Carlo check of GSM projection kurtosis")
    p.add_argument("--lemma", type=int, choices=(1, 2), required=True,
                   help="1: direction-invariant kurtosis; 2: kurtosis vs SNR")
    p.add_argument("--spec", required=True, help="GSM spec JSON file")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--directions", type=int, default=None,
                   help="random directions (default 10 for lemma 1, 32 for lemma 2)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tolerance", type=float, default=None,
                   help="absolute for lemma 1 (default 0.05), relative for lemma 2 (0.1)")
    p.add_argument("--noise-sigma2", type=float, default=None,
                   help="override the spec's noise variance")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("noise", help="wavelet MAD noise-sigma estimate (JSON lines)")
    p.add_argument("paths", nargs="*")
    p.add_argument("--shape", help="HxW for raw float32 inputs")
    p.add_argument("--seed", type=int, default=0, help="recorded in the report")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("denoise", help="gradient descent on fidelity + KC loss")
    p.add_argument("path")
    p.add_argument("--output", "-o", required=True, help=".pgm or raw float32 output")
    p.add_argument("--trace", help="CSV trace path (default: OUTPUT.trace.csv)")
    p.add_argument("--ground-truth", help="clean reference for PSNR/SNR")
    p.add_argument("--lambda-kc", type=float, default=1.0)
    p.add_argument("--step-size", type=float, default=1e-2)
    p.add_argument("--max-iters", type=int, default=400)
    p.add_argument("--fidelity-weight", type=float, default=1.0)
    p.add_argument("--log-every", type=int, default=10)
    p.add_argument("--shape", help="HxW for raw float32 inputs")
    p.add_argument("--seed", type=int, default=0)
    _add_bank_flags(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("loss", help="KC loss and its gradient")
    p.add_argument("path")
    _add_bank_flags(p)
    p.add_argument("--shape", help="HxW for raw float32 inputs")
    p.add_argument("--dump-grad", help="write the gradient as raw float32")
    p.add_argument("--seed", type=int, default=0, help="recorded in the report")
    p.set_defaults(func=cmd_loss)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KCError as exc:
        _err(str(exc))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
