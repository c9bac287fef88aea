"""Command-line pipeline: generate -> cer -> uss -> decode/simulate -> sweep -> report.

Every stage exchanges versioned JSON/CSV files.  Exit codes: 0 success,
1 validation/usage problem, 2 runtime failure.  Each mutating run writes a
manifest holding the config hash, seed and package version; result files
contain no timestamps, so a rerun with the same seed is byte-identical
(wall-clock timing goes to stderr only).
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .cer import (
    dataset_from_dict,
    dataset_to_dict,
    exact_rates,
    load_dataset,
    select_knr,
    select_top_k,
)
from .channels import channel_from_dict
from .codes import Syndrome, get_code
from .decoders import DecoderSpec, ml_decode_block
from .exceptions import CerdecError, ValidationError
from .harness import (
    MANIFEST_SCHEMA,
    RESULT_SCHEMA,
    bin_and_aggregate,
    generate_ensemble,
    load_config,
    read_records,
    run_sweep,
    tvd_report,
    write_report,
    write_tvd_report,
)
from .ioutil import content_hash, dump_json, load_json
from .logical import simulate_concatenated
from .uss import completed_from_dict, completed_to_dict, uss_complete


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cerdec", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="run configuration JSON")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--threads", type=int, help="worker processes")
        sp.add_argument("--out-dir", help="override the config output directory")

    sp = sub.add_parser("generate", help="sample and persist a channel ensemble")
    common(sp)

    sp = sub.add_parser("cer", help="extract a partial rate dataset from a channel")
    common(sp)
    sp.add_argument("--channel", required=True, help="channel JSON file")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--top-k", type=int, help="keep the K largest rates")
    g.add_argument("--max-weight", type=int, help="keep rates up to this weight")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("uss", help="complete a partial dataset to a full distribution")
    common(sp)
    sp.add_argument("--in", dest="infile", required=True, help="dataset JSON")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("decode", help="soft decisions for a completed distribution")
    common(sp)
    sp.add_argument("--dist", required=True, help="completed distribution JSON")
    sp.add_argument("--code", default="steane")
    sp.add_argument("--syndromes", default="all",
                    help="comma-separated integers, or 'all'")
    sp.add_argument("--out", required=True, help="decisions CSV")

    sp = sub.add_parser("simulate", help="estimate a logical error rate")
    common(sp)
    sp.add_argument("--channel", required=True)
    sp.add_argument("--decoder", default="full",
                    help="full | fidelity | mw | top_k:K | weight:W")
    sp.add_argument("--out", required=True, help="result JSON")

    sp = sub.add_parser("sweep", help="gain sweep over the top-K list")
    common(sp)

    sp = sub.add_parser("knr-sweep", help="gain sweep over the weight-bound list")
    common(sp)

    sp = sub.add_parser("report", help="bin records into a report table")
    common(sp)
    sp.add_argument("--records", required=True)
    sp.add_argument("--kind", choices=["gain", "tvd"], default="gain")
    sp.add_argument("--k", type=int, help="dataset size for the tvd report")
    sp.add_argument("--out", required=True)
    return p


def _apply_overrides(cfg, args):
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.threads is not None:
        updates["threads"] = args.threads
    if getattr(args, "out_dir", None):
        updates["out_dir"] = args.out_dir
    if updates:
        from dataclasses import replace

        cfg = replace(cfg, **updates)
    return cfg


def _need_config(args):
    if not args.config:
        raise ValidationError("this command requires --config")
    return _apply_overrides(load_config(args.config), args)


def _decoder_spec(text: str, channel) -> DecoderSpec:
    if text == "full":
        return DecoderSpec("ml_full")
    if text == "fidelity":
        return DecoderSpec("d1")
    if text == "mw":
        return DecoderSpec("mw")
    if ":" in text:
        kind, _, value = text.partition(":")
        rates = exact_rates(channel)
        if kind == "top_k":
            return DecoderSpec("ml_uss", select_top_k(rates, int(value)))
        if kind == "weight":
            return DecoderSpec("ml_uss", select_knr(rates, int(value)))
    raise ValidationError(f"unknown decoder spec {text!r}")


def _cmd_generate(args) -> int:
    cfg = _need_config(args)
    manifest = generate_ensemble(cfg)
    print(f"generated {manifest['count']} channels in {cfg.out_dir}/channels")
    return 0


def _cmd_cer(args) -> int:
    ch = channel_from_dict(load_json(args.channel))
    rates = exact_rates(ch)
    ds = (
        select_top_k(rates, args.top_k)
        if args.top_k is not None
        else select_knr(rates, args.max_weight)
    )
    dump_json(dataset_to_dict(ds, content_hash(load_json(args.channel))), args.out)
    print(f"wrote {len(ds)} rates to {args.out}")
    return 0


def _cmd_uss(args) -> int:
    ds = load_dataset(args.infile)
    completed = uss_complete(ds)
    dump_json(
        completed_to_dict(completed, content_hash(load_json(args.infile))), args.out
    )
    print(
        f"completed {len(completed.dist.probs)} rates "
        f"(normalization factor {completed.normalization_factor:.6g})"
    )
    return 0


def _cmd_decode(args) -> int:
    completed = completed_from_dict(load_json(args.dist))
    code = get_code(args.code)
    if completed.dist.n != code.n:
        raise ValidationError("distribution and code act on different qubit counts")
    count = 1 << (code.n - 1)
    if args.syndromes == "all":
        values = range(count)
    else:
        values = [int(v) for v in args.syndromes.split(",")]
    with open(args.out, "w") as fh:
        fh.write("# schema: cerdec-decisions-1\n")
        fh.write("syndrome,p_I,p_X,p_Y,p_Z,chosen\n")
        for v in values:
            dec = ml_decode_block(completed.dist, Syndrome.from_int(v, code), code)
            pi, px, py, pz = dec.display_probs()
            fh.write(f"{v},{pi!r},{px!r},{py!r},{pz!r},{dec.chosen_label}\n")
    print(f"wrote decisions for {len(list(values))} syndromes to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = _need_config(args)
    code = get_code(cfg.code)
    payload = load_json(args.channel)
    ch = channel_from_dict(payload)
    spec = _decoder_spec(args.decoder, ch)
    sampler = cfg.sampler_config(0)
    started = time.monotonic()
    res = simulate_concatenated(ch, code, cfg.level, spec, sampler)
    elapsed = time.monotonic() - started
    result = {
        "version": RESULT_SCHEMA,
        "channel_hash": content_hash(payload),
        "decoder": args.decoder,
        "level": cfg.level,
        "n_samples": res.n_samples,
        "alpha": res.alpha,
        "r_hat": res.r_hat,
        "stderr": res.stderr,
        "skipped_fraction": res.skipped_fraction,
        "mean_weight": res.mean_weight,
        "seed": sampler.seed,
    }
    dump_json(result, args.out)
    manifest = {
        "version": MANIFEST_SCHEMA,
        "command": "simulate",
        "package_version": __version__,
        "seed": cfg.seed,
        "config_hash": cfg.config_hash(),
    }
    dump_json(manifest, os.path.splitext(args.out)[0] + ".manifest.json")
    print(f"r_hat = {res.r_hat:.6e} +/- {res.stderr:.2e}", file=sys.stdout)
    print(f"wall_time: {elapsed:.3f}s", file=sys.stderr)
    return 0


def _cmd_sweep(args, mode: str) -> int:
    cfg = _need_config(args)
    records = run_sweep(cfg, mode=mode)
    print(f"{len(records)} records in {cfg.out_dir}")
    return 0


def _cmd_report(args) -> int:
    records = read_records(args.records)
    if args.kind == "gain":
        bins = bin_and_aggregate(records)
        write_report(args.out, bins)
    else:
        if args.k is None:
            raise ValidationError("tvd report requires --k")
        bins = tvd_report(records, args.k)
        write_tvd_report(args.out, bins)
    print(f"wrote {len(bins)} rows to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "cer":
            return _cmd_cer(args)
        if args.command == "uss":
            return _cmd_uss(args)
        if args.command == "decode":
            return _cmd_decode(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "sweep":
            return _cmd_sweep(args, "gain")
        if args.command == "knr-sweep":
            return _cmd_sweep(args, "knr")
        if args.command == "report":
            return _cmd_report(args)
        raise ValidationError(f"unknown command {args.command!r}")
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CerdecError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # anything unexpected is a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
