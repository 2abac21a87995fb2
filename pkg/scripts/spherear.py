#!/usr/bin/env python3
"""
SphereAR CLI - dataset generation, training, decoding, experiments and property suites

Every subcommand reads an optional JSON config, applies the --seed/--out/--threads
overrides (then SPHEREAR_* environment defaults) and writes its outputs under
the resolved output directory.

Exit codes: 0 success, 1 invariant or training failure, 2 config error.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

# Add project root to path
sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

from lib.ar import ArError, CfgKind, RefeedMode
from lib.ar import TrainingDivergedError as ArTrainingDivergedError
from lib.directional import DirectionalError
from lib.experiments import (
    ExperimentConfig,
    ExperimentError,
    cmd_ablation,
    cmd_decode,
    cmd_drift,
    cmd_gen_data,
    cmd_train,
    cmd_train_ar,
    cmd_train_svae,
    cmd_verify,
    load_config,
    parse_config,
    resolve_config,
)
from lib.experiments.config import ENV_LOG_LEVEL
from lib.svae import SvaeError
from lib.svae import TrainingDivergedError as SvaeTrainingDivergedError
from lib.tensor import TensorError
from lib.verify import ALL_SUITES, FAULTS, VerifyError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def setup_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else os.getenv(ENV_LOG_LEVEL, "INFO").upper()
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--threads", type=int, help="worker threads for ablation variants")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="spherear", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="generate the toy image dataset")
    train_svae = sub.add_parser("train-svae", parents=[common], help="train the S-VAE")
    train_svae.add_argument("--resume", type=Path, help="checkpoint to continue from")
    train_ar = sub.add_parser("train-ar", parents=[common], help="train AR variants on the token process")
    train_ar.add_argument("--variant", action="append", help="variant name (repeatable; default all)")
    train_ar.add_argument("--resume", type=Path, help="checkpoint to continue from (one variant only)")
    train = sub.add_parser("train", parents=[common], help="train what config.kind names")
    train.add_argument("--resume", type=Path, help="checkpoint to continue from")
    decode = sub.add_parser("decode", parents=[common], help="decode sequences from a trained variant")
    decode.add_argument("--variant", help="variant name (default from the config)")
    decode.add_argument("--n-steps", type=int, help="Euler steps per token (default 100)")
    decode.add_argument("--cfg-scale", type=float, help="maximum guidance scale s_max")
    decode.add_argument("--cfg-kind", choices=[k.value for k in CfgKind], help="guidance schedule (default linear)")
    decode.add_argument("--refeed", choices=[m.value for m in RefeedMode], help="override the variant's refeed mode")
    sub.add_parser("drift", parents=[common], help="norm-drift sweep over variants and CFG scales")
    sub.add_parser("ablation", parents=[common], help="posterior-family ablation")
    verify = sub.add_parser("verify", parents=[common], help="run the property suites")
    verify.add_argument("--suite", action="append", choices=sorted(ALL_SUITES), help="suite to run (repeatable)")
    verify.add_argument("--fault", choices=sorted(FAULTS), help="inject a known fault (harness self-test)")
    return parser


DECODE_FLAGS = ("variant", "n_steps", "cfg_scale", "cfg_kind", "refeed")


def apply_decode_flags(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """Fold the decode flags that were given into config.decode, re-validating the result"""
    update = {flag: getattr(args, flag) for flag in DECODE_FLAGS if getattr(args, flag, None) is not None}
    if not update:
        return config
    raw = config.model_dump(mode="json")
    raw["decode"].update(update)
    return parse_config(raw)


def run(args: argparse.Namespace) -> int:
    config = resolve_config(load_config(args.config), seed=args.seed, out_dir=args.out, threads=args.threads)
    print(f"🚀 spherear {args.command} -> {config.out_path}")

    if args.command == "gen-data":
        manifest = cmd_gen_data(config)
        print(f"📦 {manifest['n_items']} items, sha256 {manifest['sha256'][:12]}")
    elif args.command == "train-svae":
        report = cmd_train_svae(config, args.resume)
        print(f"✅ S-VAE {report['family']} trained: {report['final']}")
    elif args.command == "train-ar":
        reports = cmd_train_ar(config, variants=args.variant, resume=args.resume)
        for name in reports:
            print(f"✅ AR variant {name} trained")
    elif args.command == "train":
        cmd_train(config, args.resume)
        print(f"✅ {config.kind.value} training done")
    elif args.command == "decode":
        config = apply_decode_flags(config, args)
        summary = cmd_decode(config)
        cfg = summary["cfg"]
        print(
            f"🎯 decoded {summary['n_sequences']} sequences ({summary['n_steps']} Euler steps, "
            f"{cfg['kind']} CFG s={cfg['scale']:g}), guard fired {summary['guard_count']} times"
        )
    elif args.command == "drift":
        report = cmd_drift(config)
        for cell in report.cells:
            print(
                f"📈 {cell.variant:<20} s={cell.cfg_scale:<4g} "
                f"post-norm {cell.post_norm['mean']:.4f} ± {cell.post_norm['std']:.2e}"
            )
    elif args.command == "ablation":
        rows = cmd_ablation(config)
        for row in rows:
            mark = "✅" if row.status == "ok" else "❌"
            print(f"{mark} {row.name:<16} {row.family}  {row.error or ''}")
        if any(row.status != "ok" for row in rows):
            return EXIT_FAILURE
    elif args.command == "verify":
        report, _ = cmd_verify(config, args.suite, args.fault)
        for check in report.checks:
            mark = "✅" if check.passed else "❌"
            print(f"{mark} {check.qualified_name}: {check.value} (tolerance {check.tolerance}) {check.error or ''}")
        if not report.passed:
            print(f"\n❌ {len(report.failed)} checks failed")
            return EXIT_FAILURE
        print(f"\n✅ all {len(report.checks)} checks passed")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Main function for command-line usage"""
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return run(args)
    except (SvaeTrainingDivergedError, ArTrainingDivergedError) as e:
        print(f"❌ Training diverged: {e}")
        return EXIT_FAILURE
    except (ExperimentError, VerifyError) as e:
        print(f"❌ {e}")
        return EXIT_CONFIG
    except (SvaeError, ArError, DirectionalError, TensorError) as e:
        # invalid sizes or parameters that only surface once the library builds the model
        print(f"❌ Invalid setting: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
