"""Command-line entry point: the `enhance` batch runner.

Precedence for every setting: built-in defaults, then the JSON config
file (--config), then explicit command-line flags. Exit codes: 0 full
success, 2 when some images failed, 1 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields

from evolight.batch import RunConfig, run_batch
from evolight.enhance import ParamBounds
from evolight.features import ExtractorSpec
from evolight.fitness import PenaltyConfig
from evolight.moea import EvolutionConfig

_EVOLUTION_FLAGS = {
    # flag name -> EvolutionConfig field
    "pop_size": "pop_size",
    "generations": "generations",
    "crossover_prob": "crossover_prob",
    "mutation_start": "mutation_rate_start",
    "mutation_end": "mutation_rate_end",
    "local_search_steps": "local_search_steps",
    "local_search_fraction": "local_search_fraction",
    "blend_alpha": "blend_alpha",
    "mutation_sigma_fraction": "mutation_sigma_fraction",
    "local_search_sigma_fraction": "local_search_sigma_fraction",
    "diversity_threshold": "diversity_threshold",
}

_SECTION_TYPES = {
    "extractor": ExtractorSpec,
    "bounds": ParamBounds,
    "penalty": PenaltyConfig,
    "evolution": EvolutionConfig,
}

_TOP_LEVEL_KEYS = {"input", "output", "reference", "seed", "workers", "trace"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="enhance",
        description="Per-image low-light enhancement via multi-objective "
                    "evolutionary search.")
    parser.add_argument("--input", metavar="DIR",
                        help="directory of input images (png/jpg/bmp), scanned recursively")
    parser.add_argument("--output", metavar="DIR",
                        help="directory for enhanced images and reports")
    parser.add_argument("--reference", metavar="DIR",
                        help="reference images matched by relative path, enables PSNR/SSIM")
    parser.add_argument("--config", metavar="FILE",
                        help="JSON config file; flags override its values")
    model = parser.add_mutually_exclusive_group()
    model.add_argument("--model", metavar="PATH",
                       help="ONNX feature model; default is the model-free fallback extractor")
    model.add_argument("--fallback-features", action="store_true", default=None,
                       help="force the model-free fallback extractor")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="batch seed (default 0)")
    parser.add_argument("--workers", type=int, metavar="K",
                        help="parallel image jobs (default 1)")
    parser.add_argument("--trace", action="store_true", default=None,
                        help="also write per-generation trace.jsonl")

    evo = parser.add_argument_group("optimizer")
    evo.add_argument("--pop-size", type=int)
    evo.add_argument("--generations", type=int)
    evo.add_argument("--crossover-prob", type=float)
    evo.add_argument("--mutation-start", type=float)
    evo.add_argument("--mutation-end", type=float)
    evo.add_argument("--local-search-steps", type=int)
    evo.add_argument("--local-search-fraction", type=float)
    evo.add_argument("--blend-alpha", type=float)
    evo.add_argument("--mutation-sigma-fraction", type=float)
    evo.add_argument("--local-search-sigma-fraction", type=float)
    evo.add_argument("--diversity-threshold", type=float)

    dom = parser.add_argument_group("search domain")
    dom.add_argument("--brightness-bounds", nargs=2, type=float,
                     metavar=("LO", "HI"))
    dom.add_argument("--contrast-bounds", nargs=2, type=float,
                     metavar=("LO", "HI"))
    dom.add_argument("--gamma-bounds", nargs=2, type=float,
                     metavar=("LO", "HI"))
    dom.add_argument("--penalty-low", type=float)
    dom.add_argument("--penalty-high", type=float)
    dom.add_argument("--penalty-weight", type=float)

    feat = parser.add_argument_group("feature extractor")
    feat.add_argument("--input-size", type=int,
                      help="model input resolution (default 224)")
    feat.add_argument("--pooled-dim", type=int,
                      help="feature channels after pooling (default 512)")
    feat.add_argument("--pooling", choices=("avg", "max"),
                      help="spatial pooling for map outputs (default avg)")
    return parser


def _load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config file {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    for key, value in data.items():
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise ValueError(f"config section {key!r} must be an object")
            valid = {f.name for f in fields(_SECTION_TYPES[key])}
            unknown = set(value) - valid
            if unknown:
                raise ValueError(f"unknown keys in config section {key!r}: "
                                 f"{sorted(unknown)}")
        elif key not in _TOP_LEVEL_KEYS:
            raise ValueError(f"unknown config key {key!r}")
    return data


def _section(file_cfg: dict, name: str) -> dict:
    out = dict(file_cfg.get(name, {}))
    if name == "bounds":
        out = {k: tuple(v) for k, v in out.items()}
    return out


def build_run_config(args) -> RunConfig:
    """Merge defaults, config file, and flags into a validated RunConfig."""
    file_cfg = _load_config_file(args.config) if args.config else {}

    top = {k: file_cfg.get(k) for k in _TOP_LEVEL_KEYS}
    for key in ("input", "output", "reference", "seed", "workers", "trace"):
        flag = getattr(args, key)
        if flag is not None:
            top[key] = flag
    if not top.get("input") or not top.get("output"):
        raise ValueError("--input and --output are required "
                         "(flags or config file)")

    extractor_kw = _section(file_cfg, "extractor")
    if args.model is not None:
        extractor_kw.update(kind="deep-model", model_path=args.model)
    elif args.fallback_features:
        extractor_kw.update(kind="fallback", model_path=None)
    for key in ("input_size", "pooled_dim", "pooling"):
        flag = getattr(args, key)
        if flag is not None:
            extractor_kw[key] = flag

    bounds_kw = _section(file_cfg, "bounds")
    for gene in ("brightness", "contrast", "gamma"):
        flag = getattr(args, f"{gene}_bounds")
        if flag is not None:
            bounds_kw[gene] = tuple(flag)

    penalty_kw = _section(file_cfg, "penalty")
    for key in ("low", "high", "weight"):
        flag = getattr(args, f"penalty_{key}")
        if flag is not None:
            penalty_kw[key] = flag

    evo_kw = _section(file_cfg, "evolution")
    for flag_name, field_name in _EVOLUTION_FLAGS.items():
        flag = getattr(args, flag_name)
        if flag is not None:
            evo_kw[field_name] = flag

    try:
        return RunConfig(
            input_dir=str(top["input"]),
            output_dir=str(top["output"]),
            reference_dir=None if top.get("reference") is None
            else str(top["reference"]),
            extractor=ExtractorSpec(**extractor_kw),
            bounds=ParamBounds(**bounds_kw),
            penalty=PenaltyConfig(**penalty_kw),
            evolution=EvolutionConfig(**evo_kw),
            workers=int(top["workers"]) if top.get("workers") is not None else 1,
            seed=int(top["seed"]) if top.get("seed") is not None else 0,
            trace=bool(top.get("trace") or False),
        )
    except TypeError as exc:
        raise ValueError(f"bad configuration: {exc}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; in this interface 2 means
        # partial failures, so remap anything unsuccessful to 1
        return 0 if exc.code in (0, None) else 1
    try:
        cfg = build_run_config(args)
        summary = run_batch(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    agg = summary.aggregates
    print(f"processed {summary.images_processed} image(s) "
          f"in {summary.wall_time_ms} ms")
    if summary.images_processed:
        print(f"mean entropy {agg['entropy_before']:.4f} -> "
              f"{agg['entropy_after']:.4f} bits; "
              f"mean brightness {agg['brightness_before']:.4f} -> "
              f"{agg['brightness_after']:.4f}")
        if agg["psnr"] is not None:
            print(f"mean PSNR {agg['psnr']:.3f} dB")
        if agg["ssim"] is not None:
            print(f"mean SSIM {agg['ssim']:.5f}")
    for image_id, error in summary.failures:
        print(f"failed: {image_id}: {error}", file=sys.stderr)
    return 2 if summary.failures else 0


if __name__ == "__main__":
    sys.exit(main())
