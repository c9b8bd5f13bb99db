"""Batch orchestration: run the per-image search over a directory tree.

Each image is an independent job (its own RNG stream, derived from the
batch seed and its relative path), so results do not depend on worker
count or on which other files happen to be in the tree. Reports are
gathered and written by the parent process only.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from pathlib import Path

import numpy as np

from evolight.enhance import ParamBounds, enhance
from evolight.features import ExtractorSpec, create_extractor
from evolight.fitness import PenaltyConfig
from evolight.image import (
    SUPPORTED_EXTENSIONS,
    image_entropy,
    load_image,
    mean_brightness,
    save_image,
)
from evolight.metrics import MetricsReport, psnr, ssim, write_report_csv, write_report_json
from evolight.moea import EvolutionConfig, evolve

REPORT_CSV = "report.csv"
REPORT_JSON = "report.json"
TRACE_JSONL = "trace.jsonl"


@dataclass(frozen=True)
class RunConfig:
    """Everything one batch run needs; nested configs validate themselves."""

    input_dir: str
    output_dir: str
    reference_dir: str | None = None
    extractor: ExtractorSpec = field(default_factory=ExtractorSpec)
    bounds: ParamBounds = field(default_factory=ParamBounds)
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    workers: int = 1
    seed: int = 0
    trace: bool = False

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if not (0 <= self.seed < 2 ** 64):
            raise ValueError("seed must fit in an unsigned 64-bit int")


@dataclass
class RunSummary:
    """Outcome of one batch: counts, failures, and report aggregates."""

    images_processed: int
    failures: list
    aggregates: dict
    wall_time_ms: int


def discover_inputs(input_dir) -> list[str]:
    """Relative paths (POSIX form) of supported images under input_dir,
    recursively, sorted lexicographically."""
    root = Path(input_dir)
    if not root.is_dir():
        raise ValueError(f"input directory not readable: {input_dir}")
    found = [
        p.relative_to(root).as_posix()
        for p in root.rglob("*")
        if p.is_file() and p.suffix.lower() in SUPPORTED_EXTENSIONS
    ]
    return sorted(found)


def image_seed(batch_seed: int, image_id: str) -> int:
    """Per-image sub-seed: batch seed XOR the first 8 bytes of
    sha256(image_id), as an unsigned 64-bit int. Depends only on this
    image's relative path, so other files never shift its stream."""
    digest = hashlib.sha256(image_id.encode("utf-8")).digest()
    return (batch_seed ^ int.from_bytes(digest[:8], "big")) & (2 ** 64 - 1)


# one extractor per (process, spec); ONNX models load once, not per image
_EXTRACTOR_CACHE: dict = {}


def _get_extractor(spec: ExtractorSpec):
    ext = _EXTRACTOR_CACHE.get(spec)
    if ext is None:
        ext = create_extractor(spec)
        _EXTRACTOR_CACHE[spec] = ext
    return ext


def _process_one(cfg: RunConfig, image_id: str) -> dict:
    """Worker body: enhance one image and return its report or error.

    Never raises; failures come back as {"error": ...} so one bad file
    cannot take down the batch.
    """
    start = time.perf_counter()
    try:
        in_path = Path(cfg.input_dir) / image_id
        img = load_image(in_path)
        extractor = _get_extractor(cfg.extractor)
        evo_cfg = replace(cfg.evolution, rng_seed=image_seed(cfg.seed, image_id))
        best, _front, history = evolve(img, extractor, cfg.bounds,
                                       cfg.penalty, evo_cfg)
        enhanced = enhance(img, best.params)

        out_path = Path(cfg.output_dir) / image_id
        out_path.parent.mkdir(parents=True, exist_ok=True)
        save_image(out_path, enhanced)

        psnr_val = ssim_val = None
        if cfg.reference_dir is not None:
            ref_path = Path(cfg.reference_dir) / image_id
            if ref_path.is_file():
                ref = load_image(ref_path)
                if ref.shape == enhanced.shape:
                    psnr_val = psnr(enhanced, ref)
                    ssim_val = ssim(enhanced, ref)

        report = MetricsReport(
            image_id=image_id,
            entropy_before=image_entropy(img),
            entropy_after=best.evaluation.entropy,
            brightness_before=mean_brightness(img),
            brightness_after=best.evaluation.mean_brightness,
            params=best.params,
            psnr=psnr_val,
            ssim=ssim_val,
            runtime_ms=int(round((time.perf_counter() - start) * 1000.0)),
        )
        trace = [{"image_id": image_id, **asdict(stats)} for stats in history] \
            if cfg.trace else []
        return {"image_id": image_id, "report": report, "trace": trace}
    except Exception as exc:  # per-image isolation
        return {"image_id": image_id,
                "error": f"{type(exc).__name__}: {exc}"}


def _aggregates(reports: list[MetricsReport]) -> dict:
    """Means of the numeric report fields; psnr averages only finite values."""
    def mean_of(values):
        vals = [v for v in values if v is not None and math.isfinite(v)]
        return float(np.mean(vals)) if vals else None

    return {
        "entropy_before": mean_of(r.entropy_before for r in reports),
        "entropy_after": mean_of(r.entropy_after for r in reports),
        "brightness_before": mean_of(r.brightness_before for r in reports),
        "brightness_after": mean_of(r.brightness_after for r in reports),
        "psnr": mean_of(r.psnr for r in reports),
        "ssim": mean_of(r.ssim for r in reports),
        "runtime_ms": mean_of(float(r.runtime_ms) for r in reports),
    }


def run_batch(cfg: RunConfig) -> RunSummary:
    """Process every discovered image; write outputs and both reports.

    Images are dispatched to cfg.workers processes. report.csv /
    report.json (and trace.jsonl with cfg.trace) land in output_dir,
    rows sorted by image id. Raises ValueError for unusable input/output
    directories; per-image errors only show up in the failures list.
    """
    t0 = time.perf_counter()
    image_ids = discover_inputs(cfg.input_dir)

    out_root = Path(cfg.output_dir)
    try:
        out_root.mkdir(parents=True, exist_ok=True)
        probe = out_root / ".write_probe"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise ValueError(f"output directory not writable: {cfg.output_dir} ({exc})")

    worker = partial(_process_one, cfg)
    if cfg.workers == 1 or len(image_ids) <= 1:
        results = [worker(image_id) for image_id in image_ids]
    else:
        max_workers = min(cfg.workers, len(image_ids))
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(worker, image_ids))

    results.sort(key=lambda r: r["image_id"])
    reports = [r["report"] for r in results if "report" in r]
    failures = [(r["image_id"], r["error"]) for r in results if "error" in r]

    write_report_csv(reports, out_root / REPORT_CSV)
    aggregates = _aggregates(reports)
    summary_block = {
        "images_processed": len(reports),
        "failures": [{"image_id": i, "error": e} for i, e in failures],
        "aggregates": aggregates,
    }
    write_report_json(reports, out_root / REPORT_JSON, summary=summary_block)

    if cfg.trace:
        with open(out_root / TRACE_JSONL, "w") as fh:
            for r in results:
                for record in r.get("trace", []):
                    fh.write(json.dumps(record) + "\n")

    return RunSummary(
        images_processed=len(reports),
        failures=failures,
        aggregates=aggregates,
        wall_time_ms=int(round((time.perf_counter() - t0) * 1000.0)),
    )
