"""Command line entry point: ``analyze``, ``synth`` and ``benchmark``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .benchmark import METHODS, benchmark_corpus, format_table, to_csv
from .errors import ConfigError, GenerationError, InvalidInputError
from .io import atomic_write_text, list_images, read_gray, write_mask
from .pipeline import PipelineConfig, analyze_image, build_config, load_config, parse_config_text
from .quantify import bin_labels
from .synth import SynthSpec, write as write_synth

logger = logging.getLogger("wbcquant")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def report_json(report) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def csv_header(cfg: PipelineConfig) -> list[str]:
    return (["image_id", "n_discrete", "n_clusters", "mean_discrete_size", "n_cells_in_clusters", "n_total"]
            + [f"bin_{label}" for label in bin_labels(cfg.bin_width, cfg.bin_top)])


def csv_row(report) -> list:
    return ([report.image_id, report.n_discrete, report.n_clusters, f"{report.mean_discrete_size:.2f}",
             f"{report.n_cells_in_clusters:.2f}", f"{report.n_total:.2f}"] + list(report.histogram.counts))


def _process(path: Path, cfg: PipelineConfig, out_dir: Path, debug: bool):
    """Analyse one file and write its outputs; returns ``(csv row, error message)``."""
    image_id = path.stem
    try:
        img = read_gray(path)
        result = analyze_image(img, cfg, image_id)
    except Exception as exc:  # one bad file must not abort the batch
        return None, f"{type(exc).__name__}: {exc}"
    atomic_write_text(out_dir / f"{image_id}.json", report_json(result.report))
    if debug:
        write_mask(out_dir / f"{image_id}.mask.png", result.mask)
        write_mask(out_dir / f"{image_id}.empty_space.png", result.edge.empty_space)
        write_mask(out_dir / f"{image_id}.muscle_edge.png", result.edge.muscle_edge)
        atomic_write_text(out_dir / f"{image_id}.roi.txt", result.roi.to_text())
    return csv_row(result.report), None


def collect_inputs(paths: list[str]) -> list[Path]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(list_images(p))
        elif p.exists():
            files.append(p)
        else:
            raise ConfigError(f"input not found: {p}")
    return sorted(set(files))


def resolve_config(config_file: str | None, overrides: list[str]) -> PipelineConfig:
    values = load_config(config_file) if config_file else {}
    values.update(parse_config_text("\n".join(overrides or [])))
    return build_config(values)


def cmd_analyze(args) -> int:
    cfg = resolve_config(args.config, args.set)
    inputs = collect_inputs(args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_process, inputs, [cfg] * len(inputs), [out_dir] * len(inputs),
                                    [args.debug_masks] * len(inputs)))
    else:
        results = [_process(p, cfg, out_dir, args.debug_masks) for p in inputs]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header(cfg))
    failures = []
    for path, (row, err) in zip(inputs, results):
        if err is None:
            writer.writerow(row)
        else:
            logger.error("%s: %s", path, err)
            failures.append({"path": str(path), "error": err})
    atomic_write_text(out_dir / "summary.csv", buf.getvalue())
    if failures:
        atomic_write_text(out_dir / "errors.json", json.dumps(failures, indent=2) + "\n")
        return EXIT_PARTIAL
    return EXIT_OK


def load_synth_spec(path) -> tuple[dict, int]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read synth spec {path}: {exc}") from None
    n_images = int(doc.pop("n_images", 1))
    unknown = set(doc) - set(SynthSpec.__dataclass_fields__) - {"stem"}
    if unknown:
        raise ConfigError(f"unknown synth spec keys: {sorted(unknown)}")
    return doc, n_images


def cmd_synth(args) -> int:
    doc, n_images = load_synth_spec(args.spec)
    stem = doc.pop("stem", "synth")
    base_seed = int(doc.get("seed", 0))
    for i in range(n_images):
        spec = SynthSpec.from_dict({**doc, "seed": base_seed + i})
        img_path, truth_path = write_synth(spec, args.out, f"{stem}_{i:04d}")
        logger.info("wrote %s and %s", img_path, truth_path)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = resolve_config(args.config, args.set)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
    rows = benchmark_corpus(args.corpus, methods, cfg, args.match_radius)
    table = format_table(rows)
    sys.stdout.write(table)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "benchmark.csv", to_csv(rows))
    atomic_write_text(out_dir / "benchmark.txt", table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wbcquant", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="quantify cells in a batch of images")
    p.add_argument("--input", nargs="+", required=True, help="image files or directories")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one configuration key (repeatable)")
    p.add_argument("--debug-masks", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="render synthetic images with ground truth")
    p.add_argument("--spec", required=True, help="JSON synthetic image specification")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("benchmark", help="compare threshold methods on a synthetic corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--match-radius", type=float, default=15.0)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GenerationError) as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except InvalidInputError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
