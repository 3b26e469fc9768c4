"""Command-line pipeline: ``simulate``, ``report``, and ``full``.

Exit codes: 0 success, 2 configuration error, 3 I/O failure, 4 panel
validation error. Every run writes a manifest listing each artifact with its
content hash; re-running with the same configuration and seed reproduces the
hashes bit for bit (the recorded wall-clock timings are the only
non-deterministic manifest fields).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from .config import ConfigError, SimConfig, flatten_config, load_config
from .domain import read_panel_csv, validate_panel, write_panel_csv
from .report import build_report
from .simulator import simulate_panel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VALIDATION = 4


def _tool_version() -> str:
    try:
        return version("liqlab")
    except PackageNotFoundError:
        return "0.0.0+local"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    out_dir: Path,
    cfg: SimConfig,
    artifacts: list[Path],
    timings: dict[str, float],
    report_options: dict[str, int] | None = None,
) -> Path:
    manifest = {
        "tool": "liqlab",
        "version": _tool_version(),
        "seed": cfg.seed,
        "config": {k: v for k, v in flatten_config(cfg).items()},
        "artifacts": [
            {"path": p.name, "sha256": _sha256(p)} for p in sorted(artifacts, key=lambda p: p.name)
        ],
        "timings_s": {k: round(v, 3) for k, v in timings.items()},
    }
    if report_options is not None:
        manifest["report_options"] = report_options
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _simulate_artifacts(cfg: SimConfig, out_dir: Path) -> tuple[list[Path], float]:
    t0 = time.perf_counter()
    panel = simulate_panel(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    panel_path = out_dir / "panel.csv"
    markets_path = out_dir / "markets.csv"
    write_panel_csv(panel, panel_path, markets_path)
    return [panel_path, markets_path], time.perf_counter() - t0


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.seed)
    out_dir = Path(args.out)
    artifacts, elapsed = _simulate_artifacts(cfg, out_dir)
    manifest = write_manifest(out_dir, cfg, artifacts, {"simulate": elapsed})
    print(f"wrote {len(artifacts)} artifacts + {manifest.name} to {out_dir}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    panel_path = Path(args.panel)
    markets_path = panel_path.with_name("markets.csv")
    panel = read_panel_csv(panel_path, markets_path)
    violations = validate_panel(panel)
    if violations:
        print(f"panel validation failed ({len(violations)} violations); first: {violations[0]}", file=sys.stderr)
        return EXIT_VALIDATION
    t0 = time.perf_counter()
    out_dir = Path(args.out)
    bundle = build_report(panel, out_dir, n_bins=args.bins)
    cfg = load_config(args.config, None)
    manifest = write_manifest(
        out_dir,
        cfg,
        bundle.paths,
        {"report": time.perf_counter() - t0},
        report_options={"bins": args.bins, "delta": args.delta},
    )
    print(f"wrote {len(bundle.paths)} artifacts + {manifest.name} to {out_dir}")
    return EXIT_OK


def cmd_full(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.seed)
    out_dir = Path(args.out)
    artifacts, sim_elapsed = _simulate_artifacts(cfg, out_dir)
    panel = read_panel_csv(out_dir / "panel.csv", out_dir / "markets.csv")
    violations = validate_panel(panel)
    if violations:
        print(f"generated panel failed validation; first: {violations[0]}", file=sys.stderr)
        return EXIT_VALIDATION
    t0 = time.perf_counter()
    bundle = build_report(panel, out_dir, n_bins=args.bins)
    manifest = write_manifest(
        out_dir,
        cfg,
        artifacts + bundle.paths,
        {"simulate": sim_elapsed, "report": time.perf_counter() - t0},
        report_options={"bins": args.bins, "delta": args.delta},
    )
    print(f"wrote {len(artifacts) + len(bundle.paths)} artifacts + {manifest.name} to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liqlab",
        description="Synthetic prediction-market liquidity laboratory: simulate panels and reproduce the report stack.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_seed: bool = True) -> None:
        p.add_argument("--config", type=str, default=None, help="flat key=value configuration file")
        p.add_argument("--out", type=str, required=True, help="output directory")
        if with_seed:
            p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--delta", type=int, default=5, help="realized-spread horizon (recorded in the manifest; the synthetic panel embeds its generation horizon)")
        p.add_argument("--bins", type=int, default=8, help="calibration bins")

    p_sim = sub.add_parser("simulate", help="generate panel.csv and markets.csv")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_rep = sub.add_parser("report", help="build tables and figures from an existing panel")
    common(p_rep, with_seed=False)
    p_rep.add_argument("--panel", type=str, required=True, help="path to panel.csv (markets.csv beside it)")
    p_rep.set_defaults(func=cmd_report)

    p_full = sub.add_parser("full", help="simulate then report, one manifest")
    common(p_full)
    p_full.set_defaults(func=cmd_full)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
