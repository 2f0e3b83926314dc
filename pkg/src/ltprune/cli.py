"""``ltprune`` command line.

Exit codes: 0 success, 1 computation error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import cost_model, eviction, imaging, pipeline, segmentation, similarity
from .tensor_io import FormatError, Role, load_mask, load_matrix, save_mask


class UsageError(Exception):
    pass


def _load(path, role=Role.VISUAL):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    try:
        return load_matrix(p, role)
    except (FormatError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _pos_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _pos_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _ratio(s):
    v = float(s)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {v}")
    return v


def _segment(cls, visual, alpha, mode):
    curve = similarity.similarity_curve(cls, visual)
    result = segmentation.segment(curve, alpha, mode)
    if result.degenerate:
        print("warning: similarity curve is flat; keeping every visual token", file=sys.stderr)
    return curve, result


def cmd_prune(args):
    cls = _load(args.cls, Role.CLS)
    visual = _load(args.visual, Role.VISUAL)
    curve, result = _segment(cls, visual, args.alpha, args.mode)
    mask = segmentation.stage1_mask(curve, result.kept_count)
    out = _out_dir(args.out_dir)
    save_mask(mask, out / "stage1_mask.txt")
    _write(out / "split_objective.csv", segmentation.objective_csv(result))
    print(f"i_star={result.i_star if result.i_star is not None else '-'} kept={len(mask)}/{mask.total}")


def _eviction_config(args) -> eviction.EvictionConfig:
    return eviction.EvictionConfig(
        heavy_budget=args.heavy,
        recent_budget=args.recent,
        heavy_ratio=args.heavy_ratio,
        recent_ratio=args.recent_ratio,
        cache_budget=args.budget,
        include_self=not args.exclude_self,
    )


def cmd_evict(args):
    tokens = _load(args.tokens, Role.TEXT)
    if args.boundary > tokens.rows:
        raise UsageError(f"--boundary {args.boundary} exceeds token count {tokens.rows}")
    try:
        config = _eviction_config(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mask, state = eviction.run_stream(tokens, args.boundary, config)
    out = _out_dir(args.out_dir)
    save_mask(mask, out / "stage2_mask.txt")
    _write(out / "eviction_log.csv", eviction.eviction_log_csv(state))
    print(f"kept={len(mask)}/{mask.total} evicted={len(state.evicted)}")


def _parse_overrides(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_pipeline(args):
    cls = _load(args.cls, Role.CLS)
    visual = _load(args.visual, Role.VISUAL)
    text = _load(args.text, Role.TEXT) if args.text else None

    values = {}
    if args.config:
        if not Path(args.config).is_file():
            raise UsageError(f"no such file: {args.config}")
        values.update(pipeline.load_config(args.config))
    values.update(_parse_overrides(args.set))
    proj_path = args.projection or values.get("projection")
    if proj_path and args.config and not Path(proj_path).is_absolute() and not args.projection:
        proj_path = str(Path(args.config).parent / proj_path)
    projection = _load(proj_path, Role.PROJECTION).data if proj_path else None
    try:
        config = pipeline.config_from_mapping(values, projection)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    report = pipeline.run_pipeline(cls, visual, text, config)
    if report.split.degenerate:
        print("warning: similarity curve is flat; keeping every visual token", file=sys.stderr)
    out = _out_dir(args.out_dir)
    save_mask(report.stage1_mask, out / "stage1_mask.txt")
    save_mask(report.stage2_mask, out / "stage2_mask.txt")
    _write(out / "split_objective.csv", segmentation.objective_csv(report.split))
    _write(out / "eviction_log.csv", eviction.eviction_log_csv(report.eviction_state))
    _write(out / "report.csv", pipeline.token_accounting(report, "csv"))
    text_report = pipeline.token_accounting(report, "text")
    _write(out / "report.txt", text_report)
    sys.stdout.write(text_report)


def cmd_cost(args):
    try:
        spec = cost_model.load_preset(args.preset)
    except (KeyError, ValueError, FormatError) as exc:
        raise UsageError(str(exc).strip("'\"")) from None
    if args.utilization is not None:
        spec = cost_model.with_utilization(spec, args.utilization)
    report = cost_model.estimate(spec, args.tokens)
    text = cost_model.format_report(report, args.format)
    if args.out:
        _write(Path(args.out), text)
    sys.stdout.write(text)


def cmd_analyze(args):
    cls = _load(args.cls, Role.CLS)
    visual = _load(args.visual, Role.VISUAL)
    curve = similarity.similarity_curve(cls, visual)
    lines = ["rank,similarity,original_index"]
    lines += [f"{r},{float(v)!r},{int(i)}" for r, (v, i) in enumerate(zip(curve.values, curve.source_index), start=1)]
    text = "\n".join(lines) + "\n"
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)


def cmd_viz(args):
    if not Path(args.mask).is_file():
        raise UsageError(f"no such file: {args.mask}")
    try:
        mask = load_mask(args.mask)
        w, h = imaging.parse_grid(args.grid)
    except (FormatError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if w * h != mask.total:
        raise UsageError(f"grid {w}x{h} has {w * h} cells but mask covers {mask.total} tokens")
    if args.patch_image:
        if not Path(args.patch_image).is_file():
            raise UsageError(f"no such file: {args.patch_image}")
        try:
            src = imaging.read_pnm(args.patch_image)
            img = imaging.overlay_mask(src, mask, w, h)
        except (FormatError, ValueError) as exc:
            raise UsageError(str(exc)) from None
    else:
        img = imaging.mask_image(mask, w, h)
    imaging.write_pnm(img, args.out)
    print(f"wrote {args.out}: {img.shape[1]}x{img.shape[0]}, kept {len(mask)}/{mask.total} patches")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ltprune", description="Two-stage multimodal token pruning.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prune", help="stage 1: split visual tokens on the CLS similarity curve")
    s.add_argument("cls")
    s.add_argument("visual")
    s.add_argument("--alpha", type=_pos_float, default=0.24)
    s.add_argument("--mode", choices=[m.value for m in segmentation.SmoothingMode], default="multiply")
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_prune)

    s = sub.add_parser("evict", help="stage 2: heavy/recent eviction over a token stream")
    s.add_argument("tokens")
    s.add_argument("--boundary", type=_nonneg_int, required=True, help="index of the first text token")
    s.add_argument("--recent", type=_nonneg_int, default=None, help="recent budget M")
    s.add_argument("--heavy", type=_pos_int, default=None, help="heavy budget N")
    s.add_argument("--recent-ratio", type=_ratio, default=0.5)
    s.add_argument("--heavy-ratio", type=_ratio, default=0.5)
    s.add_argument("--budget", type=_pos_int, default=None, help="cache budget the ratios apply to")
    s.add_argument("--exclude-self", action="store_true")
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_evict)

    s = sub.add_parser("pipeline", help="both stages end to end")
    s.add_argument("cls")
    s.add_argument("visual")
    s.add_argument("text", nargs="?")
    s.add_argument("--config")
    s.add_argument("--projection")
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("cost", help="prefill FLOPs, latency and memory estimate")
    s.add_argument("--preset", default="vicuna-7b-fp16")
    s.add_argument("--tokens", type=_pos_int, required=True)
    s.add_argument("--utilization", type=_ratio, default=None)
    s.add_argument("--format", choices=["text", "csv"], default="text")
    s.add_argument("--out")
    s.set_defaults(func=cmd_cost)

    s = sub.add_parser("analyze", help="sorted CLS similarity curve as CSV")
    s.add_argument("cls")
    s.add_argument("visual")
    s.add_argument("--out")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("viz", help="render a mask on a patch grid as PGM")
    s.add_argument("mask")
    s.add_argument("--grid", required=True, metavar="WxH")
    s.add_argument("--patch-image")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_viz)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"ltprune {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"ltprune {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
