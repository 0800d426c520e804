"""Batch command line: extract, train, evaluate, importance, plot-data, synth.

Exit codes: 0 success, 1 usage error, 2 data error. Every artifact embeds
the resolved run configuration and the tool version; reruns with the same
inputs and config produce byte-identical feature CSVs.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .audio_io import load_audio, peak_normalize
from .classifier import (
    evaluate,
    load_model,
    permutation_importance,
    save_model,
    split_dataset,
    train,
)
from .config import RunConfig
from .envelope import am_envelope, fm_envelope, track_f0
from .errors import RfaError, UnvoicedClipError
from .features import (
    FeatureVector,
    dataset_from_vectors,
    read_dataset,
    select_features,
    write_dataset,
)
from .lf_spectrogram import compute_lf_spectrogram, extract_trajectories
from .lf_spectrum import compute_lf_spectrum, pick_r_formants
from .pipeline import extract_from_file
from .synth import SynthSpec, write_synth

log = logging.getLogger("rfa")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_N_PLOT_PEAKS = 3  # peak markers / trajectories emitted by plot-data


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; remap to the documented code
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit2(EXIT_USAGE, f"{self.prog}: error: {message}")


class SystemExit2(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pipeline configuration")
    group.add_argument("--config", type=Path, help="JSON config file (flags override)")
    group.add_argument("--min-duration", type=float, dest="min_duration_s",
                       help="keep files strictly longer than this many seconds")
    group.add_argument("--env-rate", type=float, dest="env_rate_hz",
                       help="envelope sampling rate in Hz")
    group.add_argument("--smooth-ms", type=float, dest="smooth_ms",
                       help="AM moving-average width in ms")
    group.add_argument("--f0-min", type=float, dest="f0_min_hz")
    group.add_argument("--f0-max", type=float, dest="f0_max_hz")
    group.add_argument("--f0-frame", type=float, dest="f0_frame_s")
    group.add_argument("--f0-hop", type=float, dest="f0_hop_s")
    group.add_argument("--voicing-threshold", type=float, dest="voicing_threshold")
    group.add_argument("--zero-pad-factor", type=int, dest="zero_pad_factor")
    group.add_argument("--n-formants", type=int, dest="n_formants")
    group.add_argument("--peak-threshold", type=float, dest="peak_threshold")
    group.add_argument("--min-peak-separation", type=float,
                       dest="min_peak_separation_hz")
    group.add_argument("--rolloff-fraction", type=float, dest="rolloff_fraction")
    group.add_argument("--window", type=float, dest="window_s",
                       help="spectrogram window in seconds")
    group.add_argument("--hop", type=float, dest="hop_s",
                       help="spectrogram hop in seconds")
    group.add_argument("--trajectory-order", choices=["magnitude", "frequency"],
                       dest="trajectory_order")
    group.add_argument("--seed", type=int, dest="seed")


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    for field in RunConfig.__dataclass_fields__:
        value = getattr(args, field, None)
        if value is not None:
            overrides[field] = value
    return cfg.replace(**overrides) if overrides else cfg


def _metadata(cfg: RunConfig) -> dict:
    return {"tool": "rfa", "version": __version__, "config": cfg.to_dict()}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rfa", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rfa {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="extract feature CSV from a WAV tree")
    p_extract.add_argument("input_dir", type=Path)
    p_extract.add_argument("-o", "--output", type=Path, required=True)
    p_extract.add_argument("--label-map", type=Path,
                           help="JSON file mapping source_id (or file stem) to label; "
                                "default labels come from the subdirectory name")
    p_extract.add_argument("--jobs", type=int, default=1,
                           help="worker processes for per-file extraction")
    _add_config_flags(p_extract)

    p_train = sub.add_parser("train", help="split, grid-search, and fit the SVM")
    p_train.add_argument("--data", type=Path, required=True)
    p_train.add_argument("--model-out", type=Path, required=True)
    p_train.add_argument("--groups", default="A,B,C",
                         help="comma list from R,A,B,C (default A,B,C)")
    p_train.add_argument("--envelopes", default="AM,FM",
                         help="comma list from AM,FM (default both)")
    p_train.add_argument("--test-fraction", type=float, dest="test_fraction")
    p_train.add_argument("--folds", type=int, dest="cv_folds")
    p_train.add_argument("--c-grid", dest="svm_c_grid",
                         help="comma-separated C values")
    p_train.add_argument("--gamma-grid", dest="svm_gamma_grid",
                         help="comma-separated gamma values")
    p_train.add_argument("--test-out", type=Path,
                         help="write the held-out test rows to this CSV")
    p_train.add_argument("--grid-report", type=Path,
                         help="write the CV grid report to this JSON file")
    p_train.add_argument("--config", type=Path)
    p_train.add_argument("--seed", type=int, dest="seed")

    p_eval = sub.add_parser("evaluate", help="score a model on a feature CSV")
    p_eval.add_argument("--model", type=Path, required=True)
    p_eval.add_argument("--data", type=Path, required=True)
    p_eval.add_argument("--report-out", type=Path)
    p_eval.add_argument("--confusion-csv", type=Path)

    p_imp = sub.add_parser("importance", help="permutation feature importance")
    p_imp.add_argument("--model", type=Path, required=True)
    p_imp.add_argument("--data", type=Path, required=True)
    p_imp.add_argument("--n-repeats", type=int, default=20)
    p_imp.add_argument("--seed", type=int, default=0)
    p_imp.add_argument("--out", type=Path, help="write full ranking as JSON")
    p_imp.add_argument("--top", type=int, default=15)

    p_plot = sub.add_parser("plot-data", help="emit per-panel CSVs for one WAV")
    p_plot.add_argument("input_wav", type=Path)
    p_plot.add_argument("--out-dir", type=Path, required=True)
    _add_config_flags(p_plot)

    p_synth = sub.add_parser("synth", help="write a synthetic WAV + JSON sidecar")
    p_synth.add_argument("--kind", required=True,
                         choices=["am_tone", "vibrato", "am_step", "noise", "silence"])
    p_synth.add_argument("--out", type=Path, required=True)
    p_synth.add_argument("--carrier", type=float, default=220.0)
    p_synth.add_argument("--mod-freq", type=float, default=4.0)
    p_synth.add_argument("--mod-freq2", type=float, default=None)
    p_synth.add_argument("--mod-depth", type=float, default=0.5)
    p_synth.add_argument("--duration", type=float, default=10.0)
    p_synth.add_argument("--rate", type=int, default=16000)
    p_synth.add_argument("--seed", type=int, default=0)

    return parser


# ---------------------------------------------------------------------------
# extract

def _collect_wavs(input_dir: Path) -> list[Path]:
    return sorted(p for p in input_dir.rglob("*.wav") if p.is_file())


def _label_for(path: Path, input_dir: Path, label_map: dict | None) -> str:
    rel = path.relative_to(input_dir)
    source_id = rel.with_suffix("").as_posix()
    if label_map is not None:
        for key in (source_id, path.stem):
            if key in label_map:
                return str(label_map[key])
        return ""
    if len(rel.parts) > 1:
        return rel.parts[0]
    return ""


def _extract_one(task: tuple) -> tuple[str, dict | None, str | None]:
    """Worker: returns (source_id, row payload, skip reason)."""
    path_str, source_id, label, cfg_dict = task
    cfg = RunConfig.from_dict(cfg_dict)
    try:
        clip = load_audio(path_str)
        if not clip.duration_s > cfg.min_duration_s:
            return source_id, None, (
                f"duration {clip.duration_s:.2f} s not greater than "
                f"{cfg.min_duration_s:g} s"
            )
        vector = extract_from_file(path_str, cfg, label=label, source_id=source_id)
    except RfaError as exc:
        return source_id, None, f"{type(exc).__name__}: {exc}"
    except ValueError as exc:
        return source_id, None, f"ValueError: {exc}"
    return source_id, {
        "values": vector.values.tolist(),
        "r_formants": vector.r_formants.tolist(),
        "label": label,
    }, None


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    input_dir = args.input_dir
    if not input_dir.is_dir():
        raise SystemExit2(EXIT_DATA, f"input directory not found: {input_dir}")
    paths = _collect_wavs(input_dir)
    if not paths:
        raise SystemExit2(EXIT_DATA, f"no .wav files under {input_dir}")

    label_map = None
    if args.label_map:
        with open(args.label_map, "r", encoding="utf-8") as fh:
            label_map = json.load(fh)

    tasks = []
    for path in paths:
        source_id = path.relative_to(input_dir).with_suffix("").as_posix()
        label = _label_for(path, input_dir, label_map)
        tasks.append((str(path), source_id, label, cfg.to_dict()))

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_extract_one, tasks))
    else:
        results = [_extract_one(task) for task in tasks]

    vectors = []
    skipped = []
    for source_id, payload, reason in sorted(results, key=lambda r: r[0]):
        if payload is None:
            skipped.append((source_id, reason))
            continue
        vectors.append(
            FeatureVector(
                source_id=source_id,
                values=np.asarray(payload["values"]),
                label=payload["label"] or None,
                r_formants=np.asarray(payload["r_formants"]),
            )
        )

    for source_id, reason in skipped:
        log.warning("skipped %s: %s", source_id, reason)
    if not vectors:
        raise SystemExit2(EXIT_DATA, "no usable files: every input was skipped")

    ds = dataset_from_vectors(vectors)
    write_dataset(ds, args.output, metadata=_metadata(cfg))
    print(
        f"wrote {len(vectors)} rows x {len(ds.feature_names)} features to "
        f"{args.output} ({len(skipped)} skipped)"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# train / evaluate / importance

def _parse_float_list(text: str, flag: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise SystemExit2(EXIT_USAGE, f"{flag}: {exc}")
    if not values:
        raise SystemExit2(EXIT_USAGE, f"{flag}: empty list")
    return values


def cmd_train(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.test_fraction is not None:
        cfg = cfg.replace(test_fraction=args.test_fraction)
    if args.cv_folds is not None:
        cfg = cfg.replace(cv_folds=args.cv_folds)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.svm_c_grid is not None:
        cfg = cfg.replace(svm_c_grid=_parse_float_list(args.svm_c_grid, "--c-grid"))
    if args.svm_gamma_grid is not None:
        cfg = cfg.replace(
            svm_gamma_grid=_parse_float_list(args.svm_gamma_grid, "--gamma-grid")
        )

    groups = [g.strip() for g in args.groups.split(",") if g.strip()]
    envelopes = [e.strip() for e in args.envelopes.split(",") if e.strip()]

    ds = read_dataset(args.data)
    ds = select_features(ds, groups=groups, envelopes=envelopes)
    train_ds, test_ds = split_dataset(
        ds, test_fraction=cfg.test_fraction, seed=cfg.seed
    )
    log.info(
        "training on %d rows x %d features (%d held out)",
        len(train_ds), len(train_ds.feature_names), len(test_ds),
    )
    model, grid = train(
        train_ds,
        c_grid=cfg.svm_c_grid,
        gamma_grid=cfg.svm_gamma_grid,
        folds=cfg.cv_folds,
        seed=cfg.seed,
        kkt_tol=cfg.kkt_tol,
        gamma_heuristic=cfg.gamma_heuristic,
    )
    save_model(model, args.model_out, extra=_metadata(cfg))
    print(
        f"selected C={model.c:g} gamma={model.gamma:g} "
        f"(cv accuracy {grid.best_cv_accuracy:.4f}); model -> {args.model_out}"
    )
    if args.test_out:
        write_dataset(test_ds, args.test_out, metadata=_metadata(cfg))
        print(f"held-out test rows -> {args.test_out}")
    if args.grid_report:
        doc = grid.to_dict()
        doc.update(_metadata(cfg))
        with open(args.grid_report, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    ds = read_dataset(args.data)
    if list(ds.feature_names) != list(model.feature_names):
        ds = ds.select(model.feature_names)
    report = evaluate(model, ds)
    print(report.format_table())
    if args.report_out:
        doc = report.to_dict()
        doc["tool"] = "rfa"
        doc["version"] = __version__
        with open(args.report_out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.confusion_csv:
        with open(args.confusion_csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true\\predicted"] + report.classes)
            for name, row in zip(report.classes, report.confusion):
                writer.writerow([name] + [int(v) for v in row])
    return EXIT_OK


def cmd_importance(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    ds = read_dataset(args.data)
    if list(ds.feature_names) != list(model.feature_names):
        ds = ds.select(model.feature_names)
    ranking = permutation_importance(
        model, ds, n_repeats=args.n_repeats, seed=args.seed
    )
    print(f"{'rank':<6}{'feature':<18}{'mean accuracy drop':>20}")
    for rank, (name, drop) in enumerate(ranking[: args.top], start=1):
        print(f"{rank:<6}{name:<18}{drop:>20.4f}")
    if args.out:
        doc = {
            "tool": "rfa",
            "version": __version__,
            "n_repeats": args.n_repeats,
            "seed": args.seed,
            "importance": [
                {"feature": name, "mean_accuracy_drop": drop}
                for name, drop in ranking
            ],
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# plot-data

def _write_csv(path: Path, header: list[str], rows, metadata: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.9g}" if isinstance(v, float) else v for v in row])


def _spectrum_rows(spectrum, n_peaks: int, min_sep: float):
    peaks = pick_r_formants(spectrum, n=n_peaks, min_separation_hz=min_sep)
    marked = {}
    for rank in range(peaks.count):
        marked[round(peaks.freqs_hz[rank], 9)] = rank + 1
    for f, m in zip(spectrum.freqs_hz, spectrum.mags):
        yield [float(f), float(m), marked.get(round(float(f), 9), 0)]


def _spectrogram_rows(sg):
    for t, row in zip(sg.frame_times_s, sg.mags):
        for f, m in zip(sg.freqs_hz, row):
            yield [float(t), float(f), float(m)]


def _trajectory_rows(ts):
    n, frames = ts.formant_freq_traj.shape
    for rank in range(n):
        for t in range(frames):
            yield [
                float(ts.frame_times_s[t]),
                rank + 1,
                float(ts.formant_freq_traj[rank, t]),
                float(ts.formant_mag_traj[rank, t]),
            ]


def cmd_plot_data(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    out_dir = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = _metadata(cfg)

    clip = peak_normalize(load_audio(args.input_wav))
    am_env = am_envelope(clip, env_rate_hz=cfg.env_rate_hz, smooth_ms=cfg.smooth_ms)

    t_audio = np.arange(len(clip.samples)) / clip.sample_rate_hz
    t_env = np.arange(len(am_env.values)) / am_env.rate_hz
    waveform_rows = [
        ["waveform", float(t), float(v)] for t, v in zip(t_audio, clip.samples)
    ] + [["am_envelope", float(t), float(v)] for t, v in zip(t_env, am_env.values)]
    _write_csv(out_dir / "waveform_am_envelope.csv",
               ["series", "time_s", "value"], waveform_rows, meta)

    am_spectrum = compute_lf_spectrum(
        am_env, zero_pad_factor=cfg.zero_pad_factor, f_max_hz=cfg.f_max_hz
    )
    _write_csv(out_dir / "am_lf_spectrum.csv",
               ["freq_hz", "magnitude", "peak_rank"],
               _spectrum_rows(am_spectrum, _N_PLOT_PEAKS, cfg.min_peak_separation_hz),
               meta)

    am_sg = compute_lf_spectrogram(
        am_env, window_s=cfg.window_s, hop_s=cfg.hop_s,
        zero_pad_factor=cfg.zero_pad_factor, f_max_hz=cfg.f_max_hz,
        taper=cfg.spectrogram_taper,
    )
    _write_csv(out_dir / "am_lf_spectrogram.csv",
               ["time_s", "freq_hz", "magnitude"], _spectrogram_rows(am_sg), meta)
    am_traj = extract_trajectories(
        am_sg, n=_N_PLOT_PEAKS, min_separation_hz=cfg.min_peak_separation_hz,
        order=cfg.trajectory_order,
    )
    _write_csv(out_dir / "am_formant_trajectories.csv",
               ["time_s", "rank", "freq_hz", "magnitude"],
               _trajectory_rows(am_traj), meta)

    track = track_f0(
        clip, f0_min_hz=cfg.f0_min_hz, f0_max_hz=cfg.f0_max_hz,
        frame_len_s=cfg.f0_frame_s, hop_s=cfg.f0_hop_s,
        voicing_threshold=cfg.voicing_threshold,
    )
    f0_rows = [
        [float(t), float(f)] for t, f in zip(track.frame_times_s, track.f0_hz)
    ]
    _write_csv(out_dir / "f0_contour.csv", ["time_s", "f0_hz"], f0_rows, meta)

    try:
        fm_env = fm_envelope(track, env_rate_hz=cfg.env_rate_hz)
    except UnvoicedClipError:
        log.warning(
            "%s: no voiced frames; FM spectrum/spectrogram/trajectory panels "
            "not written", clip.source_id,
        )
        print(f"wrote 5 panel files to {out_dir} (FM panels unavailable)")
        return EXIT_OK

    fm_spectrum = compute_lf_spectrum(
        fm_env, zero_pad_factor=cfg.zero_pad_factor, f_max_hz=cfg.f_max_hz
    )
    _write_csv(out_dir / "fm_lf_spectrum.csv",
               ["freq_hz", "magnitude", "peak_rank"],
               _spectrum_rows(fm_spectrum, _N_PLOT_PEAKS, cfg.min_peak_separation_hz),
               meta)
    fm_sg = compute_lf_spectrogram(
        fm_env, window_s=cfg.window_s, hop_s=cfg.hop_s,
        zero_pad_factor=cfg.zero_pad_factor, f_max_hz=cfg.f_max_hz,
        taper=cfg.spectrogram_taper,
    )
    _write_csv(out_dir / "fm_lf_spectrogram.csv",
               ["time_s", "freq_hz", "magnitude"], _spectrogram_rows(fm_sg), meta)
    fm_traj = extract_trajectories(
        fm_sg, n=_N_PLOT_PEAKS, min_separation_hz=cfg.min_peak_separation_hz,
        order=cfg.trajectory_order,
    )
    _write_csv(out_dir / "fm_formant_trajectories.csv",
               ["time_s", "rank", "freq_hz", "magnitude"],
               _trajectory_rows(fm_traj), meta)

    print(f"wrote 8 panel files to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth

def cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec(
        kind=args.kind,
        carrier_hz=args.carrier,
        mod_freq_hz=args.mod_freq,
        mod_depth=args.mod_depth,
        mod_freq2_hz=args.mod_freq2,
        duration_s=args.duration,
        sample_rate_hz=args.rate,
        seed=args.seed,
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise SystemExit2(EXIT_USAGE, str(exc))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    clip = write_synth(spec, args.out)
    print(f"wrote {clip.duration_s:g} s of {args.kind} to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "extract": cmd_extract,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "importance": cmd_importance,
    "plot-data": cmd_plot_data,
    "synth": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit2 as exc:
        print(exc, file=sys.stderr)
        return exc.code
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except SystemExit2 as exc:
        print(exc, file=sys.stderr)
        return exc.code
    except RfaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
