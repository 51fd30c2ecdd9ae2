"""Command-line front end: synth, preprocess, align, sweep, modes, landmarks,
compare, and the end-to-end pipeline with a hash manifest and resume support.

All outputs are UTF-8 CSV/JSON; plot emission is data-only (curve/score
tables plus a small JSON descriptor of suggested axes and color keys).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .align import AlignConfig, karcher_mean, lambda_sweep
from .curves import (
    Curve,
    Dataset,
    load_dataset,
    load_raw_trials,
    preprocess_trials,
    save_dataset,
    uniform_grid,
)
from .errors import ElastikaError, SchemaError
from .landmarks import LANDMARK_COLUMNS, landmark_matrix
from .modes import amplitude_pca, mode_extremes, phase_pns, score_table
from .regress import compare_predictor_sets, impute_means, load_traits, save_traits, TraitTable
from .srvf import Warp, to_srvf
from .synth import SynthConfig, generate, synthesize_traits
from .tables import FeatureMatrix, load_feature_matrix, save_feature_matrix

STAGES = ("synth", "preprocess", "align", "sweep", "modes", "landmarks", "compare")


@dataclass
class PipelineConfig:
    """Flat pipeline configuration, serialized as key=value lines."""

    grid_length: int = 101
    lam: float = 0.01
    bins: int = 100
    slope_window: int = 3
    k_modes: int = 4
    n_boot: int = 200
    seed: int = 7
    landmark_convention: str = "windowed"
    synth_subjects: int = 20
    synth_trials: int = 3
    synth_template: str = "two_peak"
    warp_strength: float = 0.25
    amplitude_sd: float = 0.08
    noise_sd: float = 0.005
    zero_tol: float = 1e-9
    sweep_lambdas: str = "0,0.5,1,2,4"
    impute_traits: str = ""
    threads: int = 1

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        values = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise SchemaError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
        known = {f.name: f.type for f in fields(cls)}
        cfg = cls()
        for key, val in values.items():
            if key not in known:
                raise SchemaError(f"{path}: unknown config key {key!r}")
            current = getattr(cfg, key)
            setattr(cfg, key, type(current)(val) if not isinstance(current, str) else val)
        return cfg.validate()

    def validate(self) -> "PipelineConfig":
        self.align_config()
        SynthConfig(
            n_subjects=self.synth_subjects,
            trials_per_subject=self.synth_trials,
            grid_length=self.grid_length,
            template=self.synth_template,
            warp_strength=self.warp_strength,
            amplitude_sd=self.amplitude_sd,
            noise_sd=self.noise_sd,
            seed=self.seed,
        ).validate()
        if self.grid_length < 4 or self.k_modes < 1 or self.n_boot < 1:
            raise ValueError("grid_length, k_modes and n_boot must be positive")
        if self.landmark_convention not in ("windowed", "full_range"):
            raise ValueError("landmark_convention must be windowed or full_range")
        [float(v) for v in self.sweep_lambdas.split(",") if v.strip()]
        return self

    def align_config(self) -> AlignConfig:
        return AlignConfig(
            lam=self.lam, grid_bins=self.bins, slope_window=self.slope_window
        ).validate()


# ---------------------------------------------------------------------------
# Shared file helpers
# ---------------------------------------------------------------------------


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def save_warps(warps: list[Warp], ids, path) -> None:
    rows = []
    for (sid, tid), w in zip(ids, warps):
        for i, (t, g) in enumerate(zip(w.grid, w.gamma)):
            rows.append([sid, tid, i, _fmt(t), _fmt(g)])
    _write_csv(path, ("subject_id", "trial_id", "index", "time", "gamma"), rows)


def load_warps(path) -> tuple[list[Warp], list[tuple[str, str]]]:
    by_trial: dict[str, dict] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rec = by_trial.setdefault(row["trial_id"], {"sid": row["subject_id"], "pts": []})
            rec["pts"].append((int(row["index"]), float(row["time"]), float(row["gamma"])))
    warps, ids = [], []
    for tid, rec in by_trial.items():
        pts = sorted(rec["pts"])
        grid = np.array([p[1] for p in pts])
        gamma = np.array([p[2] for p in pts])
        warps.append(Warp(grid=grid, gamma=gamma))
        ids.append((rec["sid"], tid))
    return warps, ids


def _json_dump(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Stage implementations
# ---------------------------------------------------------------------------


def run_synth(cfg: PipelineConfig, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset, gt = generate(
        SynthConfig(
            n_subjects=cfg.synth_subjects,
            trials_per_subject=cfg.synth_trials,
            grid_length=cfg.grid_length,
            template=cfg.synth_template,
            warp_strength=cfg.warp_strength,
            amplitude_sd=cfg.amplitude_sd,
            noise_sd=cfg.noise_sd,
            seed=cfg.seed,
        )
    )
    dataset_path = out_dir / "dataset.csv"
    save_dataset(dataset, dataset_path)
    gt_path = out_dir / "ground_truth.json"
    _json_dump(
        {
            "kinds": gt.kinds,
            "subject_ids": gt.subject_ids,
            "trial_ids": gt.trial_ids,
            "amplitude_factors": [float(a) for a in gt.amplitude_factors],
            "warps": [[float(v) for v in w.gamma] for w in gt.warps],
            "trait_coefficients": gt.trait_coefficients,
        },
        gt_path,
    )
    trait_values = synthesize_traits(gt, seed=cfg.seed)
    subjects = tuple(dict.fromkeys(gt.subject_ids))
    traits = TraitTable(subjects=subjects, values={t: dict(v) for t, v in trait_values.items()})
    traits_path = out_dir / "traits.csv"
    save_traits(traits, traits_path)
    return [dataset_path, gt_path, traits_path]


def run_preprocess(
    input_path: Path,
    out_path: Path,
    format: str = "csv",
    grid_length: int = 101,
    zero_tol: float = 1e-9,
    dump_srvf: Path | None = None,
) -> list[Path]:
    trials = load_raw_trials(input_path, format)
    dataset = preprocess_trials(trials, grid_length=grid_length, zero_tol=zero_tol)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, out_path)
    outputs = [out_path]
    if dump_srvf is not None:
        srvfs = [to_srvf(c) for c in dataset.curves]
        qds = Dataset(
            curves=tuple(
                Curve(
                    trial_id=c.trial_id,
                    subject_id=c.subject_id,
                    channels=c.channels,
                    grid=c.grid,
                    values=q.values,
                )
                for c, q in zip(dataset.curves, srvfs)
            )
        )
        save_dataset(qds, dump_srvf)
        outputs.append(dump_srvf)
    return outputs


def run_align(
    input_path: Path, out_dir: Path, config: AlignConfig, n_jobs: int = 1
) -> list[Path]:
    dataset = load_dataset(input_path)
    result = karcher_mean(dataset, config, n_jobs=n_jobs)
    out_dir.mkdir(parents=True, exist_ok=True)
    mean_path = out_dir / "mean_curve.csv"
    save_dataset(Dataset(curves=(result.karcher_mean_curve,)), mean_path)
    aligned_path = out_dir / "aligned.csv"
    save_dataset(Dataset(curves=tuple(result.aligned_curves)), aligned_path)
    warps_path = out_dir / "warps.csv"
    ids = [(c.subject_id, c.trial_id) for c in dataset.curves]
    save_warps(result.warps, ids, warps_path)
    trace_path = out_dir / "objective_trace.csv"
    _write_csv(
        trace_path,
        ("iteration", "objective"),
        [(i, _fmt(v)) for i, v in enumerate(result.objective_trace)],
    )
    config_path = out_dir / "align_config.json"
    _json_dump({**asdict(config), "converged": result.converged}, config_path)
    return [mean_path, aligned_path, warps_path, trace_path, config_path]


def run_sweep(
    input_path: Path, out_path: Path, lambdas, config: AlignConfig, n_jobs: int = 1
) -> list[Path]:
    dataset = load_dataset(input_path)
    diags = lambda_sweep(dataset, lambdas, config, n_jobs=n_jobs)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out_path,
        (
            "lambda",
            "mean_warp_roughness",
            "staircase_score",
            "warp_spread",
            "residual_amplitude_spread",
            "pre_alignment_spread",
            "objective_final",
            "converged",
        ),
        [
            (
                _fmt(d.lam),
                _fmt(d.mean_warp_roughness),
                _fmt(d.staircase_score),
                _fmt(d.warp_spread),
                _fmt(d.residual_amplitude_spread),
                _fmt(d.pre_alignment_spread),
                _fmt(d.objective_final),
                int(d.converged),
            )
            for d in diags
        ],
    )
    return [out_path]


def run_modes(aligned_dir: Path, out_dir: Path, k: int, seed: int = 0) -> list[Path]:
    aligned = load_dataset(aligned_dir / "aligned.csv")
    warps, ids = load_warps(aligned_dir / "warps.csv")
    mean_ds = load_dataset(aligned_dir / "mean_curve.csv")
    mean_curve = mean_ds.curves[0]
    if [tid for _, tid in ids] != [c.trial_id for c in aligned.curves]:
        raise SchemaError("warps.csv and aligned.csv disagree on trial order")
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    decomps = {}
    var_rows = []
    for channel in aligned.channels:
        decomp = amplitude_pca(list(aligned.curves), channel, k)
        decomps[channel] = decomp
        p = out_dir / f"scores_{channel}.csv"
        save_feature_matrix(
            FeatureMatrix(
                values=decomp.scores,
                columns=tuple(f"{channel}_PC{j + 1}" for j in range(decomp.n_components)),
                trial_ids=tuple(c.trial_id for c in aligned.curves),
                subject_ids=tuple(c.subject_id for c in aligned.curves),
            ),
            p,
        )
        outputs.append(p)
        p = out_dir / f"components_{channel}.csv"
        _write_csv(
            p,
            ("component", "index", "time", "mean", "loading"),
            [
                (j + 1, i, _fmt(t), _fmt(decomp.mean_curve[i]), _fmt(decomp.components[j, i]))
                for j in range(decomp.n_components)
                for i, t in enumerate(decomp.grid)
            ],
        )
        outputs.append(p)
        for j, v in enumerate(decomp.explained_variance):
            var_rows.append((channel, j + 1, _fmt(v)))
    p = out_dir / "explained_variance.csv"
    _write_csv(p, ("channel", "component", "variance"), var_rows)
    outputs.append(p)

    phase = phase_pns(warps, num_levels=k, seed=seed)
    p = out_dir / "pns_residuals.csv"
    save_feature_matrix(
        FeatureMatrix(
            values=phase.signed_residuals,
            columns=tuple(f"phase_PNS{j + 1}" for j in range(phase.num_levels)),
            trial_ids=tuple(tid for _, tid in ids),
            subject_ids=tuple(sid for sid, _ in ids),
        ),
        p,
    )
    outputs.append(p)

    table = score_table(decomps, phase, k).with_ids(
        [c.trial_id for c in aligned.curves], [c.subject_id for c in aligned.curves]
    )
    p = out_dir / "score_table.csv"
    save_feature_matrix(table, p)
    outputs.append(p)

    extreme_rows = []
    for channel, decomp in decomps.items():
        for j in range(decomp.n_components):
            ext = mode_extremes(decomp, j)
            for tag, curve in (("low", ext.low_curve), ("mean", ext.mean_curve), ("high", ext.high_curve)):
                for i, t in enumerate(curve.grid):
                    extreme_rows.append(
                        ("amplitude", channel, j + 1, tag, i, _fmt(t), _fmt(curve.values[0, i]))
                    )
    vgrf_mean = Curve(
        trial_id="karcher_mean",
        subject_id="karcher_mean",
        channels=mean_curve.channels,
        grid=mean_curve.grid,
        values=mean_curve.values,
    )
    if not phase.degenerate:
        for j in range(min(k, phase.num_levels)):
            ext = mode_extremes(phase, j, context=vgrf_mean)
            for tag, curve in (("low", ext.low_curve), ("mean", ext.mean_curve), ("high", ext.high_curve)):
                for c_idx, channel in enumerate(curve.channels):
                    for i, t in enumerate(curve.grid):
                        extreme_rows.append(
                            ("phase", channel, j + 1, tag, i, _fmt(t), _fmt(curve.values[c_idx, i]))
                        )
    p = out_dir / "mode_extremes.csv"
    _write_csv(p, ("kind", "channel", "mode", "member", "index", "time", "value"), extreme_rows)
    outputs.append(p)

    p = out_dir / "plot_descriptor.json"
    _json_dump(
        {
            "mode_extremes": {
                "x": "time",
                "y": "value",
                "facet": ["kind", "channel", "mode"],
                "series": "member",
                "line_styles": {"low": "dotted", "mean": "solid", "high": "dashed"},
            },
            "scores": {
                "x": "per-column score",
                "color_key": "walking-speed rainbow (fast=red, slow=purple)",
            },
        },
        p,
    )
    outputs.append(p)
    return outputs


def run_landmarks(input_path: Path, out_path: Path, convention: str) -> list[Path]:
    dataset = load_dataset(input_path)
    table = landmark_matrix(dataset, convention)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out_path,
        ("subject_id", "trial_id", *LANDMARK_COLUMNS),
        [
            (
                table.subject_ids[i],
                table.trial_ids[i],
                *(_fmt(v) for v in table.values[i]),
            )
            for i in range(table.n_rows)
        ],
    )
    return [out_path]


def _load_landmark_csv(path) -> FeatureMatrix:
    fm = load_feature_matrix(path)
    if fm.columns != LANDMARK_COLUMNS:
        raise SchemaError(f"{path}: expected landmark columns {LANDMARK_COLUMNS}")
    return fm


def run_compare(
    scores_path: Path,
    landmarks_path: Path,
    traits_path: Path,
    out_dir: Path,
    dependent: str = "all",
    n_boot: int = 1000,
    seed: int = 0,
    impute: tuple[str, ...] = (),
) -> list[Path]:
    scores = load_feature_matrix(scores_path)
    landmark_table = _load_landmark_csv(landmarks_path)
    traits = load_traits(traits_path)
    if impute:
        traits = impute_means(traits, impute)
    if dependent != "all":
        if dependent not in traits.values:
            raise SchemaError(f"unknown trait {dependent!r}")
        traits = TraitTable(
            subjects=traits.subjects,
            values={dependent: traits.values[dependent]},
            trait_types=traits.trait_types,
            imputation_counts=traits.imputation_counts,
        )
    if scores.trial_ids is None or scores.subject_ids is None:
        raise SchemaError(f"{scores_path}: score table must carry subject_id/trial_id")
    if landmark_table.trial_ids != scores.trial_ids:
        raise SchemaError("score and landmark tables disagree on trial order")
    # rebuild a minimal dataset view: only ids are needed for grouping
    grid = uniform_grid(4)
    curves = tuple(
        Curve(
            trial_id=tid,
            subject_id=sid,
            channels=("placeholder",),
            grid=grid,
            values=np.zeros((1, 4)),
        )
        for sid, tid in zip(scores.subject_ids, scores.trial_ids)
    )
    dataset = Dataset(curves=curves)
    result = compare_predictor_sets(
        dataset, scores, landmark_table, traits, n_boot=n_boot, seed=seed
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for trait, comp in result.comparisons.items():
        p = out_dir / f"report_{trait}.json"
        if comp.degenerate:
            _json_dump({"trait": trait, "degenerate_response": True}, p)
        else:
            _json_dump(
                {
                    "trait": trait,
                    "degenerate_response": False,
                    "combined_r_squared": comp.combined_r_squared,
                    "full_curve": asdict(comp.full_curve),
                    "landmarks": asdict(comp.landmarks),
                },
                p,
            )
        outputs.append(p)
    p = out_dir / "scatter_r2.csv"
    _write_csv(
        p,
        ("trait", "r2_full_curve", "r2_landmarks"),
        [(t, _fmt(a), _fmt(b)) for t, a, b in result.r2_table],
    )
    outputs.append(p)
    p = out_dir / "scatter_p.csv"
    _write_csv(
        p,
        (
            "trait",
            "p_reduced_full_curve",
            "p_reduced_landmarks",
            "log10_p_reduced_full_curve",
            "log10_p_reduced_landmarks",
        ),
        [
            (t, _fmt(a), _fmt(b), _fmt(np.log10(a)), _fmt(np.log10(b)))
            for t, a, b in result.p_table
        ],
    )
    outputs.append(p)
    return outputs


# ---------------------------------------------------------------------------
# Pipeline with manifest + resume
# ---------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _hashes(paths) -> dict[str, str]:
    return {str(p): _sha256(Path(p)) for p in paths}


def run_pipeline(cfg: PipelineConfig, out_dir: Path, resume: bool = False) -> list[dict]:
    """Execute all stages in order, writing a manifest of input/output hashes.

    With resume, a stage is skipped when its recorded input hashes match and
    its outputs are intact; any executed stage forces all later stages to
    run. Returns the manifest entries.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    previous = {}
    if resume and manifest_path.exists():
        for entry in json.loads(manifest_path.read_text()):
            previous[entry["stage"]] = entry

    dataset_csv = out_dir / "synth" / "dataset.csv"
    traits_csv = out_dir / "synth" / "traits.csv"
    pre_csv = out_dir / "preprocess" / "dataset.csv"
    align_dir = out_dir / "align"
    sweep_csv = out_dir / "sweep" / "sweep.csv"
    modes_dir = out_dir / "modes"
    landmarks_csv = out_dir / "landmarks" / "landmarks.csv"
    compare_dir = out_dir / "compare"
    align_cfg = cfg.align_config()
    sweep_lams = [float(v) for v in cfg.sweep_lambdas.split(",") if v.strip()]
    impute = tuple(t for t in cfg.impute_traits.split(",") if t.strip())

    stage_plan = [
        ("synth", [], lambda: run_synth(cfg, out_dir / "synth")),
        (
            "preprocess",
            [dataset_csv],
            lambda: run_preprocess(
                dataset_csv, pre_csv, grid_length=cfg.grid_length, zero_tol=cfg.zero_tol
            ),
        ),
        (
            "align",
            [pre_csv],
            lambda: run_align(pre_csv, align_dir, align_cfg, n_jobs=cfg.threads),
        ),
        (
            "sweep",
            [pre_csv],
            lambda: run_sweep(pre_csv, sweep_csv, sweep_lams, align_cfg, n_jobs=cfg.threads),
        ),
        (
            "modes",
            [align_dir / "aligned.csv", align_dir / "warps.csv", align_dir / "mean_curve.csv"],
            lambda: run_modes(align_dir, modes_dir, cfg.k_modes, seed=cfg.seed),
        ),
        (
            "landmarks",
            [pre_csv],
            lambda: run_landmarks(pre_csv, landmarks_csv, cfg.landmark_convention),
        ),
        (
            "compare",
            [modes_dir / "score_table.csv", landmarks_csv, traits_csv],
            lambda: run_compare(
                modes_dir / "score_table.csv",
                landmarks_csv,
                traits_csv,
                compare_dir,
                n_boot=cfg.n_boot,
                seed=cfg.seed,
                impute=impute,
            ),
        ),
    ]

    manifest = []
    dirty = not resume
    for stage, inputs, fn in stage_plan:
        t0 = time.perf_counter()
        prev = previous.get(stage)
        can_skip = (
            not dirty
            and prev is not None
            and all(Path(p).exists() for p in prev.get("outputs", {}))
            and all(Path(p).exists() for p in inputs)
            and prev.get("inputs") == _hashes(inputs)
            and prev.get("outputs") == _hashes(prev.get("outputs", {}))
        )
        if can_skip:
            entry = dict(prev)
            entry["skipped"] = True
            entry["wall_time"] = 0.0
            manifest.append(entry)
            continue
        dirty = True
        try:
            in_hashes = _hashes(inputs)
            outputs = fn()
        except Exception as exc:
            manifest.append(
                {"stage": stage, "error": f"{type(exc).__name__}: {exc}", "skipped": False}
            )
            _json_dump(manifest, manifest_path)
            raise ElastikaError(f"pipeline stage {stage!r} failed: {exc}") from exc
        manifest.append(
            {
                "stage": stage,
                "inputs": in_hashes,
                "outputs": _hashes(outputs),
                "wall_time": round(time.perf_counter() - t0, 3),
                "seed": cfg.seed,
                "skipped": False,
            }
        )
    _json_dump(manifest, manifest_path)
    return manifest


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="pipeline config file (key=value lines)")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--threads", type=int, help="worker threads for parallel sections")
    parser.add_argument("--out", type=Path, required=True, help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elastika",
        description="Elastic shape analysis of multichannel movement curves",
    )
    parser.add_argument("--version", action="version", version=f"elastika {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    _common(p)
    p.add_argument("--subjects", type=int, default=20)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--template", default="two_peak", choices=("two_peak", "unimodal", "mixed"))
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--warp-strength", type=float, default=0.25)
    p.add_argument("--amplitude-sd", type=float, default=0.08)
    p.add_argument("--noise-sd", type=float, default=0.005)

    p = sub.add_parser("preprocess", help="trim, normalize and resample raw trials")
    _common(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--format", default="csv", choices=("csv", "jsonl"))
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--zero-tol", type=float, default=1e-9)
    p.add_argument("--dump-srvf", type=Path, help="also write SRVF samples as CSV")

    p = sub.add_parser("align", help="Karcher mean alignment of a dataset")
    _common(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--slope-window", type=int, default=3)
    p.add_argument(
        "--penalty-form",
        default="squared_second_diff",
        choices=("squared_second_diff", "literal_second_diff"),
    )
    p.add_argument("--max-iters", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-4)

    p = sub.add_parser("sweep", help="penalty sweep with over-alignment diagnostics")
    _common(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--lambdas", default="0,0.5,1,2,4")
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--slope-window", type=int, default=3)

    p = sub.add_parser("modes", help="amplitude PCA and phase PNS from an align directory")
    _common(p)
    p.add_argument("--aligned", type=Path, required=True, help="directory written by align")
    p.add_argument("--k", type=int, default=4)

    p = sub.add_parser("landmarks", help="extract conventional discrete summaries")
    _common(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--convention", default="windowed", choices=("windowed", "full_range"))

    p = sub.add_parser("compare", help="full-curve vs landmark predictor comparison")
    _common(p)
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--landmarks", type=Path, required=True)
    p.add_argument("--traits", type=Path, required=True)
    p.add_argument("--dependent", default="all")
    p.add_argument("--n-boot", type=int, default=1000)
    p.add_argument("--impute", default="", help="comma-separated traits to mean-impute")

    p = sub.add_parser("pipeline", help="run all stages with a manifest")
    _common(p)
    p.add_argument("--resume", action="store_true")

    return parser


def _config_from_args(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    seed = args.seed if args.seed is not None else 0
    threads = args.threads if args.threads is not None else 1
    try:
        if args.command == "synth":
            cfg = _config_from_args(args)
            cfg.synth_subjects = args.subjects
            cfg.synth_trials = args.trials
            cfg.synth_template = args.template
            cfg.grid_length = args.grid
            cfg.warp_strength = args.warp_strength
            cfg.amplitude_sd = args.amplitude_sd
            cfg.noise_sd = args.noise_sd
            run_synth(cfg, args.out)
        elif args.command == "preprocess":
            run_preprocess(
                args.input,
                args.out,
                format=args.format,
                grid_length=args.grid,
                zero_tol=args.zero_tol,
                dump_srvf=args.dump_srvf,
            )
        elif args.command == "align":
            config = AlignConfig(
                lam=args.lam,
                grid_bins=args.bins,
                slope_window=args.slope_window,
                penalty_form=args.penalty_form,
                max_iters=args.max_iters,
                tol=args.tol,
            )
            run_align(args.input, args.out, config, n_jobs=threads)
        elif args.command == "sweep":
            lams = [float(v) for v in args.lambdas.split(",") if v.strip()]
            config = AlignConfig(grid_bins=args.bins, slope_window=args.slope_window)
            run_sweep(args.input, args.out / "sweep.csv", lams, config, n_jobs=threads)
        elif args.command == "modes":
            run_modes(args.aligned, args.out, args.k, seed=seed)
        elif args.command == "landmarks":
            run_landmarks(args.input, args.out, args.convention)
        elif args.command == "compare":
            impute = tuple(t for t in args.impute.split(",") if t.strip())
            run_compare(
                args.scores,
                args.landmarks,
                args.traits,
                args.out,
                dependent=args.dependent,
                n_boot=args.n_boot,
                seed=seed,
                impute=impute,
            )
        elif args.command == "pipeline":
            cfg = _config_from_args(args)
            run_pipeline(cfg, args.out, resume=args.resume)
    except ElastikaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
