"""OLS regression, nested F ratios, and patient-level bootstrap inference.

Every gait curve is one observation; curves from the same subject are
dependent, so significance is assessed by resampling whole subjects with
replacement and refitting on each resample. Resamples are generated under
the null hypothesis being tested: each drawn subject contributes its
predictor rows together with a response rebuilt from the reduced model's
fitted values plus its own sign-flipped residual block (signs drawn per
subject), so the resampled F statistics form a null reference
distribution that respects the within-subject dependence. The p-value is
the proportion of bootstrap F statistics at or above the observed one
(ties count), floored at 1/(2 * n_boot) when no resample reaches it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .curves import Dataset
from .errors import AllMissingTrait, NotNested, SchemaError, SingularResample
from .tables import FeatureMatrix


@dataclass
class OlsFit:
    coefficients: np.ndarray
    column_names: tuple[str, ...]
    r_squared: float
    residuals: np.ndarray
    ssr: float
    sst: float
    n_obs: int
    rank: int
    rank_deficient: bool
    degenerate_response: bool


def add_intercept(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.column_stack([np.ones(x.shape[0]), x])


def fit_ols(x: np.ndarray, y: np.ndarray, column_names=None) -> OlsFit:
    """Least squares via SVD; rank-deficient designs get the minimum-norm
    solution and a flag. The design must already carry its intercept column.

    R^2 = 1 - SSR/SST with SST centered; a zero-variance response is
    reported as R^2 = 0 with the degenerate_response flag set.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = x.shape
    if n <= p:
        raise ValueError(f"need more rows than columns, got {n} x {p}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("design or response contains non-finite entries")
    if column_names is None:
        column_names = ("intercept",) + tuple(f"x{i}" for i in range(1, p))
    coef, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ coef
    ssr = float(resid @ resid)
    sst = float(np.sum((y - y.mean()) ** 2))
    degenerate = sst <= max(1e-12 * n * max(1.0, float(y @ y) / n), 0.0)
    r2 = 0.0 if degenerate else 1.0 - ssr / sst
    return OlsFit(
        coefficients=coef,
        column_names=tuple(column_names),
        r_squared=float(np.clip(r2, 0.0, 1.0)),
        residuals=resid,
        ssr=ssr,
        sst=sst,
        n_obs=n,
        rank=int(rank),
        rank_deficient=int(rank) < p,
        degenerate_response=degenerate,
    )


def nested_f(full: OlsFit, reduced: OlsFit) -> float:
    """F ratio of a full model against a nested reduced model.

    F = ((SSR_reduced - SSR_full) / dp) / (SSR_full / (n - p_full - 1)),
    with dp the number of added columns and p_full the full model's
    non-intercept predictor count.
    """
    if full.n_obs != reduced.n_obs:
        raise NotNested("models were fit on different numbers of rows")
    if not set(reduced.column_names) <= set(full.column_names):
        raise NotNested("reduced model columns are not a subset of the full model's")
    dp = len(full.column_names) - len(reduced.column_names)
    if dp == 0:
        return 0.0
    df_den = full.n_obs - len(full.column_names)
    if df_den <= 0:
        raise NotNested("full model leaves no residual degrees of freedom")
    num = (reduced.ssr - full.ssr) / dp
    den = full.ssr / df_den
    if den <= 0.0:
        return np.inf if num > 0 else 0.0
    return float(num / den)


# ---------------------------------------------------------------------------
# Clustered bootstrap
# ---------------------------------------------------------------------------


@dataclass
class BootstrapTest:
    f_statistic: float
    p_value: float
    n_boot: int
    seed: int
    n_singular: int


def _f_stat(x_full: np.ndarray, x_reduced: np.ndarray | None, y: np.ndarray) -> float | None:
    """Nested F from raw predictor blocks (intercept added here).

    Returns None when the resample is singular: zero-variance response,
    rank-deficient full design, or no residual degrees of freedom.
    """
    n = y.size
    xf = add_intercept(x_full)
    if n <= xf.shape[1]:
        return None
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst <= 1e-12 * n * max(1.0, float(y @ y) / n):
        return None
    coef, _, rank, _ = np.linalg.lstsq(xf, y, rcond=None)
    if rank < xf.shape[1]:
        return None
    r = y - xf @ coef
    ssr_f = float(r @ r)
    if x_reduced is None:
        ssr_r = sst
        dp = xf.shape[1] - 1
    else:
        xr = add_intercept(x_reduced)
        coef_r, _, rank_r, _ = np.linalg.lstsq(xr, y, rcond=None)
        if rank_r < xr.shape[1]:
            return None
        rr = y - xr @ coef_r
        ssr_r = float(rr @ rr)
        dp = xf.shape[1] - xr.shape[1]
    if dp == 0:
        return 0.0
    df_den = n - xf.shape[1]
    den = ssr_f / df_den
    if den <= 0.0:
        return np.inf if ssr_r > ssr_f else 0.0
    return ((ssr_r - ssr_f) / dp) / den


def _subject_rows(subject_ids) -> tuple[list[str], list[np.ndarray]]:
    order: dict[str, list[int]] = {}
    for i, sid in enumerate(subject_ids):
        order.setdefault(sid, []).append(i)
    subjects = list(order)
    return subjects, [np.array(order[s], dtype=int) for s in subjects]


def _reduced_fit(x_reduced: np.ndarray | None, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fitted values and residuals of the null (reduced) model."""
    xr = np.ones((y.size, 1)) if x_reduced is None else add_intercept(x_reduced)
    coef, _, _, _ = np.linalg.lstsq(xr, y, rcond=None)
    yhat = xr @ coef
    return yhat, y - yhat


def _bootstrap_f_many(
    tests: list[tuple[np.ndarray, np.ndarray | None]],
    y: np.ndarray,
    subject_ids,
    n_boot: int,
    seed: int,
) -> list[BootstrapTest]:
    """Shared-resample null-bootstrap p-values for several nested comparisons.

    One set of subject draws and per-subject residual signs drives all
    tests; each test rebuilds its response under its own null from its
    reduced-model fit. A draw singular for any test is redrawn and counted,
    and the run aborts once singular draws exceed 10% of n_boot.
    """
    if n_boot < 1:
        raise ValueError("n_boot must be at least 1")
    observed = [_f_stat(xf, xr, y) for xf, xr in tests]
    null_fits = [_reduced_fit(xr, y) for _, xr in tests]
    subjects, rows = _subject_rows(subject_ids)
    n_subj = len(subjects)
    exceed = np.zeros(len(tests), dtype=int)
    n_singular = 0
    limit = 0.1 * n_boot
    children = np.random.SeedSequence(seed).spawn(n_boot)
    for r in range(n_boot):
        rng = np.random.default_rng(children[r])
        while True:
            draw = rng.integers(0, n_subj, n_subj)
            signs = rng.integers(0, 2, n_subj) * 2 - 1
            idx = np.concatenate([rows[d] for d in draw])
            w = np.concatenate(
                [np.full(rows[d].size, signs[k], dtype=float) for k, d in enumerate(draw)]
            )
            stats = []
            for (xf, xr), (yhat, resid) in zip(tests, null_fits):
                y_star = yhat[idx] + w * resid[idx]
                stats.append(_f_stat(xf[idx], None if xr is None else xr[idx], y_star))
            if all(s is not None for s in stats):
                break
            n_singular += 1
            if n_singular > limit:
                raise SingularResample(
                    f"{n_singular} singular resamples exceed 10% of n_boot={n_boot}"
                )
        for t, s in enumerate(stats):
            if observed[t] is not None and s >= observed[t]:
                exceed[t] += 1
    out = []
    for t, obs in enumerate(observed):
        if obs is None:
            out.append(BootstrapTest(np.nan, np.nan, n_boot, seed, n_singular))
            continue
        count = int(exceed[t])
        p = count / n_boot if count > 0 else 1.0 / (2 * n_boot)
        out.append(BootstrapTest(float(obs), float(p), n_boot, seed, n_singular))
    return out


@dataclass(frozen=True)
class ModelSpec:
    """Named predictor blocks for one dependent variable.

    reduced_blocks names the block subset that forms the reduced model in
    full-vs-reduced comparisons; the full model always uses every block.
    """

    dependent: str
    predictor_blocks: dict[str, tuple[str, ...]]
    include_intercept: bool = True
    reduced_blocks: tuple[str, ...] = ()

    def validate(self) -> "ModelSpec":
        if not self.include_intercept:
            raise ValueError("models always include an intercept")
        seen: set[str] = set()
        for block, cols in self.predictor_blocks.items():
            overlap = seen & set(cols)
            if overlap:
                raise ValueError(f"block {block!r} reuses columns {sorted(overlap)}")
            seen |= set(cols)
        for block in self.reduced_blocks:
            if block not in self.predictor_blocks:
                raise ValueError(f"unknown reduced block {block!r}")
        return self


def cluster_bootstrap_test(
    features: FeatureMatrix,
    y: np.ndarray,
    subject_ids,
    spec: ModelSpec,
    comparison: str = "model_vs_null",
    n_boot: int = 1000,
    seed: int = 0,
) -> BootstrapTest:
    """Clustered bootstrap F test for one model comparison.

    model_vs_null tests all blocks against the intercept-only model;
    full_vs_reduced tests all blocks against spec.reduced_blocks.
    """
    spec.validate()
    all_cols = [c for cols in spec.predictor_blocks.values() for c in cols]
    x_full = features.select(all_cols)
    if comparison == "model_vs_null":
        x_reduced = None
    elif comparison == "full_vs_reduced":
        if not spec.reduced_blocks:
            raise NotNested("full_vs_reduced needs spec.reduced_blocks")
        reduced_cols = [c for b in spec.reduced_blocks for c in spec.predictor_blocks[b]]
        x_reduced = features.select(reduced_cols)
    else:
        raise ValueError(f"unknown comparison {comparison!r}")
    return _bootstrap_f_many([(x_full, x_reduced)], np.asarray(y, float), subject_ids, n_boot, seed)[0]


# ---------------------------------------------------------------------------
# Trait tables
# ---------------------------------------------------------------------------


@dataclass
class TraitTable:
    """Subject-level trait values; None marks a missing measurement."""

    subjects: tuple[str, ...]
    values: dict[str, dict[str, float | None]]
    trait_types: dict[str, str] = field(default_factory=dict)
    imputation_counts: dict[str, int] = field(default_factory=dict)

    def trait_names(self) -> tuple[str, ...]:
        return tuple(self.values)

    def get(self, trait: str, subject: str):
        return self.values[trait].get(subject)


def load_traits(path) -> TraitTable:
    """Trait CSV: subject_id,<trait1>,<trait2>,... with empty cells missing."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if not header or header[0] != "subject_id":
            raise SchemaError(f"{path}: first column must be subject_id")
        names = header[1:]
        if len(set(names)) != len(names):
            raise SchemaError(f"{path}: duplicate trait names")
        subjects = []
        values: dict[str, dict[str, float | None]] = {t: {} for t in names}
        for row in reader:
            if not row:
                continue
            sid = row[0]
            subjects.append(sid)
            for t, cell in zip(names, row[1:]):
                values[t][sid] = float(cell) if cell.strip() else None
    return TraitTable(subjects=tuple(subjects), values=values)


def save_traits(table: TraitTable, path) -> None:
    names = table.trait_names()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", *names])
        for sid in table.subjects:
            row = [sid]
            for t in names:
                v = table.values[t].get(sid)
                row.append("" if v is None else f"{v:.17g}")
            writer.writerow(row)


def impute_means(traits: TraitTable, selected) -> TraitTable:
    """Replace missing entries of the selected traits by their observed mean."""
    values = {t: dict(v) for t, v in traits.values.items()}
    counts = dict(traits.imputation_counts)
    for trait in selected:
        col = values[trait]
        observed = [v for v in col.values() if v is not None]
        if not observed:
            raise AllMissingTrait(f"trait {trait!r} has no observed values")
        mean = float(np.mean(observed))
        n_missing = 0
        for sid in traits.subjects:
            if col.get(sid) is None:
                col[sid] = mean
                n_missing += 1
        counts[trait] = n_missing
    return TraitTable(
        subjects=traits.subjects,
        values=values,
        trait_types=dict(traits.trait_types),
        imputation_counts=counts,
    )


# ---------------------------------------------------------------------------
# Full-curve vs landmark comparison
# ---------------------------------------------------------------------------


@dataclass
class RegressionReport:
    r_squared: float
    coefficients: dict[str, float]
    f_statistic_model: float
    bootstrap_p_model: float
    nested: dict[str, dict[str, float]]
    n_obs: int
    n_subjects: int
    n_bootstrap: int
    seed: int
    degenerate_response: bool = False
    rank_deficient: bool = False
    n_singular: int = 0


@dataclass
class TraitComparison:
    trait: str
    full_curve: RegressionReport | None
    landmarks: RegressionReport | None
    combined_r_squared: float
    degenerate: bool = False


@dataclass
class CompareResult:
    """Per-trait reports plus scatter-ready tables.

    r2_table rows are (trait, R2_full_curve, R2_landmarks); p_table rows are
    (trait, p for the reduced model keeping full-curve predictors, p for the
    reduced model keeping landmarks). Degenerate traits are excluded.
    """

    comparisons: dict[str, TraitComparison]
    r2_table: list[tuple[str, float, float]]
    p_table: list[tuple[str, float, float]]
    n_boot: int
    seed: int


def compare_predictor_sets(
    dataset: Dataset,
    feature_matrix: FeatureMatrix,
    landmark_table: FeatureMatrix,
    traits: TraitTable,
    n_boot: int = 1000,
    seed: int = 0,
) -> CompareResult:
    """Compare full-curve and landmark predictors across every trait.

    For each trait, rows are curves whose subject has the trait observed
    (the trait value is replicated across the subject's curves); three
    models are fit (full-curve, landmarks, combined) and four clustered
    bootstrap tests run on shared resamples: each model against the null,
    and the combined model against each reduced model.
    """
    n = dataset.n_curves
    if feature_matrix.n_rows != n or landmark_table.n_rows != n:
        raise ValueError("feature and landmark rows must match the dataset curve count")
    row_subjects = np.array([c.subject_id for c in dataset.curves])
    comparisons: dict[str, TraitComparison] = {}
    r2_table = []
    p_table = []
    trait_names = traits.trait_names()
    children = np.random.SeedSequence(seed).spawn(max(len(trait_names), 1))
    for t_idx, trait in enumerate(trait_names):
        col = traits.values[trait]
        mask = np.array([col.get(s) is not None for s in row_subjects])
        y = np.array([col[s] for s in row_subjects[mask]], dtype=float)
        sub = row_subjects[mask]
        n_subjects = len(set(sub))
        trait_seed = int(children[t_idx].generate_state(1)[0] % (2**31))
        degenerate = (
            y.size == 0
            or n_subjects < 2
            or float(np.sum((y - y.mean()) ** 2)) <= 1e-12 * y.size * max(1.0, float(y @ y) / max(y.size, 1))
        )
        if degenerate:
            comparisons[trait] = TraitComparison(
                trait=trait,
                full_curve=None,
                landmarks=None,
                combined_r_squared=0.0,
                degenerate=True,
            )
            continue
        x_fc = feature_matrix.values[mask]
        x_lm = landmark_table.values[mask]
        x_comb = np.hstack([x_fc, x_lm])
        tests = [
            (x_fc, None),  # full-curve model vs null
            (x_lm, None),  # landmark model vs null
            (x_comb, x_fc),  # do landmarks add beyond full-curve?
            (x_comb, x_lm),  # do full-curve modes add beyond landmarks?
        ]
        results = _bootstrap_f_many(tests, y, sub, n_boot, trait_seed)
        fit_fc = fit_ols(
            add_intercept(x_fc), y, ("intercept",) + feature_matrix.columns
        )
        fit_lm = fit_ols(
            add_intercept(x_lm), y, ("intercept",) + landmark_table.columns
        )
        fit_comb = fit_ols(
            add_intercept(x_comb), y, ("intercept",) + feature_matrix.columns + landmark_table.columns
        )

        def report(fit: OlsFit, model_test: BootstrapTest, nested: dict) -> RegressionReport:
            return RegressionReport(
                r_squared=fit.r_squared,
                coefficients=dict(zip(fit.column_names, fit.coefficients)),
                f_statistic_model=model_test.f_statistic,
                bootstrap_p_model=model_test.p_value,
                nested=nested,
                n_obs=fit.n_obs,
                n_subjects=n_subjects,
                n_bootstrap=n_boot,
                seed=seed,
                degenerate_response=fit.degenerate_response,
                rank_deficient=fit.rank_deficient,
                n_singular=model_test.n_singular,
            )

        add_lm = {"f_statistic": results[2].f_statistic, "bootstrap_p": results[2].p_value}
        add_fc = {"f_statistic": results[3].f_statistic, "bootstrap_p": results[3].p_value}
        rep_fc = report(fit_fc, results[0], {"combined_vs_full_curve": add_lm})
        rep_lm = report(fit_lm, results[1], {"combined_vs_landmarks": add_fc})
        comparisons[trait] = TraitComparison(
            trait=trait,
            full_curve=rep_fc,
            landmarks=rep_lm,
            combined_r_squared=fit_comb.r_squared,
        )
        r2_table.append((trait, fit_fc.r_squared, fit_lm.r_squared))
        p_table.append((trait, results[2].p_value, results[3].p_value))
    return CompareResult(
        comparisons=comparisons,
        r2_table=r2_table,
        p_table=p_table,
        n_boot=n_boot,
        seed=seed,
    )
