use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lookalike_core::analysis::{
    above_threshold_table, bland_altman, correlate, lookalike_sweep, roc, similarity_baseline, verification_metrics,
    AboveThresholdTable, BlandAltmanReport, CorrelationReport, Normalization, RocCurve, ScoreSource,
    SimilarityBaseline, SweepRow, TwinThreshold, VerificationMetrics,
};
use lookalike_core::datamodel::PairClass;
use lookalike_core::head::Label;
use lookalike_core::scoring::{read_score_rows, ScoreRow};

use crate::commands::{label_of, primary_score, SCORED_PAIRS_HEADER};
use crate::context::{require, Ctx};
use crate::provenance::{kv_get, read_kv, read_table, table};
use crate::{AnalysisArg, ScoreArg};

pub const PERCENTILE_RULE: &str = "linear interpolation at p*(n-1)";

pub fn run(ctx: &Ctx, what: AnalysisArg, score: ScoreArg, out: &Path) -> Result<()> {
    match what {
        AnalysisArg::Threshold => threshold(ctx, score, out).map(drop),
        AnalysisArg::Table => table_report(ctx, score, out).map(drop),
        AnalysisArg::Roc => roc_report(ctx, out).map(drop),
        AnalysisArg::Baseline => baseline(ctx, out).map(drop),
        AnalysisArg::Correlate => correlation(ctx, out).map(drop),
        AnalysisArg::BlandAltman => agreement(ctx, out).map(drop),
        AnalysisArg::Sweep => sweep(ctx, score, out).map(drop),
    }
}

pub struct Run {
    pub dir: PathBuf,
    pub kv: Vec<(String, String)>,
    pub score: ScoreArg,
}

impl Run {
    pub fn load(ctx: &Ctx, score: ScoreArg) -> Result<Self> {
        let dir = ctx.match_dir(score);
        let run_csv = dir.join("run.csv");
        require(&[&run_csv]).with_context(|| format!("run `match --score {}` first", score.as_str()))?;
        Ok(Self {
            kv: read_kv(&run_csv)?,
            dir,
            score,
        })
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        kv_get(&self.kv, key)
    }

    pub fn rows(&self, file: &str) -> Result<Vec<ScoreRow>> {
        let path = self.dir.join(file);
        require(&[&path])?;
        read_score_rows(fs::File::open(&path)?).with_context(|| format!("in `{}`", path.display()))
    }

    fn source(&self) -> ScoreSource {
        match self.score {
            ScoreArg::Comparison => ScoreSource::Comparison,
            ScoreArg::Similarity => ScoreSource::Similarity,
        }
    }

    /// Mode and reference the run's scores came from.
    fn params(&self) -> Vec<(&'static str, String)> {
        let mut p = vec![("score", self.score.as_str().to_string())];
        for k in ["metric", "inversion", "filter"] {
            if let Ok(v) = self.get(k) {
                p.push(match k {
                    "metric" => ("metric", v.to_string()),
                    "inversion" => ("inversion", v.to_string()),
                    _ => ("filter", v.to_string()),
                });
            }
        }
        p
    }

    pub fn twin_threshold(&self) -> Result<TwinThreshold> {
        let scores: Vec<f64> = self
            .rows("twin_pairs.csv")?
            .iter()
            .filter(|r| r.pair_class == PairClass::IdenticalTwin)
            .filter_map(|r| primary_score(r, self.score))
            .collect();
        Ok(TwinThreshold::from_scores(&scores, self.source())?)
    }
}

fn f(x: f64) -> String {
    x.to_string()
}

pub fn threshold(ctx: &Ctx, score: ScoreArg, out: &Path) -> Result<TwinThreshold> {
    let run = Run::load(ctx, score)?;
    let t = run.twin_threshold()?;
    let mut params = run.params();
    params.push(("pairs", "identical-twin non-mated".into()));
    ctx.prov.write_csv(
        &out.join(format!("threshold_{}.csv", score.as_str())),
        "twin_threshold",
        &params,
        |b| {
            table(
                b,
                &["t", "source", "n_pairs"],
                [vec![f(t.t), t.source.to_string(), t.n_pairs.to_string()]],
            )
        },
    )?;
    Ok(t)
}

pub fn table_report(ctx: &Ctx, score: ScoreArg, out: &Path) -> Result<AboveThresholdTable> {
    let run = Run::load(ctx, score)?;
    let t = run.twin_threshold()?;
    let retained_at: f64 = run.get("retain_threshold")?.parse()?;
    if retained_at > t.t {
        bail!(
            "retained pairs start at {retained_at}, above the twin threshold {}; rerun match with --retain-at T or lower",
            t.t
        );
    }
    let total: u64 = run.get("total_pairs")?.parse()?;
    let rows = run.rows("retained.csv")?;
    let items: Vec<(PairClass, f64)> = rows
        .iter()
        .filter_map(|r| primary_score(r, score).map(|s| (r.pair_class.clone(), s)))
        .collect();
    let tab = above_threshold_table(items.iter().map(|(c, s)| (c, *s)), t.t, total);
    let mut params = run.params();
    params.push(("threshold", f(t.t)));
    params.push(("percent_denominator", format!("unordered pairs scored ({total})")));
    ctx.prov.write_csv(
        &out.join(format!("table_{}.csv", score.as_str())),
        "above_threshold_table",
        &params,
        |b| {
            table(
                b,
                &["relationship", "count", "mean", "min", "max", "percent_of_matches"],
                tab.rows.iter().chain([&tab.total]).map(|r| {
                    vec![
                        r.pair_class.as_ref().map_or("total".into(), |c| c.to_string()),
                        r.count.to_string(),
                        f(r.mean),
                        f(r.min),
                        f(r.max),
                        f(r.percent),
                    ]
                }),
            )
        },
    )?;
    Ok(tab)
}

pub struct RocResult {
    pub split: &'static str,
    pub curve: RocCurve<f64>,
    pub metrics: VerificationMetrics<f64>,
}

pub fn roc_report(ctx: &Ctx, out: &Path) -> Result<Vec<RocResult>> {
    let fmr_target = ctx.cfg.analysis.fmr_target;
    let mut results = Vec::new();
    let test = ctx.train_dir().join("scores_test.csv");
    let train = ctx.train_dir().join("scores_train.csv");
    require(&[&train]).context("run `train` first")?;
    for (split, path) in [("train", train), ("test", test)] {
        if !path.is_file() {
            continue;
        }
        let mut genuine = Vec::new();
        let mut impostor = Vec::new();
        for r in read_table(&path, &SCORED_PAIRS_HEADER)? {
            let s: f64 = r[5].parse()?;
            match label_of(&r[2])? {
                Label::Similar => genuine.push(s),
                Label::Dissimilar => impostor.push(s),
            }
        }
        let curve = roc(&genuine, &impostor)?;
        let metrics = verification_metrics(&curve, &genuine, &impostor, fmr_target)?;
        let params = vec![
            ("split", split.to_string()),
            ("genuine", "twin pairs (label 0)".to_string()),
            ("impostor", "look-alike pairs (label 1)".to_string()),
            ("accept", "score >= threshold".to_string()),
        ];
        ctx.prov
            .write_csv(&out.join(format!("roc_{split}.csv")), "roc", &params, |b| {
                table(
                    b,
                    &["threshold", "fmr", "fnmr"],
                    curve.points.iter().map(|p| vec![f(p.threshold), f(p.fmr), f(p.fnmr)]),
                )
            })?;
        results.push(RocResult { split, curve, metrics });
    }
    let params = vec![
        ("fmr_target", f(fmr_target)),
        (
            "eer_rule",
            "linear interpolation at the FMR-FNMR sign change".to_string(),
        ),
        ("auc_rule", "Mann-Whitney, ties count one half".to_string()),
        ("unreachable_fmr", "evaluated at 1/impostors and flagged".to_string()),
    ];
    ctx.prov
        .write_csv(&out.join("metrics.csv"), "verification_metrics", &params, |b| {
            table(
                b,
                &[
                    "split",
                    "genuine",
                    "impostors",
                    "auc",
                    "eer",
                    "eer_threshold",
                    "fmr_target",
                    "fmr_evaluated",
                    "fnmr_at_fmr",
                    "fmr_reachable",
                ],
                results.iter().map(|r| {
                    let m = &r.metrics;
                    vec![
                        r.split.to_string(),
                        r.curve.genuine_count.to_string(),
                        r.curve.impostor_count.to_string(),
                        f(m.auc),
                        f(m.eer.eer),
                        f(m.eer.threshold),
                        f(m.fnmr_at_fmr.fmr_target),
                        f(m.fnmr_at_fmr.fmr_evaluated),
                        f(m.fnmr_at_fmr.fnmr),
                        m.fnmr_at_fmr.reachable.to_string(),
                    ]
                }),
            )
        })?;
    Ok(results)
}

pub fn baseline(ctx: &Ctx, out: &Path) -> Result<SimilarityBaseline<f64>> {
    let run = Run::load(ctx, ScoreArg::Similarity)?;
    let scores: Vec<f64> = run
        .rows("twin_pairs.csv")?
        .iter()
        .filter(|r| r.pair_class == PairClass::IdenticalTwin)
        .filter_map(|r| r.similarity_score)
        .collect();
    let b = similarity_baseline(&scores)?;
    let mut params = run.params();
    params.push(("percentile", PERCENTILE_RULE.to_string()));
    params.push(("pairs", "identical-twin non-mated".to_string()));
    ctx.prov
        .write_csv(&out.join("baseline.csv"), "similarity_baseline", &params, |buf| {
            table(
                buf,
                &["n", "mean", "q1", "q2", "q3", "q4_threshold"],
                [vec![
                    b.n.to_string(),
                    f(b.mean),
                    f(b.q1),
                    f(b.q2),
                    f(b.q3),
                    f(b.q4_threshold),
                ]],
            )
        })?;
    Ok(b)
}

/// `(comparison, similarity)` per image pair from the similarity run's
/// retained and twin pairs.
pub fn paired_scores(ctx: &Ctx) -> Result<(Run, Points)> {
    let run = Run::load(ctx, ScoreArg::Similarity)?;
    let mut seen = BTreeSet::new();
    let mut pts = Vec::new();
    for r in run.rows("retained.csv")?.into_iter().chain(run.rows("twin_pairs.csv")?) {
        if let (Some(c), Some(s)) = (r.comparison_score, r.similarity_score) {
            if seen.insert((r.image_a.clone(), r.image_b.clone())) {
                pts.push((c, s));
            }
        }
    }
    Ok((run, pts))
}

fn pair_params(run: &Run) -> Vec<(&'static str, String)> {
    let mut p = run.params();
    p.push((
        "level",
        "image pairs (retained and twin pairs of the similarity run)".into(),
    ));
    p.push(("x", "comparison_score".into()));
    p.push(("y", "similarity_score".into()));
    p
}

pub type Points = Vec<(f64, f64)>;

pub fn correlation(ctx: &Ctx, out: &Path) -> Result<(CorrelationReport<f64>, Points)> {
    let (run, pts) = paired_scores(ctx)?;
    let c = correlate(&pts)?;
    let params = pair_params(&run);
    ctx.prov
        .write_csv(&out.join("correlation.csv"), "correlate", &params, |b| {
            table(
                b,
                &["n", "pearson_r", "slope", "intercept"],
                [vec![c.n.to_string(), f(c.pearson_r), f(c.slope), f(c.intercept)]],
            )
        })?;
    ctx.prov
        .write_csv(&out.join("correlation_points.csv"), "correlate", &params, |b| {
            table(
                b,
                &["comparison_score", "similarity_score"],
                pts.iter().map(|p| vec![f(p.0), f(p.1)]),
            )
        })?;
    Ok((c, pts))
}

pub fn agreement(ctx: &Ctx, out: &Path) -> Result<BlandAltmanReport<f64>> {
    let (run, pts) = paired_scores(ctx)?;
    let norm: Normalization = ctx.cfg.analysis.normalization.parse()?;
    let ba = bland_altman(&pts, norm)?;
    let mut params = pair_params(&run);
    params.push(("normalization", norm.to_string()));
    params.push(("difference", "comparison - similarity".into()));
    params.push(("sd", "population".into()));
    ctx.prov
        .write_csv(&out.join("bland_altman.csv"), "bland_altman", &params, |b| {
            table(
                b,
                &["n", "mean_diff", "sd_diff", "loa_low", "loa_high"],
                [vec![
                    ba.points.len().to_string(),
                    f(ba.mean_diff),
                    f(ba.sd_diff),
                    f(ba.loa_low),
                    f(ba.loa_high),
                ]],
            )
        })?;
    ctx.prov
        .write_csv(&out.join("bland_altman_points.csv"), "bland_altman", &params, |b| {
            table(
                b,
                &["mean", "difference"],
                ba.points.iter().map(|p| vec![f(p.0), f(p.1)]),
            )
        })?;
    Ok(ba)
}

pub const DEFAULT_SWEEP_STEPS: usize = 21;

pub fn sweep(ctx: &Ctx, score: ScoreArg, out: &Path) -> Result<Vec<SweepRow<f64>>> {
    let run = Run::load(ctx, score)?;
    let path = run.dir.join("unrelated_max.csv");
    require(&[&path])?;
    let maxima: Vec<f64> = read_table(&path, &["subject_id", "max_score"])?
        .iter()
        .map(|r| {
            if r[1].is_empty() {
                Ok(f64::NEG_INFINITY)
            } else {
                r[1].parse::<f64>()
            }
        })
        .collect::<Result<_, _>>()?;
    let grid = if ctx.cfg.analysis.sweep.is_empty() {
        let finite: Vec<f64> = maxima.iter().copied().filter(|m| m.is_finite()).collect();
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if finite.is_empty() {
            Vec::new()
        } else {
            let n = DEFAULT_SWEEP_STEPS;
            (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
        }
    } else {
        ctx.cfg.analysis.sweep.clone()
    };
    let rows = lookalike_sweep(&maxima, &grid);
    let mut params = run.params();
    params.push(("identities", maxima.len().to_string()));
    params.push((
        "grid",
        if ctx.cfg.analysis.sweep.is_empty() {
            "observed range".into()
        } else {
            "configured".into()
        },
    ));
    ctx.prov.write_csv(
        &out.join(format!("sweep_{}.csv", score.as_str())),
        "lookalike_sweep",
        &params,
        |b| {
            table(
                b,
                &["threshold", "count", "identities", "fraction"],
                rows.iter().map(|r| {
                    vec![
                        f(r.threshold),
                        r.count.to_string(),
                        maxima.len().to_string(),
                        f(r.fraction),
                    ]
                }),
            )
        },
    )?;
    Ok(rows)
}
