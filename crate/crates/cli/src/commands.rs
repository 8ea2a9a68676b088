use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use lookalike_core::analysis::{twin_threshold, ScoreSource};
use lookalike_core::datamodel::{load_dataset, Dataset, TwinKind};
use lookalike_core::engine::{run_match_with_reference, MatchJob, PairFilter, ScoreKind};
use lookalike_core::head::{
    train as train_head, Activation, HeadParams, Label, Optimizer, TrainConfig, TrainData, TrainPair,
};
use lookalike_core::pairing::{
    build_training_set, mated_pair_count, mine_lookalikes, nonmated_pair_count, read_pairs, select_top_twin_pairs,
    write_pairs, PairSpec, TrainingSetConfig,
};
use lookalike_core::scalar::l2_distance;
use lookalike_core::scoring::{comparison_score, write_score_rows, ComparisonMetric, InversionMode};
use lookalike_core::synth::{generate, SynthConfig};

use crate::context::{require, Ctx, UsageError};
use crate::provenance::{kv_get, read_kv, table, write_file};
use crate::{FilterArg, ScoreArg};

pub fn synth(ctx: &Ctx) -> Result<()> {
    let s = &ctx.cfg.synth;
    let cfg = SynthConfig {
        n_twin_pairs: s.n_twin_pairs,
        n_singles: s.n_singles,
        images_per_subject: s.images_per_subject,
        dim: s.dim,
        sigma_image: s.sigma_image,
        delta_twin: s.delta_twin,
        spread: s.spread,
        seed: ctx.cfg.seed,
    };
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    let world = generate(&cfg)?;
    let dir = ctx.data_dir();
    let params = vec![
        ("n_twin_pairs", s.n_twin_pairs.to_string()),
        ("n_singles", s.n_singles.to_string()),
        ("images_per_subject", s.images_per_subject.to_string()),
        ("dim", s.dim.to_string()),
        ("sigma_image", s.sigma_image.to_string()),
        ("delta_twin", s.delta_twin.to_string()),
        ("spread", s.spread.to_string()),
        ("generator", "chacha20".to_string()),
    ];
    let p = &ctx.prov;
    p.write_csv(&dir.join("manifest.csv"), "synth", &params, |b| {
        Ok(world.graph.write_manifest(b)?)
    })?;
    p.write_csv(&dir.join("images.csv"), "synth", &params, |b| {
        Ok(world.images.write(b)?)
    })?;
    let mut emb = Vec::new();
    world.embeddings.write_to(&mut emb)?;
    write_file(&dir.join("embeddings.emb"), &emb)?;
    p.write_csv(&dir.join("truth.csv"), "synth", &params, |b| {
        table(
            b,
            &["subject_a", "subject_b", "pair_class", "centroid_distance"],
            world.truth.pairs().into_iter().map(|t| {
                vec![
                    t.a.to_string(),
                    t.b.to_string(),
                    t.class.to_string(),
                    t.centroid_distance.to_string(),
                ]
            }),
        )
    })
}

pub fn ingest(
    ctx: &Ctx,
    manifest: Option<PathBuf>,
    images: Option<PathBuf>,
    embeddings: Option<PathBuf>,
) -> Result<()> {
    let d = ctx.data_paths();
    let manifest = manifest.unwrap_or(d.manifest);
    let images = images.unwrap_or(d.image_map);
    let embeddings = embeddings.unwrap_or(d.embeddings);
    require(&[&manifest, &images, &embeddings])?;
    let ds = load_dataset(&manifest, &images, &embeddings)?;
    let g = ds.graph();
    let twins = |k: TwinKind| g.twin_edges().filter(|e| e.2 == k).count();
    let rows = vec![
        ("subjects", ds.subject_count().to_string()),
        ("images", ds.image_count().to_string()),
        ("dim", ds.dim().to_string()),
        ("identical_twin_edges", twins(TwinKind::Identical).to_string()),
        (
            "identical_mirror_twin_edges",
            twins(TwinKind::IdenticalMirror).to_string(),
        ),
        ("fraternal_twin_edges", twins(TwinKind::Fraternal).to_string()),
        ("family_edges", g.family_edges().count().to_string()),
        ("mated_pairs", mated_pair_count(&ds).to_string()),
        ("nonmated_pairs", nonmated_pair_count(&ds).to_string()),
    ];
    let summary: serde_json::Map<String, serde_json::Value> = rows
        .iter()
        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.clone())))
        .collect();
    println!("{}", serde_json::Value::Object(summary));
    ctx.prov.write_csv(
        &ctx.out("ingest/dataset.csv"),
        "ingest",
        &[
            ("manifest", manifest.display().to_string()),
            ("image_map", images.display().to_string()),
            ("embeddings", embeddings.display().to_string()),
        ],
        |b| {
            table(
                b,
                &["key", "value"],
                rows.iter().map(|(k, v)| vec![k.to_string(), v.clone()]),
            )
        },
    )
}

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    comparison_score(u, v, ComparisonMetric::CosineMapped).map_or(0.0, |s| s.value)
}

fn read_pair_file(path: &PathBuf) -> Result<Vec<PairSpec>> {
    require(&[path])?;
    let f = fs::File::open(path)?;
    read_pairs(f).with_context(|| format!("in `{}`", path.display()))
}

pub fn train(ctx: &Ctx, pairs: Option<PathBuf>, val_pairs: Option<PathBuf>, out_head: Option<PathBuf>) -> Result<()> {
    let t = &ctx.cfg.train;
    let optimizer = if t.momentum > 0.0 {
        Optimizer::Momentum(t.momentum)
    } else {
        Optimizer::Sgd
    };
    let config = TrainConfig {
        learning_rate: t.learning_rate,
        margin: t.margin,
        epochs: t.epochs,
        steps_per_epoch: t.steps_per_epoch,
        batch_size: t.batch_size,
        seed: ctx.cfg.seed,
        optimizer,
    };
    config.validate().map_err(|e| UsageError(e.to_string()))?;
    if let Some(p) = &pairs {
        require(&[p])?;
    }
    if let Some(p) = &val_pairs {
        require(&[p])?;
    }
    let ds = ctx.load_dataset()?;
    let dir = ctx.train_dir();
    let prov = &ctx.prov;

    let (train_specs, val_specs, source) = match pairs {
        Some(p) => {
            let val = match &val_pairs {
                Some(v) => read_pair_file(v)?,
                None => Vec::new(),
            };
            (read_pair_file(&p)?, val, p.display().to_string())
        }
        None => {
            let lookalikes = mine_lookalikes(&ds, cosine, t.lookalikes)?;
            let twin_filter = if t.twin_top_fraction < 1.0 {
                Some(select_top_twin_pairs(&ds, cosine, t.twin_top_fraction)?)
            } else {
                None
            };
            let set = build_training_set(
                &ds,
                &lookalikes,
                &TrainingSetConfig {
                    split_fraction: t.split_fraction,
                    seed: ctx.cfg.seed,
                    twin_filter,
                },
            )?;
            let params = [
                ("lookalikes", t.lookalikes.to_string()),
                ("lookalike_metric", "cosine_mapped".to_string()),
                ("split_fraction", t.split_fraction.to_string()),
                ("twin_top_fraction", t.twin_top_fraction.to_string()),
            ];
            prov.write_csv(&dir.join("pairs_train.csv"), "training_set", &params, |b| {
                Ok(write_pairs(&set.train, b)?)
            })?;
            prov.write_csv(&dir.join("pairs_test.csv"), "training_set", &params, |b| {
                Ok(write_pairs(&set.test, b)?)
            })?;
            (set.train, set.test, "mined".to_string())
        }
    };
    let train_pairs = TrainPair::resolve(&train_specs, &ds)?;
    let val = TrainPair::resolve(&val_specs, &ds)?;
    let data = TrainData::<f64>::from_dataset(&ds);
    let hidden = match t.hidden {
        0 => None,
        h => Some((
            h,
            if t.activation == "tanh" {
                Activation::Tanh
            } else {
                Activation::Identity
            },
        )),
    };
    let init = HeadParams::init_near_identity(ds.dim(), t.d_out, hidden, ctx.cfg.seed)?;
    let outcome = train_head(init, &data, &train_pairs, &val, &config)?;

    let head_path = out_head.unwrap_or_else(|| dir.join("head.hed1"));
    let mut bytes = Vec::new();
    lookalike_core::head::write_head(&outcome.params, &mut bytes)?;
    write_file(&head_path, &bytes)?;

    let params = vec![
        ("pairs", source),
        ("learning_rate", t.learning_rate.to_string()),
        ("margin", t.margin.to_string()),
        ("epochs", t.epochs.to_string()),
        ("steps_per_epoch", t.steps_per_epoch.to_string()),
        ("batch_size", t.batch_size.to_string()),
        ("optimizer", format!("{optimizer:?}").to_lowercase()),
        ("d_out", t.d_out.to_string()),
        ("hidden", t.hidden.to_string()),
        ("best_epoch", outcome.best_epoch.to_string()),
    ];
    prov.write_csv(&dir.join("history.csv"), "train", &params, |b| {
        Ok(lookalike_core::head::write_history_csv(&outcome.history, b)?)
    })?;

    let raw = |p: &TrainPair| -> Result<f64> {
        let u = outcome.params.forward(data.row(p.a))?;
        let v = outcome.params.forward(data.row(p.b))?;
        Ok(l2_distance(&u, &v))
    };
    let reference = train_pairs
        .iter()
        .map(raw)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    prov.write_csv(&dir.join("calibration.csv"), "calibration", &params, |b| {
        table(
            b,
            &["key", "value"],
            [vec!["reference_max".to_string(), reference.to_string()]],
        )
    })?;
    for (name, specs, resolved) in [
        ("scores_train.csv", &train_specs, &train_pairs),
        ("scores_test.csv", &val_specs, &val),
    ] {
        if resolved.is_empty() {
            continue;
        }
        let raws = resolved.iter().map(raw).collect::<Result<Vec<_>>>()?;
        let (sims, batch_ref) = lookalike_core::scoring::invert_scores(&raws)?;
        let mut p = params.clone();
        p.push(("inversion", format!("batch_relative(reference_max={batch_ref})")));
        prov.write_csv(&dir.join(name), "heldout_scores", &p, |b| {
            table(
                b,
                &SCORED_PAIRS_HEADER,
                specs
                    .iter()
                    .zip(resolved)
                    .zip(raws.iter().zip(&sims))
                    .map(|((s, tp), (r, sim))| {
                        vec![
                            s.a.to_string(),
                            s.b.to_string(),
                            tp.label.y().to_string(),
                            s.pair_class.to_string(),
                            r.to_string(),
                            sim.to_string(),
                        ]
                    }),
            )
        })?;
    }
    Ok(())
}

pub const SCORED_PAIRS_HEADER: [&str; 6] = [
    "image_a",
    "image_b",
    "label",
    "pair_class",
    "raw_similarity",
    "similarity_score",
];

pub struct MatchArgs {
    pub score: Option<ScoreArg>,
    pub filter: Option<FilterArg>,
    pub retain_at: Option<String>,
    pub workers: Option<usize>,
    pub head: Option<PathBuf>,
}

pub fn run_match(ctx: &Ctx, args: MatchArgs) -> Result<()> {
    let m = &ctx.cfg.matching;
    let score = args.score.unwrap_or_else(|| ctx.default_score());
    let filter = match args.filter {
        Some(FilterArg::Mated) => PairFilter::MatedOnly,
        Some(FilterArg::Nonmated) => PairFilter::NonMatedOnly,
        Some(FilterArg::All) => PairFilter::All,
        None => match m.filter.as_str() {
            "mated" => PairFilter::MatedOnly,
            "all" => PairFilter::All,
            _ => PairFilter::NonMatedOnly,
        },
    };
    let retain_at = args.retain_at.unwrap_or_else(|| m.retain_at.clone());
    let fixed_retain = match retain_at.as_str() {
        "T" => None,
        v => Some(
            v.parse::<f64>()
                .map_err(|_| UsageError(format!("--retain-at must be `T` or a number, got `{v}`")))?,
        ),
    };
    let workers = args.workers.unwrap_or(ctx.cfg.workers);
    if workers == 0 {
        return Err(UsageError("--workers must be at least 1".into()).into());
    }
    let metric: ComparisonMetric = m.metric.parse()?;
    let head_path = args.head.unwrap_or_else(|| ctx.train_dir().join("head.hed1"));
    let calibration = ctx.train_dir().join("calibration.csv");
    if score == ScoreArg::Similarity {
        require(&[&head_path])?;
        if m.inversion == "calibrated" {
            require(&[&calibration])?;
        }
    }
    let ds = ctx.load_dataset()?;
    let head: Option<HeadParams<f64>> = match score {
        ScoreArg::Similarity => Some(HeadParams::load(&head_path)?),
        ScoreArg::Comparison => None,
    };
    let inversion = match m.inversion.as_str() {
        "calibrated" => {
            let kv = read_kv(&calibration)?;
            InversionMode::Calibrated(kv_get(&kv, "reference_max")?.parse()?)
        }
        _ => InversionMode::BatchRelative,
    };
    let kind = match &head {
        None => ScoreKind::Comparison(metric),
        Some(h) => ScoreKind::Similarity {
            head: h,
            inversion,
            companion: metric,
        },
    };
    let mut job = MatchJob::new(&ds, kind, filter).with_blocking(m.block_size, workers);
    job.bins = m.bins;
    let source = match score {
        ScoreArg::Comparison => ScoreSource::Comparison,
        ScoreArg::Similarity => ScoreSource::Similarity,
    };
    let mut twin_t = None;
    let retain = match fixed_retain {
        Some(v) => v,
        None => {
            let (pre, _) = run_match_with_reference(&job, None)?;
            let t = twin_threshold(&pre, source).context("--retain-at T needs identical-twin pairs in the run")?;
            twin_t = Some(t.t);
            t.t
        }
    };
    let (acc, reference) = run_match_with_reference(&job, Some(retain))?;
    write_match_outputs(
        ctx, &ds, score, &job, &acc, reference, &retain_at, retain, twin_t, inversion, metric,
    )
}

#[allow(clippy::too_many_arguments)]
fn write_match_outputs(
    ctx: &Ctx,
    ds: &Dataset,
    score: ScoreArg,
    job: &MatchJob<'_>,
    acc: &lookalike_core::engine::ScoreAccumulator,
    reference: Option<f64>,
    retain_at: &str,
    retain: f64,
    twin_t: Option<f64>,
    inversion: InversionMode,
    metric: ComparisonMetric,
) -> Result<()> {
    let dir = ctx.match_dir(score);
    let filter = match job.filter {
        PairFilter::MatedOnly => "mated",
        PairFilter::NonMatedOnly => "nonmated",
        PairFilter::All => "all",
    };
    let inversion_text = match score {
        ScoreArg::Comparison => "none".to_string(),
        ScoreArg::Similarity => inversion.to_string(),
    };
    let params = vec![
        ("score", score.as_str().to_string()),
        ("metric", metric.to_string()),
        ("inversion", inversion_text.clone()),
        ("filter", filter.to_string()),
        ("retain_at", retain_at.to_string()),
        ("retain_threshold", retain.to_string()),
        ("block_size", job.block_size.to_string()),
        ("bins", job.bins.to_string()),
    ];
    let prov = &ctx.prov;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let run_rows = vec![
        ("score", score.as_str().to_string()),
        ("metric", metric.to_string()),
        ("inversion", inversion_text),
        ("reference_max", opt(reference)),
        ("filter", filter.to_string()),
        ("retain_at", retain_at.to_string()),
        ("retain_threshold", retain.to_string()),
        ("twin_threshold", opt(twin_t)),
        ("total_pairs", acc.total_count().to_string()),
        ("subjects", ds.subject_count().to_string()),
        ("images", ds.image_count().to_string()),
    ];
    prov.write_csv(&dir.join("run.csv"), "match", &params, |b| {
        table(
            b,
            &["key", "value"],
            run_rows.iter().map(|(k, v)| vec![k.to_string(), v.clone()]),
        )
    })?;
    prov.write_csv(&dir.join("summary.csv"), "match", &params, |b| {
        Ok(acc.write_summary_csv(b)?)
    })?;
    prov.write_csv(&dir.join("histogram.csv"), "match", &params, |b| {
        Ok(acc.write_histogram_csv(b)?)
    })?;
    let rows: Vec<_> = acc.retained.iter().map(|p| p.to_row(ds)).collect();
    prov.write_csv(&dir.join("retained.csv"), "match", &params, |b| {
        Ok(write_score_rows(&rows, b)?)
    })?;
    let rows: Vec<_> = acc.twin_pairs.iter().map(|p| p.to_row(ds)).collect();
    prov.write_csv(&dir.join("twin_pairs.csv"), "match", &params, |b| {
        Ok(write_score_rows(&rows, b)?)
    })?;
    prov.write_csv(&dir.join("unrelated_max.csv"), "match", &params, |b| {
        table(
            b,
            &["subject_id", "max_score"],
            acc.unrelated_max.iter().enumerate().map(|(s, &m)| {
                vec![
                    ds.subject_id(s).to_string(),
                    if m.is_finite() { m.to_string() } else { String::new() },
                ]
            }),
        )
    })
}

/// Scores of one kind read back from a match run.
pub fn primary_score(row: &lookalike_core::scoring::ScoreRow, score: ScoreArg) -> Option<f64> {
    match score {
        ScoreArg::Comparison => row.comparison_score,
        ScoreArg::Similarity => row.similarity_score,
    }
}

pub fn label_of(text: &str) -> Result<Label> {
    match text {
        "0" => Ok(Label::Similar),
        "1" => Ok(Label::Dissimilar),
        other => bail!("bad label `{other}`"),
    }
}
