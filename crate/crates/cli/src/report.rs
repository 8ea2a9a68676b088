use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};

use crate::analyze;
use crate::context::Ctx;
use crate::provenance::{read_table, table, write_file};
use crate::svg::{Mark, Plot};
use crate::ScoreArg;

/// Run every analysis whose inputs exist and render the figures.
pub fn run(ctx: &Ctx, out_dir: Option<PathBuf>) -> Result<()> {
    let out = out_dir
        .map(|p| ctx.cfg.resolve(&p))
        .unwrap_or_else(|| ctx.out("report"));
    let mut index: Vec<(String, String)> = Vec::new();
    let mut note = |name: &str, r: Result<Vec<&str>>| {
        let status = match r {
            Ok(files) => format!("ok: {}", files.join(" ")),
            Err(e) => format!("skipped: {}", format!("{e:#}").replace('\n', " ")),
        };
        index.push((name.to_string(), status));
    };

    for score in [ScoreArg::Comparison, ScoreArg::Similarity] {
        let s = score.as_str();
        note(
            &format!("threshold_{s}"),
            analyze::threshold(ctx, score, &out).map(|_| vec!["csv"]),
        );
        note(
            &format!("table_{s}"),
            analyze::table_report(ctx, score, &out).map(|_| vec!["csv"]),
        );
        note(
            &format!("histogram_{s}"),
            histogram(ctx, score, &out).map(|_| vec!["svg"]),
        );
        note(
            &format!("sweep_{s}"),
            analyze::sweep(ctx, score, &out).and_then(|rows| {
                let pts = rows.iter().map(|r| (r.threshold, r.fraction)).collect();
                let p = Plot::new(
                    &format!("Look-alike sweep ({s})"),
                    "threshold",
                    "fraction of identities",
                )
                .series("unrelated max >= threshold", Mark::Steps, pts);
                write_file(&out.join(format!("sweep_{s}.svg")), p.render().as_bytes())?;
                Ok(vec!["csv", "svg"])
            }),
        );
    }
    note(
        "roc",
        analyze::roc_report(ctx, &out).and_then(|res| {
            let mut p = Plot::new("ROC", "false match rate", "false non-match rate");
            for r in &res {
                p = p.series(
                    r.split,
                    Mark::Line,
                    r.curve.points.iter().map(|q| (q.fmr, q.fnmr)).collect(),
                );
            }
            write_file(&out.join("roc.svg"), p.render().as_bytes())?;
            Ok(vec!["csv", "svg"])
        }),
    );
    note("baseline", analyze::baseline(ctx, &out).map(|_| vec!["csv"]));
    note(
        "correlation",
        analyze::correlation(ctx, &out).and_then(|(c, pts)| {
            let (lo, hi) = pts
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
            let fit = vec![(lo, c.intercept + c.slope * lo), (hi, c.intercept + c.slope * hi)];
            let p = Plot::new(
                &format!("Comparison vs similarity (r = {:.4})", c.pearson_r),
                "comparison score",
                "similarity score",
            )
            .series("image pairs", Mark::Points, pts)
            .series("least squares", Mark::Line, fit);
            write_file(&out.join("correlation.svg"), p.render().as_bytes())?;
            Ok(vec!["csv", "svg"])
        }),
    );
    note(
        "bland_altman",
        analyze::agreement(ctx, &out).and_then(|ba| {
            let p = Plot::new(
                &format!("Bland-Altman ({})", ba.normalization),
                "mean of normalized scores",
                "comparison - similarity",
            )
            .series("image pairs", Mark::Points, ba.points.clone())
            .hline(ba.mean_diff, "mean")
            .hline(ba.loa_low, "mean - 1.96 sd")
            .hline(ba.loa_high, "mean + 1.96 sd");
            write_file(&out.join("bland_altman.svg"), p.render().as_bytes())?;
            Ok(vec!["csv", "svg"])
        }),
    );

    let produced = index.iter().filter(|(_, s)| s.starts_with("ok")).count();
    ctx.prov.write_csv(&out.join("index.csv"), "report", &[], |b| {
        table(
            b,
            &["analysis", "status"],
            index.iter().map(|(a, s)| vec![a.clone(), s.clone()]),
        )
    })?;
    if produced == 0 {
        bail!("no analysis had its inputs; see `{}`", out.join("index.csv").display());
    }
    println!(
        "{}",
        serde_json::json!({ "report": out.display().to_string(), "analyses": produced, "skipped": index.len() - produced })
    );
    Ok(())
}

fn histogram(ctx: &Ctx, score: ScoreArg, out: &Path) -> Result<()> {
    let path = ctx.match_dir(score).join("histogram.csv");
    let rows = read_table(&path, &["bin_lo", "bin_hi", "pair_class", "count"])?;
    let mut by_class: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        let (lo, hi, n): (f64, f64, f64) = (r[0].parse()?, r[1].parse()?, r[3].parse()?);
        by_class.entry(r[2].clone()).or_default().push(((lo + hi) / 2.0, n));
    }
    let mut p = Plot::new(
        &format!("Score distribution ({})", score.as_str()),
        "score",
        "fraction of class pairs",
    );
    for (class, mut pts) in by_class {
        let total: f64 = pts.iter().map(|q| q.1).sum();
        if total == 0.0 {
            continue;
        }
        pts.iter_mut().for_each(|q| q.1 /= total);
        p = p.series(&class, Mark::Line, pts);
    }
    write_file(
        &out.join(format!("histogram_{}.svg", score.as_str())),
        p.render().as_bytes(),
    )
}
