//! Pair enumeration, look-alike mining, training-set construction and the
//! balanced positive/negative sampler.

mod enumerate;
mod lookalike;
mod sampler;
mod training_set;

pub use enumerate::{
    enumerate_mated, enumerate_nonmated, mated_index_pairs, mated_pair_count, nonmated_index_pairs, nonmated_pair_count,
};
pub use lookalike::{mine_lookalikes, select_top_twin_pairs, LookalikeMap};
pub use sampler::{balanced_sampler, BalancedSampler};
pub use training_set::{build_training_set, TrainTestSplit, TrainingSet, TrainingSetConfig};

use std::io::{Read, Write};

use crate::datamodel::{csv_result, ImageId, PairClass};
use crate::error::{Error, Result};
use crate::head::Label;

/// One image pair, optionally labelled for training.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairSpec {
    pub a: ImageId,
    pub b: ImageId,
    pub label: Option<Label>,
    pub pair_class: PairClass,
}

pub const PAIRS_HEADER: [&str; 4] = ["image_a", "image_b", "label", "pair_class"];

pub fn write_pairs(pairs: &[PairSpec], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    csv_result(out.write_record(PAIRS_HEADER))?;
    for p in pairs {
        let label = p.label.map(|l| l.y().to_string()).unwrap_or_default();
        let class = p.pair_class.to_string();
        csv_result(out.write_record([p.a.as_str(), p.b.as_str(), &label, &class]))?;
    }
    out.flush()?;
    Ok(())
}

/// Read a pair list; `#` lines are treated as comments.
pub fn read_pairs(r: impl Read) -> Result<Vec<PairSpec>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    if csv_result(rdr.headers())?.iter().ne(PAIRS_HEADER) {
        return Err(Error::Parse {
            line: 1,
            reason: format!("pair list header must be `{}`", PAIRS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = csv_result(rec)?;
        let line = rec.position().map_or(0, |p| p.line());
        let wrap = |e: Error| Error::Parse {
            line,
            reason: e.to_string(),
        };
        let label = match rec.get(2).unwrap_or("") {
            "" => None,
            "0" => Some(Label::Similar),
            "1" => Some(Label::Dissimilar),
            other => {
                return Err(Error::Parse {
                    line,
                    reason: format!("label must be 0, 1 or empty, got `{other}`"),
                })
            }
        };
        out.push(PairSpec {
            a: ImageId::new(rec.get(0).unwrap_or("")).map_err(wrap)?,
            b: ImageId::new(rec.get(1).unwrap_or("")).map_err(wrap)?,
            label,
            pair_class: rec.get(3).unwrap_or("").parse().map_err(wrap)?,
        });
    }
    Ok(out)
}
