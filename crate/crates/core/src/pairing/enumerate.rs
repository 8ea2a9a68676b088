use super::PairSpec;
use crate::datamodel::Dataset;

/// Index pairs `(i, j)`, `i < j`, of images sharing a subject, grouped by subject.
pub fn mated_index_pairs(ds: &Dataset) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..ds.subject_count()).flat_map(move |s| {
        let imgs = ds.images_of(s);
        (0..imgs.len()).flat_map(move |x| ((x + 1)..imgs.len()).map(move |y| (imgs[x], imgs[y])))
    })
}

/// Index pairs `(i, j)`, `i < j`, of images of different subjects, row-major.
pub fn nonmated_index_pairs(ds: &Dataset) -> impl Iterator<Item = (usize, usize)> + '_ {
    let n = ds.image_count();
    (0..n).flat_map(move |i| {
        ((i + 1)..n)
            .filter(move |&j| ds.subject_of(i) != ds.subject_of(j))
            .map(move |j| (i, j))
    })
}

fn spec(ds: &Dataset, (i, j): (usize, usize)) -> PairSpec {
    PairSpec {
        a: ds.image_id(i).clone(),
        b: ds.image_id(j).clone(),
        label: None,
        pair_class: ds.classify_images(i, j),
    }
}

pub fn enumerate_mated(ds: &Dataset) -> impl Iterator<Item = PairSpec> + '_ {
    mated_index_pairs(ds).map(move |p| spec(ds, p))
}

pub fn enumerate_nonmated(ds: &Dataset) -> impl Iterator<Item = PairSpec> + '_ {
    nonmated_index_pairs(ds).map(move |p| spec(ds, p))
}

fn choose2(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

/// `sum_s k_s (k_s - 1) / 2`.
pub fn mated_pair_count(ds: &Dataset) -> u64 {
    (0..ds.subject_count())
        .map(|s| choose2(ds.images_of(s).len() as u64))
        .sum()
}

/// `T (T - 1) / 2 - sum_s k_s (k_s - 1) / 2`.
pub fn nonmated_pair_count(ds: &Dataset) -> u64 {
    choose2(ds.image_count() as u64) - mated_pair_count(ds)
}
