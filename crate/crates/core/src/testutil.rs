use crate::datamodel::{
    Dataset, EmbeddingRecord, EmbeddingStore, IdentityGraph, ImageId, ImageMap, SubjectId, TwinKind,
};

fn sid(s: &str) -> SubjectId {
    SubjectId::new(s).unwrap()
}

/// Dataset with images `<subject>_<k>` holding the given vectors.
pub fn dataset(subjects: &[(&str, &[&[f32]])], twins: &[(&str, &str)], family: &[(&str, &str)]) -> Dataset {
    let mut b = IdentityGraph::builder();
    for (s, _) in subjects {
        b.subject(sid(s), "test", true).unwrap();
    }
    for (x, y) in twins {
        b.twin(sid(x), sid(y), TwinKind::Identical);
    }
    for (x, y) in family {
        b.family(sid(x), sid(y), "sibling");
    }
    let graph = b.build().unwrap();
    let mut map = ImageMap::default();
    let mut records = Vec::new();
    let dim = subjects
        .iter()
        .flat_map(|(_, v)| v.first())
        .map(|v| v.len())
        .next()
        .unwrap_or(1);
    for (s, vecs) in subjects {
        for (k, v) in vecs.iter().enumerate() {
            let image = ImageId::new(format!("{s}_{k}")).unwrap();
            map.insert(image.clone(), sid(s)).unwrap();
            records.push(EmbeddingRecord {
                image,
                vector: v.to_vec(),
            });
        }
    }
    Dataset::join(graph, &map, &EmbeddingStore::new(dim, records).unwrap()).unwrap()
}

/// `n` subjects with `k` images each on a line; no relations.
pub fn grid(n: usize, k: usize) -> Dataset {
    let names: Vec<String> = (0..n).map(|i| format!("s{i:02}")).collect();
    let vecs: Vec<Vec<[f32; 1]>> = (0..n)
        .map(|i| (0..k).map(|j| [i as f32 + j as f32 * 0.1]).collect())
        .collect();
    let refs: Vec<Vec<&[f32]>> = vecs.iter().map(|v| v.iter().map(|a| &a[..]).collect()).collect();
    let subjects: Vec<(&str, &[&[f32]])> = names.iter().zip(&refs).map(|(n, r)| (n.as_str(), &r[..])).collect();
    dataset(&subjects, &[], &[])
}
