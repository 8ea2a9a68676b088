use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::emb::{EmbeddingRecord, EmbeddingStore};
use super::graph::{csv_result, IdentityGraph};
use super::ids::{ImageId, PairClass, SubjectId, TwinKind};
use crate::error::{Error, Result};

/// `image_id,subject_id` ownership table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImageMap(BTreeMap<ImageId, SubjectId>);

impl ImageMap {
    pub fn insert(&mut self, image: ImageId, subject: SubjectId) -> Result<()> {
        if self.0.contains_key(&image) {
            return Err(Error::Validation(format!("duplicate image id `{image}`")));
        }
        self.0.insert(image, subject);
        Ok(())
    }

    pub fn owner(&self, image: &ImageId) -> Option<&SubjectId> {
        self.0.get(image)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ImageId, &SubjectId)> {
        self.0.iter()
    }

    pub fn parse(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
        let header = csv_result(rdr.headers())?.clone();
        if header.iter().ne(["image_id", "subject_id"]) {
            return Err(Error::Parse {
                line: 1,
                reason: "image map header must be `image_id,subject_id`".into(),
            });
        }
        let mut map = ImageMap::default();
        for rec in rdr.records() {
            let rec = csv_result(rec)?;
            let line = rec.position().map_or(0, |p| p.line());
            let wrap = |e: Error| Error::Parse {
                line,
                reason: e.to_string(),
            };
            let image = ImageId::new(rec.get(0).unwrap_or("").trim()).map_err(wrap)?;
            let subject = SubjectId::new(rec.get(1).unwrap_or("").trim()).map_err(wrap)?;
            map.insert(image, subject).map_err(wrap)?;
        }
        Ok(map)
    }

    pub fn write(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        csv_result(out.write_record(["image_id", "subject_id"]))?;
        for (i, s) in &self.0 {
            csv_result(out.write_record([i.as_str(), s.as_str()]))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(std::io::BufWriter::new(file))
    }
}

pub fn read_image_map(path: &Path) -> Result<ImageMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ImageMap::parse(std::io::BufReader::new(file))
}

/// Embeddings joined to their subjects and relations.
///
/// Images are ordered by ascending [`ImageId`] and subjects by ascending
/// [`SubjectId`]; every index-based API in the crate relies on that order.
/// Vectors are promoted to `f64` and stored row-major.
#[derive(Debug, Clone)]
pub struct Dataset {
    graph: IdentityGraph,
    dim: usize,
    images: Vec<ImageId>,
    image_subject: Vec<usize>,
    subjects: Vec<SubjectId>,
    subject_images: Vec<Vec<usize>>,
    vectors: Vec<f64>,
    relations: RelationIndex,
}

impl Dataset {
    /// Join a store to the graph through the image map. Fails on the first
    /// image that cannot be resolved to a known subject.
    pub fn join(graph: IdentityGraph, map: &ImageMap, store: &EmbeddingStore) -> Result<Self> {
        let mut owned: Vec<(&EmbeddingRecord, &SubjectId)> = Vec::with_capacity(store.len());
        for rec in store.records() {
            let subject = map
                .owner(&rec.image)
                .ok_or_else(|| Error::Join(format!("image `{}` has no entry in the image map", rec.image)))?;
            if !graph.contains(subject) {
                return Err(Error::Join(format!(
                    "image `{}` belongs to subject `{subject}` which is not in the manifest",
                    rec.image
                )));
            }
            owned.push((rec, subject));
        }
        owned.sort_by(|a, b| a.0.image.cmp(&b.0.image));

        let subjects: Vec<SubjectId> = graph.subjects().map(|(s, _)| s.clone()).collect();
        let subject_index: HashMap<&SubjectId, usize> = subjects.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let dim = store.dim();
        let mut images = Vec::with_capacity(owned.len());
        let mut image_subject = Vec::with_capacity(owned.len());
        let mut subject_images = vec![Vec::new(); subjects.len()];
        let mut vectors = Vec::with_capacity(owned.len() * dim);
        for (idx, (rec, subject)) in owned.into_iter().enumerate() {
            let s = subject_index[subject];
            images.push(rec.image.clone());
            image_subject.push(s);
            subject_images[s].push(idx);
            vectors.extend(rec.vector.iter().map(|&v| f64::from(v)));
        }
        let relations = RelationIndex::new(&graph, &subjects, &subject_index);
        Ok(Self {
            graph,
            dim,
            images,
            image_subject,
            subjects,
            subject_images,
            vectors,
            relations,
        })
    }

    pub fn graph(&self) -> &IdentityGraph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn image_count(&self) -> usize {
        self.images.len()
    }

    pub fn subject_count(&self) -> usize {
        self.subjects.len()
    }

    pub fn image_id(&self, i: usize) -> &ImageId {
        &self.images[i]
    }

    pub fn image_index(&self, id: &ImageId) -> Option<usize> {
        self.images.binary_search(id).ok()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn subject_of(&self, image: usize) -> usize {
        self.image_subject[image]
    }

    pub fn subject_id(&self, s: usize) -> &SubjectId {
        &self.subjects[s]
    }

    pub fn subject_index(&self, id: &SubjectId) -> Option<usize> {
        self.subjects.binary_search(id).ok()
    }

    /// Images of subject `s`, ascending.
    pub fn images_of(&self, s: usize) -> &[usize] {
        &self.subject_images[s]
    }

    pub fn relations(&self) -> &RelationIndex {
        &self.relations
    }

    pub fn class_id_images(&self, i: usize, j: usize) -> ClassId {
        self.relations.class_id(self.image_subject[i], self.image_subject[j])
    }

    /// Class of the image pair `(i, j)`.
    pub fn classify_images(&self, i: usize, j: usize) -> PairClass {
        self.relations.classify(self.image_subject[i], self.image_subject[j])
    }
}

/// Compact pair-class handle; see [`RelationIndex::class_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(pub u32);

impl ClassId {
    pub const SAME_SUBJECT: ClassId = ClassId(0);
    pub const IDENTICAL_TWIN: ClassId = ClassId(1);
    pub const IDENTICAL_MIRROR_TWIN: ClassId = ClassId(2);
    pub const FRATERNAL_TWIN: ClassId = ClassId(3);
    pub const NO_RELATION: ClassId = ClassId(4);
    pub const UNKNOWN: ClassId = ClassId(5);
    const FIRST_FAMILY: u32 = 6;

    fn from_twin(kind: TwinKind) -> Self {
        match kind {
            TwinKind::Identical => Self::IDENTICAL_TWIN,
            TwinKind::IdenticalMirror => Self::IDENTICAL_MIRROR_TWIN,
            TwinKind::Fraternal => Self::FRATERNAL_TWIN,
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_twin(self) -> bool {
        (1..=3).contains(&self.0)
    }

    /// No known relation (including pairs flagged unknown).
    pub fn is_unrelated(self) -> bool {
        self == Self::NO_RELATION || self == Self::UNKNOWN
    }
}

/// Index-based relation lookup used on hot paths.
#[derive(Debug, Clone)]
pub struct RelationIndex {
    twin: Vec<Option<(usize, TwinKind)>>,
    family: HashMap<(usize, usize), u32>,
    family_labels: Vec<String>,
    incomplete: Vec<bool>,
}

impl RelationIndex {
    fn new(graph: &IdentityGraph, subjects: &[SubjectId], index: &HashMap<&SubjectId, usize>) -> Self {
        let twin = subjects
            .iter()
            .map(|s| graph.twin_of(s).map(|(t, k)| (index[t], k)))
            .collect();
        let family_labels: Vec<String> = graph
            .family_edges()
            .map(|(_, _, k)| k.to_string())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let family = graph
            .family_edges()
            .map(|(a, b, k)| {
                let label = family_labels.binary_search_by(|l| l.as_str().cmp(k)).unwrap() as u32;
                let (a, b) = (index[a], index[b]);
                ((a.min(b), a.max(b)), label)
            })
            .collect();
        let incomplete = subjects
            .iter()
            .map(|s| graph.meta(s).is_some_and(|m| !m.meta_complete))
            .collect();
        Self {
            twin,
            family,
            family_labels,
            incomplete,
        }
    }

    pub fn twin_of(&self, s: usize) -> Option<(usize, TwinKind)> {
        self.twin[s]
    }

    pub fn are_related(&self, a: usize, b: usize) -> bool {
        a != b && (self.twin[a].is_some_and(|(t, _)| t == b) || self.family.contains_key(&(a.min(b), a.max(b))))
    }

    /// Same decision procedure as [`IdentityGraph::classify_pair`].
    #[inline]
    pub fn class_id(&self, a: usize, b: usize) -> ClassId {
        if a == b {
            return ClassId::SAME_SUBJECT;
        }
        if let Some((t, kind)) = self.twin[a] {
            if t == b {
                return ClassId::from_twin(kind);
            }
        }
        if !self.family.is_empty() {
            if let Some(&label) = self.family.get(&(a.min(b), a.max(b))) {
                return ClassId(ClassId::FIRST_FAMILY + label);
            }
        }
        if self.incomplete[a] || self.incomplete[b] {
            return ClassId::UNKNOWN;
        }
        ClassId::NO_RELATION
    }

    /// Every class id this index can produce, mapped to its [`PairClass`].
    pub fn class_table(&self) -> Vec<PairClass> {
        let mut table = vec![
            PairClass::SameSubject,
            PairClass::IdenticalTwin,
            PairClass::IdenticalMirrorTwin,
            PairClass::FraternalTwin,
            PairClass::NoRelation,
            PairClass::Unknown,
        ];
        table.extend(self.family_labels.iter().map(|l| PairClass::Family(l.clone())));
        table
    }

    pub fn class_count(&self) -> usize {
        ClassId::FIRST_FAMILY as usize + self.family_labels.len()
    }

    pub fn pair_class(&self, id: ClassId) -> PairClass {
        match id {
            ClassId::SAME_SUBJECT => PairClass::SameSubject,
            ClassId::IDENTICAL_TWIN => PairClass::IdenticalTwin,
            ClassId::IDENTICAL_MIRROR_TWIN => PairClass::IdenticalMirrorTwin,
            ClassId::FRATERNAL_TWIN => PairClass::FraternalTwin,
            ClassId::NO_RELATION => PairClass::NoRelation,
            ClassId::UNKNOWN => PairClass::Unknown,
            ClassId(k) => PairClass::Family(self.family_labels[(k - ClassId::FIRST_FAMILY) as usize].clone()),
        }
    }

    pub fn classify(&self, a: usize, b: usize) -> PairClass {
        self.pair_class(self.class_id(a, b))
    }
}
