use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::ids::{PairClass, SubjectId, TwinKind};
use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 7] = [
    "subject_id",
    "dataset_tag",
    "twin_of",
    "twin_kind",
    "family_of",
    "family_kind",
    "meta_complete",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectMeta {
    pub dataset_tag: String,
    pub meta_complete: bool,
}

/// Subjects and their twin/family relations.
///
/// Twin edges are stored with their symmetric closure. Family edges are keyed
/// by the ordered subject pair so lookups are symmetric; when both rows of a
/// pair declare a label the labels are joined with `/` in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdentityGraph {
    subjects: BTreeMap<SubjectId, SubjectMeta>,
    twins: BTreeMap<SubjectId, (SubjectId, TwinKind)>,
    family: BTreeMap<(SubjectId, SubjectId), String>,
}

fn ordered(a: &SubjectId, b: &SubjectId) -> (SubjectId, SubjectId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl IdentityGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn subjects(&self) -> impl Iterator<Item = (&SubjectId, &SubjectMeta)> {
        self.subjects.iter()
    }

    pub fn subject_count(&self) -> usize {
        self.subjects.len()
    }

    pub fn contains(&self, s: &SubjectId) -> bool {
        self.subjects.contains_key(s)
    }

    pub fn meta(&self, s: &SubjectId) -> Option<&SubjectMeta> {
        self.subjects.get(s)
    }

    pub fn twin_of(&self, s: &SubjectId) -> Option<(&SubjectId, TwinKind)> {
        self.twins.get(s).map(|(t, k)| (t, *k))
    }

    /// Each twin edge once, as `(smaller, larger, kind)`.
    pub fn twin_edges(&self) -> impl Iterator<Item = (&SubjectId, &SubjectId, TwinKind)> {
        self.twins
            .iter()
            .filter(|(a, (b, _))| a < &b)
            .map(|(a, (b, k))| (a, b, *k))
    }

    pub fn family_edges(&self) -> impl Iterator<Item = (&SubjectId, &SubjectId, &str)> {
        self.family.iter().map(|((a, b), k)| (a, b, k.as_str()))
    }

    /// True when `a` and `b` are twins or family. `a == b` is not "related".
    pub fn are_related(&self, a: &SubjectId, b: &SubjectId) -> bool {
        a != b && (self.twins.get(a).is_some_and(|(t, _)| t == b) || self.family.contains_key(&ordered(a, b)))
    }

    pub fn classify_pair(&self, a: &SubjectId, b: &SubjectId) -> Result<PairClass> {
        let meta_a = self
            .subjects
            .get(a)
            .ok_or_else(|| Error::UnknownSubject(a.to_string()))?;
        let meta_b = self
            .subjects
            .get(b)
            .ok_or_else(|| Error::UnknownSubject(b.to_string()))?;
        if a == b {
            return Ok(PairClass::SameSubject);
        }
        if let Some((twin, kind)) = self.twins.get(a) {
            if twin == b {
                return Ok(PairClass::from_twin(*kind));
            }
        }
        if let Some(kind) = self.family.get(&ordered(a, b)) {
            return Ok(PairClass::Family(kind.clone()));
        }
        if !meta_a.meta_complete || !meta_b.meta_complete {
            return Ok(PairClass::Unknown);
        }
        Ok(PairClass::NoRelation)
    }

    pub fn write_manifest(&self, mut w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(&mut w);
        csv_result(out.write_record(MANIFEST_HEADER))?;
        // One family edge per row: place each edge on whichever endpoint row is free.
        let mut family_slot: BTreeMap<&SubjectId, (&SubjectId, &str)> = BTreeMap::new();
        for ((a, b), kind) in &self.family {
            if !family_slot.contains_key(a) {
                family_slot.insert(a, (b, kind.as_str()));
            } else if !family_slot.contains_key(b) {
                family_slot.insert(b, (a, kind.as_str()));
            } else {
                return Err(Error::Validation(format!(
                    "family edge `{a}`/`{b}` cannot be placed: both manifest rows already carry one"
                )));
            }
        }
        for (id, meta) in &self.subjects {
            let twin = self.twins.get(id).filter(|(t, _)| id < t);
            let family = family_slot.get(id);
            let complete = if meta.meta_complete { "1" } else { "0" };
            csv_result(out.write_record([
                id.as_str(),
                &meta.dataset_tag,
                twin.map_or("", |(t, _)| t.as_str()),
                twin.map_or("", |(_, k)| k.as_str()),
                family.map_or("", |(f, _)| f.as_str()),
                family.map_or("", |(_, k)| k),
                complete,
            ]))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_manifest(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_manifest(std::io::BufWriter::new(file))
    }
}

pub(crate) fn csv_result<T>(r: csv::Result<T>) -> Result<T> {
    r.map_err(|e| {
        let line = e.position().map_or(0, |p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Stream(io),
            other => Error::Parse {
                line,
                reason: format!("{other:?}"),
            },
        }
    })
}

#[derive(Debug, Default)]
pub struct GraphBuilder {
    subjects: BTreeMap<SubjectId, SubjectMeta>,
    twin_edges: Vec<(SubjectId, SubjectId, TwinKind)>,
    family_edges: Vec<(SubjectId, SubjectId, String)>,
}

impl GraphBuilder {
    pub fn subject(&mut self, id: SubjectId, dataset_tag: &str, meta_complete: bool) -> Result<&mut Self> {
        if self.subjects.contains_key(&id) {
            return Err(Error::Validation(format!("duplicate subject `{id}`")));
        }
        self.subjects.insert(
            id,
            SubjectMeta {
                dataset_tag: dataset_tag.to_string(),
                meta_complete,
            },
        );
        Ok(self)
    }

    pub fn twin(&mut self, a: SubjectId, b: SubjectId, kind: TwinKind) -> &mut Self {
        self.twin_edges.push((a, b, kind));
        self
    }

    pub fn family(&mut self, a: SubjectId, b: SubjectId, kind: &str) -> &mut Self {
        self.family_edges.push((a, b, kind.to_string()));
        self
    }

    pub fn build(&mut self) -> Result<IdentityGraph> {
        let known = |s: &SubjectId| -> Result<()> {
            if self.subjects.contains_key(s) {
                Ok(())
            } else {
                Err(Error::Validation(format!("unknown subject `{s}`")))
            }
        };
        let mut twins: BTreeMap<SubjectId, (SubjectId, TwinKind)> = BTreeMap::new();
        for (a, b, kind) in &self.twin_edges {
            known(a)?;
            known(b)?;
            if a == b {
                return Err(Error::Validation(format!("self twin edge on `{a}`")));
            }
            for (x, y) in [(a, b), (b, a)] {
                match twins.get(x) {
                    Some((t, k)) if t == y && k == kind => {}
                    Some((t, k)) if t == y => {
                        return Err(Error::Validation(format!(
                            "conflicting twin kinds for `{x}`/`{y}`: {} vs {}",
                            k.as_str(),
                            kind.as_str()
                        )))
                    }
                    Some(_) => return Err(Error::Validation(format!("subject `{x}` has more than one twin edge"))),
                    None => {
                        twins.insert(x.clone(), (y.clone(), *kind));
                    }
                }
            }
        }
        let mut labels: BTreeMap<(SubjectId, SubjectId), BTreeSet<String>> = BTreeMap::new();
        for (a, b, kind) in &self.family_edges {
            known(a)?;
            known(b)?;
            if a == b {
                return Err(Error::Validation(format!("self family edge on `{a}`")));
            }
            if kind.is_empty() || kind.contains(',') || kind.contains(char::is_whitespace) {
                return Err(Error::Validation(format!("bad family kind `{kind}`")));
            }
            labels.entry(ordered(a, b)).or_default().insert(kind.clone());
        }
        let family = labels
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().collect::<Vec<_>>().join("/")))
            .collect();
        Ok(IdentityGraph {
            subjects: std::mem::take(&mut self.subjects),
            twins,
            family,
        })
    }
}

fn parse_err(line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

/// Parse and validate a subject manifest.
pub fn parse_manifest(reader: impl Read) -> Result<IdentityGraph> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = csv_result(rdr.headers())?.clone();
    if header.iter().ne(MANIFEST_HEADER) {
        return Err(parse_err(
            1,
            format!("manifest header must be `{}`", MANIFEST_HEADER.join(",")),
        ));
    }
    let mut b = IdentityGraph::builder();
    for rec in rdr.records() {
        let rec = csv_result(rec)?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let id = SubjectId::new(field(0)).map_err(|e| parse_err(line, e.to_string()))?;
        let complete = match field(6) {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(line, format!("meta_complete must be 0 or 1, got `{other}`"))),
        };
        match (field(2), field(3)) {
            ("", "") => {}
            (twin, kind) if !twin.is_empty() && !kind.is_empty() => {
                let twin = SubjectId::new(twin).map_err(|e| parse_err(line, e.to_string()))?;
                let kind: TwinKind = kind.parse().map_err(|e: Error| parse_err(line, e.to_string()))?;
                b.twin(id.clone(), twin, kind);
            }
            _ => return Err(parse_err(line, "twin_of and twin_kind must both be set or both empty")),
        }
        match (field(4), field(5)) {
            ("", "") => {}
            (fam, kind) if !fam.is_empty() && !kind.is_empty() => {
                let fam = SubjectId::new(fam).map_err(|e| parse_err(line, e.to_string()))?;
                b.family(id.clone(), fam, kind);
            }
            _ => {
                return Err(parse_err(
                    line,
                    "family_of and family_kind must both be set or both empty",
                ))
            }
        }
        b.subject(id, field(1), complete)?;
    }
    b.build()
}

pub fn read_manifest(path: &Path) -> Result<IdentityGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "subject_id,dataset_tag,twin_of,twin_kind,family_of,family_kind,meta_complete\n";

    fn parse(body: &str) -> Result<IdentityGraph> {
        parse_manifest(format!("{HEADER}{body}").as_bytes())
    }

    fn sid(s: &str) -> SubjectId {
        SubjectId::new(s).unwrap()
    }

    #[test]
    fn minimal_twin_manifest() {
        let g = parse("A,twin,B,identical,,,1\nB,twin,,,,,1\n").unwrap();
        assert_eq!(g.twin_edges().count(), 1);
        assert_eq!(g.twin_of(&sid("B")), Some((&sid("A"), TwinKind::Identical)));
        assert_eq!(g.twin_of(&sid("A")), Some((&sid("B"), TwinKind::Identical)));
    }

    #[test]
    fn self_twin_edge_rejected() {
        let err = parse("A,twin,A,identical,,,1\n").unwrap_err();
        assert!(err.to_string().contains("self twin edge"), "{err}");
    }

    #[test]
    fn dangling_edge_rejected() {
        let err = parse("A,twin,C,identical,,,1\nB,twin,,,,,1\n").unwrap_err();
        assert!(err.to_string().contains("unknown subject"), "{err}");
    }

    #[test]
    fn duplicate_subject_rejected() {
        let err = parse("A,twin,,,,,1\nA,twin,,,,,1\n").unwrap_err();
        assert!(err.to_string().contains("duplicate subject"), "{err}");
    }

    #[test]
    fn second_twin_edge_rejected() {
        let err = parse("A,twin,B,identical,,,1\nB,twin,,,,,1\nC,twin,A,fraternal,,,1\n").unwrap_err();
        assert!(err.to_string().contains("more than one twin edge"), "{err}");
    }

    #[test]
    fn bad_header_and_fields_report_lines() {
        assert!(matches!(
            parse_manifest("a,b\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        match parse("A,twin,,,,,2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("A,twin,B,,,,1\nB,t,,,,,1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn classify_cases() {
        let g = parse(
            "A,twin,B,identical_mirror,,,1\nB,twin,,,,,1\nC,nontwin,,,A,Mother,1\nD,nontwin,,,,,1\nE,nontwin,,,,,0\n",
        )
        .unwrap();
        let c = |a: &str, b: &str| g.classify_pair(&sid(a), &sid(b)).unwrap();
        assert_eq!(c("A", "A"), PairClass::SameSubject);
        assert_eq!(c("A", "B"), PairClass::IdenticalMirrorTwin);
        assert_eq!(c("A", "C"), PairClass::Family("Mother".into()));
        assert_eq!(c("C", "A"), PairClass::Family("Mother".into()));
        assert_eq!(c("A", "D"), PairClass::NoRelation);
        assert_eq!(c("D", "E"), PairClass::Unknown);
        assert!(matches!(
            g.classify_pair(&sid("A"), &sid("Z")),
            Err(Error::UnknownSubject(_))
        ));
    }

    #[test]
    fn manifest_write_read_round_trip() {
        let g = parse("A,twin,B,fraternal,,,1\nB,twin,,,C,Child,1\nC,family,,,A,Mother,0\nD,celeb,,,,,1\n").unwrap();
        let mut buf = Vec::new();
        g.write_manifest(&mut buf).unwrap();
        let back = parse_manifest(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }
}
