//! Output files with a `# key: value` provenance header.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

pub const TOOL: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    /// Header comment block. `params` are written in the given order.
    pub fn header(&self, procedure: &str, params: &[(&str, String)]) -> String {
        let mut h = format!(
            "# tool: {TOOL}\n# config_hash: {}\n# seed: {}\n# procedure: {procedure}\n",
            self.config_hash, self.seed
        );
        for (k, v) in params {
            h.push_str(&format!("# {k}: {v}\n"));
        }
        h
    }

    /// Write `header + body` to `path`, creating parent directories.
    pub fn write_csv(
        &self,
        path: &Path,
        procedure: &str,
        params: &[(&str, String)],
        body: impl FnOnce(&mut Vec<u8>) -> Result<()>,
    ) -> Result<()> {
        let mut buf = self.header(procedure, params).into_bytes();
        body(&mut buf)?;
        write_file(path, &buf)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create `{}`", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("cannot write `{}`", path.display()))
}

/// Build a CSV body from a header row and string records.
pub fn table<I, R>(buf: &mut Vec<u8>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>())?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a CSV written by [`table`], skipping `#` lines. Checks the header.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let file = fs::File::open(path).with_context(|| format!("missing input `{}`", path.display()))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let got: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if got != header {
        anyhow::bail!(
            "`{}` has header `{}`, expected `{}`",
            path.display(),
            got.join(","),
            header.join(",")
        );
    }
    let mut out = Vec::new();
    for rec in r.records() {
        out.push(rec?.iter().map(String::from).collect());
    }
    Ok(out)
}

/// Parse a `key,value` table into pairs.
pub fn read_kv(path: &Path) -> Result<Vec<(String, String)>> {
    Ok(read_table(path, &["key", "value"])?
        .into_iter()
        .map(|mut r| {
            let v = r.pop().unwrap_or_default();
            (r.pop().unwrap_or_default(), v)
        })
        .collect())
}

pub fn kv_get<'a>(kv: &'a [(String, String)], key: &str) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .with_context(|| format!("missing key `{key}`"))
}
