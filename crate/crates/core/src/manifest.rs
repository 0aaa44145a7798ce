//! `trace_id,path,label` manifests tying trace files to optional labels.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::meta;
use crate::trace::{SensorTrace, SensorType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub trace_id: String,
    /// As written in the file; relative paths resolve against the manifest's directory.
    pub path: String,
    pub label: Option<SensorType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelManifest {
    pub rows: Vec<ManifestRow>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl LabelManifest {
    pub fn load(path: &Path) -> Result<LabelManifest> {
        let text = meta::read_to_string(path)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, path, base_dir)
    }

    pub fn parse(text: &str, origin: &Path, base_dir: PathBuf) -> Result<LabelManifest> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["trace_id", "path", "label"] {
            return Err(Error::parse(
                origin,
                1,
                "expected header `trace_id,path,label`",
            ));
        }
        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let trace_id = record[0].to_string();
            if !seen.insert(trace_id.clone()) {
                return Err(Error::parse(
                    origin,
                    line,
                    format!("duplicate trace_id `{trace_id}`"),
                ));
            }
            let label = match &record[2] {
                "" => None,
                s => Some(
                    s.parse()
                        .map_err(|e: Error| Error::parse(origin, line, e.to_string()))?,
                ),
            };
            rows.push(ManifestRow {
                trace_id,
                path: record[1].to_string(),
                label,
            });
        }
        Ok(LabelManifest { rows, base_dir })
    }

    pub fn resolve(&self, row: &ManifestRow) -> PathBuf {
        let p = Path::new(&row.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Reads every trace, attaching the manifest label.
    pub fn load_traces(&self) -> Result<Vec<SensorTrace>> {
        use rayon::prelude::*;
        self.rows
            .par_iter()
            .map(|row| {
                Ok(SensorTrace::read_csv(&self.resolve(row), &row.trace_id)?.with_label(row.label))
            })
            .collect()
    }

    pub fn write(&self, out: &mut impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trace_id", "path", "label"])?;
        for r in &self.rows {
            w.write_record([
                r.trace_id.as_str(),
                r.path.as_str(),
                r.label.map_or("", SensorType::name),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<manifest>", e))?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(buf)
    }

    pub fn label_of(&self, trace_id: &str) -> Option<SensorType> {
        self.rows
            .iter()
            .find(|r| r.trace_id == trace_id)
            .and_then(|r| r.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_write() {
        let text = "trace_id,path,label\na,traces/a.csv,co2\nb,/abs/b.csv,\n";
        let m = LabelManifest::parse(text, Path::new("m.csv"), PathBuf::from("/data")).unwrap();
        assert_eq!(m.rows[0].label, Some(SensorType::Co2));
        assert_eq!(m.rows[1].label, None);
        assert_eq!(m.resolve(&m.rows[0]), PathBuf::from("/data/traces/a.csv"));
        assert_eq!(m.resolve(&m.rows[1]), PathBuf::from("/abs/b.csv"));
        assert_eq!(String::from_utf8(m.to_bytes().unwrap()).unwrap(), text);
    }

    #[test]
    fn rejects_duplicates_and_bad_labels() {
        let dup = "trace_id,path,label\na,x,co2\na,y,co2\n";
        assert!(matches!(
            LabelManifest::parse(dup, Path::new("m.csv"), PathBuf::new()),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad = "trace_id,path,label\na,x,pressure\n";
        assert!(LabelManifest::parse(bad, Path::new("m.csv"), PathBuf::new()).is_err());
    }
}
