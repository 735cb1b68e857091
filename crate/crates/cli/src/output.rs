use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// CSV cell for a real number: six significant digits.
pub fn sig6(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.5e}")
    } else {
        x.to_string()
    }
}

pub fn opt6(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

/// A table with a header row, rendered as LF-terminated CSV.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

pub fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable value");
    s.push(b'\n');
    s
}

/// Files produced by one subcommand: the primary artifact plus named
/// companions written next to it.
pub struct Artifacts {
    pub primary: Vec<u8>,
    pub companions: Vec<(&'static str, Vec<u8>)>,
}

impl Artifacts {
    pub fn single(primary: Vec<u8>) -> Self {
        Artifacts { primary, companions: Vec::new() }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_path: String,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub versions: BTreeMap<String, String>,
    pub wall_time: f64,
}

/// `<out>` with `suffix` appended to its file name.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    out.with_file_name(name)
}

/// Write artifacts under `out` and return the paths written.
pub fn write_all(out: &Path, art: &Artifacts) -> std::io::Result<Vec<PathBuf>> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, &art.primary)?;
    let mut written = vec![out.to_path_buf()];
    for (suffix, bytes) in &art.companions {
        let p = sibling(out, suffix);
        std::fs::write(&p, bytes)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.683333333), "6.83333e-1");
        assert_eq!(sig6(48.0), "4.80000e1");
        assert_eq!(sig6(f64::INFINITY), "inf");
        assert_eq!(sig6(-1.2345675e-13), "-1.23457e-13");
    }

    #[test]
    fn csv_has_lf_endings() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(String::from_utf8(t.to_csv()).unwrap(), "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn sibling_appends_suffix() {
        assert_eq!(sibling(Path::new("dir/t3.csv"), ".manifest.json"), PathBuf::from("dir/t3.csv.manifest.json"));
    }
}
