use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Files of one run, held in memory until the whole run has succeeded.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new() -> Self {
        Artifacts::default()
    }

    pub fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body.into_bytes()));
    }

    pub fn json<S: Serialize>(&mut self, name: &str, value: &S) {
        let mut body = serde_json::to_string_pretty(value).expect("summary serializes");
        body.push('\n');
        self.text(name, body);
    }

    pub fn csv(&mut self, name: &str, table: Csv) {
        self.text(name, table.finish());
    }

    /// Writes every file through a temporary sibling and a rename.
    pub fn commit(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, body) in &self.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            {
                let mut f = fs::File::create(&tmp)?;
                f.write_all(body)?;
                f.sync_all()?;
            }
            fs::rename(&tmp, &target)?;
            written.push(target);
        }
        Ok(written)
    }
}

/// CSV table with 17 significant digits per number.
pub struct Csv {
    buf: String,
    width: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let cols: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
        Csv {
            buf: cols.join(",") + "\n",
            width: cols.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.width);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match c {
                Cell::Int(v) => write!(self.buf, "{v}").unwrap(),
                Cell::Num(v) => self.buf.push_str(&num(*v)),
                Cell::Empty => {}
            }
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Cell {
    Int(usize),
    Num(f64),
    Empty,
}

pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -1.0 / 3.0, std::f64::consts::PI * 1e-300, 6.02e23, 0.0] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn table_layout() {
        let mut t = Csv::new(&["n", "x", "y"]);
        t.row(&[Cell::Int(3), Cell::Num(0.5), Cell::Empty]);
        assert_eq!(t.finish(), "n,x,y\n3,5.0000000000000000e-1,\n");
    }

    #[test]
    fn commit_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new();
        a.text("a.txt", "hello\n".into());
        a.json("b.json", &[1, 2]);
        a.commit(dir.path()).unwrap();
        let mut names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, ["a.txt", "b.json"]);
    }
}
