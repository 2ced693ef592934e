//! Seeded random games and payoff-matrix files.
//!
//! Random entries come from ChaCha8 seeded with `seed_from_u64(seed)`, filled
//! row-major. Uniform entries use `rand`'s inclusive `Uniform` on `[-1, 1]`;
//! normal entries use the ziggurat `StandardNormal` sampler from `rand_distr`.
//!
//! Files: `.csv` is dense, one row per line. `.mtx` is MatrixMarket
//! `coordinate real|integer general` with 1-based indices; absent entries are 0.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::MatrixGame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Uniform,
    Normal,
    File,
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceKind::Uniform => "uniform",
            InstanceKind::Normal => "normal",
            InstanceKind::File => "file",
        })
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InstanceKind::Uniform),
            "normal" => Ok(InstanceKind::Normal),
            "file" => Ok(InstanceKind::File),
            other => Err(Error::InvalidConfig(format!("unknown instance kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub path: Option<PathBuf>,
}

impl InstanceSpec {
    pub fn uniform(n: usize, m: usize, seed: u64) -> Self {
        Self {
            kind: InstanceKind::Uniform,
            n,
            m,
            seed,
            path: None,
        }
    }

    pub fn normal(n: usize, m: usize, seed: u64) -> Self {
        Self {
            kind: InstanceKind::Normal,
            ..Self::uniform(n, m, seed)
        }
    }

    pub fn file(path: impl Into<PathBuf>) -> Self {
        Self {
            kind: InstanceKind::File,
            n: 0,
            m: 0,
            seed: 0,
            path: Some(path.into()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            InstanceKind::File if self.path.is_none() => Err(Error::InvalidConfig("file instances need a path".into())),
            InstanceKind::File => Ok(()),
            _ if self.n == 0 || self.m == 0 => Err(Error::InvalidConfig("random instances need n, m >= 1".into())),
            _ => Ok(()),
        }
    }

    /// Short identifier used in output file names, e.g. `uniform-100x100`.
    pub fn instance_id(&self) -> String {
        match (&self.kind, &self.path) {
            (InstanceKind::File, Some(p)) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
            _ => format!("{}-{}x{}", self.kind, self.n, self.m),
        }
    }
}

pub fn generate(spec: &InstanceSpec) -> Result<MatrixGame> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, m) = (spec.n, spec.m);
    let entries: Vec<f64> = match spec.kind {
        InstanceKind::File => return load_matrix(spec.path.as_ref().expect("validated")),
        InstanceKind::Uniform => {
            let dist = Uniform::new_inclusive(-1.0, 1.0);
            (0..n * m).map(|_| dist.sample(&mut rng)).collect()
        }
        InstanceKind::Normal => (0..n * m).map(|_| StandardNormal.sample(&mut rng)).collect(),
    };
    MatrixGame::new(DMatrix::from_row_slice(n, m, &entries))
}

/// Loads by extension: `.csv` dense or `.mtx` MatrixMarket.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<MatrixGame> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let payoff = match extension(path).as_deref() {
        Some("csv") => parse_csv(&text, path)?,
        Some("mtx") => parse_matrix_market(&text, path)?,
        _ => {
            return Err(Error::InvalidConfig(format!(
                "{}: expected a .csv or .mtx extension",
                path.display()
            )))
        }
    };
    MatrixGame::new(payoff)
}

/// Writes a dense CSV (`.csv`) or MatrixMarket file (`.mtx`) with 17
/// significant digits, so reloading is bit-exact.
pub fn save_matrix(game: &MatrixGame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let a = game.payoff();
    let mut out = String::new();
    match extension(path).as_deref() {
        Some("csv") => {
            for i in 0..a.nrows() {
                let row: Vec<String> = a.row(i).iter().map(|v| format!("{v:.16e}")).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        Some("mtx") => {
            let nonzeros: Vec<(usize, usize, f64)> = (0..a.ncols())
                .flat_map(|j| (0..a.nrows()).map(move |i| (i, j)))
                .filter(|&(i, j)| a[(i, j)] != 0.0)
                .map(|(i, j)| (i, j, a[(i, j)]))
                .collect();
            out.push_str("%%MatrixMarket matrix coordinate real general\n");
            out.push_str(&format!("{} {} {}\n", a.nrows(), a.ncols(), nonzeros.len()));
            for (i, j, v) in nonzeros {
                out.push_str(&format!("{} {} {v:.16e}\n", i + 1, j + 1));
            }
        }
        _ => {
            return Err(Error::InvalidConfig(format!(
                "{}: expected a .csv or .mtx extension",
                path.display()
            )))
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

fn parse_error(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn parse_number(token: &str, path: &Path, line: usize, column: usize) -> Result<f64> {
    let value: f64 = token
        .trim()
        .parse()
        .map_err(|_| parse_error(path, line, column, format!("not a number: `{}`", token.trim())))?;
    if !value.is_finite() {
        return Err(parse_error(path, line, column, "non-finite entry"));
    }
    Ok(value)
}

fn parse_csv(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut entries = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, 1, e.to_string())
        })?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_error(
                    path,
                    line,
                    record.len().min(w) + 1,
                    format!("expected {w} columns, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (j, token) in record.iter().enumerate() {
            entries.push(parse_number(token, path, line, j + 1)?);
        }
        rows += 1;
    }
    let cols = width.ok_or(Error::Empty("payoff CSV"))?;
    Ok(DMatrix::from_row_slice(rows, cols, &entries))
}

fn parse_matrix_market(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or(Error::Empty("MatrixMarket file"))?;
    let banner_fields: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    let supported = banner_fields.len() == 5
        && banner_fields[0] == "%%matrixmarket"
        && banner_fields[1] == "matrix"
        && banner_fields[2] == "coordinate"
        && matches!(banner_fields[3].as_str(), "real" | "integer")
        && banner_fields[4] == "general";
    if !supported {
        return Err(parse_error(
            path,
            1,
            1,
            "expected `%%MatrixMarket matrix coordinate real|integer general`",
        ));
    }

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body
        .next()
        .ok_or_else(|| parse_error(path, 2, 1, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(parse_error(path, size_line, 1, "size line needs `rows cols nonzeros`"));
    }
    let parse_count = |token: &str, column: usize| -> Result<usize> {
        token
            .parse()
            .map_err(|_| parse_error(path, size_line, column, format!("not a count: `{token}`")))
    };
    let (n, m, nnz) = (
        parse_count(dims[0], 1)?,
        parse_count(dims[1], 2)?,
        parse_count(dims[2], 3)?,
    );
    if n == 0 || m == 0 {
        return Err(parse_error(path, size_line, 1, "matrix dimensions must be positive"));
    }

    let mut a = DMatrix::zeros(n, m);
    let mut seen = 0;
    let mut last_line = size_line;
    for (line, entry) in body {
        last_line = line;
        seen += 1;
        if seen > nnz {
            return Err(parse_error(
                path,
                line,
                1,
                format!("header declares {nnz} entries but more follow"),
            ));
        }
        let tokens: Vec<&str> = entry.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(parse_error(path, line, 1, "entry needs `row col value`"));
        }
        let index = |token: &str, column: usize, bound: usize| -> Result<usize> {
            match token.parse::<usize>() {
                Ok(k) if (1..=bound).contains(&k) => Ok(k - 1),
                _ => Err(parse_error(
                    path,
                    line,
                    column,
                    format!("index `{token}` outside 1..={bound}"),
                )),
            }
        };
        let i = index(tokens[0], 1, n)?;
        let j = index(tokens[1], 2, m)?;
        a[(i, j)] = parse_number(tokens[2], path, line, 3)?;
    }
    if seen != nnz {
        return Err(parse_error(
            path,
            last_line,
            1,
            format!("header declares {nnz} entries but {seen} were found"),
        ));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(InstanceSpec::uniform(0, 3, 1).validate().is_err());
        let mut s = InstanceSpec::file("x.csv");
        s.path = None;
        assert!(s.validate().is_err());
        assert_eq!(InstanceSpec::normal(4, 5, 0).instance_id(), "normal-4x5");
        assert_eq!(InstanceSpec::file("/tmp/kuhn.mtx").instance_id(), "kuhn");
    }

    #[test]
    fn generation_is_deterministic() {
        for spec in [InstanceSpec::uniform(7, 3, 42), InstanceSpec::normal(7, 3, 42)] {
            let a = generate(&spec).unwrap();
            let b = generate(&spec).unwrap();
            assert_eq!(a.payoff(), b.payoff());
        }
        let a = generate(&InstanceSpec::uniform(7, 3, 1)).unwrap();
        let b = generate(&InstanceSpec::uniform(7, 3, 2)).unwrap();
        assert_ne!(a.payoff(), b.payoff());
    }

    #[test]
    fn kind_round_trips_through_strings() {
        for k in [InstanceKind::Uniform, InstanceKind::Normal, InstanceKind::File] {
            assert_eq!(k.to_string().parse::<InstanceKind>().unwrap(), k);
        }
        assert!("gaussian".parse::<InstanceKind>().is_err());
    }
}
