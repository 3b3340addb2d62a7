//! Survey table loading, schema application and cleaning.
//!
//! A [`RawTable`] is read from comma- or tab-delimited text (the delimiter is
//! picked from the header row). [`apply_schema`] turns it into a numeric
//! [`Dataset`] following a list of [`VariableSpec`]s, after which
//! [`complete_cases`] and [`standardize`] prepare it for structure learning.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed table: {0}")]
    Csv(#[from] csv::Error),
    #[error("table has no header row")]
    MissingHeader,
    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("schema line {line}: {message}")]
    SchemaSyntax { line: usize, message: String },
    #[error("schema names column {0:?} which is not in the table")]
    UnknownColumn(String),
    #[error("column {0:?} has no schema entry")]
    UnmappedColumn(String),
    #[error("column {column:?} row {row}: {value:?} is not a Likert-7 response")]
    LikertRange {
        column: String,
        row: usize,
        value: String,
    },
    #[error("column {column:?} row {row}: {value:?} is not numeric")]
    NotNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("empty dataset: every column is excluded")]
    EmptyDataset,
    #[error("insufficient data: {n} rows x {p} variables after cleaning (need at least {min_rows} x {min_vars})")]
    InsufficientData {
        n: usize,
        p: usize,
        min_rows: usize,
        min_vars: usize,
    },
    #[error("dataset has missing values; run complete_cases first")]
    HasMissing,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Number(f64),
    Text(String),
}

impl Cell {
    fn parse(raw: &str) -> Cell {
        let s = raw.trim();
        if s.is_empty() {
            return Cell::Empty;
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Number(v),
            _ => Cell::Text(s.to_string()),
        }
    }

    fn display(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Number(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Parsed but untyped table. Rows are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        let j = self.column_index(column)?;
        self.rows.get(row).map(|r| &r[j])
    }
}

pub fn load_table(path: impl AsRef<Path>) -> Result<RawTable, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_table(&text)
}

/// Parses delimited text. Lines starting with `#` are comments (artifact
/// headers use them). The delimiter is tab if the header row contains a
/// tab, comma otherwise.
pub fn parse_table(text: &str) -> Result<RawTable, IngestError> {
    let header_line = text
        .lines()
        .find(|l| !l.starts_with('#') && !l.trim().is_empty())
        .ok_or(IngestError::MissingHeader)?;
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let header = records.next().ok_or(IngestError::MissingHeader)??;
    let column_names: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for name in &column_names {
        if !seen.insert(name.as_str()) {
            return Err(IngestError::DuplicateColumn(name.clone()));
        }
    }

    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record?;
        if record.len() != column_names.len() {
            return Err(IngestError::RaggedRow {
                row: i + 1,
                expected: column_names.len(),
                found: record.len(),
            });
        }
        rows.push(record.iter().map(Cell::parse).collect());
    }
    Ok(RawTable { column_names, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Likert7,
    Numeric,
    Categorical,
    Excluded,
}

impl VariableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariableKind::Likert7 => "likert7",
            VariableKind::Numeric => "numeric",
            VariableKind::Categorical => "categorical",
            VariableKind::Excluded => "excluded",
        }
    }
}

impl std::str::FromStr for VariableKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "likert7" | "likert" => Ok(VariableKind::Likert7),
            "numeric" => Ok(VariableKind::Numeric),
            "categorical" => Ok(VariableKind::Categorical),
            "excluded" => Ok(VariableKind::Excluded),
            other => Err(format!("unknown variable kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
    pub category: String,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, kind: VariableKind, category: impl Into<String>) -> Self {
        VariableSpec {
            name: name.into(),
            kind,
            category: category.into(),
        }
    }
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<VariableSpec>, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_schema(&text)
}

/// Parses a schema file: one `column name = kind, category` entry per line.
/// The split is on the last `=` so column names may contain `=`. Blank lines
/// and `#` comments are ignored; the category is optional.
pub fn parse_schema(text: &str) -> Result<Vec<VariableSpec>, IngestError> {
    let mut specs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (name, rhs) = trimmed.rsplit_once('=').ok_or_else(|| IngestError::SchemaSyntax {
            line: line_no,
            message: "expected `name = kind, category`".into(),
        })?;
        let name = name.trim();
        if name.is_empty() {
            return Err(IngestError::SchemaSyntax {
                line: line_no,
                message: "empty column name".into(),
            });
        }
        let (kind, category) = match rhs.split_once(',') {
            Some((k, c)) => (k, c.trim()),
            None => (rhs, ""),
        };
        let kind = kind
            .parse::<VariableKind>()
            .map_err(|message| IngestError::SchemaSyntax { line: line_no, message })?;
        if !seen.insert(name.to_string()) {
            return Err(IngestError::SchemaSyntax {
                line: line_no,
                message: format!("duplicate entry for {name:?}"),
            });
        }
        specs.push(VariableSpec::new(name, kind, category));
    }
    Ok(specs)
}

pub fn render_schema(specs: &[VariableSpec]) -> String {
    let mut out = String::new();
    for s in specs {
        if s.category.is_empty() {
            let _ = writeln!(out, "{} = {}", s.name, s.kind.as_str());
        } else {
            let _ = writeln!(out, "{} = {}, {}", s.name, s.kind.as_str(), s.category);
        }
    }
    out
}

/// Immutable numeric matrix, column-major, with a missing-value mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    values: Vec<f64>,
    missing: Vec<bool>,
    specs: Vec<VariableSpec>,
    standardized: bool,
    provenance: Vec<String>,
}

impl Dataset {
    /// Builds a complete dataset from columns. Panics if columns differ in
    /// length or the spec count does not match.
    pub fn from_columns(specs: Vec<VariableSpec>, columns: Vec<Vec<f64>>) -> Self {
        assert_eq!(specs.len(), columns.len(), "one spec per column");
        let n = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == n), "columns must have equal length");
        let p = columns.len();
        let values: Vec<f64> = columns.into_iter().flatten().collect();
        let missing = values.iter().map(|v| v.is_nan()).collect();
        Dataset {
            n,
            p,
            values,
            missing,
            specs,
            standardized: false,
            provenance: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn specs(&self) -> &[VariableSpec] {
        &self.specs
    }

    pub fn names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.name.clone()).collect()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn value(&self, row: usize, j: usize) -> f64 {
        self.values[j * self.n + row]
    }

    pub fn is_missing(&self, row: usize, j: usize) -> bool {
        self.missing[j * self.n + row]
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    fn select(&self, rows: &[usize], cols: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        let mut missing = Vec::with_capacity(rows.len() * cols.len());
        for &j in cols {
            for &i in rows {
                values.push(self.value(i, j));
                missing.push(self.is_missing(i, j));
            }
        }
        Dataset {
            n: rows.len(),
            p: cols.len(),
            values,
            missing,
            specs: cols.iter().map(|&j| self.specs[j].clone()).collect(),
            standardized: self.standardized,
            provenance: self.provenance.clone(),
        }
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        let rows: Vec<usize> = (0..self.n).collect();
        self.select(&rows, cols)
    }

    pub fn with_provenance(mut self, line: impl Into<String>) -> Self {
        self.provenance.push(line.into());
        self
    }

    /// Replaces the specs while keeping values. Used by transforms that
    /// change a column's type (e.g. discretization).
    pub fn with_specs(mut self, specs: Vec<VariableSpec>) -> Self {
        assert_eq!(specs.len(), self.p);
        self.specs = specs;
        self
    }

    pub(crate) fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Dataset {
        let mut out = self.clone();
        for j in 0..self.p {
            for i in 0..self.n {
                let k = j * self.n + i;
                if !self.missing[k] {
                    out.values[k] = f(j, self.values[k]);
                }
            }
        }
        out.standardized = false;
        out
    }

    /// Columns with zero variance (all observed values equal).
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.p)
            .filter(|&j| {
                let mut observed = (0..self.n).filter(|&i| !self.is_missing(i, j)).map(|i| self.value(i, j));
                match observed.next() {
                    Some(first) => observed.all(|v| v == first),
                    None => true,
                }
            })
            .collect()
    }

    /// Drops constant columns and records each one in the provenance log.
    pub fn drop_constant_columns(&self) -> Dataset {
        let constant = self.constant_columns();
        if constant.is_empty() {
            return self.clone();
        }
        for &j in &constant {
            log::warn!("zero-variance column {:?} excluded from discovery", self.specs[j].name);
        }
        let keep: Vec<usize> = (0..self.p).filter(|j| !constant.contains(j)).collect();
        let mut out = self.select_columns(&keep);
        for &j in &constant {
            out.provenance.push(format!("dropped column (zero variance): {}", self.specs[j].name));
        }
        out
    }

    /// Renders the dataset as a comma-separated table. Values use the
    /// shortest round-trip float representation; missing cells are empty.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(self.specs.iter().map(|s| s.name.as_str()))
            .expect("in-memory write");
        for i in 0..self.n {
            let row: Vec<String> = (0..self.p)
                .map(|j| if self.is_missing(i, j) { String::new() } else { self.value(i, j).to_string() })
                .collect();
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

pub fn apply_schema(table: &RawTable, specs: &[VariableSpec]) -> Result<Dataset, IngestError> {
    let mut spec_names = HashSet::new();
    for spec in specs {
        if table.column_index(&spec.name).is_none() {
            return Err(IngestError::UnknownColumn(spec.name.clone()));
        }
        spec_names.insert(spec.name.as_str());
    }
    if let Some(col) = table.column_names.iter().find(|c| !spec_names.contains(c.as_str())) {
        return Err(IngestError::UnmappedColumn(col.clone()));
    }

    let kept: Vec<&VariableSpec> = specs.iter().filter(|s| s.kind != VariableKind::Excluded).collect();
    if kept.is_empty() {
        return Err(IngestError::EmptyDataset);
    }

    let n = table.n_rows();
    let mut values = Vec::with_capacity(n * kept.len());
    let mut missing = Vec::with_capacity(n * kept.len());
    for spec in &kept {
        let j = table.column_index(&spec.name).expect("checked above");
        let mut codes: HashMap<String, f64> = HashMap::new();
        for (i, row) in table.rows.iter().enumerate() {
            let cell = &row[j];
            let value = match (spec.kind, cell) {
                (_, Cell::Empty) => None,
                (VariableKind::Likert7, Cell::Number(v)) if v.fract() == 0.0 && (1.0..=7.0).contains(v) => Some(*v),
                (VariableKind::Likert7, other) => {
                    return Err(IngestError::LikertRange {
                        column: spec.name.clone(),
                        row: i + 1,
                        value: other.display(),
                    })
                }
                (VariableKind::Numeric, Cell::Number(v)) => Some(*v),
                (VariableKind::Numeric, Cell::Text(t)) => {
                    return Err(IngestError::NotNumeric {
                        column: spec.name.clone(),
                        row: i + 1,
                        value: t.clone(),
                    })
                }
                (VariableKind::Categorical, other) => {
                    let next = codes.len() as f64;
                    Some(*codes.entry(other.display()).or_insert(next))
                }
                (VariableKind::Excluded, _) => unreachable!("excluded specs filtered"),
            };
            values.push(value.unwrap_or(f64::NAN));
            missing.push(value.is_none());
        }
    }

    let mut provenance: Vec<String> = specs
        .iter()
        .filter(|s| s.kind == VariableKind::Excluded)
        .map(|s| format!("dropped column (excluded by schema): {}", s.name))
        .collect();
    provenance.shrink_to_fit();

    Ok(Dataset {
        n,
        p: kept.len(),
        values,
        missing,
        specs: kept.into_iter().cloned().collect(),
        standardized: false,
        provenance,
    })
}

/// Thresholds for [`complete_cases_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteCasePolicy {
    pub max_missing_fraction: f64,
    pub min_rows: usize,
    pub min_vars: usize,
}

impl Default for CompleteCasePolicy {
    fn default() -> Self {
        CompleteCasePolicy {
            max_missing_fraction: 0.5,
            min_rows: 10,
            min_vars: 2,
        }
    }
}

pub fn complete_cases(data: &Dataset, max_missing_fraction: f64) -> Result<Dataset, IngestError> {
    complete_cases_with(
        data,
        &CompleteCasePolicy {
            max_missing_fraction,
            ..CompleteCasePolicy::default()
        },
    )
}

/// Drops variables missing more than the allowed fraction, then every row
/// that still has a missing value. Dropped items go to the provenance log.
pub fn complete_cases_with(data: &Dataset, policy: &CompleteCasePolicy) -> Result<Dataset, IngestError> {
    let mut log = Vec::new();
    let cols: Vec<usize> = (0..data.p)
        .filter(|&j| {
            let miss = (0..data.n).filter(|&i| data.is_missing(i, j)).count();
            let frac = if data.n == 0 { 0.0 } else { miss as f64 / data.n as f64 };
            let keep = frac <= policy.max_missing_fraction;
            if !keep {
                log.push(format!(
                    "dropped column (missing {:.1}%): {}",
                    100.0 * frac,
                    data.specs[j].name
                ));
            }
            keep
        })
        .collect();
    let rows: Vec<usize> = (0..data.n)
        .filter(|&i| {
            let keep = cols.iter().all(|&j| !data.is_missing(i, j));
            if !keep {
                log.push(format!("dropped row: {}", i + 1));
            }
            keep
        })
        .collect();
    if rows.len() < policy.min_rows || cols.len() < policy.min_vars {
        return Err(IngestError::InsufficientData {
            n: rows.len(),
            p: cols.len(),
            min_rows: policy.min_rows,
            min_vars: policy.min_vars,
        });
    }
    let mut out = data.select(&rows, &cols);
    out.provenance.extend(log);
    Ok(out)
}

/// Z-scores every column using the maximum-likelihood (divide by n)
/// variance, so the scoring covariance of the result has a unit diagonal.
/// Zero-variance columns are removed and logged.
pub fn standardize(data: &Dataset) -> Result<Dataset, IngestError> {
    if data.has_missing() {
        return Err(IngestError::HasMissing);
    }
    let data = data.drop_constant_columns();
    let n = data.n as f64;
    let moments: Vec<(f64, f64)> = (0..data.p)
        .map(|j| {
            let col = data.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .collect();
    let mut out = data.map_values(|j, v| (v - moments[j].0) / moments[j].1);
    out.standardized = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str, kind: VariableKind) -> VariableSpec {
        VariableSpec::new(name, kind, "")
    }

    #[test]
    fn parses_empty_cell() {
        let t = parse_table("a,b\n1,2\n3,\n").unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.cell(1, "b"), Some(&Cell::Empty));
        assert_eq!(t.cell(0, "a"), Some(&Cell::Number(1.0)));
    }

    #[test]
    fn ragged_row_reports_first_offender() {
        let err = parse_table("a,b\n1,2\n3\n4,5,6\n").unwrap_err();
        match err {
            IngestError::RaggedRow { row, expected, found } => {
                assert_eq!((row, expected, found), (2, 2, 1));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_header_rejected() {
        assert!(matches!(
            parse_table("a, a\n1,2\n"),
            Err(IngestError::DuplicateColumn(name)) if name == "a"
        ));
    }

    #[test]
    fn tab_delimiter_detected_and_comments_skipped() {
        let t = parse_table("# header\nx y\tz\n1\t2\n").unwrap();
        assert_eq!(t.column_names, vec!["x y", "z"]);
        assert_eq!(t.rows[0], vec![Cell::Number(1.0), Cell::Number(2.0)]);
    }

    #[test]
    fn schema_round_trips() {
        let text = "a = likert7, Lighting\nweird=name = numeric\n# c\nc = excluded\n";
        let specs = parse_schema(text).unwrap();
        assert_eq!(specs[0], VariableSpec::new("a", VariableKind::Likert7, "Lighting"));
        assert_eq!(specs[1].name, "weird=name");
        assert_eq!(parse_schema(&render_schema(&specs)).unwrap(), specs);
        assert!(parse_schema("a = bogus\n").is_err());
    }

    #[test]
    fn schema_excludes_and_orders() {
        let t = parse_table("id,q2,q1\n1,4,7\n2,1,4\n").unwrap();
        let specs = vec![
            spec("q1", VariableKind::Likert7),
            spec("id", VariableKind::Excluded),
            spec("q2", VariableKind::Likert7),
        ];
        let d = apply_schema(&t, &specs).unwrap();
        assert_eq!(d.p(), 2);
        assert_eq!(d.names(), vec!["q1", "q2"]);
        assert_eq!(d.column(0), &[7.0, 4.0]);
        assert_eq!(d.provenance(), &["dropped column (excluded by schema): id".to_string()]);
    }

    #[test]
    fn likert_values_validated() {
        let t = parse_table("q\n1\n4\n7\n").unwrap();
        let d = apply_schema(&t, &[spec("q", VariableKind::Likert7)]).unwrap();
        assert_eq!(d.column(0), &[1.0, 4.0, 7.0]);

        for bad in ["8", "0", "3.5", "yes"] {
            let t = parse_table(&format!("q\n1\n{bad}\n")).unwrap();
            assert!(matches!(
                apply_schema(&t, &[spec("q", VariableKind::Likert7)]),
                Err(IngestError::LikertRange { row: 2, .. })
            ));
        }
    }

    #[test]
    fn schema_mismatches() {
        let t = parse_table("a,b\n1,2\n").unwrap();
        assert!(matches!(
            apply_schema(&t, &[spec("a", VariableKind::Numeric)]),
            Err(IngestError::UnmappedColumn(c)) if c == "b"
        ));
        assert!(matches!(
            apply_schema(&t, &[spec("a", VariableKind::Numeric), spec("b", VariableKind::Numeric), spec("c", VariableKind::Numeric)]),
            Err(IngestError::UnknownColumn(c)) if c == "c"
        ));
        assert!(matches!(
            apply_schema(&t, &[spec("a", VariableKind::Excluded), spec("b", VariableKind::Excluded)]),
            Err(IngestError::EmptyDataset)
        ));
    }

    #[test]
    fn categorical_first_appearance_codes() {
        let t = parse_table("c,x\nred,1\nblue,1\nred,1\n,1\ngreen,1\n").unwrap();
        let d = apply_schema(&t, &[spec("c", VariableKind::Categorical), spec("x", VariableKind::Excluded)]).unwrap();
        let col = d.column(0);
        assert_eq!(&col[..3], &[0.0, 1.0, 0.0]);
        assert!(d.is_missing(3, 0));
        assert_eq!(col[4], 2.0);
    }

    #[test]
    fn complete_cases_drops_sparse_column() {
        let mut cols = vec![vec![1.0; 10], vec![2.0; 10]];
        for v in cols[1].iter_mut().take(6) {
            *v = f64::NAN;
        }
        let specs = vec![spec("a", VariableKind::Numeric), spec("b", VariableKind::Numeric)];
        let d = Dataset::from_columns(specs.clone(), cols);
        let policy = CompleteCasePolicy {
            max_missing_fraction: 0.5,
            min_rows: 1,
            min_vars: 1,
        };
        let out = complete_cases_with(&d, &policy).unwrap();
        assert_eq!(out.names(), vec!["a"]);
        assert_eq!(out.n(), 10);
        assert!(out.provenance()[0].contains("b"));
        // default minimums reject a single surviving variable
        assert!(matches!(complete_cases(&d, 0.5), Err(IngestError::InsufficientData { p: 1, .. })));
    }

    #[test]
    fn complete_cases_identity_and_row_deletion() {
        let specs: Vec<_> = ["a", "b", "c"].iter().map(|n| spec(n, VariableKind::Numeric)).collect();
        let full: Vec<Vec<f64>> = (0..3).map(|j| (0..12).map(|i| (i * 3 + j) as f64).collect()).collect();
        let d = Dataset::from_columns(specs.clone(), full);
        assert_eq!(complete_cases(&d, 0.5).unwrap(), d);

        let mut small: Vec<Vec<f64>> = (0..3).map(|j| (0..5).map(|i| (i + j) as f64).collect()).collect();
        small[1][2] = f64::NAN;
        let d = Dataset::from_columns(specs, small);
        let policy = CompleteCasePolicy {
            max_missing_fraction: 1.0,
            min_rows: 1,
            min_vars: 1,
        };
        let out = complete_cases_with(&d, &policy).unwrap();
        assert_eq!((out.n(), out.p()), (4, 3));
        assert!(!out.has_missing());
        assert_eq!(out.provenance(), &["dropped row: 3".to_string()]);
    }

    #[test]
    fn standardize_analytic_and_degenerate() {
        let specs = vec![spec("x", VariableKind::Numeric), spec("k", VariableKind::Numeric)];
        let d = Dataset::from_columns(specs, vec![vec![1.0, 2.0, 3.0], vec![4.0, 4.0, 4.0]]);
        let z = standardize(&d).unwrap();
        assert_eq!(z.names(), vec!["x"]);
        assert!(z.is_standardized());
        let s = (2.0f64 / 3.0).sqrt();
        for (a, b) in z.column(0).iter().zip([-1.0 / s, 0.0, 1.0 / s]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(z.provenance().iter().any(|l| l.contains("zero variance") && l.ends_with('k')));
    }

    #[test]
    fn standardize_requires_complete_data() {
        let d = Dataset::from_columns(vec![spec("x", VariableKind::Numeric)], vec![vec![1.0, f64::NAN]]);
        assert!(matches!(standardize(&d), Err(IngestError::HasMissing)));
    }
}
