//! Comma-separated tables with a fixed header.
//!
//! Lines starting with `#` are comments. Writers put run metadata there as
//! `# key=value` before the header. Numbers are written with 17
//! significant digits, which reads back to the identical `f64`.

use std::io::{Read, Write};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CsvError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("unexpected column '{0}'")]
    UnexpectedColumn(String),
    #[error("columns '{0}' and '{1}' are alternatives, give only one")]
    ConflictingColumns(String, String),
    #[error("line {line}, column '{column}': '{value}' is not a number")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}, column '{column}': {message}")]
    BadCell {
        line: u64,
        column: String,
        message: String,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
}

impl CsvError {
    pub(crate) fn io(path: impl Into<String>, err: impl std::fmt::Display) -> Self {
        CsvError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

/// One column of a schema: the accepted header names, exactly one of
/// which must appear.
#[derive(Debug, Clone, Copy)]
pub struct Column(pub &'static [&'static str]);

impl Column {
    fn describe(&self) -> String {
        self.0.join("' or '")
    }
}

#[derive(Debug, Clone)]
struct Record {
    line: u64,
    cells: Vec<String>,
}

/// A table read against a schema.
#[derive(Debug, Clone)]
pub struct CsvTable {
    header: Vec<String>,
    records: Vec<Record>,
}

impl CsvTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn has(&self, name: &str) -> bool {
        self.header.iter().any(|h| h == name)
    }

    fn index(&self, name: &str) -> Result<usize, CsvError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CsvError::MissingColumn(name.to_string()))
    }

    /// Cells of column `name`, each with its file line.
    pub fn texts(&self, name: &str) -> Result<Vec<(u64, &str)>, CsvError> {
        let i = self.index(name)?;
        Ok(self
            .records
            .iter()
            .map(|r| (r.line, r.cells[i].as_str()))
            .collect())
    }

    pub fn numbers(&self, name: &str) -> Result<Vec<f64>, CsvError> {
        self.texts(name)?
            .into_iter()
            .map(|(line, s)| {
                s.parse::<f64>().map_err(|_| CsvError::NonNumeric {
                    line,
                    column: name.to_string(),
                    value: s.to_string(),
                })
            })
            .collect()
    }
}

/// Reads a table whose header matches `schema`: every column present
/// under exactly one of its names, and no other columns.
pub fn read_csv<R: Read>(reader: R, schema: &[Column]) -> Result<CsvTable, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(false)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header: Vec<String> = match rows.next() {
        Some(rec) => rec.map_err(malformed)?.iter().map(str::to_string).collect(),
        None => {
            return Err(CsvError::MissingColumn(
                schema.first().map(Column::describe).unwrap_or_default(),
            ))
        }
    };
    for col in schema {
        let present: Vec<&str> = col
            .0
            .iter()
            .copied()
            .filter(|n| header.iter().any(|h| h == n))
            .collect();
        match present.as_slice() {
            [] => return Err(CsvError::MissingColumn(col.describe())),
            [_] => {}
            [a, b, ..] => return Err(CsvError::ConflictingColumns(a.to_string(), b.to_string())),
        }
    }
    for (i, h) in header.iter().enumerate() {
        if !schema.iter().any(|c| c.0.contains(&h.as_str())) || header[..i].contains(h) {
            return Err(CsvError::UnexpectedColumn(h.clone()));
        }
    }
    let mut records = Vec::new();
    for rec in rows {
        let rec = rec.map_err(malformed)?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push(Record {
            line,
            cells: rec.iter().map(str::to_string).collect(),
        });
    }
    Ok(CsvTable { header, records })
}

fn malformed(err: csv::Error) -> CsvError {
    let line = err.position().map_or(0, |p| p.line());
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        _ => err.to_string(),
    };
    CsvError::Malformed { line, message }
}

/// A value to write.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// An output table: metadata comments, header and rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputTable {
    pub meta: Vec<(String, String)>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl OutputTable {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            meta: Vec::new(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (k, v) in &self.meta {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &[Column] = &[Column(&["a"]), Column(&["b_nm", "b_rad_s"])];

    #[test]
    fn round_trip_is_exact() {
        let values = [
            0.1,
            -1.0 / 3.0,
            1.2345678901234567e15,
            5e-324,
            f64::MAX,
            0.0,
        ];
        let mut t = OutputTable::new(&["a", "b_rad_s"]);
        t.meta("seed", 7);
        for v in values {
            t.push(vec![v.into(), (v * 3.0).into()]);
        }
        let bytes = t.to_bytes();
        let back = read_csv(bytes.as_slice(), SCHEMA).unwrap();
        assert_eq!(back.numbers("a").unwrap(), values);
        let b: Vec<f64> = values.iter().map(|v| v * 3.0).collect();
        assert_eq!(back.numbers("b_rad_s").unwrap(), b);
    }

    #[test]
    fn comments_are_skipped() {
        let text = "# made by hand\na,b_nm\n# halfway\n1,2\n3,4\n";
        let t = read_csv(text.as_bytes(), SCHEMA).unwrap();
        assert_eq!(t.numbers("a").unwrap(), vec![1.0, 3.0]);
        assert!(t.has("b_nm"));
    }

    #[test]
    fn missing_column_is_named() {
        let err = read_csv("b_nm\n1\n".as_bytes(), SCHEMA).unwrap_err();
        assert_eq!(err, CsvError::MissingColumn("a".into()));
        let err = read_csv("a\n1\n".as_bytes(), SCHEMA).unwrap_err();
        assert_eq!(err.to_string(), "missing column 'b_nm' or 'b_rad_s'");
    }

    #[test]
    fn bad_cell_reports_line_and_column() {
        let err = read_csv("a,b_nm\n1,2\n3,x\n".as_bytes(), SCHEMA)
            .unwrap()
            .numbers("b_nm")
            .unwrap_err();
        assert_eq!(
            err,
            CsvError::NonNumeric {
                line: 3,
                column: "b_nm".into(),
                value: "x".into()
            }
        );
    }

    #[test]
    fn header_must_match() {
        assert!(matches!(
            read_csv("a,b_nm,c\n".as_bytes(), SCHEMA),
            Err(CsvError::UnexpectedColumn(c)) if c == "c"
        ));
        assert!(matches!(
            read_csv("a,b_nm,b_rad_s\n".as_bytes(), SCHEMA),
            Err(CsvError::ConflictingColumns(..))
        ));
        assert!(matches!(
            read_csv("".as_bytes(), SCHEMA),
            Err(CsvError::MissingColumn(_))
        ));
    }

    #[test]
    fn ragged_row() {
        let err = read_csv("a,b_nm\n1,2\n3\n".as_bytes(), SCHEMA).unwrap_err();
        assert!(
            matches!(err, CsvError::Malformed { line: 3, .. }),
            "{err:?}"
        );
    }
}
