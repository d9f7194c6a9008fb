//! Columnar tables with typed columns and treatment/outcome roles.
//!
//! On disk a dataset is a CSV file (header row mandatory) plus an optional
//! JSON schema sidecar naming each column's type and role. Without a schema
//! the types are inferred: `0`/`1` columns are binary, numeric columns are
//! continuous and everything else is categorical.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Code used for a missing categorical cell.
pub const MISSING: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Binary,
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Treatment,
    Outcome,
    #[default]
    Covariate,
    Noise,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    /// Category codes into `labels`; [`MISSING`] marks an empty cell.
    Codes { codes: Vec<u32>, labels: Vec<String> },
    /// Real values; NaN marks an empty cell.
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub role: Role,
    pub data: ColumnData,
}

impl Column {
    pub fn binary(name: impl Into<String>, role: Role, values: Vec<u8>) -> Column {
        Column {
            name: name.into(),
            kind: ColumnKind::Binary,
            role,
            data: ColumnData::Codes {
                codes: values.into_iter().map(u32::from).collect(),
                labels: vec!["0".into(), "1".into()],
            },
        }
    }

    pub fn categorical(
        name: impl Into<String>,
        role: Role,
        codes: Vec<u32>,
        labels: Vec<String>,
    ) -> Column {
        Column {
            name: name.into(),
            kind: ColumnKind::Categorical,
            role,
            data: ColumnData::Codes { codes, labels },
        }
    }

    pub fn continuous(name: impl Into<String>, role: Role, values: Vec<f64>) -> Column {
        Column {
            name: name.into(),
            kind: ColumnKind::Continuous,
            role,
            data: ColumnData::Values(values),
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Codes { codes, .. } => codes.len(),
            ColumnData::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn codes(&self) -> Option<&[u32]> {
        match &self.data {
            ColumnData::Codes { codes, .. } => Some(codes),
            ColumnData::Values(_) => None,
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Codes { labels, .. } => Some(labels),
            ColumnData::Values(_) => None,
        }
    }

    /// Number of categories (declared vocabulary size) for coded columns.
    pub fn arity(&self) -> Option<usize> {
        self.labels().map(<[String]>::len)
    }

    pub fn has_missing(&self) -> bool {
        match &self.data {
            ColumnData::Codes { codes, .. } => codes.contains(&MISSING),
            ColumnData::Values(v) => v.iter().any(|x| x.is_nan()),
        }
    }

    /// Numeric value of a cell: the real value, or the label parsed as a
    /// number (falling back to the code) for coded columns.
    pub fn numeric(&self, row: usize) -> f64 {
        match &self.data {
            ColumnData::Values(v) => v[row],
            ColumnData::Codes { codes, labels } => match codes[row] {
                MISSING => f64::NAN,
                c => labels[c as usize].parse().unwrap_or(c as f64),
            },
        }
    }

    /// The textual form written to CSV.
    pub fn cell(&self, row: usize) -> String {
        match &self.data {
            ColumnData::Values(v) if v[row].is_nan() => String::new(),
            ColumnData::Values(v) => v[row].to_string(),
            ColumnData::Codes { codes, .. } if codes[row] == MISSING => String::new(),
            ColumnData::Codes { codes, labels } => labels[codes[row] as usize].clone(),
        }
    }

    fn take(&self, rows: &[usize]) -> Column {
        let data = match &self.data {
            ColumnData::Codes { codes, labels } => ColumnData::Codes {
                codes: rows.iter().map(|&r| codes[r]).collect(),
                labels: labels.clone(),
            },
            ColumnData::Values(v) => ColumnData::Values(rows.iter().map(|&r| v[r]).collect()),
        };
        Column {
            name: self.name.clone(),
            kind: self.kind,
            role: self.role,
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ColumnKind,
    #[serde(default)]
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

/// Sidecar schema; authoritative for column types and roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSchema>,
}

impl Schema {
    pub fn from_json(text: &str) -> Result<Schema> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn get(&self, name: &str) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    index: HashMap<String, usize>,
    n_rows: usize,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Dataset> {
        let n_rows = columns.first().map_or(0, Column::len);
        let mut index = HashMap::with_capacity(columns.len());
        for (i, c) in columns.iter().enumerate() {
            if c.len() != n_rows {
                return Err(Error::LengthMismatch(n_rows, c.len()));
            }
            if index.insert(c.name.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate column `{}`", c.name)));
            }
        }
        Ok(Dataset {
            columns,
            index,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        Ok(&self.columns[self.index_of(name)?])
    }

    /// First column carrying `role`.
    pub fn column_with_role(&self, role: Role) -> Option<&Column> {
        self.columns.iter().find(|c| c.role == role)
    }

    /// Binary column as 0/1 bytes; fails for other kinds or missing cells.
    pub fn binary(&self, name: &str) -> Result<Vec<u8>> {
        let col = self.column(name)?;
        let codes = col.codes().ok_or_else(|| Error::NonBinary(name.to_string()))?;
        let labels = col.labels().unwrap_or(&[]);
        let one = labels.iter().position(|l| l == "1");
        let zero = labels.iter().position(|l| l == "0");
        if labels.len() > 2 || (labels.len() == 2 && (one.is_none() || zero.is_none())) {
            return Err(Error::NonBinary(name.to_string()));
        }
        codes
            .iter()
            .map(|&c| match c {
                MISSING => Err(Error::MissingValues(name.to_string())),
                c if Some(c as usize) == one => Ok(1),
                _ => Ok(0),
            })
            .collect()
    }

    /// Keeps only the named columns, in the given order.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let missing: Vec<String> = names
            .iter()
            .map(|n| n.as_ref())
            .filter(|n| !self.has_column(n))
            .map(str::to_string)
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingColumn(missing));
        }
        let cols = names
            .iter()
            .map(|n| self.columns[self.index[n.as_ref()]].clone())
            .collect();
        Dataset::new(cols)
    }

    pub fn take_rows(&self, rows: &[usize]) -> Dataset {
        let cols = self.columns.iter().map(|c| c.take(rows)).collect();
        let mut d = Dataset::new(cols).expect("same shape");
        d.n_rows = rows.len();
        d
    }

    pub fn with_column(mut self, col: Column) -> Result<Dataset> {
        if !self.columns.is_empty() && col.len() != self.n_rows {
            return Err(Error::LengthMismatch(self.n_rows, col.len()));
        }
        self.columns.push(col);
        Dataset::new(self.columns)
    }

    pub fn schema(&self) -> Schema {
        Schema {
            columns: self
                .columns
                .iter()
                .map(|c| ColumnSchema {
                    name: c.name.clone(),
                    kind: c.kind,
                    role: c.role,
                    categories: match c.kind {
                        ColumnKind::Categorical => c.labels().map(<[String]>::to_vec),
                        _ => None,
                    },
                })
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(self.names())?;
        for r in 0..self.n_rows {
            wr.write_record(self.columns.iter().map(|c| c.cell(r)))?;
        }
        wr.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf8")
    }

    /// Reads a CSV. Columns listed in `schema` take its type, role and
    /// category list; other columns are inferred.
    pub fn read_csv<R: Read>(r: R, schema: Option<&Schema>) -> Result<Dataset> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); header.len()];
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::Csv(format!(
                    "line {}: expected {} fields, found {}",
                    rec.position().map_or(0, |p| p.line()),
                    header.len(),
                    rec.len()
                )));
            }
            for (col, field) in raw.iter_mut().zip(rec.iter()) {
                col.push(field.trim().to_string());
            }
        }
        if let Some(s) = schema {
            let missing: Vec<String> = s
                .columns
                .iter()
                .filter(|c| !header.contains(&c.name))
                .map(|c| c.name.clone())
                .collect();
            if !missing.is_empty() {
                return Err(Error::MissingColumn(missing));
            }
        }
        let columns = header
            .into_iter()
            .zip(raw)
            .map(|(name, cells)| {
                let decl = schema.and_then(|s| s.get(&name));
                build_column(name, cells, decl)
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(columns)
    }
}

fn infer_kind(cells: &[String]) -> ColumnKind {
    let present = cells.iter().filter(|c| !c.is_empty());
    let mut all_binary = true;
    let mut all_numeric = true;
    for c in present {
        if c != "0" && c != "1" {
            all_binary = false;
        }
        if c.parse::<f64>().is_err() {
            all_numeric = false;
        }
    }
    if all_binary {
        ColumnKind::Binary
    } else if all_numeric {
        ColumnKind::Continuous
    } else {
        ColumnKind::Categorical
    }
}

/// Sorted vocabulary: numerically when every label parses as a number.
fn vocabulary(cells: &[String]) -> Vec<String> {
    let mut labels: Vec<String> = cells.iter().filter(|c| !c.is_empty()).cloned().collect();
    labels.sort();
    labels.dedup();
    if labels.iter().all(|l| l.parse::<f64>().is_ok()) {
        labels.sort_by(|a, b| {
            a.parse::<f64>()
                .unwrap()
                .total_cmp(&b.parse::<f64>().unwrap())
        });
    }
    labels
}

fn build_column(name: String, cells: Vec<String>, decl: Option<&ColumnSchema>) -> Result<Column> {
    let kind = decl.map_or_else(|| infer_kind(&cells), |d| d.kind);
    let role = decl.map_or(Role::Covariate, |d| d.role);
    match kind {
        ColumnKind::Continuous => {
            let values = cells
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        c.parse::<f64>().map_err(|_| {
                            Error::Csv(format!("column `{name}`: `{c}` is not a number"))
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Column::continuous(name, role, values))
        }
        ColumnKind::Binary | ColumnKind::Categorical => {
            let labels = match (kind, decl.and_then(|d| d.categories.clone())) {
                (ColumnKind::Binary, _) => vec!["0".to_string(), "1".to_string()],
                (_, Some(cats)) => cats,
                _ => vocabulary(&cells),
            };
            let lookup: HashMap<&str, u32> = labels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.as_str(), i as u32))
                .collect();
            let codes = cells
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        return Ok(MISSING);
                    }
                    lookup.get(c.as_str()).copied().ok_or_else(|| {
                        Error::Csv(format!("column `{name}`: unknown category `{c}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Column {
                name,
                kind,
                role,
                data: ColumnData::Codes { codes, labels },
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_schema() {
        let d = Dataset::new(vec![
            Column::binary("T", Role::Treatment, vec![0, 1, 1]),
            Column::categorical(
                "C",
                Role::Covariate,
                vec![2, 0, MISSING],
                vec!["a".into(), "b".into(), "c".into()],
            ),
            Column::continuous("X", Role::Noise, vec![0.5, -1.25, f64::NAN]),
        ])
        .unwrap();
        let text = d.to_csv_string();
        assert_eq!(text, "T,C,X\n0,c,0.5\n1,a,-1.25\n1,,\n");
        let back = Dataset::read_csv(text.as_bytes(), Some(&d.schema())).unwrap();
        assert_eq!(back.to_csv_string(), text);
        assert_eq!(back.column("C").unwrap().arity(), Some(3));
        assert_eq!(back.column("X").unwrap().role, Role::Noise);
        assert!(back.column("C").unwrap().has_missing());
    }

    #[test]
    fn inference_without_schema() {
        let text = "a,b,c\n0,1.5,x\n1,2,y\n1,3,x\n";
        let d = Dataset::read_csv(text.as_bytes(), None).unwrap();
        assert_eq!(d.column("a").unwrap().kind, ColumnKind::Binary);
        assert_eq!(d.column("b").unwrap().kind, ColumnKind::Continuous);
        assert_eq!(d.column("c").unwrap().kind, ColumnKind::Categorical);
        assert_eq!(d.binary("a").unwrap(), vec![0, 1, 1]);
        assert!(matches!(d.binary("b"), Err(Error::NonBinary(_))));
    }

    #[test]
    fn schema_column_absent_from_csv() {
        let schema = Schema {
            columns: vec![ColumnSchema {
                name: "missing".into(),
                kind: ColumnKind::Binary,
                role: Role::Outcome,
                categories: None,
            }],
        };
        let err = Dataset::read_csv("a\n1\n".as_bytes(), Some(&schema)).unwrap_err();
        assert_eq!(err, Error::MissingColumn(vec!["missing".into()]));
    }

    #[test]
    fn header_only_csv_is_empty() {
        let d = Dataset::read_csv("a,b\n".as_bytes(), None).unwrap();
        assert_eq!(d.n_rows(), 0);
        assert_eq!(d.n_cols(), 2);
    }

    #[test]
    fn select_reports_all_missing_columns() {
        let d = Dataset::new(vec![Column::binary("A", Role::Covariate, vec![1])]).unwrap();
        assert_eq!(
            d.select(&["A", "B", "C"]).unwrap_err(),
            Error::MissingColumn(vec!["B".into(), "C".into()])
        );
    }
}
