use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

/// How one raw column becomes features.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnRule {
    /// Parsed as a number, one feature.
    Numeric,
    /// One indicator feature per listed category.
    OneHot(Vec<String>),
    /// One feature: the category's position in the list, scaled to `[0, 1]`.
    Ordinal(Vec<String>),
    /// A column that only ever holds this value; contributes no features.
    Constant(String),
}

impl ColumnRule {
    pub fn width(&self) -> usize {
        match self {
            ColumnRule::Numeric | ColumnRule::Ordinal(_) => 1,
            ColumnRule::OneHot(c) => c.len(),
            ColumnRule::Constant(_) => 0,
        }
    }
}

/// Requested treatment of a raw feature column, before categories are observed.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnKind {
    Numeric,
    OneHot,
    Ordinal(Vec<String>),
}

/// Per-column rules plus the label column and its class names.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingPlan {
    /// Rules for every non-label column, in file order.
    pub columns: Vec<ColumnRule>,
    pub label_column: usize,
    pub classes: Vec<String>,
}

/// Raw cells of a comma-separated file, one `Vec` per non-blank line.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub rows: Vec<Vec<String>>,
    /// 1-based source line of each row, for error messages.
    pub lines: Vec<usize>,
    pub source: std::path::PathBuf,
}

impl RawTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
            if let Some(first) = rows.first().map(Vec::len) {
                if cells.len() != first {
                    return Err(Error::Parse {
                        path: source.to_path_buf(),
                        line: i + 1,
                        message: format!("expected {first} fields, found {}", cells.len()),
                    });
                }
            }
            rows.push(cells);
            lines.push(i + 1);
        }
        if rows.is_empty() {
            return Err(Error::Dataset(format!("{}: no data rows", source.display())));
        }
        Ok(Self {
            rows,
            lines,
            source: source.to_path_buf(),
        })
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }
}

/// Encoded rows: a dense row-major feature matrix and class indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoded {
    pub features: Vec<f64>,
    pub dim: usize,
    pub labels: Vec<usize>,
}

impl EncodingPlan {
    /// Builds rules from the categories present in `table`. One-hot columns
    /// list their categories sorted; a one-hot column with a single observed
    /// value becomes [`ColumnRule::Constant`].
    pub fn fit(
        table: &RawTable,
        label_column: usize,
        kinds: &[ColumnKind],
        classes: &[&str],
    ) -> Result<Self> {
        if label_column >= table.width() || kinds.len() + 1 != table.width() {
            return Err(Error::invalid(format!(
                "plan for {} columns (label at {label_column}) does not fit a {}-column file",
                kinds.len() + 1,
                table.width()
            )));
        }
        let feature_cols = (0..table.width()).filter(|&c| c != label_column);
        let columns = feature_cols
            .zip(kinds)
            .map(|(col, kind)| match kind {
                ColumnKind::Numeric => ColumnRule::Numeric,
                ColumnKind::Ordinal(order) => ColumnRule::Ordinal(order.clone()),
                ColumnKind::OneHot => {
                    let seen: BTreeSet<&str> = table.rows.iter().map(|r| r[col].as_str()).collect();
                    let mut seen: Vec<String> = seen.into_iter().map(str::to_string).collect();
                    if seen.len() == 1 {
                        ColumnRule::Constant(seen.remove(0))
                    } else {
                        ColumnRule::OneHot(seen)
                    }
                }
            })
            .collect();
        Ok(Self {
            columns,
            label_column,
            classes: classes.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn width(&self) -> usize {
        self.columns.iter().map(ColumnRule::width).sum()
    }

    fn fail(table: &RawTable, row: usize, message: String) -> Error {
        Error::Parse {
            path: table.source.clone(),
            line: table.lines[row],
            message,
        }
    }

    pub fn encode(&self, table: &RawTable) -> Result<Encoded> {
        if table.width() != self.columns.len() + 1 {
            return Err(Error::Dataset(format!(
                "{}: {} columns, plan expects {}",
                table.source.display(),
                table.width(),
                self.columns.len() + 1
            )));
        }
        let dim = self.width();
        let mut features = Vec::with_capacity(table.rows.len() * dim);
        let mut labels = Vec::with_capacity(table.rows.len());
        for (r, row) in table.rows.iter().enumerate() {
            let label = &row[self.label_column];
            let class = self
                .classes
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| Self::fail(table, r, format!("unknown class {label:?}")))?;
            labels.push(class);
            let cells = row
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != self.label_column)
                .map(|(_, v)| v);
            for (rule, cell) in self.columns.iter().zip(cells) {
                let position = |cats: &[String]| {
                    cats.iter()
                        .position(|c| c == cell)
                        .ok_or_else(|| Self::fail(table, r, format!("unseen category {cell:?}")))
                };
                match rule {
                    ColumnRule::Numeric => {
                        let v: f64 = cell
                            .parse()
                            .map_err(|_| Self::fail(table, r, format!("not a number: {cell:?}")))?;
                        if !v.is_finite() {
                            return Err(Self::fail(table, r, format!("non-finite value {cell:?}")));
                        }
                        features.push(v);
                    }
                    ColumnRule::OneHot(cats) => {
                        let hot = position(cats)?;
                        features.extend((0..cats.len()).map(|i| if i == hot { 1.0 } else { 0.0 }));
                    }
                    ColumnRule::Ordinal(order) => {
                        let k = position(order)?;
                        let span = (order.len() - 1).max(1) as f64;
                        features.push(k as f64 / span);
                    }
                    ColumnRule::Constant(value) => {
                        if cell != value {
                            return Err(Self::fail(table, r, format!("unseen category {cell:?}")));
                        }
                    }
                }
            }
        }
        Ok(Encoded { features, dim, labels })
    }

    /// Inverse of encoding for one feature row: the raw text of every feature
    /// column. Numeric columns come back as formatted numbers.
    pub fn decode(&self, features: &[f64]) -> Result<Vec<String>> {
        if features.len() != self.width() {
            return Err(Error::invalid(format!(
                "decode: expected {} features, got {}",
                self.width(),
                features.len()
            )));
        }
        let mut at = 0;
        let mut out = Vec::with_capacity(self.columns.len());
        for rule in &self.columns {
            let chunk = &features[at..at + rule.width()];
            at += rule.width();
            out.push(match rule {
                ColumnRule::Numeric => chunk[0].to_string(),
                ColumnRule::Constant(v) => v.clone(),
                ColumnRule::OneHot(cats) => {
                    let hot: Vec<usize> = (0..chunk.len()).filter(|&i| chunk[i] == 1.0).collect();
                    match hot[..] {
                        [i] if chunk.iter().filter(|&&v| v != 0.0).count() == 1 => cats[i].clone(),
                        _ => return Err(Error::invalid("decode: not a one-hot block")),
                    }
                }
                ColumnRule::Ordinal(order) => {
                    let span = (order.len() - 1).max(1) as f64;
                    let k = (chunk[0] * span).round();
                    if k < 0.0 || k as usize >= order.len() {
                        return Err(Error::invalid("decode: ordinal value out of range"));
                    }
                    order[k as usize].clone()
                }
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Result<RawTable> {
        RawTable::parse(text, Path::new("mem.csv"))
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(table("\n\n"), Err(Error::Dataset(_))));
    }

    #[test]
    fn ragged_row_reports_line() {
        match table("1,2,a\n3,4\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mixed_plan_widths_and_values() {
        let t = table("x,lo,1.5,A\ny,hi,2.5,B\nz,mid,0,A\n").unwrap();
        let plan = EncodingPlan::fit(
            &t,
            3,
            &[
                ColumnKind::OneHot,
                ColumnKind::Ordinal(vec!["lo".into(), "mid".into(), "hi".into()]),
                ColumnKind::Numeric,
            ],
            &["A", "B"],
        )
        .unwrap();
        assert_eq!(plan.width(), 5);
        let e = plan.encode(&t).unwrap();
        assert_eq!(e.labels, vec![0, 1, 0]);
        assert_eq!(&e.features[..5], &[1.0, 0.0, 0.0, 0.0, 1.5]);
        assert_eq!(&e.features[5..10], &[0.0, 1.0, 0.0, 1.0, 2.5]);
        assert_eq!(&e.features[10..], &[0.0, 0.0, 1.0, 0.5, 0.0]);
        assert_eq!(plan.decode(&e.features[5..10]).unwrap(), vec!["y", "hi", "2.5"]);
    }

    #[test]
    fn constant_column_is_dropped_but_checked() {
        let t = table("p,a,0\np,b,1\n").unwrap();
        let plan =
            EncodingPlan::fit(&t, 2, &[ColumnKind::OneHot, ColumnKind::OneHot], &["0", "1"]).unwrap();
        assert_eq!(plan.columns[0], ColumnRule::Constant("p".into()));
        assert_eq!(plan.width(), 2);
        let other = table("q,a,0\n").unwrap();
        assert!(plan.encode(&other).is_err());
    }

    #[test]
    fn unseen_category_and_bad_number() {
        let t = table("a,1,0\n").unwrap();
        let plan = EncodingPlan {
            columns: vec![ColumnRule::OneHot(vec!["a".into(), "b".into()]), ColumnRule::Numeric],
            label_column: 2,
            classes: vec!["0".into()],
        };
        assert!(plan.encode(&t).is_ok());
        assert!(plan.encode(&table("c,1,0\n").unwrap()).is_err());
        assert!(plan.encode(&table("a,x,0\n").unwrap()).is_err());
        assert!(plan.encode(&table("a,1,9\n").unwrap()).is_err());
    }
}
