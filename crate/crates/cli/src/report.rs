//! Output rendering. CSV output starts with `# ` and a one-line JSON
//! metadata record, then a header row. Summary output is one JSON object
//! with the same metadata, the table as `records`, and any extra fields.

use serde_json::{Map, Value};

use crate::settings::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) if x.is_nan() => "nan".into(),
            Cell::F(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::F(x) => Value::from(*x).to_string(),
            Cell::U(n) => n.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => Value::from(*x),
            Cell::U(n) => Value::from(*n),
            Cell::B(b) => Value::from(*b),
            Cell::S(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub meta: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra top-level fields for the summary format.
    pub extra: Map<String, Value>,
}

impl Report {
    pub fn new(meta: Value, columns: Vec<&'static str>) -> Self {
        Self {
            meta,
            columns,
            rows: Vec::new(),
            extra: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = format!("# {}\n", self.meta);
                s += &self.columns.join(",");
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s += &cells.join(",");
                    s.push('\n');
                }
                s
            }
            Format::Summary => {
                let mut obj = Map::new();
                obj.insert("meta".into(), self.meta.clone());
                for (k, v) in &self.extra {
                    obj.insert(k.clone(), v.clone());
                }
                let records = self
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            self.columns
                                .iter()
                                .zip(r)
                                .map(|(c, v)| (c.to_string(), v.json()))
                                .collect(),
                        )
                    })
                    .collect();
                obj.insert("records".into(), Value::Array(records));
                let mut s = serde_json::to_string_pretty(&Value::Object(obj))
                    .expect("JSON values serialize");
                s.push('\n');
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Report {
        let mut r = Report::new(json!({"command": "x", "seed": 1}), vec!["a", "b", "c"]);
        r.push(vec![Cell::F(0.1), Cell::Empty, Cell::B(true)]);
        r.push(vec![
            Cell::F(f64::INFINITY),
            Cell::U(3),
            Cell::S("s".into()),
        ]);
        r
    }

    #[test]
    fn csv_layout() {
        assert_eq!(
            sample().render(Format::Csv),
            "# {\"command\":\"x\",\"seed\":1}\na,b,c\n0.1,,true\ninf,3,s\n"
        );
    }

    #[test]
    fn summary_is_json_with_records() {
        let mut r = sample();
        r.extra.insert("note".into(), json!(2));
        let v: Value = serde_json::from_str(&r.render(Format::Summary)).unwrap();
        assert_eq!(v["meta"]["seed"], 1);
        assert_eq!(v["note"], 2);
        assert_eq!(v["records"][0]["a"], 0.1);
        assert_eq!(v["records"][1]["a"], Value::Null);
        assert_eq!(v["records"][1]["b"], 3);
    }
}
