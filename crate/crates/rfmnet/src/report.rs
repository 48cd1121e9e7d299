//! Result documents and their JSON and CSV renderings.
//!
//! A report is a set of named scalars plus an optional table. JSON keeps the
//! two apart and always carries `schema_version`. CSV is one header row and
//! one row per table row, with the scalars repeated as trailing columns;
//! a report without a table becomes a single data row.

use serde_json::{Map, Value};

use crate::error::CliError;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub scalars: Vec<(String, Value)>,
    pub table: Option<Table>,
}

/// Converts a float to JSON, mapping non-finite values to `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            scalars: Vec::new(),
            table: None,
        }
    }

    pub fn scalar(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.scalars.push((name.to_string(), value.into()));
        self
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.scalars.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn to_json_value(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("schema_version".into(), SCHEMA_VERSION.into());
        doc.insert("command".into(), self.command.clone().into());
        for (k, v) in &self.scalars {
            doc.insert(k.clone(), v.clone());
        }
        if let Some(t) = &self.table {
            let rows = t
                .rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> =
                        t.columns.iter().cloned().zip(r.iter().cloned()).collect();
                    Value::Object(obj)
                })
                .collect();
            doc.insert("rows".into(), Value::Array(rows));
        }
        Value::Object(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("values serialize");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let scalar_names = self.scalars.iter().map(|(k, _)| k.as_str());
        let scalar_cells: Vec<String> = self.scalars.iter().map(|(_, v)| cell(v)).collect();
        let csv_err = |e: csv::Error| CliError::Usage(format!("csv output: {e}"));
        match &self.table {
            Some(t) => {
                let header: Vec<&str> = t
                    .columns
                    .iter()
                    .map(String::as_str)
                    .chain(scalar_names)
                    .collect();
                w.write_record(&header).map_err(csv_err)?;
                for r in &t.rows {
                    let row: Vec<String> = r
                        .iter()
                        .map(cell)
                        .chain(scalar_cells.iter().cloned())
                        .collect();
                    w.write_record(&row).map_err(csv_err)?;
                }
            }
            None => {
                w.write_record(scalar_names).map_err(csv_err)?;
                w.write_record(&scalar_cells).map_err(csv_err)?;
            }
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Usage(format!("csv output: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut t = Table::new(["i", "x"]);
        t.push(vec![1.into(), num(0.5)]);
        t.push(vec![2.into(), num(f64::NAN)]);
        Report::new("demo").scalar("R", num(0.25)).with_table(t)
    }

    #[test]
    fn json_layout() {
        let v = sample().to_json_value();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], "demo");
        assert_eq!(v["R"], 0.25);
        assert_eq!(v["rows"][0]["x"], 0.5);
        assert!(v["rows"][1]["x"].is_null());
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys[0], "schema_version");
    }

    #[test]
    fn csv_layout() {
        assert_eq!(sample().to_csv().unwrap(), "i,x,R\n1,0.5,0.25\n2,,0.25\n");
        let r = Report::new("s").scalar("a", 1).scalar("b", "x");
        assert_eq!(r.to_csv().unwrap(), "a,b\n1,x\n");
    }

    #[test]
    fn floats_survive_json() {
        let x = 1.0 / 3.0;
        let text = Report::new("f").scalar("x", num(x)).to_json();
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), x);
    }
}
