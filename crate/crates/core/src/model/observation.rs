use std::borrow::Cow;
use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use super::StateId;
use crate::error::{Error, Result};

/// Per-state feature vectors seen by a policy.
///
/// States without a row observe as the all-zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTable {
    pub feature_names: Vec<String>,
    pub rows: BTreeMap<StateId, Vec<f64>>,
}

impl ObservationTable {
    pub fn new(feature_names: Vec<String>, rows: BTreeMap<StateId, Vec<f64>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::input(format!("duplicate feature name `{name}`")));
            }
        }
        for (state, row) in &rows {
            if row.len() != feature_names.len() {
                return Err(Error::input(format!(
                    "state {state}: row has {} values, expected {}",
                    row.len(),
                    feature_names.len()
                )));
            }
        }
        Ok(ObservationTable { feature_names, rows })
    }

    /// One-hot rows `e_s` for states `0..n`, features named `s0..s{n-1}`.
    pub fn one_hot(n: usize) -> Self {
        let names = (0..n).map(|i| format!("s{i}")).collect();
        let rows = (0..n)
            .map(|s| {
                let mut v = vec![0.0; n];
                v[s] = 1.0;
                (s, v)
            })
            .collect();
        ObservationTable {
            feature_names: names,
            rows,
        }
    }

    /// The state id itself as the single feature `state`.
    pub fn state_index(n: usize) -> Self {
        ObservationTable {
            feature_names: vec!["state".into()],
            rows: (0..n).map(|s| (s, vec![s as f64])).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn has_row(&self, state: StateId) -> bool {
        self.rows.contains_key(&state)
    }

    pub fn observe(&self, state: StateId) -> Cow<'_, [f64]> {
        match self.rows.get(&state) {
            Some(row) => Cow::Borrowed(row),
            None => Cow::Owned(vec![0.0; self.dim()]),
        }
    }

    /// Values of one feature across all rows, in state order.
    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.rows.values().map(|r| r[feature]).collect()
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("state") {
            return Err(Error::input("observation table header must start with `state`"));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut rows = BTreeMap::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let state: StateId = record[0]
                .parse()
                .map_err(|_| Error::input(format!("observation row {}: bad state id `{}`", line + 2, &record[0])))?;
            let values = record
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::input(format!("observation row {}: bad value `{v}`", line + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            if rows.insert(state, values).is_some() {
                return Err(Error::input(format!("state {state} has more than one row")));
            }
        }
        Self::new(names, rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["state".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for (state, row) in &self.rows {
            let mut rec = vec![state.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<observation table>", e))?;
        Ok(())
    }
}
