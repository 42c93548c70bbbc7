use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ActionId, ExplicitMdp, StateId};
use crate::pctl::Scheduler;

/// Policy keyed directly on state ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TabularPolicy {
    pub actions: BTreeMap<StateId, ActionId>,
    /// Action for states without an entry.
    pub default: Option<ActionId>,
}

impl TabularPolicy {
    pub fn new(actions: BTreeMap<StateId, ActionId>) -> Self {
        TabularPolicy { actions, default: None }
    }

    pub fn from_scheduler(s: &Scheduler) -> Self {
        Self::new(s.actions.iter().copied().enumerate().collect())
    }

    pub fn get(&self, state: StateId) -> Option<ActionId> {
        self.actions.get(&state).copied().or(self.default)
    }

    /// Checks every mapped action id against the model.
    pub fn validate(&self, m: &ExplicitMdp) -> Result<()> {
        for (&s, &a) in &self.actions {
            if s >= m.n_states {
                return Err(Error::input(format!("policy maps unknown state {s}")));
            }
            if m.choice(s, a).is_none() {
                return Err(Error::ActionNotEnabled { state: s, action: a });
            }
        }
        if let Some(d) = self.default {
            if d >= m.actions.len() {
                return Err(Error::input(format!(
                    "default action {d} is not an action of the model"
                )));
            }
        }
        Ok(())
    }

    /// Reads `state,action_id` rows (extra columns are ignored, so scheduler
    /// exports load directly). A row `default,<id>` sets the default action.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::input(format!("policy table lacks a `{name}` column")))
        };
        let (sc, ac) = (col("state")?, col("action_id")?);
        let mut out = TabularPolicy::default();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let action: ActionId = rec
                .get(ac)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::input(format!("line {line}: bad action id")))?;
            match rec.get(sc) {
                Some("default") => out.default = Some(action),
                Some(s) => {
                    let s: StateId = s
                        .parse()
                        .map_err(|_| Error::input(format!("line {line}: bad state id `{s}`")))?;
                    if out.actions.insert(s, action).is_some() {
                        return Err(Error::input(format!("line {line}: state {s} mapped twice")));
                    }
                }
                None => return Err(Error::input(format!("line {line}: missing state"))),
            }
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["state", "action_id"])?;
        for (s, a) in &self.actions {
            out.write_record([s.to_string(), a.to_string()])?;
        }
        if let Some(d) = self.default {
            out.write_record(["default".to_string(), d.to_string()])?;
        }
        out.flush().map_err(|e| Error::io("<policy>", e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}
