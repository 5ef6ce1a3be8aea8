use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, pairwise disjoint class sets; one per incremental session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSchedule {
    pub sessions: Vec<Vec<String>>,
}

impl TaskSchedule {
    pub fn new(sessions: Vec<Vec<String>>) -> Result<Self> {
        let s = Self { sessions };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sessions.is_empty() || self.sessions.iter().any(|s| s.is_empty()) {
            return Err(Error::EmptyClasses);
        }
        let mut seen = std::collections::HashSet::new();
        for id in self.sessions.iter().flatten() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DisjointnessViolated(id.clone()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }
}

/// Consecutive chunks of `per_session` classes; the last one may be smaller.
pub fn split_tasks(class_ids: &[String], per_session: usize) -> Result<TaskSchedule> {
    if class_ids.is_empty() {
        return Err(Error::EmptyClasses);
    }
    if per_session == 0 {
        return Err(Error::Config("per_session must be >= 1".into()));
    }
    TaskSchedule::new(class_ids.chunks(per_session).map(|c| c.to_vec()).collect())
}
