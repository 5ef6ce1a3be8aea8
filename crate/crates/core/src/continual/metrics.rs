use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_session_acc: Vec<f64>,
    /// classes seen after each session
    pub seen_classes: Vec<usize>,
    pub a_avg: f64,
    pub a_last: f64,
    /// `joint a_last - a_last`, when a joint reference was run
    pub forgetting_rate: Option<f64>,
    pub memory_units: usize,
}

impl MetricsReport {
    pub fn from_sessions(
        per_session_acc: Vec<f64>,
        seen_classes: Vec<usize>,
        memory_units: usize,
    ) -> Self {
        let a_avg = if per_session_acc.is_empty() {
            0.0
        } else {
            per_session_acc.iter().sum::<f64>() / per_session_acc.len() as f64
        };
        let a_last = per_session_acc.last().copied().unwrap_or(0.0);
        Self {
            per_session_acc,
            seen_classes,
            a_avg,
            a_last,
            forgetting_rate: None,
            memory_units,
        }
    }

    pub fn with_joint_reference(mut self, joint_a_last: f64) -> Self {
        self.forgetting_rate = Some(joint_a_last - self.a_last);
        self
    }

    /// `session,seen_classes,accuracy`, sessions numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("session,seen_classes,accuracy\n");
        for (i, (acc, seen)) in self
            .per_session_acc
            .iter()
            .zip(&self.seen_classes)
            .enumerate()
        {
            let _ = writeln!(s, "{},{},{}", i + 1, seen, acc);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn averages_are_definitional() {
        let r = MetricsReport::from_sessions(vec![1.0, 0.75, 0.5, 0.625], vec![2, 4, 6, 8], 24);
        assert_eq!(r.a_avg, (1.0 + 0.75 + 0.5 + 0.625) / 4.0);
        assert_eq!(r.a_last, 0.625);
        assert_eq!(r.with_joint_reference(0.875).forgetting_rate, Some(0.25));
    }

    #[test]
    fn csv_layout() {
        let r = MetricsReport::from_sessions(vec![1.0, 0.5], vec![2, 4], 0);
        assert_eq!(
            r.to_csv(),
            "session,seen_classes,accuracy\n1,2,1\n2,4,0.5\n"
        );
    }
}
