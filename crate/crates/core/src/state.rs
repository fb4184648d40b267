//! Job lifecycle states and timestamped status records.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::SystemTime;

/// Client-side job lifecycle state.
///
/// Legal transitions:
/// `NEW -> QUEUED | FAILED`, `QUEUED -> ACTIVE | CANCELED | FAILED`,
/// `ACTIVE -> COMPLETED | FAILED | CANCELED`. The three terminal states are
/// final; observed ranks per job are non-decreasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JobState {
    New,
    Queued,
    Active,
    Completed,
    Failed,
    Canceled,
}

impl JobState {
    pub const ALL: [JobState; 6] = [
        JobState::New,
        JobState::Queued,
        JobState::Active,
        JobState::Completed,
        JobState::Failed,
        JobState::Canceled,
    ];

    pub fn rank(self) -> u8 {
        match self {
            JobState::New => 0,
            JobState::Queued => 1,
            JobState::Active => 2,
            JobState::Completed | JobState::Failed | JobState::Canceled => 3,
        }
    }

    pub fn is_final(self) -> bool {
        self.rank() == 3
    }

    pub fn can_transition_to(self, to: JobState) -> bool {
        use JobState::*;
        matches!(
            (self, to),
            (New, Queued)
                | (New, Failed)
                | (Queued, Active)
                | (Queued, Canceled)
                | (Queued, Failed)
                | (Active, Completed)
                | (Active, Failed)
                | (Active, Canceled)
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            JobState::New => "NEW",
            JobState::Queued => "QUEUED",
            JobState::Active => "ACTIVE",
            JobState::Completed => "COMPLETED",
            JobState::Failed => "FAILED",
            JobState::Canceled => "CANCELED",
        }
    }
}

impl fmt::Display for JobState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JobState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NEW" => Ok(JobState::New),
            "QUEUED" => Ok(JobState::Queued),
            "ACTIVE" => Ok(JobState::Active),
            "COMPLETED" => Ok(JobState::Completed),
            "FAILED" => Ok(JobState::Failed),
            "CANCELED" => Ok(JobState::Canceled),
            other => Err(format!("unknown job state {other:?}")),
        }
    }
}

/// One observation of a job's state, with whatever the scheduler reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub state: JobState,
    pub timestamp: SystemTime,
    /// Present only for COMPLETED/FAILED when the exit code is known.
    pub exit_code: Option<i32>,
    /// Human-readable detail, e.g. scheduler error text.
    pub message: Option<String>,
    /// Raw scheduler fields, when available.
    pub metadata: BTreeMap<String, String>,
}

impl JobStatus {
    pub fn new(state: JobState) -> Self {
        JobStatus {
            state,
            timestamp: SystemTime::now(),
            exit_code: None,
            message: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_exit_code(mut self, code: i32) -> Self {
        self.exit_code = Some(code);
        self
    }

    pub fn with_message(mut self, message: impl Into<String>) -> Self {
        self.message = Some(message.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Exhaustive check of the 6x6 transition table against the legal edge
    // list. Any pair not in the list must be rejected.
    #[test]
    fn transition_table_matches_edge_list() {
        use JobState::*;
        let legal = [
            (New, Queued),
            (New, Failed),
            (Queued, Active),
            (Queued, Canceled),
            (Queued, Failed),
            (Active, Completed),
            (Active, Failed),
            (Active, Canceled),
        ];
        for from in JobState::ALL {
            for to in JobState::ALL {
                let expected = legal.contains(&(from, to));
                assert_eq!(from.can_transition_to(to), expected, "{from} -> {to}");
            }
        }
    }

    #[test]
    fn finals_have_no_outgoing_edges() {
        for from in JobState::ALL.into_iter().filter(|s| s.is_final()) {
            for to in JobState::ALL {
                assert!(!from.can_transition_to(to));
            }
        }
    }

    #[test]
    fn legal_edges_never_decrease_rank() {
        for from in JobState::ALL {
            for to in JobState::ALL {
                if from.can_transition_to(to) {
                    assert!(to.rank() > from.rank());
                }
            }
        }
    }

    #[test]
    fn state_names_round_trip() {
        for s in JobState::ALL {
            assert_eq!(s.name().parse::<JobState>().unwrap(), s);
        }
    }
}
