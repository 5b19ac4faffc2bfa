use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::analysis::{inter_subject_kappa, subject_statistics, SubjectResponses, SubjectStatistics};
use super::manifest::{Choice, ExperimentManifest};
use crate::consistency::KappaMatrix;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub observer_id: String,
    pub manifest_id: String,
    pub next_trial: usize,
    pub complete: bool,
    /// Presentation order as manifest trial indices.
    pub order: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResponse {
    pub session_id: String,
    /// Position in the session's presentation order.
    pub trial_index: usize,
    /// Index of the trial in the manifest.
    pub manifest_trial: usize,
    pub choice: Choice,
    /// True when the observer picked the impossible image.
    pub correct: bool,
    pub rt_ms: f64,
    pub timestamp_ms: u64,
}

/// One line of the append-only response log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    SessionOpened {
        session_id: String,
        observer_id: String,
        manifest_id: String,
        order: Vec<usize>,
        timestamp_ms: u64,
    },
    Response(TrialResponse),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub n_trials: usize,
}

/// What the observer is shown. Carries no difficulty information.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialPayload {
    pub trial_index: usize,
    pub left_url: String,
    pub right_url: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NextTrial {
    Trial(TrialPayload),
    Complete,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ack {
    pub status: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultsDocument {
    pub manifest_id: String,
    pub n_trials: usize,
    #[serde(flatten)]
    pub statistics: SubjectStatistics,
    /// `None` when fewer than two complete sessions exist or trial order is
    /// reshuffled per subject.
    pub inter_subject_kappa: Option<KappaMatrix>,
    pub mean_kappa: Option<f64>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Experiment state backed by an append-only JSON-lines log. Every event is
/// flushed and synced before the in-memory state changes, and replaying the
/// log reproduces the state.
#[derive(Debug)]
pub struct Experiment {
    manifest: ExperimentManifest,
    reshuffle: bool,
    sessions: BTreeMap<String, Session>,
    responses: Vec<TrialResponse>,
    log: Option<File>,
}

impl Experiment {
    /// In-memory experiment without persistence.
    pub fn in_memory(manifest: ExperimentManifest, reshuffle: bool) -> Result<Self> {
        manifest.validate()?;
        Ok(Experiment {
            manifest,
            reshuffle,
            sessions: BTreeMap::new(),
            responses: Vec::new(),
            log: None,
        })
    }

    /// Opens (or creates) the response log at `path`, replaying existing events.
    pub fn open(manifest: ExperimentManifest, path: &Path, reshuffle: bool) -> Result<Self> {
        let mut exp = Experiment::in_memory(manifest, reshuffle)?;
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: LogEvent = serde_json::from_str(&line).map_err(|e| Error::Parse {
                    line: i as u64 + 1,
                    message: e.to_string(),
                })?;
                exp.apply(event)?;
            }
        }
        exp.log = Some(OpenOptions::new().create(true).append(true).open(path)?);
        Ok(exp)
    }

    /// Rebuilds state from a sequence of events.
    pub fn replay(
        manifest: ExperimentManifest,
        reshuffle: bool,
        events: impl IntoIterator<Item = LogEvent>,
    ) -> Result<Self> {
        let mut exp = Experiment::in_memory(manifest, reshuffle)?;
        for e in events {
            exp.apply(e)?;
        }
        Ok(exp)
    }

    pub fn manifest(&self) -> &ExperimentManifest {
        &self.manifest
    }

    pub fn sessions(&self) -> &BTreeMap<String, Session> {
        &self.sessions
    }

    pub fn responses(&self) -> &[TrialResponse] {
        &self.responses
    }

    fn persist(&mut self, event: &LogEvent) -> Result<()> {
        if let Some(f) = self.log.as_mut() {
            let mut line = serde_json::to_vec(event)?;
            line.push(b'\n');
            f.write_all(&line)?;
            f.flush()?;
            f.sync_data()?;
        }
        Ok(())
    }

    fn apply(&mut self, event: LogEvent) -> Result<()> {
        match event {
            LogEvent::SessionOpened { session_id, observer_id, manifest_id, order, .. } => {
                if manifest_id != self.manifest.manifest_id {
                    return Err(Error::Incompatible(format!(
                        "log entry for manifest {manifest_id}, serving {}",
                        self.manifest.manifest_id
                    )));
                }
                let mut sorted = order.clone();
                sorted.sort_unstable();
                if sorted != (0..self.manifest.n_trials).collect::<Vec<_>>() {
                    return Err(Error::InvalidInput("session order is not a permutation".into()));
                }
                self.sessions.insert(
                    session_id.clone(),
                    Session { session_id, observer_id, manifest_id, next_trial: 0, complete: false, order },
                );
            }
            LogEvent::Response(r) => {
                let n = self.manifest.n_trials;
                let s = self
                    .sessions
                    .get_mut(&r.session_id)
                    .ok_or_else(|| Error::lookup("session", &r.session_id))?;
                if r.trial_index != s.next_trial {
                    return Err(Error::Sequencing { expected: s.next_trial, got: r.trial_index });
                }
                s.next_trial += 1;
                s.complete = s.next_trial == n;
                self.responses.push(r);
            }
        }
        Ok(())
    }

    pub fn open_session(&mut self, observer_id: &str) -> Result<SessionInfo> {
        if observer_id.trim().is_empty() {
            return Err(Error::InvalidInput("observer_id is empty".into()));
        }
        let session_id = uuid::Uuid::new_v4().to_string();
        let mut order: Vec<usize> = (0..self.manifest.n_trials).collect();
        if self.reshuffle {
            let mut rng = seed::rng_for(self.manifest.seed, &[seed::fnv1a(session_id.as_bytes())]);
            order.shuffle(&mut rng);
        }
        let event = LogEvent::SessionOpened {
            session_id: session_id.clone(),
            observer_id: observer_id.to_string(),
            manifest_id: self.manifest.manifest_id.clone(),
            order,
            timestamp_ms: now_ms(),
        };
        self.persist(&event)?;
        self.apply(event)?;
        Ok(SessionInfo { session_id, n_trials: self.manifest.n_trials })
    }

    /// Current trial of a session. Idempotent until a response is recorded.
    pub fn next_trial(&self, session_id: &str) -> Result<NextTrial> {
        let s = self
            .sessions
            .get(session_id)
            .ok_or_else(|| Error::lookup("session", session_id))?;
        if s.complete {
            return Ok(NextTrial::Complete);
        }
        let trial = &self.manifest.trials[s.order[s.next_trial]];
        Ok(NextTrial::Trial(TrialPayload {
            trial_index: s.next_trial,
            left_url: format!("/img/{}", trial.left()),
            right_url: format!("/img/{}", trial.right()),
        }))
    }

    pub fn record_response(
        &mut self,
        session_id: &str,
        trial_index: usize,
        choice: Choice,
        rt_ms: f64,
    ) -> Result<Ack> {
        if !(rt_ms.is_finite() && rt_ms >= 0.0) {
            return Err(Error::InvalidInput(format!("reaction time {rt_ms} is not a non-negative number")));
        }
        let s = self
            .sessions
            .get(session_id)
            .ok_or_else(|| Error::lookup("session", session_id))?;
        if trial_index < s.next_trial {
            return Err(Error::DuplicateResponse(trial_index));
        }
        if s.complete {
            return Err(Error::SessionComplete);
        }
        if trial_index > s.next_trial {
            return Err(Error::Sequencing { expected: s.next_trial, got: trial_index });
        }
        let manifest_trial = s.order[trial_index];
        let correct = self.manifest.trials[manifest_trial].is_correct(choice);
        let event = LogEvent::Response(TrialResponse {
            session_id: session_id.to_string(),
            trial_index,
            manifest_trial,
            choice,
            correct,
            rt_ms,
            timestamp_ms: now_ms(),
        });
        self.persist(&event)?;
        self.apply(event)?;
        Ok(Ack { status: "recorded" })
    }

    /// Per-session correctness vectors in manifest trial order.
    pub fn subject_responses(&self) -> Vec<SubjectResponses> {
        self.sessions
            .values()
            .map(|s| {
                let mut correct = vec![None; self.manifest.n_trials];
                for r in self.responses.iter().filter(|r| r.session_id == s.session_id) {
                    correct[r.manifest_trial] = Some(r.correct);
                }
                SubjectResponses {
                    session_id: s.session_id.clone(),
                    observer_id: s.observer_id.clone(),
                    manifest_id: s.manifest_id.clone(),
                    complete: s.complete,
                    correct: correct.into_iter().map(|c| c.unwrap_or(false)).collect(),
                }
            })
            .collect()
    }

    pub fn results(&self) -> ResultsDocument {
        let subjects = self.subject_responses();
        let statistics = subject_statistics(&subjects);
        let complete: Vec<SubjectResponses> = subjects.into_iter().filter(|s| s.complete).collect();
        let (inter_subject_kappa, mean_kappa) = if self.reshuffle || complete.len() < 2 {
            (None, None)
        } else {
            match inter_subject_kappa(&complete) {
                Ok((m, mean)) => (Some(m), mean),
                Err(_) => (None, None),
            }
        };
        ResultsDocument {
            manifest_id: self.manifest.manifest_id.clone(),
            n_trials: self.manifest.n_trials,
            statistics,
            inter_subject_kappa,
            mean_kappa,
        }
    }
}
