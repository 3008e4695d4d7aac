use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One post: hours since the meme's first post, and the posting source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event(pub f64, pub String);

impl Event {
    pub fn time(&self) -> f64 {
        self.0
    }

    pub fn source(&self) -> &str {
        &self.1
    }
}

/// Time-ordered posts mentioning one meme. The first post is at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemeTrajectory {
    pub meme_id: String,
    pub events: Vec<Event>,
}

impl MemeTrajectory {
    /// Validates ordering and the `t = 0` anchor.
    pub fn new(meme_id: impl Into<String>, events: Vec<Event>) -> Result<Self> {
        let traj = MemeTrajectory {
            meme_id: meme_id.into(),
            events,
        };
        traj.validate()?;
        Ok(traj)
    }

    /// Builds a trajectory from events with arbitrary time origin, sorting
    /// them (stable, so equal times keep input order) and shifting so the
    /// earliest post is at `t = 0`.
    pub fn from_unanchored(meme_id: impl Into<String>, mut events: Vec<Event>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::Empty("trajectory has no events".into()));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let origin = events[0].0;
        for e in &mut events {
            e.0 -= origin;
        }
        MemeTrajectory::new(meme_id, events)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("meme {}: {msg}", self.meme_id)));
        let Some(first) = self.events.first() else {
            return bad("trajectory has no events".into());
        };
        if first.0 != 0.0 {
            return bad(format!("first event at t={} (expected 0)", first.0));
        }
        for w in self.events.windows(2) {
            if !(w[1].0 >= w[0].0) {
                return bad(format!("events out of order at t={}", w[1].0));
            }
        }
        Ok(())
    }

    pub fn total_posts(&self) -> usize {
        self.events.len()
    }

    /// Time of the last post, i.e. the observed lifespan.
    pub fn lifespan(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.0)
    }

    /// Events with `t <= tau`.
    pub fn prefix(&self, tau: f64) -> &[Event] {
        let end = self.events.partition_point(|e| e.0 <= tau);
        &self.events[..end]
    }

    /// Distinct sources among events with `t <= tau`, in first-post order.
    pub fn sources_by(&self, tau: f64) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.prefix(tau)
            .iter()
            .map(Event::source)
            .filter(|s| seen.insert(*s))
            .collect()
    }
}
