//! Verification order for claim triplets.
//!
//! Each triplet gets a priority from the number of placeholder endpoints:
//! 0 when both are known, 2 when both are unknown, 1 otherwise. Lower
//! priorities are verified first.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{ClaimGraph, Triplet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Priority {
    BothKnown = 0,
    OneUnknown = 1,
    BothUnknown = 2,
}

impl From<Priority> for u8 {
    fn from(p: Priority) -> u8 {
        p as u8
    }
}

impl TryFrom<u8> for Priority {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Priority::BothKnown),
            1 => Ok(Priority::OneUnknown),
            2 => Ok(Priority::BothUnknown),
            other => Err(format!("priority out of range: {other}")),
        }
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

/// Relation position never affects the result.
pub fn priority(t: &Triplet) -> Priority {
    match (t.subject.is_unknown(), t.object.is_unknown()) {
        (false, false) => Priority::BothKnown,
        (true, true) => Priority::BothUnknown,
        _ => Priority::OneUnknown,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Equal priorities keep extraction order.
    #[default]
    StableByExtraction,
    /// Equal priorities are shuffled with a seeded generator.
    SeededRandom(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    triplets: Vec<Triplet>,
    priorities: Vec<Priority>,
}

impl Plan {
    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn priorities(&self) -> &[Priority] {
        &self.priorities
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    /// Extraction order, no sorting. Used when planning is disabled.
    pub fn identity(g: &ClaimGraph) -> Plan {
        let triplets = g.triplets().to_vec();
        let priorities = triplets.iter().map(priority).collect();
        Plan {
            triplets,
            priorities,
        }
    }

    /// `rho  triplet` per line.
    pub fn render(&self) -> String {
        self.triplets
            .iter()
            .zip(&self.priorities)
            .map(|(t, p)| format!("{p}\t{t}\n"))
            .collect()
    }
}

pub fn plan(g: &ClaimGraph, tie_break: TieBreak) -> Plan {
    let mut order: Vec<(Priority, &Triplet)> =
        g.triplets().iter().map(|t| (priority(t), t)).collect();
    if let TieBreak::SeededRandom(seed) = tie_break {
        // Shuffle first; the stable sort below then randomizes only within equal priority.
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order.sort_by_key(|(p, _)| *p);
    let (priorities, triplets) = order.into_iter().map(|(p, t)| (p, t.clone())).unzip();
    Plan {
        triplets,
        priorities,
    }
}
