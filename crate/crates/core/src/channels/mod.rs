//! Channel models for every family: discrete, Gaussian MIMO, parallel,
//! fading and the collision construction.
//!
//! Users are indexed from 0 in code; user 0 is the receiver that hears
//! interference, users `1..K` are the interferers with their own receivers.

pub mod catalog;
mod discrete;
mod gaussian;
mod parallel;
pub mod spec;

use serde::Serialize;

pub use discrete::{make_collision, AuxSpec, CollisionKernel, DiscreteMto};
pub use gaussian::{FadingMto, GaussianMto};
pub use parallel::{lift_parallel, Carrier, ParallelMto};

use crate::error::{Error, Result};
use crate::infotheory::{GaussianLaw, Pmf};
use crate::linalg::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    NonStochastic,
    NotInvertible,
    Dimension,
    NotPsd,
    NonPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub message: String,
}

/// Outcome of structural validation; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub(crate) fn push(&mut self, kind: IssueKind, message: impl Into<String>) {
        self.issues.push(Issue {
            kind,
            message: message.into(),
        });
    }

    pub(crate) fn extend_prefixed(&mut self, prefix: &str, other: ValidationReport) {
        for issue in other.issues {
            self.push(issue.kind, format!("{prefix}: {}", issue.message));
        }
    }

    /// First issue as an error.
    pub fn into_result(self) -> Result<()> {
        match self.issues.into_iter().next() {
            None => Ok(()),
            Some(issue) => Err(Error::InvalidChannel(issue.message)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    Discrete(DiscreteMto),
    Gaussian(GaussianMto),
    Parallel(ParallelMto),
    Fading(FadingMto),
}

impl Channel {
    pub fn num_users(&self) -> usize {
        match self {
            Channel::Discrete(c) => c.num_users(),
            Channel::Gaussian(c) => c.num_users(),
            Channel::Parallel(c) => c.num_users(),
            Channel::Fading(c) => c.num_users(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        match self {
            Channel::Discrete(c) => c.validate(),
            Channel::Gaussian(c) => c.validate(),
            Channel::Parallel(c) => c.validate(),
            Channel::Fading(c) => c.validate(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Channel::Discrete(_) => "discrete",
            Channel::Gaussian(_) => "gaussian",
            Channel::Parallel(_) => "parallel",
            Channel::Fading(_) => "fading",
        }
    }
}

/// Per-user input laws. Constellation weights use the `Discrete` form.
#[derive(Debug, Clone, PartialEq)]
pub enum ProductDist {
    Discrete(Vec<Pmf>),
    Gaussian(Vec<CMatrix>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InterferenceLaw {
    Discrete(Pmf),
    Gaussian(GaussianLaw),
}

/// Law of the effective interference `V` under independent inputs.
pub fn effective_interference(ch: &Channel, dist: &ProductDist) -> Result<InterferenceLaw> {
    match (ch, dist) {
        (Channel::Discrete(c), ProductDist::Discrete(p)) => Ok(InterferenceLaw::Discrete(c.interference_law(p)?)),
        (Channel::Gaussian(c), ProductDist::Gaussian(g)) => Ok(InterferenceLaw::Gaussian(c.interference_law(g)?)),
        _ => Err(Error::Dimension(format!(
            "input law does not match a {} channel",
            ch.family()
        ))),
    }
}
