//! Noisy-interference regime tests, sum-capacity optimizers and rate-region
//! polytopes for many-to-one interference channels.
//!
//! Receiver 1 hears every transmitter; receiver `i ≥ 2` hears only its own.
//! The interference at receiver 1 enters through a variable `V` that can be
//! recovered from `(Y_1, X_1)`. When `V` is a stochastically degraded copy of
//! the other users' outputs, treating interference as noise is sum-capacity
//! optimal, and the modules here decide, compute and simulate exactly that.

mod error;
pub mod infotheory;
pub mod capacity;
pub mod channels;
pub mod linalg;
pub mod lp;
pub mod regions;
pub mod simulate;
pub mod regimes;

pub use error::{Error, Result};
