//! A finite-domain constraint solver that parallelizes search with two-level
//! work stealing: deque stealing among the workers of a team sharing memory,
//! and a supplier-based redistribution protocol between teams over a message
//! transport.
//!
//! The crate is organized around a few core ideas:
//!
//! - a [`Store`](store::Store) holds one bit-packed domain per variable and is
//!   the self-contained unit of work copied between workers and shipped
//!   between teams;
//! - workers run a split/propagate loop that never backtracks, parking the
//!   unexplored half of every split in a per-worker [`Pool`](pool::Pool) with
//!   an owner/thief deque discipline;
//! - a controller per team detects team idleness and trades work with other
//!   teams through a small seven-message protocol;
//! - two interchangeable transports carry that protocol: an in-process hub
//!   for deterministic tests and threaded runs, and TCP sockets for one OS
//!   process per team.

pub mod domain;
pub mod models;
pub mod partition;
pub mod pool;
pub mod problem;
pub mod propagate;
pub mod runner;
pub mod stats;
pub mod store;
pub mod team;
pub mod transport;
pub mod worker;

pub use domain::FiniteDomain;
pub use problem::{ConstraintSpec, Problem, Solution};
pub use store::{Store, StoreStatus};
