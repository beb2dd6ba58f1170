//! Generalized Jacobsthal numbers and the 3q+1 / 3q-1 Collatz maps.
//!
//! The crate is organised bottom-up:
//!
//! * [`numcore`] — exact K±(θ, n) numbers, θ classification, sequence rows and
//!   the node predicate `(θ·2^n ∓ 1)/3`.
//! * [`collatz`] — the two maps, full and odd-compressed trajectories, the
//!   mod-4 reduction and the odd-trajectory table.
//! * [`tree`] — growth of the Jacobsthal tree, cells, reverse trajectories and
//!   DOT/JSON export.
//! * [`cycles`] — closed-form N-track cycle equations and bounded enumeration.
//! * [`census`] — parallel terminal-cycle classification over integer ranges.

pub mod census;
pub mod collatz;
pub mod cycles;
mod detect;
mod error;
pub mod numcore;
pub mod tree;

pub use census::{classify, membership_table, sweep, CensusReport, Classification};
pub use collatz::{
    odd_next, odd_table, odd_trajectory, quad_reduce, step, track_exponents, trajectory, CycleId,
    MapVariant, OddTableRow, OddTrack, Trajectory,
};
pub use cycles::{
    enumerate_integer_cycles, identity_checks, multi_track_q, two_track_q, CycleReport,
    CycleSolution, TrackSpec,
};
pub use detect::{brent, BrentDetector, CycleInfo};
pub use error::{Error, Result};
pub use num_bigint::{BigInt, BigUint};
pub use numcore::{
    classify_theta, decompose, g_sequences, k_number, k_sequence, lj_j_seeds, node_value,
    node_value_u64, seed_pair, BranchRule, KValue, LjJSeeds, OddCore, SequenceRow, Sign,
    ThetaClass, ThetaVariant,
};
pub use tree::{build_tree, cell, components, reverse_trajectory, Cell, JacobsthalTree, TreeNode};
