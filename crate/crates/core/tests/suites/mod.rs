//! Checks shared between these tests and the workspace acceptance suite.
#![allow(dead_code)]

pub mod gradcheck;
pub mod invariants;
pub mod traces;
