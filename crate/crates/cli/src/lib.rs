//! Command-line front end for hitlab: configs in, result files and reports out.

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod selftest;
