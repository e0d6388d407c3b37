//! Brownian motion on finite metric graphs under Wentzell vertex conditions.
//!
//! The crate has two independent routes to the same quantities. The analytic
//! side solves the resolvent equation edge by edge and matches the pieces at
//! the vertices through the boundary matrices; the simulation side samples
//! paths. Comparing them is what the `compare` command and the acceptance
//! tests do.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod compare;
pub mod graph;
pub mod io;
pub mod report;
pub mod resolvent;
pub mod sim;
