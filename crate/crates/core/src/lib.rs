//! Robust relay placement and routing for body area networks.
//!
//! The crate covers instance generation ([`instance`]), the directed
//! transmission graph ([`netgraph`]), binary programs for the nominal and
//! robust design problems ([`model`]), an embedded LP/MIP solver ([`lp`],
//! [`mip`]), the ant-colony + neighborhood-search heuristic ([`robuband`]) and
//! benchmarking utilities ([`harness`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod harness;
pub mod instance;
pub mod lp;
pub mod mip;
pub mod model;
pub mod netgraph;
pub mod robuband;
