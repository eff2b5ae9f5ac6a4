//! Collector service and command-line front end for the QoE pipeline.
//!
//! [`store::ReportStore`] keeps validated session reports in an append-only
//! JSONL file, [`http::router`] exposes it over HTTP, and [`cli::run`]
//! implements the `qoe` tool.

pub mod cli;
pub mod http;
pub mod stats;
pub mod store;
