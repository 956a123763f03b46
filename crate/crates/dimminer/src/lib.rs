//! Command line and HTTP front end for `dimminer-core`: file formats,
//! caching, persisted feedback sessions and reports.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod planted;
pub mod session;
pub mod store;
pub mod cli;
pub mod http;
pub mod report;
