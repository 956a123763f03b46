#![no_std]
//! Active spectral clustering along user-selected dimensions.
//!
//! A document collection is decomposed into the leading eigenvectors of its
//! normalized similarity Laplacian. Each eigenvector beyond the first is a
//! candidate clustering dimension, summarized by two ranked feature lists
//! learned with a maximum-margin classifier on its least ambiguous
//! documents. A dimension chosen by a person, a subjectivity lexicon, or a
//! profile from another domain then drives the final 2-means clustering.
//!
//! This crate is `no_std` and needs only `alloc`. File formats, the CLI and
//! the HTTP service live in the `dimminer` crate.

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cluster;
pub mod corpus;
pub mod dimension;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod margin;
pub mod selection;
pub mod spectral;

pub use error::{Error, Result};
