//! Land-use change simulation on irregular parcels.
//!
//! The workflow is: bisect parcels into minimum cells ([`subdivision`]), sample
//! spatial variables per cell ([`features`]), learn transition probabilities
//! ([`models`]), project demand ([`demand`]), run the cellular automaton
//! ([`engine`]), and score the result ([`assess`], [`vecli`]). File formats live
//! in [`io`] and the command-line front end in [`cli`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assess;
pub mod cli;
pub mod demand;
pub mod engine;
pub mod error;
pub mod features;
pub mod geom;
pub mod io;
pub mod models;
pub mod parcel;
pub mod rng;
pub mod subdivision;
pub mod synth;
pub mod vecli;

pub use error::{Error, Result};
