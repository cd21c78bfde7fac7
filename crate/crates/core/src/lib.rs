//! Square functions comparing moving averages with dyadic martingale
//! averages, on piecewise-constant signals.
//!
//! The crate provides exact step-function signals ([`signal`]), dyadic
//! conditional expectations ([`dyadic`]), sliding-window extrema of moving
//! averages ([`moving`]), interval selectors ([`selector`]), the square
//! functions themselves ([`square`]), dyadic BMO and `L^p` norms
//! ([`norms`]), the translation certificate for the BMO bound
//! ([`certificate`]), the divergence and BMO-escape constructions
//! ([`constructions`]), a search for selectors with large oscillation
//! ([`adversary`]) and seeded random step signals ([`sample`]).

pub mod adversary;
pub mod certificate;
pub mod constructions;
pub mod dyadic;
pub mod error;
pub mod moving;
pub mod norms;
pub mod num;
pub mod sample;
pub mod selector;
pub mod signal;
pub mod square;

pub use dyadic::{cell, enumerate_dyadic, expectation, expectation_profile, DyadicInterval};
pub use error::{Error, Result};
pub use moving::{moving_average, window_extrema, window_extrema_naive, WindowExtrema};
pub use selector::{CellTable, Selector, TabulatedSelector};
pub use signal::{GridMode, GridSpec, PrefixSums, Signal};
pub use square::{s_inf, s_selector, s_sup, tail_bound, EvalOptions, ScaleRange, SquareFunctionResult};
