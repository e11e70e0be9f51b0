//! Finite-scale workbench for base resolvability.
//!
//! The crate covers the fills / good-pair calculus on set families, cofinal
//! and interval-avoiding partitions of posets, the grid poset builder, a
//! sandbox for finite forcing conditions, and tri-valued checks on finite
//! fragments of the resulting branch spaces.

pub mod family;
pub mod forcing;
pub mod grid;
pub mod ipart;
pub mod order;
pub mod partition;
pub mod sample;
pub mod space;
pub mod text;

pub use order::{Elem, FinitePoset, Order};
pub use partition::Partition;
