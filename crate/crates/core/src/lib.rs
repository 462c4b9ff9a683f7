//! Severi varieties on Hirzebruch surfaces: divisor numerology, the dual
//! graph of the standard degeneration, markings and their moves, the
//! equivalence engine, and rational curves on toric surfaces.

pub mod equiv;
pub mod gamma;
pub mod lattice;
pub mod markings;
pub mod toric;
pub mod union_find;
