//! Symbolic control of networked control systems: finite abstractions of
//! incrementally stable plants under network-induced timing uncertainty,
//! maximal robust non-blocking controller synthesis against automaton
//! specifications, and a discrete-event network simulator for closed-loop
//! validation.

pub mod geom;
pub mod dynamics;
