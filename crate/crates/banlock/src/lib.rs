//! banlock: a workbench for locking combinational netlists with
//! Full-Lock and logic-enhanced Banyan (LEB) schemes, and for attacking
//! locked netlists with the miter-based SAT attack under exact and
//! relaxed system models.

pub mod netlist;

pub mod attack;

pub mod banyan;

pub mod cec;

pub mod cnf;

pub mod harness;

pub mod locking;

pub mod testutil;

