//! A small separation-logic verifier for an annotated pointer language.
//!
//! [`symex`] verifies functions and records the choices it made as hint
//! trees. [`mirror`] replays those hints without any search, and [`interp`]
//! runs programs concretely.

pub mod certificate;
pub mod corpus;
pub mod heap;
pub mod interp;
pub mod lang;
pub mod logic;
pub mod mirror;
pub mod symex;
