//! Local (LOCC) discrimination of orthonormal bipartite pure states.
//!
//! Pipeline: a [`states::StateFamily`] yields operators `X_l`; their Gram
//! products span the traceless Hermitian space [`kspace`]; zero vectors of
//! its joint numerical range ([`jnr`]) are deflated into a distinguishing
//! basis ([`basisbuilder`]); [`protocol`] turns that basis into a two-round
//! measurement scheme, which [`simulator`] evaluates exactly and by sampling.

pub mod basisbuilder;
pub mod cli;
pub mod jnr;
pub mod kspace;
pub mod numerics;
pub mod pipeline;
pub mod protocol;
pub mod simulator;
pub mod states;
