//! Weak-pulse quantum key distribution under photon-number-splitting attacks.
//!
//! Models BB84 and the four-state protocol whose sifting announces a pair of
//! non-orthogonal states instead of a basis, and computes how much an
//! eavesdropper learns at zero error rate as a function of line loss.

pub mod qcore;
pub mod photonics;
pub mod protocol;
pub mod eavesdrop;
pub mod cli;
