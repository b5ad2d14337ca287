//! File formats, instance generators and command implementations behind the
//! `spectrum-auction` binary.

pub mod checks;
pub mod commands;
pub mod error;
pub mod formats;
pub mod instances;
