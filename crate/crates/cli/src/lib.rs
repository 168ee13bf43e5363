//! Instance file format shared by the `adaptive-contracts` binary.

pub mod instance;
