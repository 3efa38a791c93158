//! Command implementations behind the `cred` binary and the HTTP session
//! service.

pub mod commands;
pub mod serve;
