//! Independent oracles and property checks shared by the integration tests.

#![allow(dead_code)]

pub mod oracle;
pub mod props;
