// SPDX-License-Identifier: Apache-2.0

//! Scenario files, tables, the invariant suite and the `taper-tpa` command.

pub mod app;
pub mod config;
pub mod table;
pub mod verify;
