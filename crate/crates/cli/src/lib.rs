// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Library behind the `qoc` binary: configuration, output formats, the
//! benchmark harness and the subcommands.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, CliResult};
