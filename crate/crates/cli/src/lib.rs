//! Command-line front end: on-disk tensor and model formats plus the
//! `synth`, `fit`, `predict`, `eval`, `cv` and `bench` subcommands.

pub mod commands;
pub mod error;
pub mod model_file;
pub mod tensor_file;

pub use error::CliError;
