//! File formats, wall-clock streaming and the command-line front end for
//! [`gaitkin_core`].

pub mod cli;
pub mod config;
pub mod data;
pub mod io;
pub mod report;
pub mod run;
pub mod timed;
