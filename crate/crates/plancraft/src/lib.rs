//! Command-line tool and HTTP service for interactive project planning.

pub mod cli;
pub mod service;
pub mod store;
pub mod views;
