pub mod builtins;
pub mod cli;
pub mod config;
pub mod critical;
pub mod exp_laurent;
pub mod mirror;
pub mod num;
pub mod poly;
pub mod report;
pub mod stability;
pub mod surface;
