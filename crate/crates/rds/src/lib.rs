pub mod base;
pub mod config;
pub mod eigenfunction;
pub mod error;
pub mod examples;
pub mod interval;
pub mod maps;
pub mod matrix;
pub mod meta;
pub mod pi;
pub mod report;
pub mod run;
pub mod sft;
pub mod step;
pub mod suite;
