pub mod bench;
pub mod calibrate;
pub mod diagnose;
pub mod experiment;
