pub mod evaluate;
pub mod prepare;
pub mod report;
pub mod sweep;
pub mod synth;
pub mod train;
