pub mod cli;
pub mod flow;
pub mod forest_io;
mod fsutil;
pub mod render;
pub mod rf;

pub use fsutil::write_atomic;
