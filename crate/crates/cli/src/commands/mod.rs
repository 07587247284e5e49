pub mod dataset;
pub mod embed;
pub mod evaluate;
pub mod protocol;
pub mod train;
