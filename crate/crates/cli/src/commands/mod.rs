pub mod evaluate;
pub mod gen;
pub mod mask;
pub mod reconstruct;
pub mod train;
