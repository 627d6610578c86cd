pub mod bench;
pub mod enumerate;
pub mod eval;
pub mod gen_data;
pub mod symmetry;
pub mod train;
