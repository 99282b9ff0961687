pub mod bench;
pub mod eval;
pub mod fuse;
pub mod sweep;
