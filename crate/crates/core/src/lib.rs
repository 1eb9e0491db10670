pub mod acceptance;
pub mod arith;
pub mod error;
pub mod moments;
pub mod par;
pub mod quad;
pub mod quadruples;
pub mod report;
pub mod special_sums;
pub mod sum;
pub mod trig_kernel;
pub mod voronoi;
pub mod zeta_line;

pub use error::{Error, Result};
pub use par::Exec;
