//! Dense linear-algebra kernels shared by every stage of the pipeline.

mod cca;
mod corr;
pub mod decomp;
mod gevd;
mod matrix;

pub use cca::{cca, cca_whitened, CcaResult, Whitened};
pub use corr::{corr2, pearson};
pub use gevd::{sym_generalized_eig, GevdResult};
pub use matrix::{dot, norm, Matrix};
