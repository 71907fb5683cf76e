//! Dense complex linear algebra over explicitly factored tensor spaces.
//!
//! [`ComplexMatrix`] is a row-major dense matrix of `Complex64`.
//! [`TensorSpace`] records an ordered list of labelled slot dimensions and
//! drives Kronecker assembly, slot permutation, and partial traces.
//! [`HSIndex`] addresses the Hilbert-Schmidt product basis used throughout
//! the term-type machinery.

mod eig;
mod hs;
mod matrix;
mod tensor;

pub use eig::{eig_hermitian, project_psd};
pub use hs::{hs_basis, hs_expand, hs_expand_hermitian, hs_reconstruct, hs_reconstruct_real, HSIndex};
pub use matrix::{kron, ComplexMatrix};
pub use tensor::{multi_indices, Slot, TensorSpace};
