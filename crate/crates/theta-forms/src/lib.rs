//! Numerical engine for theta constants on the Siegel upper half-space and
//! the vector-valued modular forms built from them: gradients at two-torsion
//! points, the rank criteria detecting decomposable principally polarized
//! abelian varieties, pairings producing holomorphic differential forms, and
//! exact E8 lattice counts backing the Fourier-coefficient computations.

pub mod e8;
pub mod error;
pub mod f2char;
pub mod forms;
pub mod linalg;
pub mod symplectic;
pub mod theta;

pub use error::{Error, Result};
pub use f2char::{Characteristic, F2Vector, Parity, ParityFilter};
pub use linalg::{CMatrix, CVector, OrderedSubset};
pub use symplectic::{SubgroupTag, SymplecticElement};
pub use theta::{PeriodMatrix, ThetaEngine};
