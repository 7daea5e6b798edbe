//! Contraction calculus and moment machinery for free Wigner and free Poisson
//! multiple integrals.
//!
//! Kernels are step functions on a uniform grid ([`StepKernel`]), so arc and
//! star contractions, inner products and chaos products are exact up to
//! scalar rounding. Moments of products of multiple integrals are computed
//! either by enumerating contraction words or by multiplying chaos elements,
//! and are compared against free cumulant targets over non-crossing
//! partitions.
//!
//! ```
//! use freechaos::{Grid, Kernel, wigner_moment};
//!
//! let grid = Grid::new(1.0, 4).unwrap();
//! let w = 1.0 / grid.width();
//! let f = Kernel::from_entries(grid, 2, (0..3).map(|k| (vec![k, k], w))).unwrap();
//! let m4 = wigner_moment(&[&f, &f, &f, &f]).unwrap();
//! assert!((m4 - 21.0).abs() < 1e-9);
//! ```

pub mod chaos;
pub mod charlier;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod json;
pub mod kernel;
pub mod moments;
pub mod oracle;
pub mod partition;
pub mod scalar;
pub mod words;

pub use chaos::{ChaosElement, Flavor};
pub use distributions::{
    catalan, equalparam_moment_closed, free_poisson_moment_single, semicircle_moment,
    EqualParamSpec, FreeFamilySpec, LimitSpec,
};
pub use error::{ChaosError, Result};
pub use harness::{
    check_contraction_conditions, check_em_vanishing, check_fmt_conditions, verify, Builder,
    ConvergenceReport, FamilyConfig, KernelFamily, TargetShape, Theorem, Verdict, VerifyOptions,
};
pub use json::KernelJson;
pub use kernel::{Grid, InequalityCheck, KernelBounds, StarBoundCheck, StepKernel};
pub use moments::{
    eval_arc_word, eval_star_word, moment, poisson_moment, product_moment, wigner_moment,
    MomentOptions, MomentPath, MomentResult,
};
pub use oracle::{estimate_moments, MatrixModel, MomentEstimate, SimConfig};
pub use partition::{
    count_r, enumerate_nc, enumerate_nc2, enumerate_nc_ge2, kernel_partition, leq_refinement,
    partition_to_word, word_to_partition, LabelWord, NCPartition,
};
pub use scalar::{Rational, Real, Scalar};
pub use words::{enumerate_star_words, enumerate_words, ContractionWord, StarWord, WordSet};

/// Double-precision kernel.
pub type Kernel = StepKernel<f64>;
/// Single-precision kernel.
pub type Kernel32 = StepKernel<f32>;
/// Kernel with exact rational coefficients.
pub type ExactKernel = StepKernel<Rational>;
/// Double-precision chaos element.
pub type Chaos = ChaosElement<f64>;
/// Chaos element with exact rational coefficients.
pub type ExactChaos = ChaosElement<Rational>;
