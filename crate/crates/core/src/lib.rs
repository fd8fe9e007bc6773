//! Transverse almost-Kähler calculus on regular K-contact model manifolds.
//!
//! Everything is computed on the transverse torus of a Heisenberg-type
//! nilmanifold, where basic forms are ordinary periodic forms.

pub mod calculus;
pub mod cli;
pub mod curvature;
pub mod elliptic;
pub mod error;
pub mod flow;
pub mod forms;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod lobpcg;
pub mod moment;
pub mod presets;
pub mod structure;
pub mod suites;

pub use error::{KError, Result};
pub use forms::{random_basic_form, BasicForm};
pub use grid::{DerivativeMode, Grid, ScalarField, TransverseGrid, TrigField};
pub use structure::KContactStructure;
