//! Low-degree permutation polynomial systems over small finite fields.
//!
//! Field arithmetic ([`gf`]), sparse multivariate polynomials ([`mpoly`]),
//! two permutation oracles ([`permoracle`]), equivalence witnesses
//! ([`equiv`]), and the classifiers for bivariate quadratic systems
//! ([`quadclass`]), 3-homogeneous systems ([`homog3`]) and the binomial
//! `x^3 + a x^{2q+1}` ([`binomial`]).

pub mod binomial;
pub mod conjecture;
pub mod equiv;
pub mod gf;
pub mod homog3;
pub mod linalg;
pub mod mpoly;
pub mod par;
pub mod permoracle;
pub mod quadclass;
pub mod sweep;
pub mod text;

pub use equiv::{apply_witness, verify_witness, EquivError, EquivStep, EquivWitness};
pub use gf::{build_field, Field, FieldConfig, FieldElem, GfError};
pub use linalg::Matrix;
pub use mpoly::{MultiPoly, PolyError, PolySystem};
pub use par::Exec;
pub use permoracle::{brute_force, hermite_check, OracleError, PermVerdict, Witness};
pub use quadclass::{canonical_form, CanonicalClass, CaseLabel, ClassifyError, QuadCoeffs, QuadVerdict};
pub use homog3::{classify_t32, ClassVerdict, HomogSystem, RationalMap};
pub use binomial::{QuadExt, BinomialReport};
