//! Benchmark problems.

pub mod libsvm;
pub mod logistic;
pub mod nlls;
pub mod quadratic;
pub mod reference;
pub mod registry;

pub use libsvm::{load_libsvm, parse_libsvm, write_libsvm, Dataset};
pub use logistic::{logistic_value, LogisticProblem};
pub use nlls::{jacobian, residuals, standard_start, NllsName, NllsProblem, NllsSpec, NoiseModel};
pub use quadratic::{QuadraticProblem, QuadraticSpec};
pub use reference::{reference_optimum, ReferenceOptimum, SolverSettings};
pub use registry::{build_problem, ProblemInstance, ProblemSpec};
