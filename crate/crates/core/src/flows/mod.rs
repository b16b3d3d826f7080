//! Numeric side: the fibration `π`, spectral radius, flows of shear and
//! overshear fields, Möbius maps, automorphism words and the composite
//! algorithms approximating sums and brackets of complete fields.

mod algorithms;
mod atoms;
mod fibre;
mod matrix;
mod sampling;

pub use algorithms::{
    algorithm_bracket, algorithm_sum, bracket_derivative, central_difference, convergence_errors, forward_difference,
    generator_flow_real, iterate_algorithm, symmetric_pair_flow, Algorithm, AlgorithmRef, BracketAlgorithm, FieldFlow,
    IdentityFlow, SumAlgorithm,
};
pub use atoms::{
    apply_word, epsilon, fibre_drift, field_at_point, generator_flow, Atom, AutomorphismWord, Moebius, Overshear,
};
pub use fibre::{
    char_poly, eigenvalues, in_spectral_ball, in_symmetrized_polydisc, poly_roots, schur_cohn_stable,
    spectral_radius, FibreCoordinates,
};
pub use matrix::{ComplexMatrix, MatrixJson, C64};
pub use sampling::{
    overshear_catalog, random_ball_matrix, random_ball_matrix_with, random_unitary, rng_from_seed, uniform_disc,
    AtomSampler, BALL_SAMPLE_RADIUS,
};
