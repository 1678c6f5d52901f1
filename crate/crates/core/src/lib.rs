pub mod approx;
pub mod complex;
pub mod decomposition;
pub mod familycheck;
pub mod polynomial;
pub mod positivity;
pub mod scalar;
pub mod symmetry;
pub mod tensorbridge;
