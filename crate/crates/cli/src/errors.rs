use serde::Serialize;

use omega_core::approx::ApproxError;
use omega_core::complex::ComplexError;
use omega_core::decomposition::DecompositionError;
use omega_core::familycheck::FamilyError;
use omega_core::polynomial::PolynomialError;
use omega_core::positivity::PositivityError;
use omega_core::symmetry::SymmetryError;
use omega_core::tensorbridge::TensorError;

use crate::{EXIT_FAIL, EXIT_GUARD, EXIT_USAGE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    /// Bad arguments or unreadable file.
    Usage,
    /// Input parsed but failed validation.
    Input,
    /// A precondition of the operation does not hold.
    Rejected,
    /// A size or search guard was hit.
    Guard,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage | ErrorKind::Input => EXIT_USAGE,
            ErrorKind::Rejected => EXIT_FAIL,
            ErrorKind::Guard => EXIT_GUARD,
        }
    }
}

fn symmetry_kind(e: &SymmetryError) -> ErrorKind {
    use SymmetryError as E;
    match e {
        E::GroupTooLarge { .. } | E::SearchSpaceTooLarge { .. } => ErrorKind::Guard,
        E::ActionNotFree | E::ActionNotBlending | E::NotConnected => ErrorKind::Rejected,
        _ => ErrorKind::Input,
    }
}

fn decomposition_kind(e: &DecompositionError) -> ErrorKind {
    use DecompositionError as E;
    match e {
        E::GuardExceeded { .. } | E::SizeTooLarge { .. } => ErrorKind::Guard,
        E::Symmetry(s) => symmetry_kind(s),
        E::Json { .. } | E::BadAssignment { .. } | E::BadLocal { .. } | E::Polynomial { .. } | E::Scalar { .. } => ErrorKind::Input,
        _ => ErrorKind::Rejected,
    }
}

fn positivity_kind(e: &PositivityError) -> ErrorKind {
    use PositivityError as E;
    match e {
        E::SearchSpaceTooLarge { .. } => ErrorKind::Guard,
        E::Decomposition(d) => decomposition_kind(d),
        E::Symmetry(s) => symmetry_kind(s),
        E::Json { .. } | E::Polynomial { .. } | E::DimensionMismatch { .. } | E::NotSymmetric { .. } => ErrorKind::Input,
        _ => ErrorKind::Rejected,
    }
}

fn tensor_kind(e: &TensorError) -> ErrorKind {
    use TensorError as E;
    match e {
        E::GuardExceeded { .. } => ErrorKind::Guard,
        E::Decomposition(d) => decomposition_kind(d),
        E::Positivity(p) => positivity_kind(p),
        E::Json { .. } | E::BadShape { .. } | E::Polynomial { .. } => ErrorKind::Input,
        _ => ErrorKind::Rejected,
    }
}

fn family_kind(e: &FamilyError) -> ErrorKind {
    use FamilyError as E;
    match e {
        E::SizeTooLarge { .. } => ErrorKind::Guard,
        E::Tensor(t) => tensor_kind(t),
        E::Decomposition(d) => decomposition_kind(d),
        E::BadFamily { .. } | E::Json { .. } => ErrorKind::Input,
    }
}

fn approx_kind(e: &ApproxError) -> ErrorKind {
    use ApproxError as E;
    match e {
        E::TooManySamples { .. } => ErrorKind::Guard,
        E::Positivity(p) => positivity_kind(p),
        E::Decomposition(d) => decomposition_kind(d),
        E::Json { .. } | E::BadWitness { .. } | E::BadEpsilon { .. } | E::Polynomial { .. } => ErrorKind::Input,
        _ => ErrorKind::Rejected,
    }
}

macro_rules! classify {
    ($($t:ty => $f:expr),* $(,)?) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                let kind: fn(&$t) -> ErrorKind = $f;
                CliError::new(kind(&e), e.to_string())
            }
        })*
    };
}

classify! {
    ComplexError => |_| ErrorKind::Input,
    PolynomialError => |_| ErrorKind::Input,
    SymmetryError => symmetry_kind,
    DecompositionError => decomposition_kind,
    PositivityError => positivity_kind,
    TensorError => tensor_kind,
    FamilyError => family_kind,
    ApproxError => approx_kind,
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new(ErrorKind::Input, format!("invalid json: {e}"))
    }
}
