//! Self-contained decomposition files: complex, action, locals, and an
//! optional expected polynomial or elementary terms.

use serde::{Deserialize, Serialize};

use omega_core::complex::{ComplexJson, WeightedComplex};
use omega_core::decomposition::{DecompositionJson, OmegaGDecomposition};
use omega_core::polynomial::{FloatPoly, PolynomialJson, RationalPoly};
use omega_core::scalar::Surd;
use omega_core::symmetry::{ActionJson, SymmetryAction};

use crate::errors::{CliError, ErrorKind};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Bundle {
    pub complex: ComplexJson,
    /// Absent means the trivial group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionJson>,
    /// Elementary terms, one polynomial per site, for symmetrization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<Vec<PolynomialJson>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<PolynomialJson>,
}

pub fn parse_bundle(text: &str) -> Result<Bundle, CliError> {
    Ok(serde_json::from_str(text)?)
}

pub enum Decomposition {
    Exact(OmegaGDecomposition<Surd>),
    Float(OmegaGDecomposition<f64>),
}

pub enum Terms {
    Exact(Vec<Vec<RationalPoly>>),
    Float(Vec<Vec<FloatPoly>>),
}

impl Bundle {
    pub fn complex(&self) -> Result<WeightedComplex, CliError> {
        Ok(WeightedComplex::from_json(&self.complex)?)
    }

    pub fn action(&self, max_group: usize) -> Result<SymmetryAction, CliError> {
        let c = self.complex()?;
        Ok(match &self.action {
            Some(a) => SymmetryAction::from_json(&c, a, max_group)?,
            None => SymmetryAction::trivial(&c),
        })
    }

    fn all_rational<'a>(mut polys: impl Iterator<Item = &'a PolynomialJson>) -> bool {
        polys.all(|p| p.mode == "rational")
    }

    /// Exact when every polynomial in the file is rational.
    pub fn is_exact(&self) -> bool {
        let locals = self.decomposition.iter().flat_map(|d| d.locals.iter().map(|l| &l.poly));
        let terms = self.terms.iter().flatten().flatten();
        Self::all_rational(locals.chain(terms).chain(self.expected.iter()))
    }

    pub fn decomposition(&self, action: &SymmetryAction) -> Result<Decomposition, CliError> {
        let d = self
            .decomposition
            .as_ref()
            .ok_or_else(|| CliError::new(ErrorKind::Input, "bundle has no \"decomposition\""))?;
        Ok(if self.is_exact() { Decomposition::Exact(d.to_surd(action)?) } else { Decomposition::Float(d.to_float(action)?) })
    }

    pub fn terms(&self) -> Result<Terms, CliError> {
        let t = self.terms.as_ref().ok_or_else(|| CliError::new(ErrorKind::Input, "bundle has no \"terms\""))?;
        Ok(if self.is_exact() {
            Terms::Exact(
                t.iter()
                    .map(|row| row.iter().map(RationalPoly::from_json).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<_, _>>()?,
            )
        } else {
            Terms::Float(
                t.iter()
                    .map(|row| row.iter().map(FloatPoly::from_json).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<_, _>>()?,
            )
        })
    }
}
