//! JSON field specifications: the single interchange format of the CLI.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use unfolding_core::cpoly::build_p;
use unfolding_core::series::{RMonomial, UnfoldingField};
use unfolding_core::{Error, Result};

fn c(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RMonomialSpec {
    pub i: usize,
    pub n: usize,
    pub c: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Truncation {
    pub nx: usize,
    pub ny: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { nx: 8, ny: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DynamicsControls {
    /// disk radius; 0 means "derive from the root radius"
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub theta_profile: Vec<f64>,
    /// absolute and relative integration tolerances; 0 means library default
    #[serde(default)]
    pub tolerances: [f64; 2],
}

impl Default for DynamicsControls {
    fn default() -> Self {
        DynamicsControls {
            rho: 0.0,
            theta_profile: vec![0.0],
            tolerances: [0.0, 0.0],
        }
    }
}

/// Serialized description of an unfolding `U (X-hat + ...)` with
/// `P(x) = x^{k+1} + eps_{k-1} x^{k-1} + ... + eps_0` (eps listed in
/// ascending degree) and `R = sum c x^i (P^tau y)^n`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FieldSpec {
    pub k: usize,
    pub eps: Vec<[f64; 2]>,
    pub mu: [f64; 2],
    #[serde(default)]
    pub tau: usize,
    #[serde(default, rename = "R")]
    pub r: Vec<RMonomialSpec>,
    #[serde(default, rename = "U", skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub dynamics: DynamicsControls,
}

impl FieldSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|_| Error::Argument("spec: malformed JSON field spec"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Argument("spec: k must be >= 1"));
        }
        if self.eps.len() != self.k {
            return Err(Error::Argument("spec: eps must list exactly k entries"));
        }
        for m in &self.r {
            if m.n == 0 {
                return Err(Error::Argument("spec: R monomials need y-power n >= 1"));
            }
            if m.i < 1 || m.i > self.k {
                return Err(Error::Argument("spec: R monomial x-degree must be in 1..=k"));
            }
        }
        Ok(())
    }

    pub fn mu(&self) -> Complex64 {
        c(self.mu)
    }

    pub fn eps_vec(&self) -> Vec<Complex64> {
        self.eps.iter().map(|&e| c(e)).collect()
    }

    pub fn to_field(&self) -> Result<UnfoldingField> {
        self.validate()?;
        let p = build_p(self.k, &self.eps_vec())?;
        let mut field = UnfoldingField::model(p, self.mu());
        field.tau = self.tau;
        field.r_monomials = self
            .r
            .iter()
            .map(|m| RMonomial {
                i: m.i,
                n: m.n,
                coeff: c(m.c),
            })
            .collect();
        field.validate()?;
        Ok(field)
    }

    /// disk radius for dynamics runs: explicit override or root-radius based
    pub fn rho(&self) -> f64 {
        if self.dynamics.rho > 0.0 {
            self.dynamics.rho
        } else {
            let rr = unfolding_core::cpoly::root_radius(&self.eps_vec());
            (2.0 * rr).max(1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FieldSpec {
        FieldSpec {
            k: 1,
            eps: vec![[-1.0, 0.25]],
            mu: [0.3, 0.1],
            tau: 0,
            r: vec![RMonomialSpec {
                i: 1,
                n: 2,
                c: [0.05, 0.0],
            }],
            u: None,
            truncation: Truncation::default(),
            dynamics: DynamicsControls::default(),
        }
    }

    #[test]
    fn round_trip_stable() {
        let s = sample();
        let j1 = s.to_json();
        let parsed = FieldSpec::parse(&j1).unwrap();
        assert_eq!(parsed, s);
        // serialize(parse(serialize)) is byte-identical
        assert_eq!(parsed.to_json(), j1);
    }

    #[test]
    fn defaults_fill_in() {
        let s = FieldSpec::parse(r#"{"k":1,"eps":[[-1.0,0.0]],"mu":[0.0,0.0]}"#).unwrap();
        assert_eq!(s.truncation.nx, 8);
        assert_eq!(s.dynamics.theta_profile, vec![0.0]);
        assert!(s.to_field().is_ok());
    }

    #[test]
    fn validation_mirrors_library() {
        let bad = FieldSpec::parse(r#"{"k":2,"eps":[[-1.0,0.0]],"mu":[0.0,0.0]}"#).unwrap();
        assert!(bad.validate().is_err());
        assert!(FieldSpec::parse("{not json").is_err());
    }
}
