//! Monogenic number fields `K = Q(θ)` of degree at most 4 with `O = Z[θ]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::poly;

/// A declared subfield `Q(α)` with `α ∈ Z[θ]` given by its coordinates in
/// the power basis `1, θ, …, θ^{d-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubfieldSpec {
    pub label: String,
    pub min_poly: Vec<i64>,
    pub embedding: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumberFieldSpec {
    pub label: String,
    /// Monic minimal polynomial of `θ`, lowest degree first.
    pub min_poly: Vec<i64>,
    #[serde(default)]
    pub subfields: Option<Vec<SubfieldSpec>>,
}

/// A subfield of `K` as used by the subring machinery: its ring of
/// integers is `Z[α]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Subfield {
    pub label: String,
    pub degree: usize,
    pub generator: Vec<i64>,
}

impl NumberFieldSpec {
    pub fn new(label: &str, min_poly: Vec<i64>) -> Result<Self> {
        let f = Self {
            label: label.to_string(),
            min_poly,
            subfields: None,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn with_subfields(mut self, subfields: Vec<SubfieldSpec>) -> Result<Self> {
        self.subfields = Some(subfields);
        self.validate()?;
        Ok(self)
    }

    pub fn rationals() -> Self {
        Self {
            label: "Q".into(),
            min_poly: vec![0, 1],
            subfields: None,
        }
    }

    pub fn gaussian() -> Self {
        Self {
            label: "Q(i)".into(),
            min_poly: vec![1, 0, 1],
            subfields: None,
        }
    }

    /// Known fields addressable by label from configuration files.
    pub fn builtin(label: &str) -> Option<Self> {
        let spec = match label {
            "Q" => Self::rationals(),
            "Q(i)" => Self::gaussian(),
            "Q(sqrt2)" => Self {
                label: label.into(),
                min_poly: vec![-2, 0, 1],
                subfields: None,
            },
            "Q(sqrt-2)" => Self {
                label: label.into(),
                min_poly: vec![2, 0, 1],
                subfields: None,
            },
            "Q(cbrt2)" => Self {
                label: label.into(),
                min_poly: vec![-2, 0, 0, 1],
                subfields: None,
            },
            // θ = ζ8, so i = θ², √2 = θ − θ³, √−2 = θ + θ³
            "Q(zeta8)" => Self {
                label: label.into(),
                min_poly: vec![1, 0, 0, 0, 1],
                subfields: Some(vec![
                    SubfieldSpec {
                        label: "Q(i)".into(),
                        min_poly: vec![1, 0, 1],
                        embedding: vec![0, 0, 1, 0],
                    },
                    SubfieldSpec {
                        label: "Q(sqrt2)".into(),
                        min_poly: vec![-2, 0, 1],
                        embedding: vec![0, 1, 0, -1],
                    },
                    SubfieldSpec {
                        label: "Q(sqrt-2)".into(),
                        min_poly: vec![2, 0, 1],
                        embedding: vec![0, 1, 0, 1],
                    },
                ]),
            },
            _ => return None,
        };
        Some(spec)
    }

    pub fn builtin_labels() -> &'static [&'static str] {
        &["Q", "Q(i)", "Q(sqrt2)", "Q(sqrt-2)", "Q(cbrt2)", "Q(zeta8)"]
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| LabError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn degree(&self) -> usize {
        self.min_poly.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.min_poly.len().saturating_sub(1);
        if !(1..=4).contains(&d) {
            return invalid(format!("{}: degree {d} outside 1..=4", self.label));
        }
        if self.min_poly[d] != 1 {
            return invalid(format!("{}: minimal polynomial is not monic", self.label));
        }
        if !poly::is_irreducible_over_q(&self.min_poly) {
            return Err(LabError::ReduciblePolynomial(self.label.clone()));
        }
        for sub in self.subfields.iter().flatten() {
            let sd = sub.min_poly.len().saturating_sub(1);
            if sd == 0 || d % sd != 0 || sub.min_poly[sd] != 1 {
                return invalid(format!("{}: subfield {} has bad degree", self.label, sub.label));
            }
            if sub.embedding.len() != d {
                return invalid(format!(
                    "{}: embedding of {} needs {d} coordinates",
                    self.label, sub.label
                ));
            }
            if !poly::is_irreducible_over_q(&sub.min_poly) {
                return Err(LabError::ReduciblePolynomial(sub.label.clone()));
            }
            let alpha: Vec<i128> = sub.embedding.iter().map(|&a| a as i128).collect();
            let mut acc = vec![0i128; d];
            let mut pow = self.one();
            for &c in &sub.min_poly {
                for k in 0..d {
                    acc[k] += c as i128 * pow[k];
                }
                pow = self.mul(&pow, &alpha);
            }
            if acc.iter().any(|&a| a != 0) {
                return invalid(format!(
                    "{}: declared embedding of {} is not a root of its polynomial",
                    self.label, sub.label
                ));
            }
        }
        Ok(())
    }

    pub fn one(&self) -> Vec<i128> {
        let mut v = vec![0i128; self.degree()];
        v[0] = 1;
        v
    }

    /// `θ` in the power basis (for `d = 1`, `θ` is the integer root of the
    /// linear polynomial).
    pub fn theta(&self) -> Vec<i128> {
        let d = self.degree();
        if d == 1 {
            return vec![-(self.min_poly[0] as i128)];
        }
        let mut v = vec![0i128; d];
        v[1] = 1;
        v
    }

    /// Product in `Z[θ]` of two power-basis coordinate vectors.
    pub fn mul(&self, a: &[i128], b: &[i128]) -> Vec<i128> {
        let d = self.degree();
        let mut prod = poly::int_mul(a, b);
        // reduce modulo the monic minimal polynomial
        for k in (d..prod.len()).rev() {
            let c = prod[k];
            if c != 0 {
                for (j, &fj) in self.min_poly.iter().enumerate().take(d) {
                    prod[k - d + j] -= c * fj as i128;
                }
                prod[k] = 0;
            }
        }
        prod.resize(d, 0);
        prod
    }

    /// Evaluates an integer polynomial at `θ`.
    pub fn eval_poly(&self, coeffs: &[i64]) -> Vec<i128> {
        let d = self.degree();
        let mut acc = vec![0i128; d];
        let theta = self.theta();
        for &c in coeffs.iter().rev() {
            acc = self.mul(&acc, &theta);
            acc[0] += c as i128;
        }
        acc
    }

    /// All subfields including `Q` and `K`, sorted by degree.
    pub fn enumerate_subfields(&self) -> Result<Vec<Subfield>> {
        let d = self.degree();
        let q = Subfield {
            label: "Q".into(),
            degree: 1,
            generator: {
                let mut g = vec![0i64; d];
                g[0] = 1;
                g
            },
        };
        if d == 1 {
            return Ok(vec![q]);
        }
        let mut out = vec![q];
        if d == 4 {
            let declared = self
                .subfields
                .as_ref()
                .ok_or_else(|| LabError::MissingSubfieldData(self.label.clone()))?;
            for s in declared {
                out.push(Subfield {
                    label: s.label.clone(),
                    degree: s.min_poly.len() - 1,
                    generator: s.embedding.clone(),
                });
            }
        }
        let mut theta = vec![0i64; d];
        theta[1] = 1;
        out.push(Subfield {
            label: self.label.clone(),
            degree: d,
            generator: theta,
        });
        out.sort_by_key(|s| s.degree);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for label in NumberFieldSpec::builtin_labels() {
            NumberFieldSpec::builtin(label).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn gaussian_arithmetic() {
        let k = NumberFieldSpec::gaussian();
        let i = k.theta();
        assert_eq!(k.mul(&i, &i), vec![-1, 0]);
        let one_plus_i = vec![1, 1];
        let sq = k.mul(&one_plus_i, &one_plus_i);
        assert_eq!(sq, vec![0, 2]);
    }

    #[test]
    fn subfield_counts() {
        let count = |l: &str| {
            NumberFieldSpec::builtin(l)
                .unwrap()
                .enumerate_subfields()
                .unwrap()
                .len()
        };
        assert_eq!(count("Q"), 1);
        assert_eq!(count("Q(i)"), 2);
        assert_eq!(count("Q(cbrt2)"), 2);
        assert_eq!(count("Q(zeta8)"), 5);
    }

    #[test]
    fn quartic_without_subfield_data_is_rejected() {
        let k = NumberFieldSpec::new("K", vec![1, 0, 0, 0, 1]).unwrap();
        assert!(matches!(
            k.enumerate_subfields(),
            Err(LabError::MissingSubfieldData(_))
        ));
    }

    #[test]
    fn bad_embeddings_are_rejected() {
        let bad = NumberFieldSpec::new("K", vec![1, 0, 0, 0, 1])
            .unwrap()
            .with_subfields(vec![SubfieldSpec {
                label: "Q(sqrt2)".into(),
                min_poly: vec![-2, 0, 1],
                embedding: vec![0, 1, 0, 1],
            }]);
        assert!(bad.is_err());
        assert!(matches!(
            NumberFieldSpec::new("R", vec![-1, 0, 1]),
            Err(LabError::ReduciblePolynomial(_))
        ));
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
label = "Q(zeta8)"
min_poly = [1, 0, 0, 0, 1]

[[subfields]]
label = "Q(i)"
min_poly = [1, 0, 1]
embedding = [0, 0, 1, 0]
"#;
        let k = NumberFieldSpec::from_toml(text).unwrap();
        assert_eq!(k.enumerate_subfields().unwrap().len(), 3);
        assert!(NumberFieldSpec::from_toml("label = \"x\"\nmin_poly = [1, 1]\nbogus = 1").is_err());
    }
}
