use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand::Rng;
use serde::Deserialize;

use ringlab::ideal::{factor_rational_prime, IdealDescriptor};
use ringlab::measure::Measure;
use ringlab::ring::ideal_from_parts;
use ringlab::{ElementSet, Elem, FiniteQuotientRing, NumberFieldSpec};

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Inspect,
    Sumproduct,
    Decay,
    Generation,
    Covering,
    Glueing,
    IdentitySuite,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Inspect => "inspect",
            Kind::Sumproduct => "sumproduct",
            Kind::Decay => "decay",
            Kind::Generation => "generation",
            Kind::Covering => "covering",
            Kind::Glueing => "glueing",
            Kind::IdentitySuite => "identity-suite",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub kind: Kind,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub capacity: Option<u128>,
    pub ring: Option<RingSpec>,
    #[serde(default)]
    pub params: toml::Table,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow!("config {}: {e}", path.display()))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimePart {
    pub p: u64,
    pub g: Option<Vec<u64>>,
    pub exponent: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSpec {
    /// Builtin field label; ignored when `custom` is given.
    #[serde(default = "default_field")]
    pub field: String,
    pub custom: Option<NumberFieldSpec>,
    /// Rational integer `n`, meaning the ideal `nO`.
    pub modulus: Option<u64>,
    pub primes: Option<Vec<PrimePart>>,
}

fn default_field() -> String {
    "Q".into()
}

impl RingSpec {
    pub fn field(&self) -> Result<NumberFieldSpec> {
        match &self.custom {
            Some(f) => {
                f.validate()?;
                Ok(f.clone())
            }
            None => NumberFieldSpec::builtin(&self.field).ok_or_else(|| {
                anyhow!(
                    "unknown field {:?}; builtin labels are {}",
                    self.field,
                    NumberFieldSpec::builtin_labels().join(", ")
                )
            }),
        }
    }

    pub fn modulus(&self, field: &NumberFieldSpec) -> Result<IdealDescriptor> {
        match (&self.modulus, &self.primes) {
            (Some(n), None) => principal_ideal(field, *n),
            (None, Some(parts)) => {
                let parts: Vec<(u64, Option<Vec<u64>>, u32)> =
                    parts.iter().map(|p| (p.p, p.g.clone(), p.exponent)).collect();
                Ok(ideal_from_parts(field, &parts)?)
            }
            _ => bail!("[ring] needs exactly one of `modulus` or `primes`"),
        }
    }

    pub fn build(&self, capacity: Option<u128>) -> Result<FiniteQuotientRing> {
        let field = self.field()?;
        let modulus = self.modulus(&field)?;
        Ok(match capacity {
            Some(c) => FiniteQuotientRing::build_with_capacity(&field, &modulus, c)?,
            None => FiniteQuotientRing::build(&field, &modulus)?,
        })
    }
}

/// `nO = ∏ 𝒫^{e_𝒫 v_p(n)}`.
fn principal_ideal(field: &NumberFieldSpec, n: u64) -> Result<IdealDescriptor> {
    if n < 2 {
        bail!("modulus must be at least 2");
    }
    let mut factors = Vec::new();
    let (mut m, mut p) = (n, 2u64);
    while m > 1 {
        if p * p > m {
            p = m;
        }
        let mut v = 0;
        while m % p == 0 {
            m /= p;
            v += 1;
        }
        if v > 0 {
            for pr in factor_rational_prime(field, p)? {
                let e = pr.e;
                factors.push((pr, e * v));
            }
        }
        p += 1;
    }
    Ok(IdealDescriptor::new(factors)?)
}

/// An element given as an integer or as power-basis coefficients.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ElemSpec {
    Int(i64),
    Coeffs(Vec<i64>),
}

impl ElemSpec {
    pub fn resolve(&self, ring: &FiniteQuotientRing) -> Elem {
        match self {
            ElemSpec::Int(n) => ring.from_int(*n),
            ElemSpec::Coeffs(c) => ring.from_poly(c),
        }
    }
}

pub fn resolve_set(ring: &FiniteQuotientRing, elems: &[ElemSpec]) -> ElementSet {
    ElementSet::from_elems(ring, elems.iter().map(|e| e.resolve(ring)))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    Uniform,
    Units,
    Dirac { at: ElemSpec },
    Set { elements: Vec<ElemSpec> },
    Random { max_weight: Option<u32> },
    Csv { path: PathBuf },
}

impl MeasureSpec {
    pub fn build<R: Rng>(&self, ring: &FiniteQuotientRing, rng: &mut R, base: &Path) -> Result<Measure> {
        Ok(match self {
            MeasureSpec::Uniform => Measure::uniform(ring),
            MeasureSpec::Units => Measure::uniform_on(ring, &ring.units())?,
            MeasureSpec::Dirac { at } => Measure::dirac(ring, at.resolve(ring)),
            MeasureSpec::Set { elements } => Measure::uniform_on(ring, &resolve_set(ring, elements))?,
            MeasureSpec::Random { max_weight } => Measure::random_exact(ring, rng, max_weight.unwrap_or(10)),
            MeasureSpec::Csv { path } => {
                let path = base.join(path);
                let file = std::fs::File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
                Measure::from_csv(ring, file)?
            }
        })
    }
}
