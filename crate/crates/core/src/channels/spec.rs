//! JSON-facing channel, input-law and auxiliary descriptions.
//!
//! Complex entries are a bare number or an `[re, im]` pair. A matrix is either
//! a single complex entry (1x1) or a list of rows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::{Constellation, Kernel, Pmf};
use crate::linalg::CMatrix;

use super::{make_collision, AuxSpec, Carrier, Channel, CollisionKernel, DiscreteMto, FadingMto, GaussianMto, ParallelMto, ProductDist};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexSpec> for Complex64 {
    fn from(c: ComplexSpec) -> Self {
        match c {
            ComplexSpec::Real(r) => Complex64::new(r, 0.0),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(ComplexSpec),
    Rows(Vec<Vec<ComplexSpec>>),
}

impl MatrixSpec {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        match self {
            MatrixSpec::Scalar(c) => Ok(CMatrix::from_element(1, 1, (*c).into())),
            MatrixSpec::Rows(rows) => {
                let n = rows.len();
                let m = rows.first().map_or(0, Vec::len);
                if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
                    return Err(Error::Dimension("matrix rows must be non-empty and of equal length".into()));
                }
                Ok(CMatrix::from_fn(n, m, |i, j| rows[i][j].into()))
            }
        }
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let entry = |z: Complex64| {
            if z.im == 0.0 {
                ComplexSpec::Real(z.re)
            } else {
                ComplexSpec::Pair([z.re, z.im])
            }
        };
        if m.nrows() == 1 && m.ncols() == 1 {
            return MatrixSpec::Scalar(entry(m[(0, 0)]));
        }
        MatrixSpec::Rows((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| entry(m[(i, j)])).collect()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedConstellation {
    Bpsk,
    Qpsk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstellationSpec {
    Named(NamedConstellation),
    Points(Vec<ComplexSpec>),
}

impl ConstellationSpec {
    pub fn build(&self) -> Result<Constellation> {
        match self {
            ConstellationSpec::Named(NamedConstellation::Bpsk) => Ok(Constellation::bpsk()),
            ConstellationSpec::Named(NamedConstellation::Qpsk) => Ok(Constellation::qpsk()),
            ConstellationSpec::Points(p) => Constellation::new(p.iter().map(|&c| c.into()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteSpec {
    /// Input alphabet size per user, user 1 first.
    pub inputs: Vec<usize>,
    pub y1_size: usize,
    /// `p(Y_i | X_i)` for users 2..K.
    pub direct: Vec<Kernel>,
    /// `p(V | X_2..X_K)` over the row-major interferer product.
    pub interference: Kernel,
    pub f1: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub direct: Vec<MatrixSpec>,
    pub cross: Vec<MatrixSpec>,
    pub powers: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constellations: Option<Vec<ConstellationSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParallelSpec {
    pub carriers: Vec<ChannelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_power: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSpec {
    pub sigma_direct: Vec<f64>,
    pub sigma_cross: Vec<f64>,
    pub powers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionKind {
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CollisionKernelSpec {
    Kind(CollisionKind),
    Constant { constant: f64 },
    Table { table: Kernel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionSpec {
    /// Alphabet sizes including the silent symbol at index 0.
    pub inputs: Vec<usize>,
    pub kernel: CollisionKernelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ChannelSpec {
    Discrete(DiscreteSpec),
    Gaussian(GaussianSpec),
    Parallel(ParallelSpec),
    Fading(FadingSpec),
    Collision(CollisionSpec),
}

impl ChannelSpec {
    pub fn build(&self) -> Result<Channel> {
        match self {
            ChannelSpec::Discrete(s) => Ok(Channel::Discrete(DiscreteMto::new(
                s.inputs.clone(),
                s.y1_size,
                s.direct.clone(),
                s.interference.clone(),
                s.f1.clone(),
            )?)),
            ChannelSpec::Gaussian(s) => Ok(Channel::Gaussian(build_gaussian(s)?)),
            ChannelSpec::Parallel(s) => {
                let carriers = s
                    .carriers
                    .iter()
                    .map(|c| match c.build()? {
                        Channel::Discrete(d) => Ok(Carrier::Discrete(d)),
                        Channel::Gaussian(g) => Ok(Carrier::Gaussian(g)),
                        other => Err(Error::InvalidChannel(format!(
                            "a {} channel cannot be a carrier",
                            other.family()
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Channel::Parallel(ParallelMto::new(carriers, s.shared_power.clone())?))
            }
            ChannelSpec::Fading(s) => Ok(Channel::Fading(FadingMto::new(
                s.sigma_direct.clone(),
                s.sigma_cross.clone(),
                s.powers.clone(),
            )?)),
            ChannelSpec::Collision(s) => {
                let kernel = match &s.kernel {
                    CollisionKernelSpec::Kind(CollisionKind::Deterministic) => CollisionKernel::Deterministic,
                    CollisionKernelSpec::Constant { constant } => CollisionKernel::Constant(*constant),
                    CollisionKernelSpec::Table { table } => CollisionKernel::Table(table.clone()),
                };
                Ok(Channel::Discrete(make_collision(s.inputs.clone(), kernel)?))
            }
        }
    }

    pub fn from_discrete(ch: &DiscreteMto) -> Self {
        ChannelSpec::Discrete(DiscreteSpec {
            inputs: ch.inputs().to_vec(),
            y1_size: ch.y1_size(),
            direct: ch.direct_kernels().to_vec(),
            interference: ch.interference().clone(),
            f1: ch.f1().to_vec(),
        })
    }
}

fn build_gaussian(s: &GaussianSpec) -> Result<GaussianMto> {
    let direct = s.direct.iter().map(MatrixSpec::to_matrix).collect::<Result<Vec<_>>>()?;
    let cross = s.cross.iter().map(MatrixSpec::to_matrix).collect::<Result<Vec<_>>>()?;
    let ch = GaussianMto::new(direct, cross, s.powers.clone())?;
    match &s.constellations {
        None => Ok(ch),
        Some(cs) => ch.with_constellations(cs.iter().map(ConstellationSpec::build).collect::<Result<_>>()?),
    }
}

/// Input laws: probability vectors (discrete users or constellation weights)
/// or covariance matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DistSpec {
    Pmfs(Vec<Vec<f64>>),
    Covariances(Vec<MatrixSpec>),
}

impl DistSpec {
    pub fn build(&self) -> Result<ProductDist> {
        match self {
            DistSpec::Pmfs(p) => Ok(ProductDist::Discrete(
                p.iter().map(|v| Pmf::from_probs(v.clone())).collect::<Result<_>>()?,
            )),
            DistSpec::Covariances(c) => Ok(ProductDist::Gaussian(
                c.iter().map(MatrixSpec::to_matrix).collect::<Result<_>>()?,
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxFileSpec {
    /// `maps[j][x]` is `U` for interferer `j + 2` at input `x`.
    pub maps: Vec<Vec<usize>>,
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub compose: Option<Vec<usize>>,
}

impl AuxFileSpec {
    pub fn build(&self) -> Result<AuxSpec> {
        AuxSpec::new(self.maps.clone(), self.sizes.clone(), self.compose.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_spec_round_trip() {
        let json = r#"{"family":"gaussian","direct":[1,1,[[1]]],"cross":[0.7,[0.0,0.7]],"powers":[1,1,1]}"#;
        let spec: ChannelSpec = serde_json::from_str(json).unwrap();
        let Channel::Gaussian(g) = spec.build().unwrap() else { panic!() };
        assert_eq!(g.cross(2)[(0, 0)], Complex64::new(0.0, 0.7));
        let again = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ChannelSpec>(&again).unwrap(), spec);
    }

    #[test]
    fn unknown_fields_and_family_rejected() {
        let bad = r#"{"family":"fading","sigma_direct":[1,1],"sigma_cross":[0.5],"powers":[1,1],"extra":1}"#;
        assert!(serde_json::from_str::<ChannelSpec>(bad).is_err());
        let bad = r#"{"family":"magic"}"#;
        assert!(serde_json::from_str::<ChannelSpec>(bad).is_err());
    }

    #[test]
    fn collision_spec_variants() {
        for kernel in [r#""deterministic""#, r#"{"constant":0.25}"#, r#"{"table":[[1,0],[0,1],[0,1],[0,1]]}"#] {
            let json = format!(r#"{{"family":"collision","inputs":[3,2,2],"kernel":{kernel}}}"#);
            let spec: ChannelSpec = serde_json::from_str(&json).unwrap();
            assert!(spec.build().unwrap().validate().is_valid());
        }
    }

    #[test]
    fn discrete_round_trip() {
        let spec = ChannelSpec::from_discrete(&super::super::catalog::xor());
        let json = serde_json::to_string(&spec).unwrap();
        let Channel::Discrete(d) = serde_json::from_str::<ChannelSpec>(&json).unwrap().build().unwrap() else {
            panic!()
        };
        assert_eq!(d, super::super::catalog::xor());
    }
}
