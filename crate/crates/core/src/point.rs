use crate::error::{Result, SamgdaError};

/// A primal-dual iterate x = (u, v).
///
/// Dimensions are fixed at construction; every public operation checks that
/// the partner point has matching block sizes and that all entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PrimalDualPoint {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let p = PrimalDualPoint { u, v };
        p.check_finite("construction")?;
        Ok(p)
    }

    /// Scalar shorthand used by the toy problems.
    pub fn scalar(u: f64, v: f64) -> Self {
        PrimalDualPoint {
            u: vec![u],
            v: vec![v],
        }
    }

    pub fn zeros(du: usize, dv: usize) -> Self {
        PrimalDualPoint {
            u: vec![0.0; du],
            v: vec![0.0; dv],
        }
    }

    pub fn du(&self) -> usize {
        self.u.len()
    }

    pub fn dv(&self) -> usize {
        self.v.len()
    }

    pub fn dim(&self) -> usize {
        self.u.len() + self.v.len()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(SamgdaError::OracleFailure {
                context: context.to_string(),
            })
        }
    }

    pub fn check_dims(&self, other: &Self) -> Result<()> {
        if self.du() != other.du() || self.dv() != other.dv() {
            return Err(SamgdaError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    /// Flat view (u ++ v), used by the dense linear-algebra oracles.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.u.clone();
        out.extend_from_slice(&self.v);
        out
    }

    pub fn from_flat(flat: &[f64], du: usize) -> Self {
        PrimalDualPoint {
            u: flat[..du].to_vec(),
            v: flat[du..].to_vec(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        PrimalDualPoint {
            u: vsub(&self.u, &other.u),
            v: vsub(&self.v, &other.v),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        vdot(&self.u, &other.u) + vdot(&self.v, &other.v)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        PrimalDualPoint {
            u: self.u.iter().map(|x| s * x).collect(),
            v: self.v.iter().map(|x| s * x).collect(),
        }
    }
}

pub fn vsub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vadd(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vdot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn vnorm(a: &[f64]) -> f64 {
    vdot(a, a).sqrt()
}

pub fn vscale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

/// a + s*b
pub fn vaxpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}
