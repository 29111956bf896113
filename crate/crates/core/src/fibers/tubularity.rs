//! Bright-tube ridge response from sorted Hessian eigenvalues.

use serde::{Deserialize, Serialize};

use crate::hessian::HessianEigen;
use crate::math::{exp, fabs, sqrt};

/// Weights of the three response factors.
///
/// `alpha` scales the plate-vs-line ratio `|λ2|/|λ3|`, `beta` the blob ratio
/// `|λ1|/sqrt(|λ2 λ3|)`, `gamma` the structure strength (Frobenius norm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubularityParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl TubularityParams {
    /// `gamma` set to half of the largest Hessian norm found in the data.
    pub fn from_max_norm(max_norm: f64) -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            gamma: (0.5 * max_norm).max(f64::MIN_POSITIVE),
        }
    }

    /// Supremum of the response for these weights, reached by an ideal
    /// cylinder (`λ1 = 0`, `λ2 = λ3`) of unbounded contrast.
    pub fn peak(&self) -> f64 {
        1.0 - exp(-1.0 / (2.0 * self.alpha * self.alpha))
    }
}

/// Ridge response in `[0, 1)`.
///
/// Zero unless both `λ2` and `λ3` are negative (bright structure on a darker
/// matrix). Otherwise
///
/// ```text
/// (1 - exp(-Ra²/2α²)) · exp(-Rb²/2β²) · (1 - exp(-S²/2γ²))
/// Ra = |λ2|/|λ3|,  Rb = |λ1|/sqrt(|λ2 λ3|),  S = sqrt(λ1² + λ2² + λ3²)
/// ```
pub fn tubularity(e: &HessianEigen, p: &TubularityParams) -> f64 {
    tubularity_values(e.values, p)
}

pub fn tubularity_values(values: [f64; 3], p: &TubularityParams) -> f64 {
    let [l1, l2, l3] = values;
    if l2 >= 0.0 || l3 >= 0.0 {
        return 0.0;
    }
    let (a1, a2, a3) = (fabs(l1), fabs(l2), fabs(l3));
    let ra = a2 / a3;
    let rb = a1 / sqrt(a2 * a3);
    let s2 = l1 * l1 + l2 * l2 + l3 * l3;
    let plate = 1.0 - exp(-(ra * ra) / (2.0 * p.alpha * p.alpha));
    let blob = exp(-(rb * rb) / (2.0 * p.beta * p.beta));
    let strength = 1.0 - exp(-s2 / (2.0 * p.gamma * p.gamma));
    let r = plate * blob * strength;
    // Guard the open upper bound against rounding.
    r.min(1.0 - f64::EPSILON)
}
