use serde::{Deserialize, Serialize};

use super::{EvalContext, EvalResult, Evaluator, Verdict};
use crate::space::Candidate;
use crate::{Error, Result};

/// Concave quadratic bowl over the two cell counts with optional Gaussian
/// noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateParams {
    pub peak: f64,
    /// `[conv, dense]` of the maximum.
    pub optimum: [f64; 2],
    /// `[a, b]`, both strictly positive.
    pub curvature: [f64; 2],
    pub noise_sd: f64,
    /// Noise seed; the run seed is used when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        SurrogateParams {
            peak: 0.86,
            optimum: [2.0, 2.0],
            curvature: [0.01, 0.01],
            noise_sd: 0.0,
            seed: None,
        }
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard normal deviate keyed by `(candidate, seed)`.
///
/// The state starts at `seed ^ ((conv << 32 | dense) * 0xD1B54A32D192ED03)`
/// (wrapping); two splitmix64 outputs, shifted right by 11 and scaled by
/// 2^-53, give `u1, u2` for a Box-Muller transform
/// `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`. Workers in other languages can
/// reproduce it bit for bit.
pub fn surrogate_noise(candidate: Candidate, seed: u64) -> f64 {
    let key = (u64::from(candidate.conv_cells) << 32) | u64::from(candidate.dense_cells);
    let mut state = seed ^ key.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let scale = 1.0 / (1u64 << 53) as f64;
    let u1 = (splitmix64(&mut state) >> 11) as f64 * scale;
    let u2 = (splitmix64(&mut state) >> 11) as f64 * scale;
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// `peak - a (conv - c*)^2 - b (dense - d*)^2 + noise_sd * N(0, 1)`.
pub fn surrogate_fitness(candidate: Candidate, params: &SurrogateParams, seed: u64) -> f64 {
    let dc = f64::from(candidate.conv_cells) - params.optimum[0];
    let dd = f64::from(candidate.dense_cells) - params.optimum[1];
    let mean = params.peak - params.curvature[0] * dc * dc - params.curvature[1] * dd * dd;
    if params.noise_sd == 0.0 {
        mean
    } else {
        mean + params.noise_sd * surrogate_noise(candidate, seed)
    }
}

#[derive(Debug, Clone)]
pub struct SurrogateEvaluator {
    params: SurrogateParams,
}

impl SurrogateEvaluator {
    pub fn new(params: SurrogateParams) -> Result<Self> {
        if !params.curvature.iter().all(|c| *c > 0.0 && c.is_finite()) {
            return Err(Error::Config(
                "surrogate curvatures must be positive".into(),
            ));
        }
        if !(params.noise_sd >= 0.0 && params.noise_sd.is_finite()) {
            return Err(Error::Config(
                "surrogate noise_sd must be non-negative".into(),
            ));
        }
        Ok(SurrogateEvaluator { params })
    }

    pub fn params(&self) -> &SurrogateParams {
        &self.params
    }
}

impl Evaluator for SurrogateEvaluator {
    fn evaluate(&self, candidate: Candidate, ctx: &EvalContext) -> Result<Verdict> {
        let seed = self.params.seed.unwrap_or(ctx.seed);
        let fitness = surrogate_fitness(candidate, &self.params, seed);
        let mut result = EvalResult::ok(fitness);
        // treated as an accuracy stand-in when it lands in range
        if (0.0..=1.0).contains(&fitness) {
            result.accuracy = Some(fitness);
        }
        Ok(Verdict::Scored(result))
    }
}
