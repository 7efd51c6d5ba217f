//! Ten-component normal mixture approximating the standard Gumbel density
//! `exp(-u - e^{-u})`, as tabulated by Frühwirth-Schnatter and Frühwirth
//! (2007, Table 1).
//!
//! The published weights are rounded to three significant digits and sum to
//! 0.99977; they are renormalised on construction, and the means get the
//! small common [`MEAN_SHIFT`] described below.

const RAW_WEIGHTS: [f64; 10] = [
    0.00397, 0.0396, 0.168, 0.147, 0.125, 0.101, 0.104, 0.116, 0.107, 0.0882,
];
const RAW_MEANS: [f64; 10] = [
    5.09, 3.29, 1.82, 1.24, 0.764, 0.391, 0.0431, -0.306, -0.673, -1.06,
];
const RAW_VARIANCES: [f64; 10] = [
    4.50, 2.02, 1.10, 0.422, 0.198, 0.107, 0.0778, 0.0766, 0.0947, 0.146,
];

/// Common shift added to the tabulated means.
///
/// With the rounded table, the precision-weighted residual
/// `E[Σ_c p(c | e) (e - ξ_c) / s²_c]` under the exact Gumbel law is about
/// 1.5e-3 instead of 0. Each Gibbs draw of a level adds that bias once per
/// cell, and in periods with no events nothing in the data pulls it back, so
/// the level drifts upward by several units. The shift makes this
/// expectation zero.
pub const MEAN_SHIFT: f64 = 0.001_509_402_451_965_326_7;

/// FNV-1a over the bit patterns of the three raw columns.
pub const TABLE_CHECKSUM: u64 = 0x8bed_1317_4cfe_690d;

pub fn raw_checksum() -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for v in RAW_WEIGHTS.iter().chain(&RAW_MEANS).chain(&RAW_VARIANCES) {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

pub const N_COMPONENTS: usize = 10;

#[derive(Debug, Clone)]
pub struct MixtureTable {
    pub weights: [f64; N_COMPONENTS],
    pub means: [f64; N_COMPONENTS],
    pub variances: [f64; N_COMPONENTS],
    /// `ln(w_c / s_c)`, the unnormalised log weight used when drawing `c`.
    pub(crate) log_w_over_s: [f64; N_COMPONENTS],
    /// `1 / (2 s_c²)`.
    pub(crate) half_precision: [f64; N_COMPONENTS],
    /// `1 / s_c²`.
    pub precision: [f64; N_COMPONENTS],
    /// `-½ ln(2π s_c²)`.
    pub(crate) log_norm: [f64; N_COMPONENTS],
}

impl MixtureTable {
    pub fn gumbel() -> Self {
        debug_assert_eq!(raw_checksum(), TABLE_CHECKSUM, "mixture constants altered");
        let total: f64 = RAW_WEIGHTS.iter().sum();
        let weights = RAW_WEIGHTS.map(|w| w / total);
        let mut log_w_over_s = [0.0; N_COMPONENTS];
        let mut half_precision = [0.0; N_COMPONENTS];
        let mut precision = [0.0; N_COMPONENTS];
        let mut log_norm = [0.0; N_COMPONENTS];
        for c in 0..N_COMPONENTS {
            let s2 = RAW_VARIANCES[c];
            log_w_over_s[c] = weights[c].ln() - 0.5 * s2.ln();
            half_precision[c] = 0.5 / s2;
            precision[c] = 1.0 / s2;
            log_norm[c] = -0.5 * (crate::priors::LN_2PI + s2.ln());
        }
        Self {
            weights,
            means: RAW_MEANS.map(|m| m + MEAN_SHIFT),
            variances: RAW_VARIANCES,
            log_w_over_s,
            half_precision,
            precision,
            log_norm,
        }
    }

    pub fn density(&self, u: f64) -> f64 {
        (0..N_COMPONENTS)
            .map(|c| {
                let d = u - self.means[c];
                self.weights[c] * (self.log_norm[c] - d * d * self.half_precision[c]).exp()
            })
            .sum()
    }

    /// Draw a component index given the residual `e = u - η`, using a uniform
    /// variate `v ∈ (0, 1)`.
    #[inline]
    pub fn draw_component(&self, e: f64, v: f64) -> u8 {
        let mut logp = [0.0; N_COMPONENTS];
        let mut max = f64::NEG_INFINITY;
        for c in 0..N_COMPONENTS {
            let d = e - self.means[c];
            logp[c] = self.log_w_over_s[c] - d * d * self.half_precision[c];
            max = max.max(logp[c]);
        }
        let mut total = 0.0;
        for lp in logp.iter_mut() {
            *lp = (*lp - max).exp();
            total += *lp;
        }
        let target = v * total;
        let mut acc = 0.0;
        for (c, p) in logp.iter().enumerate() {
            acc += p;
            if target < acc {
                return c as u8;
            }
        }
        (N_COMPONENTS - 1) as u8
    }
}

pub fn standard_gumbel_density(u: f64) -> f64 {
    (-u - (-u).exp()).exp()
}
