//! Filter coefficients for the pyramid and directional stages.

/// CDF 9/7 analysis lowpass, unit DC gain.
pub const CDF97_ANALYSIS: [f64; 9] = [
    0.026_748_757_410_810,
    -0.016_864_118_442_875,
    -0.078_223_266_528_990,
    0.266_864_118_442_875,
    0.602_949_018_236_360,
    0.266_864_118_442_875,
    -0.078_223_266_528_990,
    -0.016_864_118_442_875,
    0.026_748_757_410_810,
];

/// CDF 9/7 synthesis lowpass, unit DC gain. Interpolation after zero
/// insertion uses twice these taps.
pub const CDF97_SYNTHESIS: [f64; 7] = [
    -0.045_635_881_557_125,
    -0.028_771_763_114_250,
    0.295_635_881_557_125,
    0.557_543_526_228_500,
    0.295_635_881_557_125,
    -0.028_771_763_114_250,
    -0.045_635_881_557_125,
];

/// CDF 9/7 lifting coefficients (predict, update, predict, update, scale).
pub const CDF97_LIFTING: [f64; 4] = [
    -1.586_134_342_059_924,
    -0.052_980_118_572_961,
    0.882_911_075_530_934,
    0.443_506_852_043_971,
];
pub const CDF97_SCALE: f64 = 1.149_604_398_860_241;

/// Phoong–Kim–Vaidyanathan–Ansari half-sample ladder prototype. Taps sit
/// at offsets ±1/2, ±3/2, …, ±11/2.
pub const PKVA_LADDER: [f64; 6] = [0.6300, -0.1930, 0.0972, -0.0526, 0.0272, -0.0144];

/// Quincunx filter family used by the directional stage.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize,
)]
pub enum DfbFilter {
    /// Two-step ladder with the PKVA prototype: sharp fan responses.
    #[default]
    Pkva,
    /// Four-step 9/7 lifting mapped onto the quincunx lattice.
    Cdf97,
}

/// One lifting step of a two-channel quincunx bank: the target coset is
/// updated by `weight` times a separable filter (in rotated lattice
/// coordinates) of the other coset.
#[derive(Debug, Clone)]
pub struct LadderStep {
    /// 0 = update the coset that keeps the lattice origin, 1 = the other.
    pub target: usize,
    pub weight: f64,
    pub half_taps: &'static [f64],
}

const HALF: [f64; 1] = [0.5];

impl DfbFilter {
    pub fn steps(self) -> Vec<LadderStep> {
        match self {
            DfbFilter::Pkva => vec![
                LadderStep {
                    target: 1,
                    weight: -1.0,
                    half_taps: &PKVA_LADDER,
                },
                LadderStep {
                    target: 0,
                    weight: 0.5,
                    half_taps: &PKVA_LADDER,
                },
            ],
            DfbFilter::Cdf97 => CDF97_LIFTING
                .iter()
                .enumerate()
                .map(|(i, &c)| LadderStep {
                    target: if i % 2 == 0 { 1 } else { 0 },
                    weight: 2.0 * c,
                    half_taps: &HALF,
                })
                .collect(),
        }
    }

    /// Final gain applied to coset 0 (coset 1 gets the reciprocal).
    pub fn scale(self) -> f64 {
        match self {
            DfbFilter::Pkva => 1.0,
            DfbFilter::Cdf97 => CDF97_SCALE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DfbFilter::Pkva => "pkva",
            DfbFilter::Cdf97 => "9-7",
        }
    }
}

impl std::str::FromStr for DfbFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pkva" => Ok(DfbFilter::Pkva),
            "9-7" | "97" | "cdf97" | "9/7" => Ok(DfbFilter::Cdf97),
            other => Err(format!("unknown DFB filter '{other}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowpass_filters_have_unit_dc() {
        assert!((CDF97_ANALYSIS.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((CDF97_SYNTHESIS.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn analysis_and_doubled_synthesis_are_biorthogonal() {
        // sum_n h[n] * 2g[n - 2k] = delta[k], filters centred at index 4 and 3
        for k in -3i32..=3 {
            let mut s = 0.0;
            for n in -4i32..=4 {
                let m = n - 2 * k;
                if (-3..=3).contains(&m) {
                    s += CDF97_ANALYSIS[(n + 4) as usize] * 2.0 * CDF97_SYNTHESIS[(m + 3) as usize];
                }
            }
            let expected = if k == 0 { 1.0 } else { 0.0 };
            assert!((s - expected).abs() < 1e-9, "k={k}: {s}");
        }
    }

    #[test]
    fn pkva_prototype_interpolates_dc() {
        // published taps are rounded to four places
        assert!((2.0 * PKVA_LADDER.iter().sum::<f64>() - 1.0).abs() < 0.012);
    }
}
