use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::exact::Rational;
use crate::grid::GridSpec;

/// Which grid points a sampled check visits.
///
/// The plan is a low-discrepancy (Weyl) sequence offset by `seed`, plus all
/// dyadic rationals `j/2^d` with `d <= dyadic_depth`, plus the caller's pinned
/// points, all rounded onto the grid. Grids with at most `quasi_random`
/// points are visited exhaustively instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub quasi_random: u64,
    pub dyadic_depth: u32,
    pub pinned: Vec<Rational>,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            quasi_random: 1 << 16,
            dyadic_depth: 12,
            pinned: Vec::new(),
            seed: Self::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    Exhaustive,
    Sampled,
}

impl Coverage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Coverage::Exhaustive => "exhaustive",
            Coverage::Sampled => "sampled",
        }
    }
}

/// Sorted, deduplicated grid indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub indices: Vec<u64>,
    pub coverage: Coverage,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SamplingPlan {
    pub const DEFAULT_SEED: u64 = 0x6879_7065_7267_7264;

    pub fn with_seed(seed: u64) -> Self {
        SamplingPlan {
            seed,
            ..Self::default()
        }
    }

    /// A plan small enough for quick checks: `n` quasi-random points and
    /// dyadics to depth 6.
    pub fn light(n: u64, seed: u64) -> Self {
        SamplingPlan {
            quasi_random: n,
            dyadic_depth: 6,
            pinned: Vec::new(),
            seed,
        }
    }

    pub fn exhaustive() -> Self {
        SamplingPlan {
            quasi_random: u64::MAX,
            dyadic_depth: 0,
            pinned: Vec::new(),
            seed: Self::DEFAULT_SEED,
        }
    }

    pub fn pin(mut self, point: Rational) -> Self {
        self.pinned.push(point);
        self
    }

    pub fn indices(&self, spec: GridSpec) -> Sample {
        let points = spec.point_count();
        if points <= self.quasi_random {
            return Sample {
                indices: (0..points).collect(),
                coverage: Coverage::Exhaustive,
            };
        }
        let mut set = BTreeSet::new();
        let mut state = splitmix(self.seed);
        for _ in 0..self.quasi_random {
            state = state.wrapping_add(GOLDEN_GAMMA);
            set.insert(((state as u128 * points as u128) >> 64) as u64);
        }
        let tau = spec.tau() as u128;
        for depth in 0..=self.dyadic_depth.min(63) {
            let denom = 1u128 << depth;
            for j in 0..=denom {
                set.insert((j * tau / denom) as u64);
            }
        }
        for p in &self.pinned {
            if let Ok(x) = spec.round(p) {
                set.insert(x.index());
            }
        }
        Sample {
            indices: set.into_iter().collect(),
            coverage: Coverage::Sampled,
        }
    }
}
