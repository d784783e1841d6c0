//! Target coupling matrices: power laws, spin glasses, random matrices,
//! n-body stars and QFT layers.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};

/// Power-law exponent; `Infinite` selects nearest-neighbour couplings
/// without evaluating `|i-j|^alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn as_f64(self) -> f64 {
        match self {
            Self::Finite(a) => a,
            Self::Infinite => f64::INFINITY,
        }
    }
}

impl From<f64> for Exponent {
    fn from(a: f64) -> Self {
        if a.is_infinite() {
            Self::Infinite
        } else {
            Self::Finite(a)
        }
    }
}

/// Bit precision `b` of an approximate QFT: couplings survive only when
/// `|i - j| < b`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    #[default]
    Unlimited,
    Bits(usize),
}

impl Precision {
    pub fn keeps(self, distance: usize) -> bool {
        match self {
            Self::Unlimited => true,
            Self::Bits(b) => distance < b,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Self::Unlimited => f64::INFINITY,
            Self::Bits(b) => b as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetKind {
    AllToAll,
    NearestNeighbor,
    PowerLaw { exponent: Exponent, j0: f64 },
    /// Edwards-Anderson chain: standard-normal nearest-neighbour couplings.
    EaGlass,
    /// Sherrington-Kirkpatrick: standard-normal couplings on every pair.
    SkGlass,
    /// Independent uniform couplings in `[-1, 1]`.
    UniformRandom,
    /// `value` on every pair `{anchor, j}` with `j` in `subset`, zero elsewhere.
    NBody {
        subset: Vec<usize>,
        anchor: usize,
        value: f64,
    },
    /// `pi/4 * 2^-(j-c)` between the control `c` and each later qubit `j`
    /// within the precision window.
    QftLayer { control: usize, precision: Precision },
}

impl TargetKind {
    pub fn is_random(&self) -> bool {
        matches!(self, Self::EaGlass | Self::SkGlass | Self::UniformRandom)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::AllToAll => "all_to_all",
            Self::NearestNeighbor => "nearest_neighbor",
            Self::PowerLaw { .. } => "power_law",
            Self::EaGlass => "ea_glass",
            Self::SkGlass => "sk_glass",
            Self::UniformRandom => "uniform_random",
            Self::NBody { .. } => "nbody",
            Self::QftLayer { .. } => "qft_layer",
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses the parameter-free kinds; parameterised kinds get defaults
/// (`power_law` is `alpha = 1, J0 = 1`, `nbody` spans every qubit with
/// anchor 0, `qft_layer` uses control 0 at full precision).
impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all_to_all" => Self::AllToAll,
            "nearest_neighbor" => Self::NearestNeighbor,
            "power_law" => Self::PowerLaw {
                exponent: Exponent::Finite(1.0),
                j0: 1.0,
            },
            "ea_glass" => Self::EaGlass,
            "sk_glass" => Self::SkGlass,
            "uniform_random" => Self::UniformRandom,
            "nbody" => Self::NBody {
                subset: Vec::new(),
                anchor: 0,
                value: FRAC_PI_4,
            },
            "qft_layer" => Self::QftLayer {
                control: 0,
                precision: Precision::Unlimited,
            },
            other => return Err(Error::InvalidParameter(format!("unknown target kind `{other}`"))),
        })
    }
}

/// Seeded stream for ensemble instance `seed`.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Box-Muller, cosine branch only.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

pub fn make_target(kind: &TargetKind, n: usize, seed: Option<u64>) -> Result<CouplingMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("target needs at least one qubit".into()));
    }
    let mut rng = if kind.is_random() {
        let seed = seed.ok_or_else(|| {
            Error::InvalidParameter(format!("target `{kind}` needs a seed"))
        })?;
        Some(rng_for(seed))
    } else {
        None
    };

    Ok(match kind {
        TargetKind::AllToAll => CouplingMatrix::from_upper_fn(n, |_, _| 1.0),
        TargetKind::NearestNeighbor => {
            CouplingMatrix::from_upper_fn(n, |i, j| if j - i == 1 { 1.0 } else { 0.0 })
        }
        TargetKind::PowerLaw { exponent, j0 } => match *exponent {
            Exponent::Infinite => {
                CouplingMatrix::from_upper_fn(n, |i, j| if j - i == 1 { *j0 } else { 0.0 })
            }
            Exponent::Finite(alpha) => {
                if !alpha.is_finite() || alpha < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "power-law exponent must be finite and non-negative, got {alpha}"
                    )));
                }
                CouplingMatrix::from_upper_fn(n, |i, j| j0 / ((j - i) as f64).powf(alpha))
            }
        },
        TargetKind::EaGlass => {
            let rng = rng.as_mut().unwrap();
            CouplingMatrix::from_upper_fn(n, |i, j| if j - i == 1 { standard_normal(rng) } else { 0.0 })
        }
        TargetKind::SkGlass => {
            let rng = rng.as_mut().unwrap();
            CouplingMatrix::from_upper_fn(n, |_, _| standard_normal(rng))
        }
        TargetKind::UniformRandom => {
            let rng = rng.as_mut().unwrap();
            CouplingMatrix::from_upper_fn(n, |_, _| rng.gen_range(-1.0..=1.0))
        }
        TargetKind::NBody { subset, anchor, value } => {
            if let Some(&q) = subset.iter().find(|&&q| q >= n) {
                return Err(Error::IndexOutOfRange { index: q, n });
            }
            if !subset.contains(anchor) {
                return Err(Error::InvalidParameter(format!(
                    "anchor {anchor} is not part of the subset {subset:?}"
                )));
            }
            let mut j = CouplingMatrix::zeros(n);
            for &q in subset.iter().filter(|&&q| q != *anchor) {
                j.set(*anchor, q, *value);
            }
            j
        }
        TargetKind::QftLayer { control, precision } => qft_layer_couplings(n, *control, *precision)?,
    })
}

pub(crate) fn qft_layer_couplings(n: usize, control: usize, precision: Precision) -> Result<CouplingMatrix> {
    if control >= n {
        return Err(Error::IndexOutOfRange { index: control, n });
    }
    if precision == Precision::Bits(0) {
        return Err(Error::InvalidParameter("precision must be at least one bit".into()));
    }
    let mut j = CouplingMatrix::zeros(n);
    for t in (control + 1)..n {
        let d = t - control;
        if precision.keeps(d) {
            j.set(control, t, FRAC_PI_4 * 0.5_f64.powi(d as i32));
        }
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_qft_layer_at_four_qubits() {
        let j = make_target(
            &TargetKind::QftLayer {
                control: 0,
                precision: Precision::Unlimited,
            },
            4,
            None,
        )
        .unwrap();
        assert_eq!(j.vectorize(), vec![PI / 8.0, PI / 16.0, PI / 32.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn qft_precision_window() {
        let j = qft_layer_couplings(6, 1, Precision::Bits(3)).unwrap();
        assert_eq!(j.get(1, 2), PI / 8.0);
        assert_eq!(j.get(1, 3), PI / 16.0);
        assert_eq!(j.get(1, 4), 0.0);
        assert!(qft_layer_couplings(6, 1, Precision::Bits(1)).unwrap().is_zero());
        assert!(qft_layer_couplings(6, 6, Precision::Unlimited).is_err());
    }

    #[test]
    fn power_law_limits() {
        let flat = make_target(&TargetKind::PowerLaw { exponent: Exponent::Finite(0.0), j0: 1.0 }, 5, None).unwrap();
        assert_eq!(flat, make_target(&TargetKind::AllToAll, 5, None).unwrap());
        let nn = make_target(&TargetKind::PowerLaw { exponent: Exponent::Infinite, j0: 1.0 }, 5, None).unwrap();
        assert_eq!(nn, make_target(&TargetKind::NearestNeighbor, 5, None).unwrap());
        let cubic = make_target(&TargetKind::PowerLaw { exponent: Exponent::Finite(3.0), j0: 2.0 }, 4, None).unwrap();
        assert_abs_diff_eq!(cubic.get(0, 3), 2.0 / 27.0, epsilon = 1e-15);
    }

    #[test]
    fn random_kinds_need_seed_and_are_reproducible() {
        assert!(make_target(&TargetKind::SkGlass, 4, None).is_err());
        let a = make_target(&TargetKind::UniformRandom, 6, Some(7)).unwrap();
        let b = make_target(&TargetKind::UniformRandom, 6, Some(7)).unwrap();
        let c = make_target(&TargetKind::UniformRandom, 6, Some(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.vectorize().iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn ea_glass_statistics() {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0.0;
        for seed in 0..10_000 {
            let j = make_target(&TargetKind::EaGlass, 10, Some(seed)).unwrap();
            for (i, k) in crate::coupling::pairs(10) {
                let v = j.get(i, k);
                if k - i == 1 {
                    sum += v;
                    sum_sq += v * v;
                    count += 1.0;
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
        let mean = sum / count;
        let var = sum_sq / count - mean * mean;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn nbody_star() {
        let kind = TargetKind::NBody { subset: vec![1, 3, 4], anchor: 1, value: 0.5 };
        let j = make_target(&kind, 5, None).unwrap();
        assert_eq!(j.get(1, 3), 0.5);
        assert_eq!(j.get(1, 4), 0.5);
        assert_eq!(j.get(3, 4), 0.0);
        assert_eq!(j.get(0, 1), 0.0);
        let bad = TargetKind::NBody { subset: vec![1, 3], anchor: 2, value: 0.5 };
        assert!(make_target(&bad, 5, None).is_err());
    }

    #[test]
    fn parse_kinds() {
        for name in ["all_to_all", "nearest_neighbor", "power_law", "ea_glass", "sk_glass", "uniform_random", "nbody", "qft_layer"] {
            assert_eq!(name.parse::<TargetKind>().unwrap().name(), name);
        }
        assert!("zigzag".parse::<TargetKind>().is_err());
    }
}
