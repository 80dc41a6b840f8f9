//! Signal distributions and the disincentive a threshold creates.
//!
//! A group's signal is `mu + sigma * eta + crime_shift * 1{crime}` where `eta`
//! follows one of the log-concave [`BaseDensity`] families. For a threshold
//! `T`, the disincentive is `Δ(T) = TPR − FPR = F_nc(T) − F_cc(T)`, which is
//! maximized where the two conditional densities cross.

use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::numeric;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Which conditional distribution to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Crime,
    Innocent,
}

/// Standard-form base density of a location-scale signal family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BaseDensity {
    Normal,
    Logistic,
    /// Maximum-type extreme value distribution, `F(z) = exp(-exp(-z))`.
    Gumbel,
    /// Two half-normals glued at `mode`; asymmetric unless the scales match.
    TwoPieceNormal {
        mode: f64,
        sigma_left: f64,
        sigma_right: f64,
    },
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub(crate) fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub(crate) fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal quantile: inverse-erfc start, two Newton polish steps.
pub(crate) fn std_normal_quantile(p: f64) -> f64 {
    if p > 0.5 {
        return -std_normal_quantile(1.0 - p);
    }
    let mut z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let dens = std_normal_pdf(z);
        if !(dens > 0.0 && z.is_finite()) {
            break;
        }
        z -= (std_normal_cdf(z) - p) / dens;
    }
    z
}

impl BaseDensity {
    pub fn validate(&self) -> Result<()> {
        if let BaseDensity::TwoPieceNormal {
            mode,
            sigma_left,
            sigma_right,
        } = *self
        {
            if !mode.is_finite() {
                return Err(Error::InvalidParameter(format!("two-piece mode must be finite, got {mode}")));
            }
            for (name, s) in [("sigma_left", sigma_left), ("sigma_right", sigma_right)] {
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::InvalidParameter(format!("{name} must be positive, got {s}")));
                }
            }
        }
        Ok(())
    }

    /// Mirror image `f(2·mode − z)`; symmetric families map to themselves.
    pub fn reflected(&self) -> BaseDensity {
        match *self {
            BaseDensity::TwoPieceNormal {
                mode,
                sigma_left,
                sigma_right,
            } => BaseDensity::TwoPieceNormal {
                mode,
                sigma_left: sigma_right,
                sigma_right: sigma_left,
            },
            other => other,
        }
    }

    /// Point of symmetry, if the density is symmetric.
    pub fn symmetry_center(&self) -> Option<f64> {
        match *self {
            BaseDensity::Normal | BaseDensity::Logistic => Some(0.0),
            BaseDensity::Gumbel => None,
            BaseDensity::TwoPieceNormal {
                mode,
                sigma_left,
                sigma_right,
            } => (sigma_left == sigma_right).then_some(mode),
        }
    }

    fn two_piece_weights(sigma_left: f64, sigma_right: f64) -> (f64, f64) {
        let total = sigma_left + sigma_right;
        (sigma_left / total, sigma_right / total)
    }

    pub fn pdf(&self, z: f64) -> f64 {
        match *self {
            BaseDensity::Normal => std_normal_pdf(z),
            BaseDensity::Logistic => {
                let e = (-z.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            BaseDensity::Gumbel => (-z - (-z).exp()).exp(),
            BaseDensity::TwoPieceNormal {
                mode,
                sigma_left,
                sigma_right,
            } => {
                let s = if z < mode { sigma_left } else { sigma_right };
                let u = (z - mode) / s;
                2.0 / (sigma_left + sigma_right) * std_normal_pdf(u)
            }
        }
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        match *self {
            BaseDensity::Normal => -0.5 * z * z - LN_SQRT_2PI,
            BaseDensity::Logistic => {
                let a = z.abs();
                -a - 2.0 * (-a).exp().ln_1p()
            }
            BaseDensity::Gumbel => -z - (-z).exp(),
            BaseDensity::TwoPieceNormal {
                mode,
                sigma_left,
                sigma_right,
            } => {
                let s = if z < mode { sigma_left } else { sigma_right };
                let u = (z - mode) / s;
                (2.0 / (sigma_left + sigma_right)).ln() - 0.5 * u * u - LN_SQRT_2PI
            }
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match *self {
            BaseDensity::Normal => std_normal_cdf(z),
            BaseDensity::Logistic => 1.0 / (1.0 + (-z).exp()),
            BaseDensity::Gumbel => (-(-z).exp()).exp(),
            BaseDensity::TwoPieceNormal {
                mode,
                sigma_left,
                sigma_right,
            } => {
                let (wl, wr) = Self::two_piece_weights(sigma_left, sigma_right);
                if z < mode {
                    2.0 * wl * std_normal_cdf((z - mode) / sigma_left)
                } else {
                    1.0 - 2.0 * wr * std_normal_sf((z - mode) / sigma_right)
                }
            }
        }
    }

    /// Survivor function `1 − F(z)`, computed without cancellation.
    pub fn sf(&self, z: f64) -> f64 {
        match *self {
            BaseDensity::Normal => std_normal_sf(z),
            BaseDensity::Logistic => 1.0 / (1.0 + z.exp()),
            BaseDensity::Gumbel => -(-(-z).exp()).exp_m1(),
            BaseDensity::TwoPieceNormal {
                mode,
                sigma_left,
                sigma_right,
            } => {
                let (wl, wr) = Self::two_piece_weights(sigma_left, sigma_right);
                if z < mode {
                    1.0 - 2.0 * wl * std_normal_cdf((z - mode) / sigma_left)
                } else {
                    2.0 * wr * std_normal_sf((z - mode) / sigma_right)
                }
            }
        }
    }

    /// Inverse CDF on the open unit interval.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_open_unit(p)?;
        Ok(match *self {
            BaseDensity::Normal => std_normal_quantile(p),
            BaseDensity::Logistic => p.ln() - (-p).ln_1p(),
            BaseDensity::Gumbel => -(-p.ln()).ln(),
            BaseDensity::TwoPieceNormal {
                mode,
                sigma_left,
                sigma_right,
            } => {
                let (wl, wr) = Self::two_piece_weights(sigma_left, sigma_right);
                if p <= wl {
                    mode + sigma_left * std_normal_quantile(p / (2.0 * wl))
                } else {
                    mode - sigma_right * std_normal_quantile((1.0 - p) / (2.0 * wr))
                }
            }
        })
    }

    /// Inverse survivor function: the `z` with `sf(z) = q`.
    pub fn isf(&self, q: f64) -> Result<f64> {
        check_open_unit(q)?;
        Ok(match *self {
            BaseDensity::Normal => -std_normal_quantile(q),
            BaseDensity::Logistic => (-q).ln_1p() - q.ln(),
            BaseDensity::Gumbel => -(-(-q).ln_1p()).ln(),
            BaseDensity::TwoPieceNormal {
                mode,
                sigma_left,
                sigma_right,
            } => {
                let (wl, wr) = Self::two_piece_weights(sigma_left, sigma_right);
                if q <= wr {
                    mode - sigma_right * std_normal_quantile(q / (2.0 * wr))
                } else {
                    mode + sigma_left * std_normal_quantile((1.0 - q) / (2.0 * wl))
                }
            }
        })
    }
}

fn check_open_unit(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability must lie in (0, 1), got {p}")))
    }
}

/// pdf and cdf at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEval {
    pub pdf: f64,
    pub cdf: f64,
}

/// Range of disincentives reachable by any classification rule, and the
/// threshold attaining the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisincentiveBounds {
    pub lower: f64,
    pub upper: f64,
    pub argmax_threshold: f64,
}

/// Conditional signal distributions for one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalStructure {
    pub base: BaseDensity,
    pub mu: f64,
    pub sigma: f64,
    pub crime_shift: f64,
}

impl SignalStructure {
    /// Validated constructor; `crime_shift` must be strictly positive so
    /// that higher signals are evidence of crime.
    pub fn new(base: BaseDensity, mu: f64, sigma: f64, crime_shift: f64) -> Result<Self> {
        base.validate()?;
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("signal mu must be finite, got {mu}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("signal sigma must be positive, got {sigma}")));
        }
        if !(crime_shift.is_finite() && crime_shift > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "crime_shift must be positive, got {crime_shift}"
            )));
        }
        Ok(Self::new_unchecked(base, mu, sigma, crime_shift))
    }

    /// Skips validation. Used to build deliberately mis-oriented structures
    /// for [`SignalStructure::mlrp_check`].
    pub fn new_unchecked(base: BaseDensity, mu: f64, sigma: f64, crime_shift: f64) -> Self {
        Self {
            base,
            mu,
            sigma,
            crime_shift,
        }
    }

    pub fn normal(mu: f64, sigma: f64, crime_shift: f64) -> Result<Self> {
        Self::new(BaseDensity::Normal, mu, sigma, crime_shift)
    }

    /// `m / sigma`; the disincentive geometry depends on nothing else.
    pub fn separation(&self) -> f64 {
        self.crime_shift / self.sigma
    }

    fn location(&self, hyp: Hypothesis) -> f64 {
        match hyp {
            Hypothesis::Crime => self.mu + self.crime_shift,
            Hypothesis::Innocent => self.mu,
        }
    }

    fn standardize(&self, s: f64, hyp: Hypothesis) -> f64 {
        (s - self.location(hyp)) / self.sigma
    }

    pub fn pdf(&self, s: f64, hyp: Hypothesis) -> f64 {
        self.base.pdf(self.standardize(s, hyp)) / self.sigma
    }

    pub fn ln_pdf(&self, s: f64, hyp: Hypothesis) -> f64 {
        self.base.ln_pdf(self.standardize(s, hyp)) - self.sigma.ln()
    }

    pub fn cdf(&self, s: f64, hyp: Hypothesis) -> f64 {
        self.base.cdf(self.standardize(s, hyp))
    }

    pub fn sf(&self, s: f64, hyp: Hypothesis) -> f64 {
        self.base.sf(self.standardize(s, hyp))
    }

    pub fn density_eval(&self, s: f64, hyp: Hypothesis) -> DensityEval {
        DensityEval {
            pdf: self.pdf(s, hyp),
            cdf: self.cdf(s, hyp),
        }
    }

    pub fn quantile(&self, p: f64, hyp: Hypothesis) -> Result<f64> {
        Ok(self.location(hyp) + self.sigma * self.base.quantile(p)?)
    }

    pub fn isf(&self, q: f64, hyp: Hypothesis) -> Result<f64> {
        Ok(self.location(hyp) + self.sigma * self.base.isf(q)?)
    }

    /// True positive rate of the rule `s >= t`.
    pub fn tpr(&self, t: f64) -> f64 {
        self.sf(t, Hypothesis::Crime)
    }

    /// False positive rate of the rule `s >= t`.
    pub fn fpr(&self, t: f64) -> f64 {
        self.sf(t, Hypothesis::Innocent)
    }

    /// `Δ(T) = F_nc(T) − F_cc(T)`, evaluated on whichever tail keeps precision.
    pub fn delta_of_threshold(&self, t: f64) -> f64 {
        if self.standardize(t, Hypothesis::Innocent) > 0.0 {
            self.sf(t, Hypothesis::Crime) - self.sf(t, Hypothesis::Innocent)
        } else {
            self.cdf(t, Hypothesis::Innocent) - self.cdf(t, Hypothesis::Crime)
        }
    }

    /// `[q_nc(lo), q_cc(hi)]`, the stretch of signal space where thresholds matter.
    pub fn threshold_span(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        Ok((
            self.quantile(lo, Hypothesis::Innocent)?,
            self.quantile(hi, Hypothesis::Crime)?,
        ))
    }

    fn log_likelihood_ratio(&self, s: f64) -> f64 {
        self.ln_pdf(s, Hypothesis::Crime) - self.ln_pdf(s, Hypothesis::Innocent)
    }

    /// Threshold `T*` maximizing `Δ`, and `Δ̄ = Δ(T*)`.
    ///
    /// Golden-section search locates the peak, then bisection on the log
    /// likelihood ratio pins the density crossing `f_nc(T*) = f_cc(T*)`.
    pub fn max_disincentive(&self) -> Result<DisincentiveBounds> {
        let (lo, hi) = self.threshold_span(1e-4, 0.9999)?;
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let (guess, _) = numeric::golden_max(|t| self.delta_of_threshold(t), lo, hi, 1e-10);

        let llr = |t: f64| self.log_likelihood_ratio(t);
        let mut width = 1e-3 * self.sigma;
        let (a, b) = loop {
            let (a, b) = (guess - width, guess + width);
            if llr(a) <= 0.0 && llr(b) >= 0.0 {
                break (a, b);
            }
            if a < lo && b > hi {
                return Err(Error::Solver(format!(
                    "could not bracket the density crossing near {guess}"
                )));
            }
            width *= 2.0;
        };
        let t_star = numeric::bisect(llr, a, b)?;
        let upper = self.delta_of_threshold(t_star);
        Ok(DisincentiveBounds {
            lower: -upper,
            upper,
            argmax_threshold: t_star,
        })
    }

    /// `[Δ̲, Δ̄]` for a single-crossing structure: the negative region of
    /// `f_cc − f_nc` is the complement of the positive one, so `Δ̲ = −Δ̄`.
    pub fn disincentive_bounds(&self) -> Result<DisincentiveBounds> {
        if !self.mlrp_check(513) {
            return Err(Error::Solver(
                "likelihood ratio is not monotone; single-crossing bounds do not apply".into(),
            ));
        }
        self.max_disincentive()
    }

    /// Is `ln f_cc − ln f_nc` non-decreasing on an even grid over the
    /// 0.001..0.999 quantile span of both conditionals?
    pub fn mlrp_check(&self, grid_size: usize) -> bool {
        let grid_size = grid_size.max(3);
        let ends = [
            self.quantile(0.001, Hypothesis::Innocent),
            self.quantile(0.001, Hypothesis::Crime),
            self.quantile(0.999, Hypothesis::Innocent),
            self.quantile(0.999, Hypothesis::Crime),
        ];
        let Ok(ends) = ends.into_iter().collect::<Result<Vec<_>>>() else {
            return false;
        };
        let lo = ends[0].min(ends[1]);
        let hi = ends[2].max(ends[3]);
        let ratios: Vec<f64> = numeric::linspace(lo, hi, grid_size)
            .into_iter()
            .map(|s| self.log_likelihood_ratio(s))
            .collect();
        ratios
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()))
    }

    /// The threshold `T ≤ T*` with `Δ(T) = target`; targets a hair above `Δ̄`
    /// (rounding) resolve to `T*`.
    pub fn invert_delta_rising(&self, target: f64, bounds: &DisincentiveBounds) -> Result<f64> {
        if !(target > 0.0) {
            return Err(Error::Domain(format!(
                "threshold rules reach only positive disincentives, asked for {target}"
            )));
        }
        if target >= bounds.upper {
            return if target - bounds.upper <= 1e-12 {
                Ok(bounds.argmax_threshold)
            } else {
                Err(Error::Domain(format!(
                    "disincentive {target} exceeds the maximum {}",
                    bounds.upper
                )))
            };
        }
        let t_star = bounds.argmax_threshold;
        let mut step = self.sigma.max(self.crime_shift);
        let mut lo = t_star - step;
        while self.delta_of_threshold(lo) > target {
            step *= 2.0;
            lo = t_star - step;
            if !lo.is_finite() || step > 1e6 * self.sigma {
                return Err(Error::Solver(format!(
                    "could not bracket Δ = {target} below the peak"
                )));
            }
        }
        numeric::bisect(|t| self.delta_of_threshold(t) - target, lo, t_star)
    }

    /// Signal-space centre of symmetry of the innocent distribution.
    pub fn symmetry_center(&self) -> Option<f64> {
        self.base
            .symmetry_center()
            .map(|c| self.mu + self.sigma * c)
    }
}
