//! Outside options and the endogenous crime rate.
//!
//! An agent offends when the (normalized) marginal benefit of crime is at
//! least the disincentive it faces, so a group's crime rate is the survivor
//! function of that benefit evaluated at the disincentive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::signal::{std_normal_pdf, std_normal_quantile, std_normal_sf, SignalStructure};

/// Non-increasing map from disincentive to crime probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SurvivorFunction {
    /// `1 − Φ((x − mu) / scale)`
    NormalSurvivor { mu: f64, scale: f64 },
    /// `1 / (1 + exp((x − mu) / scale))`
    LogisticSurvivor { mu: f64, scale: f64 },
    /// 1 below `mu`, `(1 − (x − mu))^p` on `[mu, mu + 1]`, 0 above.
    PowerSurvivor { mu: f64, p: f64 },
}

impl SurvivorFunction {
    pub fn normal(mu: f64, scale: f64) -> Result<Self> {
        let h = SurvivorFunction::NormalSurvivor { mu, scale };
        h.validate()?;
        Ok(h)
    }

    pub fn logistic(mu: f64, scale: f64) -> Result<Self> {
        let h = SurvivorFunction::LogisticSurvivor { mu, scale };
        h.validate()?;
        Ok(h)
    }

    pub fn power(mu: f64, p: f64) -> Result<Self> {
        let h = SurvivorFunction::PowerSurvivor { mu, p };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        let (mu, shape, name) = match *self {
            SurvivorFunction::NormalSurvivor { mu, scale } => (mu, scale, "scale"),
            SurvivorFunction::LogisticSurvivor { mu, scale } => (mu, scale, "scale"),
            SurvivorFunction::PowerSurvivor { mu, p } => (mu, p, "p"),
        };
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("survivor mu must be finite, got {mu}")));
        }
        if !(shape.is_finite() && shape > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "survivor {name} must be positive, got {shape}"
            )));
        }
        Ok(())
    }

    pub fn location(&self) -> f64 {
        match *self {
            SurvivorFunction::NormalSurvivor { mu, .. }
            | SurvivorFunction::LogisticSurvivor { mu, .. }
            | SurvivorFunction::PowerSurvivor { mu, .. } => mu,
        }
    }

    /// Same family and shape, location moved to `mu`.
    pub fn with_location(&self, mu: f64) -> Self {
        match *self {
            SurvivorFunction::NormalSurvivor { scale, .. } => SurvivorFunction::NormalSurvivor { mu, scale },
            SurvivorFunction::LogisticSurvivor { scale, .. } => {
                SurvivorFunction::LogisticSurvivor { mu, scale }
            }
            SurvivorFunction::PowerSurvivor { p, .. } => SurvivorFunction::PowerSurvivor { mu, p },
        }
    }

    /// Whether `self` and `other` differ only by location.
    pub fn same_location_family(&self, other: &Self) -> bool {
        self.with_location(0.0) == other.with_location(0.0)
    }

    /// Crime rate at the given effective disincentive.
    pub fn crime_rate(&self, effective_disincentive: f64) -> f64 {
        let x = effective_disincentive;
        match *self {
            SurvivorFunction::NormalSurvivor { mu, scale } => std_normal_sf((x - mu) / scale),
            SurvivorFunction::LogisticSurvivor { mu, scale } => 1.0 / (1.0 + ((x - mu) / scale).exp()),
            SurvivorFunction::PowerSurvivor { mu, p } => {
                let u = x - mu;
                if u <= 0.0 {
                    1.0
                } else if u >= 1.0 {
                    0.0
                } else {
                    (1.0 - u).powf(p)
                }
            }
        }
    }

    /// First derivative `H'(x)` (the negated density of the marginal benefit).
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            SurvivorFunction::NormalSurvivor { mu, scale } => -std_normal_pdf((x - mu) / scale) / scale,
            SurvivorFunction::LogisticSurvivor { mu, scale } => {
                let l = 1.0 / (1.0 + (-(x - mu) / scale).exp());
                -l * (1.0 - l) / scale
            }
            SurvivorFunction::PowerSurvivor { mu, p } => {
                let u = x - mu;
                if u <= 0.0 || u >= 1.0 {
                    0.0
                } else {
                    -p * (1.0 - u).powf(p - 1.0)
                }
            }
        }
    }

    /// Second derivative `H''(x)`; zero on flat stretches of the power family.
    pub fn second_derivative(&self, x: f64) -> f64 {
        match *self {
            SurvivorFunction::NormalSurvivor { mu, scale } => {
                let z = (x - mu) / scale;
                z * std_normal_pdf(z) / (scale * scale)
            }
            SurvivorFunction::LogisticSurvivor { mu, scale } => {
                let l = 1.0 / (1.0 + (-(x - mu) / scale).exp());
                -l * (1.0 - l) * (1.0 - 2.0 * l) / (scale * scale)
            }
            SurvivorFunction::PowerSurvivor { mu, p } => {
                let u = x - mu;
                if u <= 0.0 || u >= 1.0 {
                    0.0
                } else {
                    p * (p - 1.0) * (1.0 - u).powf(p - 2.0)
                }
            }
        }
    }

    /// Stretch of the real line where `H` moves between (nearly) 1 and 0.
    pub fn effective_span(&self) -> (f64, f64) {
        match *self {
            SurvivorFunction::NormalSurvivor { mu, scale } => (mu - 9.0 * scale, mu + 9.0 * scale),
            SurvivorFunction::LogisticSurvivor { mu, scale } => (mu - 40.0 * scale, mu + 40.0 * scale),
            SurvivorFunction::PowerSurvivor { mu, .. } => (mu - 0.5, mu + 1.5),
        }
    }

    /// Open interval of `x` on which `H` is strictly decreasing.
    pub fn decreasing_span(&self) -> (f64, f64) {
        match *self {
            SurvivorFunction::PowerSurvivor { mu, .. } => (mu, mu + 1.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// The point where `H(x) = c`. For the power family's flat levels the
    /// boundary of the strictly decreasing stretch is returned (`mu` for
    /// `c = 1`, `mu + 1` for `c = 0`).
    pub fn survivor_inverse(&self, c: f64) -> Result<f64> {
        let outside = || Error::infeasible("crime level", format!("{c} is outside the image of {self:?}"));
        match *self {
            SurvivorFunction::NormalSurvivor { mu, scale } => {
                if c > 0.0 && c < 1.0 {
                    Ok(mu - scale * std_normal_quantile(c))
                } else {
                    Err(outside())
                }
            }
            SurvivorFunction::LogisticSurvivor { mu, scale } => {
                if c > 0.0 && c < 1.0 {
                    Ok(mu + scale * ((-c).ln_1p() - c.ln()))
                } else {
                    Err(outside())
                }
            }
            SurvivorFunction::PowerSurvivor { mu, p } => {
                if c == 1.0 {
                    Ok(mu)
                } else if c == 0.0 {
                    Ok(mu + 1.0)
                } else if c > 0.0 && c < 1.0 {
                    Ok(mu + 1.0 - c.powf(1.0 / p))
                } else {
                    Err(outside())
                }
            }
        }
    }

    /// Closed set `{x : H(x) = c}` as `(lo, hi)`; infinite ends allowed.
    pub fn preimage(&self, c: f64) -> Result<(f64, f64)> {
        let x = self.survivor_inverse(c)?;
        Ok(match *self {
            SurvivorFunction::PowerSurvivor { .. } if c == 1.0 => (f64::NEG_INFINITY, x),
            SurvivorFunction::PowerSurvivor { .. } if c == 0.0 => (x, f64::INFINITY),
            _ => (x, x),
        })
    }
}

/// Does `high` first-order stochastically dominate `low`, i.e.
/// `high(x) ≥ low(x)` everywhere on a grid over both effective spans?
pub fn fosd_check(low: &SurvivorFunction, high: &SurvivorFunction, grid_size: usize) -> bool {
    let (a1, b1) = low.effective_span();
    let (a2, b2) = high.effective_span();
    numeric::linspace(a1.min(a2), b1.max(b2), grid_size.max(3))
        .into_iter()
        .all(|x| high.crime_rate(x) >= low.crime_rate(x) - 1e-12)
}

/// One population group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    /// Group mass `N_g`; real-valued.
    pub population: f64,
    pub outside_option: SurvivorFunction,
    pub signal: SignalStructure,
}

impl Group {
    pub fn new(
        name: impl Into<String>,
        population: f64,
        outside_option: SurvivorFunction,
        signal: SignalStructure,
    ) -> Result<Self> {
        if !(population.is_finite() && population > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "population must be positive, got {population}"
            )));
        }
        outside_option.validate()?;
        // re-run the signal checks in case the caller used new_unchecked
        let signal = SignalStructure::new(signal.base, signal.mu, signal.sigma, signal.crime_shift)?;
        Ok(Self {
            name: name.into(),
            population,
            outside_option,
            signal,
        })
    }
}

/// Two groups plus an optional inspection capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub groups: [Group; 2],
    pub inspection_capacity: Option<f64>,
}

impl Scenario {
    pub fn new(groups: [Group; 2], inspection_capacity: Option<f64>) -> Result<Self> {
        if let Some(s) = inspection_capacity {
            let total = groups[0].population + groups[1].population;
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "inspection capacity must be positive, got {s}"
                )));
            }
            if s >= total {
                return Err(Error::InvalidParameter(format!(
                    "search capacity is limited: capacity {s} must be below N_1 + N_2 = {total}"
                )));
            }
        }
        Ok(Self {
            groups,
            inspection_capacity,
        })
    }

    pub fn populations(&self) -> [f64; 2] {
        [self.groups[0].population, self.groups[1].population]
    }

    pub fn signals(&self) -> [&SignalStructure; 2] {
        [&self.groups[0].signal, &self.groups[1].signal]
    }

    pub fn survivors(&self) -> [&SurvivorFunction; 2] {
        [&self.groups[0].outside_option, &self.groups[1].outside_option]
    }

    /// Same scenario with the group order reversed.
    pub fn swapped(&self) -> Self {
        let [a, b] = self.groups.clone();
        Self {
            groups: [b, a],
            inspection_capacity: self.inspection_capacity,
        }
    }

    pub fn identical_signals(&self) -> bool {
        self.groups[0].signal == self.groups[1].signal
    }

    /// Copy with one group's signal replaced (validated).
    pub fn with_signal(&self, group: usize, signal: SignalStructure) -> Result<Self> {
        let mut groups = self.groups.clone();
        groups[group] = Group::new(
            groups[group].name.clone(),
            groups[group].population,
            groups[group].outside_option,
            signal,
        )?;
        Self::new(groups, self.inspection_capacity)
    }

    /// Copy with a different inspection capacity (validated).
    pub fn with_capacity(&self, capacity: Option<f64>) -> Result<Self> {
        Self::new(self.groups.clone(), capacity)
    }
}
