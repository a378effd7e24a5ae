//! Two-term bioenergetic growth model for Nile tilapia.
//!
//! Body weight follows `dw/dt = Ψ(f, T, DO) v(UIA) w^m - k(T) w^n`, where the
//! anabolism coefficient Ψ scales with the relative feeding rate and the
//! temperature and oxygen factors, and the fasting catabolism coefficient `k`
//! grows exponentially with temperature.

use crate::error::{Error, Result};

/// Bioenergetic constants. Defaults are the published Nile tilapia values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthParams {
    /// Body-weight exponent of net anabolism.
    pub m: f64,
    /// Body-weight exponent of fasting catabolism.
    pub n: f64,
    /// Food consumption coefficient, g^(1-m)/day.
    pub h: f64,
    /// Efficiency of food assimilation.
    pub b: f64,
    /// Fraction of assimilated food lost.
    pub a: f64,
    /// Fasting catabolism at `t_min`, g^(1-n)/day.
    pub k_min: f64,
    /// Temperature slope of catabolism, 1/°C.
    pub j: f64,
    /// Shape of the temperature response.
    pub kappa: f64,
    pub t_opt: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub uia_crit: f64,
    pub uia_max: f64,
    pub do_crit: f64,
    pub do_min: f64,
    /// Photoperiod factor.
    pub rho: f64,
    /// Maximal daily ration as a fraction of body weight.
    pub rm_fraction: f64,
}

impl Default for GrowthParams {
    fn default() -> Self {
        Self {
            m: 0.67,
            n: 0.81,
            h: 0.8,
            b: 0.62,
            a: 0.53,
            k_min: 0.00133,
            j: 0.0132,
            kappa: 4.6,
            t_opt: 33.0,
            t_min: 24.0,
            t_max: 40.0,
            uia_crit: 0.06,
            uia_max: 1.4,
            do_crit: 0.3,
            do_min: 1.0,
            rho: 1.0,
            rm_fraction: 0.03,
        }
    }
}

impl GrowthParams {
    /// Names accepted by [`GrowthParams::set`], in declaration order.
    pub const KEYS: [&'static str; 17] = [
        "m",
        "n",
        "h",
        "b",
        "a",
        "k_min",
        "j",
        "kappa",
        "t_opt",
        "t_min",
        "t_max",
        "uia_crit",
        "uia_max",
        "do_crit",
        "do_min",
        "rho",
        "rm_fraction",
    ];

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "m" => self.m,
            "n" => self.n,
            "h" => self.h,
            "b" => self.b,
            "a" => self.a,
            "k_min" => self.k_min,
            "j" => self.j,
            "kappa" => self.kappa,
            "t_opt" => self.t_opt,
            "t_min" => self.t_min,
            "t_max" => self.t_max,
            "uia_crit" => self.uia_crit,
            "uia_max" => self.uia_max,
            "do_crit" => self.do_crit,
            "do_min" => self.do_min,
            "rho" => self.rho,
            "rm_fraction" => self.rm_fraction,
            _ => return None,
        })
    }

    /// Overrides one field by name. Returns `false` for unknown names.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match key {
            "m" => &mut self.m,
            "n" => &mut self.n,
            "h" => &mut self.h,
            "b" => &mut self.b,
            "a" => &mut self.a,
            "k_min" => &mut self.k_min,
            "j" => &mut self.j,
            "kappa" => &mut self.kappa,
            "t_opt" => &mut self.t_opt,
            "t_min" => &mut self.t_min,
            "t_max" => &mut self.t_max,
            "uia_crit" => &mut self.uia_crit,
            "uia_max" => &mut self.uia_max,
            "do_crit" => &mut self.do_crit,
            "do_min" => &mut self.do_min,
            "rho" => &mut self.rho,
            "rm_fraction" => &mut self.rm_fraction,
            _ => return false,
        };
        *slot = value;
        true
    }

    pub fn validate(&self) -> Result<()> {
        for key in Self::KEYS {
            if !self.get(key).is_some_and(f64::is_finite) {
                return Err(Error::Config(format!(
                    "growth parameter `{key}` is not finite"
                )));
            }
        }
        if !(0.0 < self.m && self.m < 1.0) {
            return Err(Error::invalid("m", "must lie in (0, 1)"));
        }
        if !(0.0 < self.n && self.n < 1.0) {
            return Err(Error::invalid("n", "must lie in (0, 1)"));
        }
        if !(self.t_min < self.t_opt && self.t_opt < self.t_max) {
            return Err(Error::invalid("t_opt", "requires t_min < t_opt < t_max"));
        }
        if self.uia_crit >= self.uia_max {
            return Err(Error::invalid("uia_crit", "must be below uia_max"));
        }
        if !(0.0 < self.rho && self.rho < 2.0) {
            return Err(Error::invalid("rho", "must lie in (0, 2)"));
        }
        if self.rm_fraction <= 0.0 {
            return Err(Error::invalid("rm_fraction", "must be positive"));
        }
        if self.h < 0.0 || self.k_min <= 0.0 {
            return Err(Error::invalid(
                "k_min",
                "h must be non-negative and k_min positive",
            ));
        }
        Ok(())
    }
}

/// Exogenous water state for one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvConditions {
    /// °C
    pub temperature: f64,
    /// mg/l
    pub dissolved_oxygen: f64,
    /// Un-ionized ammonia, mg/l.
    pub uia: f64,
}

impl EnvConditions {
    /// Optimal temperature, oxygen at the critical level and ammonia below it.
    pub fn optimal(p: &GrowthParams) -> Self {
        Self {
            temperature: p.t_opt,
            dissolved_oxygen: p.do_crit,
            uia: 0.5 * p.uia_crit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.temperature) {
            return Err(Error::invalid(
                "temperature",
                "must be finite and non-negative",
            ));
        }
        if !ok(self.dissolved_oxygen) {
            return Err(Error::invalid(
                "dissolved_oxygen",
                "must be finite and non-negative",
            ));
        }
        if !ok(self.uia) {
            return Err(Error::invalid("uia", "must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FishState {
    /// grams
    pub weight: f64,
    /// Days since stocking.
    pub day: u32,
}

/// τ(T): temperature effect on food consumption.
pub fn temperature_factor(t: f64, p: &GrowthParams) -> f64 {
    let x = if t > p.t_opt {
        (t - p.t_opt) / (p.t_max - p.t_opt)
    } else if t < p.t_opt {
        (p.t_opt - t) / (p.t_opt - p.t_min)
    } else {
        return 1.0;
    };
    (-p.kappa * x.powi(4)).exp()
}

/// v(UIA): linear ramp from 1 at `uia_crit` down to 0 at `uia_max`.
pub fn uia_factor(uia: f64, p: &GrowthParams) -> f64 {
    if uia <= p.uia_crit {
        1.0
    } else if uia < p.uia_max {
        (p.uia_max - uia) / (p.uia_max - p.uia_crit)
    } else {
        0.0
    }
}

/// σ(DO). With the published thresholds (`do_crit` < `do_min`) the ramp is
/// empty and this reduces to a step at `do_crit`.
pub fn do_factor(dissolved_oxygen: f64, p: &GrowthParams) -> f64 {
    if dissolved_oxygen >= p.do_crit {
        1.0
    } else if p.do_min < dissolved_oxygen {
        (dissolved_oxygen - p.do_min) / (p.do_crit - p.do_min)
    } else {
        0.0
    }
}

fn check_feed(f: f64) -> Result<()> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(Error::invalid(
            "f",
            format!("relative feeding rate {f} outside [0, 1]"),
        ))
    }
}

/// Ψ(f, T, DO) = hρ f b(1-a) τ(T) σ(DO), in g^(1-m)/day.
pub fn anabolism_coefficient(f: f64, env: &EnvConditions, p: &GrowthParams) -> Result<f64> {
    check_feed(f)?;
    Ok(p.h
        * p.rho
        * f
        * p.b
        * (1.0 - p.a)
        * temperature_factor(env.temperature, p)
        * do_factor(env.dissolved_oxygen, p))
}

/// k(T) = k_min exp(j (T - T_min)), in g^(1-n)/day.
pub fn catabolism_coefficient(t: f64, p: &GrowthParams) -> f64 {
    p.k_min * (p.j * (t - p.t_min)).exp()
}

/// dw/dt in g/day.
pub fn growth_rate(w: f64, f: f64, env: &EnvConditions, p: &GrowthParams) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::invalid(
            "w",
            format!("weight must be positive, got {w}"),
        ));
    }
    let psi = anabolism_coefficient(f, env, p)?;
    let anabolism = psi * uia_factor(env.uia, p) * w.powf(p.m);
    let catabolism = catabolism_coefficient(env.temperature, p) * w.powf(p.n);
    Ok(anabolism - catabolism)
}

/// Weight at which anabolism balances catabolism, if anabolism is active.
pub fn equilibrium_weight(f: f64, env: &EnvConditions, p: &GrowthParams) -> Result<Option<f64>> {
    let drive = anabolism_coefficient(f, env, p)? * uia_factor(env.uia, p);
    if drive <= 0.0 {
        return Ok(None);
    }
    let k = catabolism_coefficient(env.temperature, p);
    Ok(Some((drive / k).powf(1.0 / (p.n - p.m))))
}

/// Fixed-step explicit Euler settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    /// Internal step in days.
    pub substep: f64,
    /// Weight floor in grams; reaching it is reported as starvation.
    pub floor: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            substep: 1.0,
            floor: 0.1,
        }
    }
}

impl Integrator {
    pub fn validate(&self) -> Result<()> {
        if !(self.substep > 0.0 && self.substep.is_finite()) {
            return Err(Error::invalid("substep", "must be positive"));
        }
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(Error::invalid("weight_floor", "must be positive"));
        }
        Ok(())
    }
}

/// Advances `state` by `days` days at constant feeding rate and conditions.
pub fn step(
    state: FishState,
    f: f64,
    env: &EnvConditions,
    p: &GrowthParams,
    days: u32,
    integrator: &Integrator,
) -> Result<FishState> {
    if days == 0 {
        return Err(Error::invalid("dt", "must be at least one day"));
    }
    if !(state.weight > 0.0) {
        return Err(Error::invalid("w", "weight must be positive"));
    }
    check_feed(f)?;
    let per_day = (1.0 / integrator.substep).ceil().max(1.0) as u32;
    let h = 1.0 / per_day as f64;
    let mut w = state.weight;
    for day in 0..days {
        for _ in 0..per_day {
            w += h * growth_rate(w, f, env, p)?;
            if !w.is_finite() {
                return Err(Error::NonFinite("growth step"));
            }
            if w <= integrator.floor {
                return Err(Error::Starved {
                    day: state.day + day + 1,
                    floor: integrator.floor,
                });
            }
        }
    }
    Ok(FishState {
        weight: w,
        day: state.day + days,
    })
}

/// Conditions under which the surrogate reference trajectory is grown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSettings {
    pub env: EnvConditions,
    pub feed: f64,
}

impl ReferenceSettings {
    pub fn optimal(p: &GrowthParams) -> Self {
        Self {
            env: EnvConditions::optimal(p),
            feed: 1.0,
        }
    }
}

/// Daily weights from day 0 through `horizon` under constant settings.
pub fn generate_reference(
    w0: f64,
    horizon: u32,
    p: &GrowthParams,
    settings: &ReferenceSettings,
    integrator: &Integrator,
) -> Result<Vec<f64>> {
    if !(w0 > 0.0) {
        return Err(Error::invalid("w0", "must be positive"));
    }
    let mut state = FishState { weight: w0, day: 0 };
    let mut weights = Vec::with_capacity(horizon as usize + 1);
    weights.push(w0);
    for _ in 0..horizon {
        state = step(state, settings.feed, &settings.env, p, 1, integrator)?;
        weights.push(state.weight);
    }
    Ok(weights)
}
