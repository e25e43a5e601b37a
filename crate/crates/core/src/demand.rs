//! Annual heat demand completion and hourly standard-load-profile synthesis.
//!
//! Daily energy follows a sigmoid of the daily mean temperature times a
//! weekday factor; each day is spread over its hours with the hour-of-day
//! shares of the day's temperature band. The whole series is then scaled once
//! so it sums to the annual demand.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{BuildingRecord, UsageType};

pub const HOURS_PER_YEAR: usize = 8760;
pub const DAYS_PER_YEAR: usize = HOURS_PER_YEAR / 24;

/// Upper edges (°C) of the temperature bands used for hour-of-day factors.
/// A day falls into the first band whose edge exceeds its mean temperature.
pub const BAND_EDGES_C: [f64; 9] = [-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0];
pub const BAND_COUNT: usize = BAND_EDGES_C.len() + 1;

/// Smallest allowed value of `theta - theta0` before exponentiation.
const POLE_CLAMP_C: f64 = -0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    temps: Vec<f64>,
}

impl WeatherSeries {
    pub fn new(temps: Vec<f64>) -> Result<Self> {
        if temps.len() != HOURS_PER_YEAR {
            return Err(Error::Config(format!(
                "weather series needs {HOURS_PER_YEAR} hourly values, got {}",
                temps.len()
            )));
        }
        if let Some((h, t)) = temps.iter().enumerate().find(|(_, t)| !(-50.0..=60.0).contains(*t)) {
            return Err(Error::Config(format!("temperature {t} at hour {h} outside [-50, 60]")));
        }
        Ok(WeatherSeries { temps })
    }

    pub fn constant(t: f64) -> Result<Self> {
        Self::new(vec![t; HOURS_PER_YEAR])
    }

    pub fn temps(&self) -> &[f64] {
        &self.temps
    }

    pub fn daily_means(&self) -> Vec<f64> {
        self.temps.chunks(24).map(|d| d.iter().sum::<f64>() / 24.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlpParams {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    /// Reference temperature, °C.
    pub theta0: f64,
    /// Monday first.
    pub weekday_factors: [f64; 7],
    /// One row of 24 factors per temperature band, coldest band first.
    pub hour_factors: Vec<[f64; 24]>,
}

impl SlpParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("load profile parameters: {m}")));
        if !(self.a > 0.0 && self.b < 0.0 && self.c > 0.0 && self.d >= 0.0) {
            return bad("need A > 0, B < 0, C > 0, D >= 0");
        }
        if !self.theta0.is_finite() {
            return bad("theta0 must be finite");
        }
        if self.hour_factors.len() != BAND_COUNT {
            return bad(&format!("expected {BAND_COUNT} hour-factor rows"));
        }
        let all = self.weekday_factors.iter().chain(self.hour_factors.iter().flatten());
        if all.clone().any(|f| !(*f > 0.0 && f.is_finite())) {
            return bad("factors must be positive");
        }
        Ok(())
    }

    /// Flat hour and weekday factors, mostly useful for tests.
    pub fn uniform(a: f64, b: f64, c: f64, d: f64, theta0: f64) -> Self {
        SlpParams {
            a,
            b,
            c,
            d,
            theta0,
            weekday_factors: [1.0; 7],
            hour_factors: vec![[1.0; 24]; BAND_COUNT],
        }
    }
}

pub type SlpTable = BTreeMap<UsageType, SlpParams>;

/// kWh/(m²·a) per usage type.
pub type SpecificDemand = BTreeMap<UsageType, f64>;

pub fn default_specific_demand() -> SpecificDemand {
    BTreeMap::from([
        (UsageType::Residential, 120.0),
        (UsageType::Office, 100.0),
        (UsageType::Commercial, 110.0),
        (UsageType::Industrial, 140.0),
        (UsageType::Other, 110.0),
    ])
}

fn band_hours(base: [f64; 24]) -> Vec<[f64; 24]> {
    // cold days run close to flat, mild days follow the occupancy pattern fully
    (0..BAND_COUNT)
        .map(|band| {
            let amp = 0.3 + 0.7 * band as f64 / (BAND_COUNT - 1) as f64;
            base.map(|f| 1.0 + amp * (f - 1.0))
        })
        .collect()
}

fn residential_hours() -> [f64; 24] {
    let mut h = [1.0; 24];
    for (i, f) in h.iter_mut().enumerate() {
        *f = match i {
            0..=4 => 0.6,
            5 => 0.9,
            6..=8 => 1.45,
            9..=15 => 0.95,
            16 => 1.1,
            17..=21 => 1.25,
            _ => 0.8,
        };
    }
    h
}

fn business_hours() -> [f64; 24] {
    let mut h = [1.0; 24];
    for (i, f) in h.iter_mut().enumerate() {
        *f = match i {
            0..=5 => 0.55,
            6..=7 => 1.5,
            8..=17 => 1.3,
            18..=19 => 0.9,
            _ => 0.6,
        };
    }
    h
}

/// Shipped sigmoid coefficients and factors per usage type. These are
/// configuration defaults, meant to be replaced per project.
pub fn default_slp_table() -> SlpTable {
    let workweek = [1.03, 1.03, 1.03, 1.03, 1.02, 0.93, 0.93];
    let mk = |a, b, c, d, week: [f64; 7], hours: [f64; 24]| SlpParams {
        a,
        b,
        c,
        d,
        theta0: 40.0,
        weekday_factors: week,
        hour_factors: band_hours(hours),
    };
    BTreeMap::from([
        (
            UsageType::Residential,
            mk(3.05, -37.18, 5.67, 0.10, [1.0; 7], residential_hours()),
        ),
        (
            UsageType::Office,
            mk(2.82, -36.0, 7.5, 0.15, workweek, business_hours()),
        ),
        (
            UsageType::Commercial,
            mk(3.0, -35.0, 6.2, 0.12, workweek, business_hours()),
        ),
        (
            UsageType::Industrial,
            mk(2.6, -35.5, 5.0, 0.2, workweek, business_hours()),
        ),
        (
            UsageType::Other,
            mk(3.0, -37.0, 6.0, 0.1, [1.0; 7], residential_hours()),
        ),
    ])
}

/// Annual demand of a building: the recorded value, else floor area times the
/// specific demand of its usage type.
pub fn complete_annual_demand(b: &BuildingRecord, specific: &SpecificDemand) -> Result<f64> {
    if let Some(d) = b.annual_demand {
        return Ok(d);
    }
    match (b.floor_area, specific.get(&b.usage_type)) {
        (Some(area), Some(spec)) => Ok(area * spec),
        (None, _) => Err(Error::Config(format!(
            "building {} has neither annual demand nor floor area",
            b.id
        ))),
        (Some(_), None) => Err(Error::Config(format!(
            "no specific demand configured for usage type {} (building {})",
            b.usage_type, b.id
        ))),
    }
}

/// Daily sigmoid factor `A / (1 + (B / (theta - theta0))^C) + D`.
pub fn sigmoid_h(theta: f64, p: &SlpParams) -> f64 {
    let diff = (theta - p.theta0).min(POLE_CLAMP_C);
    p.a / (1.0 + (p.b / diff).powf(p.c)) + p.d
}

pub fn band_index(theta: f64) -> usize {
    BAND_EDGES_C
        .iter()
        .position(|&edge| theta < edge)
        .unwrap_or(BAND_EDGES_C.len())
}

/// Weekday (Monday = 0) of January 1st.
fn first_weekday(year: i32) -> Result<usize> {
    NaiveDate::from_ymd_opt(year, 1, 1)
        .map(|d| d.weekday().num_days_from_monday() as usize)
        .ok_or_else(|| Error::Config(format!("invalid calendar year {year}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    /// kWh per hour
    pub values: Vec<f64>,
    pub year: i32,
}

impl DemandProfile {
    pub fn zeros(year: i32) -> Self {
        DemandProfile {
            values: vec![0.0; HOURS_PER_YEAR],
            year,
        }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Unnormalized hourly series (daily factor times hour share).
pub fn raw_profile(weather: &WeatherSeries, p: &SlpParams, calendar_year: i32) -> Result<Vec<f64>> {
    p.validate()?;
    let wd0 = first_weekday(calendar_year)?;
    let mut raw = Vec::with_capacity(HOURS_PER_YEAR);
    for (day, theta) in weather.daily_means().into_iter().enumerate() {
        let daily = sigmoid_h(theta, p) * p.weekday_factors[(wd0 + day) % 7];
        let hours = &p.hour_factors[band_index(theta)];
        let norm: f64 = hours.iter().sum();
        raw.extend(hours.iter().map(|f| daily * f / norm));
    }
    Ok(raw)
}

pub fn build_profile(annual: f64, weather: &WeatherSeries, p: &SlpParams, calendar_year: i32) -> Result<DemandProfile> {
    if !(annual >= 0.0 && annual.is_finite()) {
        return Err(Error::Config(format!("annual demand {annual} must be non-negative")));
    }
    let raw = raw_profile(weather, p, calendar_year)?;
    if annual == 0.0 {
        return Ok(DemandProfile::zeros(calendar_year));
    }
    let scale = annual / raw.iter().sum::<f64>();
    Ok(DemandProfile {
        values: raw.into_iter().map(|v| v * scale).collect(),
        year: calendar_year,
    })
}

/// Peak hourly demand; one kWh over one hour is one kW.
pub fn nominal_load(profile: &DemandProfile) -> f64 {
    profile.values.iter().copied().fold(0.0, f64::max)
}

/// Unit-annual profile shape per usage type. Any node profile is a linear
/// combination of these shapes weighted by its annual demand per usage.
#[derive(Debug, Clone)]
pub struct ProfileBank {
    year: i32,
    shapes: BTreeMap<UsageType, DemandProfile>,
}

impl ProfileBank {
    pub fn new(weather: &WeatherSeries, table: &SlpTable, calendar_year: i32) -> Result<Self> {
        let mut shapes = BTreeMap::new();
        for usage in UsageType::ALL {
            let p = table
                .get(&usage)
                .ok_or_else(|| Error::Config(format!("no load profile parameters for {usage}")))?;
            shapes.insert(usage, build_profile(1.0, weather, p, calendar_year)?);
        }
        Ok(ProfileBank {
            year: calendar_year,
            shapes,
        })
    }

    pub fn shape(&self, usage: UsageType) -> &DemandProfile {
        &self.shapes[&usage]
    }

    /// Profile of a node with the given annual demand per usage type.
    pub fn profile(&self, mix: &BTreeMap<UsageType, f64>) -> DemandProfile {
        let mut out = DemandProfile::zeros(self.year);
        for (usage, annual) in mix {
            for (o, s) in out.values.iter_mut().zip(&self.shapes[usage].values) {
                *o += annual * s;
            }
        }
        out
    }

    pub fn peak(&self, mix: &BTreeMap<UsageType, f64>) -> f64 {
        nominal_load(&self.profile(mix))
    }
}
