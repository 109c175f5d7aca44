//! Unit conversions. Internally rates are rad/µs, times are µs and drive
//! amplitudes are √(rad/µs).

use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    /// ν/2π in MHz.
    MhzOver2Pi,
    RadPerUs,
    /// A²/2π in MHz, for drive amplitudes.
    SqMhzOver2Pi,
    SqrtRadPerUs,
    Rad,
    Us,
    Ns,
    Dimensionless,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Rate,
    Amplitude,
    Angle,
    Time,
    None,
}

impl Unit {
    pub const ALL: [Unit; 8] = [
        Unit::MhzOver2Pi,
        Unit::RadPerUs,
        Unit::SqMhzOver2Pi,
        Unit::SqrtRadPerUs,
        Unit::Rad,
        Unit::Us,
        Unit::Ns,
        Unit::Dimensionless,
    ];

    pub fn parse(s: &str) -> Option<Unit> {
        Unit::ALL.into_iter().find(|u| u.suffix() == s)
    }

    pub fn suffix(&self) -> &'static str {
        match self {
            Unit::MhzOver2Pi => "MHz_over_2pi",
            Unit::RadPerUs => "rad_per_us",
            Unit::SqMhzOver2Pi => "sq_MHz_over_2pi",
            Unit::SqrtRadPerUs => "sqrt_rad_per_us",
            Unit::Rad => "rad",
            Unit::Us => "us",
            Unit::Ns => "ns",
            Unit::Dimensionless => "1",
        }
    }

    pub fn dimension(&self) -> Dimension {
        match self {
            Unit::MhzOver2Pi | Unit::RadPerUs => Dimension::Rate,
            Unit::SqMhzOver2Pi | Unit::SqrtRadPerUs => Dimension::Amplitude,
            Unit::Rad => Dimension::Angle,
            Unit::Us | Unit::Ns => Dimension::Time,
            Unit::Dimensionless => Dimension::None,
        }
    }

    /// Converts a value in this unit to the internal unit of its dimension.
    pub fn to_internal(&self, v: f64) -> f64 {
        match self {
            Unit::MhzOver2Pi => mhz_to_rad_per_us(v),
            Unit::SqMhzOver2Pi => (2.0 * PI * v).sqrt(),
            Unit::Ns => v * 1e-3,
            _ => v,
        }
    }
}

pub fn mhz_to_rad_per_us(nu: f64) -> f64 {
    2.0 * PI * nu
}

pub fn rad_per_us_to_mhz(w: f64) -> f64 {
    w / (2.0 * PI)
}
