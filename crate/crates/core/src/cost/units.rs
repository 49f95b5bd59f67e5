//! Unit-tagged `f64` newtypes for the cost model.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use serde::{Deserialize, Serialize};

macro_rules! unit {
    ($(#[$doc:meta])* $name:ident, $symbol:literal) => {
        $(#[$doc])*
        #[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub f64);

        impl $name {
            pub const SYMBOL: &'static str = $symbol;

            #[inline]
            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                Self(self.0 + rhs.0)
            }
        }

        impl Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                Self(self.0 - rhs.0)
            }
        }

        impl Mul<f64> for $name {
            type Output = Self;
            fn mul(self, rhs: f64) -> Self {
                Self(self.0 * rhs)
            }
        }

        impl Div<f64> for $name {
            type Output = Self;
            fn div(self, rhs: f64) -> Self {
                Self(self.0 / rhs)
            }
        }

        impl Div for $name {
            type Output = f64;
            fn div(self, rhs: Self) -> f64 {
                self.0 / rhs.0
            }
        }

        impl std::iter::Sum for $name {
            fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
                Self(iter.map(|v| v.0).sum())
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {}", self.0, $symbol)
            }
        }
    };
}

unit!(Seconds, "s");
unit!(Hertz, "Hz");
unit!(Volts, "V");
unit!(Amps, "A");
unit!(Ohms, "Ω");
unit!(Watts, "W");
unit!(Joules, "J");
unit!(Meters, "m");
unit!(SquareMeters, "m²");
unit!(Kelvin, "K");
unit!(
    /// Throughput in 10^9 operations per second.
    GopPerSecond,
    "GOP/s"
);

impl Mul<Hertz> for Joules {
    type Output = Watts;
    fn mul(self, rhs: Hertz) -> Watts {
        Watts(self.0 * rhs.0)
    }
}

impl Mul for Meters {
    type Output = SquareMeters;
    fn mul(self, rhs: Self) -> SquareMeters {
        SquareMeters(self.0 * rhs.0)
    }
}

impl Volts {
    /// Power dissipated across a resistor, `V^2 / R`.
    pub fn power_across(self, r: Ohms) -> Watts {
        Watts(self.0 * self.0 / r.0)
    }
}

impl SquareMeters {
    pub fn from_mm2(mm2: f64) -> Self {
        Self(mm2 * 1e-6)
    }

    pub fn mm2(self) -> f64 {
        self.0 * 1e6
    }
}

impl Joules {
    pub fn from_pj(pj: f64) -> Self {
        Self(pj * 1e-12)
    }

    pub fn pj(self) -> f64 {
        self.0 * 1e12
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_units() {
        let p: Watts = Joules::from_pj(1.0) * Hertz(160e6);
        assert!((p.value() - 0.16e-3).abs() < 1e-15);
        let a: SquareMeters = Meters(400e-9) * Meters(400e-9);
        assert!((a.value() - 1.6e-13).abs() < 1e-25);
        assert_eq!(Volts(1.0).power_across(Ohms(1e6)), Watts(1e-6));
        assert_eq!(SquareMeters::from_mm2(0.5).mm2(), 0.5);
        assert_eq!(Watts(2.0) / Watts(0.5), 4.0);
    }
}
