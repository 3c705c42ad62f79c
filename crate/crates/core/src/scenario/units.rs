//! Unit-suffixed quantities for configuration files.
//!
//! Every dimensioned field is written as a string such as `"2 us"` or
//! `"1 MHz/mm"`; a bare number is rejected. Values are converted to the
//! internal units (us, mm, rad/us) on parsing.

use std::f64::consts::TAU;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

/// One accepted suffix and its factor to internal units.
struct Unit {
    suffix: &'static str,
    factor: f64,
}

trait Dimension {
    const NAME: &'static str;
    const UNITS: &'static [Unit];
}

fn parse_with(text: &str, name: &str, units: &[Unit]) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .unwrap_or(text.len());
    let (number, suffix) = text.split_at(split);
    let suffix = suffix.trim();
    let expected = || {
        units
            .iter()
            .map(|u| u.suffix)
            .collect::<Vec<_>>()
            .join(", ")
    };
    if suffix.is_empty() {
        return Err(format!("missing unit suffix on {name} `{text}` (expected one of: {})", expected()));
    }
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| format!("invalid number in {name} `{text}`"))?;
    if !value.is_finite() {
        return Err(format!("{name} `{text}` is not finite"));
    }
    let unit = units
        .iter()
        .find(|u| u.suffix == suffix)
        .ok_or_else(|| format!("unknown unit `{suffix}` for {name} (expected one of: {})", expected()))?;
    Ok(value * unit.factor)
}

struct QuantityVisitor<D>(std::marker::PhantomData<D>);

impl<D: Dimension> Visitor<'_> for QuantityVisitor<D> {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a {} with a unit suffix", D::NAME)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        parse_with(v, D::NAME, D::UNITS).map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        self.visit_f64(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        self.visit_f64(v as f64)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        let expected: Vec<_> = D::UNITS.iter().map(|u| u.suffix).collect();
        Err(E::custom(format!(
            "missing unit suffix on {} {v} (write it as a string, e.g. \"{v} {}\")",
            D::NAME,
            expected[0]
        )))
    }
}

macro_rules! quantity {
    ($(#[$doc:meta])* $name:ident, $label:literal, [$(($suffix:literal, $factor:expr)),+ $(,)?]) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Default)]
        pub struct $name(pub f64);

        impl Dimension for $name {
            const NAME: &'static str = $label;
            const UNITS: &'static [Unit] = &[$(Unit { suffix: $suffix, factor: $factor }),+];
        }

        impl $name {
            pub fn parse(text: &str) -> Result<Self, String> {
                parse_with(text, $label, <Self as Dimension>::UNITS).map(Self)
            }

            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
                d.deserialize_any(QuantityVisitor::<$name>(std::marker::PhantomData)).map($name)
            }
        }
    };
}

quantity!(
    /// Time in us.
    Time, "time", [("us", 1.0), ("μs", 1.0), ("ns", 1e-3), ("ms", 1e3)]
);
quantity!(
    /// Length in mm.
    Length, "length", [("mm", 1.0), ("um", 1e-3), ("μm", 1e-3), ("cm", 10.0)]
);
quantity!(
    /// Angular frequency in rad/us; ordinary frequencies are multiplied by 2 pi.
    Frequency, "frequency", [("MHz", TAU), ("kHz", TAU * 1e-3), ("rad/us", 1.0)]
);
quantity!(
    /// Frequency gradient in rad/us per mm.
    Gradient, "gradient", [("MHz/mm", TAU), ("kHz/mm", TAU * 1e-3), ("rad/us/mm", 1.0)]
);
quantity!(
    /// Linear density or wavenumber in 1/mm.
    PerLength, "inverse length", [("/mm", 1.0), ("rad/mm", 1.0)]
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(Time::parse("2 us").unwrap().0, 2.0);
        assert_eq!(Time::parse("1.5e3ns").unwrap().0, 1.5);
        assert_eq!(Length::parse("0.4mm").unwrap().0, 0.4);
        assert!((Frequency::parse("0.5 MHz").unwrap().0 - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(Frequency::parse("-4.5 rad/us").unwrap().0, -4.5);
        assert!((Gradient::parse("1 MHz/mm").unwrap().0 - TAU).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_units() {
        assert!(Time::parse("3.2").unwrap_err().contains("missing unit"));
        assert!(Time::parse("3 mm").unwrap_err().contains("unknown unit"));
        assert!(Length::parse("x mm").is_err());
    }

    #[test]
    fn bare_numbers_are_rejected_when_deserializing() {
        #[derive(Deserialize, Debug)]
        struct S {
            #[allow(dead_code)]
            fwhm: Time,
        }
        let err = toml::from_str::<S>("fwhm = 3.2").unwrap_err().to_string();
        assert!(err.contains("missing unit suffix"), "{err}");
        let ok: S = toml::from_str("fwhm = \"3.2 us\"").unwrap();
        assert_eq!(ok.fwhm.0, 3.2);
    }
}
