use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

/// A US-dollar amount held as integer micro-dollars, so sums of per-example
/// rates are exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Usd(pub u64);

impl Usd {
    pub const MICROS: u64 = 1_000_000;

    pub fn from_dollars(d: f64) -> Self {
        Self((d * Self::MICROS as f64).round() as u64)
    }

    pub fn from_cents(c: u64) -> Self {
        Self(c * 10_000)
    }

    pub fn dollars(self) -> f64 {
        self.0 as f64 / Self::MICROS as f64
    }

    pub fn times(self, n: u64) -> Self {
        Self(self.0 * n)
    }
}

impl std::ops::Add for Usd {
    type Output = Usd;
    fn add(self, rhs: Usd) -> Usd {
        Usd(self.0 + rhs.0)
    }
}

impl fmt::Display for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cents = (self.0 + 5_000) / 10_000;
        let whole = (cents / 100).to_string();
        let mut grouped = String::new();
        for (i, c) in whole.chars().enumerate() {
            if i > 0 && (whole.len() - i) % 3 == 0 {
                grouped.push(',');
            }
            grouped.push(c);
        }
        write!(f, "${grouped}.{:02}", cents % 100)
    }
}

impl Serialize for Usd {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.dollars())
    }
}

impl<'de> Deserialize<'de> for Usd {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v < 0.0 || !v.is_finite() {
            return Err(serde::de::Error::custom("currency amounts must be non-negative"));
        }
        Ok(Usd::from_dollars(v))
    }
}

/// Per-example rates: $0.02 per core example, $0.01 per expanded example,
/// and $0.50 for a human-annotated one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub per_core_example: Usd,
    pub per_expanded_example: Usd,
    pub per_human_example: Usd,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            per_core_example: Usd::from_cents(2),
            per_expanded_example: Usd::from_cents(1),
            per_human_example: Usd::from_cents(50),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub core_count: u64,
    pub expanded_count: u64,
    pub generated_cost: Usd,
    pub human_equivalent_cost: Usd,
    /// Human-equivalent over generated cost; `None` when both are zero and
    /// `f64::INFINITY` in [`CostReport::ratio`] when only generation is free.
    pub ratio: Option<f64>,
}

impl CostReport {
    pub fn ratio(&self) -> f64 {
        match (self.generated_cost.0, self.human_equivalent_cost.0) {
            (0, 0) => f64::NAN,
            (0, _) => f64::INFINITY,
            (g, h) => h as f64 / g as f64,
        }
    }
}

pub fn estimate_cost(core_count: u64, expanded_count: u64, model: &CostModel) -> CostReport {
    let generated = model.per_core_example.times(core_count) + model.per_expanded_example.times(expanded_count);
    let human = model.per_human_example.times(core_count + expanded_count);
    let mut report = CostReport {
        core_count,
        expanded_count,
        generated_cost: generated,
        human_equivalent_cost: human,
        ratio: None,
    };
    let r = report.ratio();
    report.ratio = r.is_finite().then_some(r);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headline_numbers() {
        let r = estimate_cost(64_000, 0, &CostModel::default());
        assert_eq!(r.generated_cost, Usd::from_dollars(1280.0));
        assert_eq!(r.human_equivalent_cost, Usd::from_dollars(32_000.0));
        assert_eq!(r.generated_cost.to_string(), "$1,280.00");
        assert_eq!(r.human_equivalent_cost.to_string(), "$32,000.00");
        assert_eq!(r.ratio, Some(25.0));
    }

    #[test]
    fn zero_and_unit() {
        let r = estimate_cost(0, 0, &CostModel::default());
        assert_eq!((r.generated_cost.0, r.human_equivalent_cost.0), (0, 0));
        assert_eq!(r.ratio, None);
        let r = estimate_cost(1, 1, &CostModel::default());
        assert_eq!(r.generated_cost.to_string(), "$0.03");
        assert_eq!(r.human_equivalent_cost.to_string(), "$1.00");
    }

    #[test]
    fn free_generation_is_infinite_ratio() {
        let model = CostModel {
            per_core_example: Usd(0),
            ..CostModel::default()
        };
        assert_eq!(estimate_cost(3, 0, &model).ratio(), f64::INFINITY);
    }

    #[test]
    fn rates_from_json() {
        let m: CostModel = serde_json::from_str(r#"{"per_core_example": 0.02}"#).unwrap();
        assert_eq!(m, CostModel::default());
        assert!(serde_json::from_str::<CostModel>(r#"{"per_core_example": -1}"#).is_err());
    }
}
