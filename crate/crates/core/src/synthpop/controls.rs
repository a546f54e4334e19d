//! Marginal controls: which attribute is counted, at which level, in which bins.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Sex, Spc};

use super::{Household, Person};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlLevel {
    Household,
    Person,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlAttribute {
    Cars,
    HouseholdSize,
    Age,
    Sex,
    Spc,
}

impl ControlAttribute {
    pub fn name(self) -> &'static str {
        match self {
            ControlAttribute::Cars => "cars",
            ControlAttribute::HouseholdSize => "hh_size",
            ControlAttribute::Age => "age",
            ControlAttribute::Sex => "sex",
            ControlAttribute::Spc => "spc",
        }
    }

    pub fn level(self) -> ControlLevel {
        match self {
            ControlAttribute::Cars | ControlAttribute::HouseholdSize => ControlLevel::Household,
            _ => ControlLevel::Person,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        [
            ControlAttribute::Cars,
            ControlAttribute::HouseholdSize,
            ControlAttribute::Age,
            ControlAttribute::Sex,
            ControlAttribute::Spc,
        ]
        .into_iter()
        .find(|a| a.name() == name.trim())
        .ok_or_else(|| Error::config("synthesis.controls", format!("unknown control `{name}`")))
    }

    fn categorical(self) -> bool {
        matches!(self, ControlAttribute::Sex | ControlAttribute::Spc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BinMatcher {
    /// Half-open numeric range `[lo, hi)`; `hi = None` is unbounded.
    Range { lo: f64, hi: Option<f64> },
    Category(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlBin {
    pub label: String,
    pub matcher: BinMatcher,
}

impl ControlBin {
    pub fn range(label: &str, lo: f64, hi: Option<f64>) -> Self {
        ControlBin {
            label: label.to_string(),
            matcher: BinMatcher::Range { lo, hi },
        }
    }

    pub fn category(label: &str) -> Self {
        ControlBin {
            label: label.to_string(),
            matcher: BinMatcher::Category(label.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSpec {
    pub level: ControlLevel,
    pub attribute: ControlAttribute,
    pub bins: Vec<ControlBin>,
}

/// Per control name, per bin label, a count.
pub type BinCounts = BTreeMap<String, BTreeMap<String, f64>>;

enum Value<'a> {
    Num(f64),
    Cat(&'a str),
}

impl ControlSpec {
    pub fn new(attribute: ControlAttribute, bins: Vec<ControlBin>) -> Result<Self> {
        let spec = ControlSpec {
            level: attribute.level(),
            attribute,
            bins,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        self.attribute.name()
    }

    /// Bins must be non-overlapping and cover the attribute's domain.
    pub fn validate(&self) -> Result<()> {
        let key = format!("controls.{}", self.name());
        if self.level != self.attribute.level() {
            return Err(Error::config(key, "control level does not match its attribute"));
        }
        if self.bins.is_empty() {
            return Err(Error::config(key, "no bins"));
        }
        if self.attribute.categorical() {
            let domain: Vec<&str> = match self.attribute {
                ControlAttribute::Sex => vec![Sex::Female.as_str(), Sex::Male.as_str()],
                _ => Spc::ALL.iter().map(|s| s.as_str()).collect(),
            };
            let mut seen = Vec::new();
            for b in &self.bins {
                match &b.matcher {
                    BinMatcher::Category(c) => {
                        if !domain.contains(&c.as_str()) {
                            return Err(Error::config(&key, format!("unknown category `{c}`")));
                        }
                        if seen.contains(c) {
                            return Err(Error::config(&key, format!("duplicate category `{c}`")));
                        }
                        seen.push(c.clone());
                    }
                    BinMatcher::Range { .. } => {
                        return Err(Error::config(&key, "categorical control with a range bin"))
                    }
                }
            }
            if seen.len() != domain.len() {
                return Err(Error::config(key, "categories do not cover the domain"));
            }
        } else {
            let mut expected_lo = 0.0;
            for (i, b) in self.bins.iter().enumerate() {
                let BinMatcher::Range { lo, hi } = b.matcher else {
                    return Err(Error::config(&key, "numeric control with a category bin"));
                };
                if (i == 0 && lo > 0.0) || (i > 0 && lo != expected_lo) {
                    return Err(Error::config(&key, "range bins must be contiguous from 0"));
                }
                match hi {
                    Some(h) if h > lo => expected_lo = h,
                    Some(_) => return Err(Error::config(&key, "empty range bin")),
                    None if i + 1 == self.bins.len() => {}
                    None => return Err(Error::config(&key, "only the last bin may be unbounded")),
                }
            }
            if !matches!(self.bins.last().map(|b| &b.matcher), Some(BinMatcher::Range { hi: None, .. })) {
                return Err(Error::config(key, "last range bin must be unbounded"));
            }
        }
        Ok(())
    }

    fn bin_of(&self, value: Value<'_>) -> Option<usize> {
        self.bins.iter().position(|b| match (&b.matcher, &value) {
            (BinMatcher::Range { lo, hi }, Value::Num(v)) => *v >= *lo && hi.is_none_or(|h| *v < h),
            (BinMatcher::Category(c), Value::Cat(v)) => c == v,
            _ => false,
        })
    }

    pub fn household_bin(&self, hh: &Household) -> Option<usize> {
        match self.attribute {
            ControlAttribute::Cars => self.bin_of(Value::Num(hh.cars as f64)),
            ControlAttribute::HouseholdSize => self.bin_of(Value::Num(hh.member_ids.len() as f64)),
            _ => None,
        }
    }

    pub fn person_bin(&self, p: &Person) -> Option<usize> {
        match self.attribute {
            ControlAttribute::Age => self.bin_of(Value::Num(p.age as f64)),
            ControlAttribute::Sex => self.bin_of(Value::Cat(p.sex.as_str())),
            ControlAttribute::Spc => self.bin_of(Value::Cat(p.spc.as_str())),
            _ => None,
        }
    }
}

/// Car ownership {0, 1, 2+}, age {<14, 14–44, 45–59, 60+} and the six categories.
pub fn default_controls() -> Vec<ControlSpec> {
    vec![
        ControlSpec::new(
            ControlAttribute::Cars,
            vec![
                ControlBin::range("0", 0.0, Some(1.0)),
                ControlBin::range("1", 1.0, Some(2.0)),
                ControlBin::range("2+", 2.0, None),
            ],
        )
        .expect("valid"),
        ControlSpec::new(
            ControlAttribute::Age,
            vec![
                ControlBin::range("0-13", 0.0, Some(14.0)),
                ControlBin::range("14-44", 14.0, Some(45.0)),
                ControlBin::range("45-59", 45.0, Some(60.0)),
                ControlBin::range("60+", 60.0, None),
            ],
        )
        .expect("valid"),
        ControlSpec::new(
            ControlAttribute::Spc,
            Spc::ALL.iter().map(|s| ControlBin::category(s.as_str())).collect(),
        )
        .expect("valid"),
    ]
}

/// Looks controls up by name among the defaults.
pub fn controls_by_name(names: &[String]) -> Result<Vec<ControlSpec>> {
    let defaults = default_controls();
    names
        .iter()
        .map(|n| {
            let attr = ControlAttribute::from_name(n)?;
            defaults
                .iter()
                .find(|c| c.attribute == attr)
                .cloned()
                .or_else(|| match attr {
                    ControlAttribute::HouseholdSize => ControlSpec::new(
                        attr,
                        vec![
                            ControlBin::range("1", 0.0, Some(2.0)),
                            ControlBin::range("2", 2.0, Some(3.0)),
                            ControlBin::range("3", 3.0, Some(4.0)),
                            ControlBin::range("4+", 4.0, None),
                        ],
                    )
                    .ok(),
                    ControlAttribute::Sex => ControlSpec::new(
                        attr,
                        vec![ControlBin::category("female"), ControlBin::category("male")],
                    )
                    .ok(),
                    _ => None,
                })
                .ok_or_else(|| Error::config("synthesis.controls", format!("no default bins for `{n}`")))
        })
        .collect()
}
