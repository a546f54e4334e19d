//! Small domain enums shared across modules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Socio-professional category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spc {
    Employed,
    Unemployed,
    Retired,
    Student14Plus,
    Under14,
    Homemaker,
}

impl Spc {
    pub const ALL: [Spc; 6] = [
        Spc::Employed,
        Spc::Unemployed,
        Spc::Retired,
        Spc::Student14Plus,
        Spc::Under14,
        Spc::Homemaker,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Spc::Employed => "Employed",
            Spc::Unemployed => "Unemployed",
            Spc::Retired => "Retired",
            Spc::Student14Plus => "Student14Plus",
            Spc::Under14 => "Under14",
            Spc::Homemaker => "Homemaker",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Female => "female",
            Sex::Male => "male",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Car,
    Pt,
    Walk,
    RoboTaxi,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Car, Mode::Pt, Mode::Walk, Mode::RoboTaxi];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Car => "car",
            Mode::Pt => "pt",
            Mode::Walk => "walk",
            Mode::RoboTaxi => "robotaxi",
        }
    }

    /// Modes computed analytically rather than on the network.
    pub fn is_teleported(self) -> bool {
        matches!(self, Mode::Pt | Mode::Walk)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActivityType {
    Home,
    Work,
    OtherWork,
    Study,
    Shopping,
    LeisureVisit,
    Errands,
    Escort,
}

impl ActivityType {
    pub const ALL: [ActivityType; 8] = [
        ActivityType::Home,
        ActivityType::Work,
        ActivityType::OtherWork,
        ActivityType::Study,
        ActivityType::Shopping,
        ActivityType::LeisureVisit,
        ActivityType::Errands,
        ActivityType::Escort,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityType::Home => "Home",
            ActivityType::Work => "Work",
            ActivityType::OtherWork => "OtherWork",
            ActivityType::Study => "Study",
            ActivityType::Shopping => "Shopping",
            ActivityType::LeisureVisit => "LeisureVisit",
            ActivityType::Errands => "Errands",
            ActivityType::Escort => "Escort",
        }
    }

    /// One-letter code used in chain strings such as `H-W-H`.
    pub fn letter(self) -> char {
        match self {
            ActivityType::Home => 'H',
            ActivityType::Work => 'W',
            ActivityType::OtherWork => 'O',
            ActivityType::Study => 'S',
            ActivityType::Shopping => 'P',
            ActivityType::LeisureVisit => 'L',
            ActivityType::Errands => 'E',
            ActivityType::Escort => 'C',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        ActivityType::ALL.into_iter().find(|a| a.letter() == c)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Parking pressure at a trip destination; selects the γ dummy of the scoring function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParkingLevel {
    Low,
    Medium,
    High,
}

impl ParkingLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            ParkingLevel::Low => "low",
            ParkingLevel::Medium => "medium",
            ParkingLevel::High => "high",
        }
    }
}

/// Planar coordinate in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
}

impl Coord {
    pub fn new(x: f64, y: f64) -> Self {
        Coord { x, y }
    }

    pub fn distance(&self, other: &Coord) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

macro_rules! str_enum {
    ($ty:ty, $what:literal, [$($variant:expr),+ $(,)?]) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let t = s.trim();
                [$($variant),+]
                    .into_iter()
                    .find(|v: &$ty| v.as_str().eq_ignore_ascii_case(t))
                    .ok_or_else(|| Error::Data(format!("unknown {} `{}`", $what, s)))
            }
        }
    };
}

str_enum!(
    Spc,
    "socio-professional category",
    [
        Spc::Employed,
        Spc::Unemployed,
        Spc::Retired,
        Spc::Student14Plus,
        Spc::Under14,
        Spc::Homemaker
    ]
);
str_enum!(Sex, "sex", [Sex::Female, Sex::Male]);
str_enum!(Mode, "mode", [Mode::Car, Mode::Pt, Mode::Walk, Mode::RoboTaxi]);
str_enum!(
    ActivityType,
    "activity type",
    [
        ActivityType::Home,
        ActivityType::Work,
        ActivityType::OtherWork,
        ActivityType::Study,
        ActivityType::Shopping,
        ActivityType::LeisureVisit,
        ActivityType::Errands,
        ActivityType::Escort
    ]
);
str_enum!(
    ParkingLevel,
    "parking level",
    [ParkingLevel::Low, ParkingLevel::Medium, ParkingLevel::High]
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Spc::ALL {
            assert_eq!(s.as_str().parse::<Spc>().unwrap(), s);
        }
        for m in Mode::ALL {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        for a in ActivityType::ALL {
            assert_eq!(ActivityType::from_letter(a.letter()), Some(a));
            assert_eq!(a.as_str().parse::<ActivityType>().unwrap(), a);
        }
        assert!("bicycle".parse::<Mode>().is_err());
    }

    #[test]
    fn exactly_eight_activity_types() {
        assert_eq!(ActivityType::ALL.len(), 8);
    }
}
