//! Strongly typed identifiers.

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<u32> for $name {
            fn from(v: u32) -> Self {
                $name(v)
            }
        }
    };
}

id_type!(PersonId);
id_type!(HouseholdId);
id_type!(ZoneId);
id_type!(FacilityId);
id_type!(NodeId);
id_type!(LinkId);
id_type!(RequestId);
id_type!(
    /// Robo-Taxi vehicle number within the fleet.
    TaxiId
);

/// Any vehicle moving on the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VehicleId {
    /// The private car used by a person for one leg.
    Car(PersonId),
    RoboTaxi(TaxiId),
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VehicleId::Car(p) => write!(f, "car_{p}"),
            VehicleId::RoboTaxi(t) => write!(f, "rt_{t}"),
        }
    }
}
