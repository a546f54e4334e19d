//! Activity chains and their per-category frequency tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::types::{ActivityType, Spc};

/// Ordered activity types of a day, Home at both ends (or a lone Home).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivityChain(Vec<ActivityType>);

impl ActivityChain {
    pub fn new(types: Vec<ActivityType>) -> Result<Self> {
        let home = ActivityType::Home;
        if types.is_empty() || types[0] != home || types[types.len() - 1] != home {
            return Err(Error::Data(format!("chain {types:?} must start and end at Home")));
        }
        Ok(ActivityChain(types))
    }

    pub fn stay_home() -> Self {
        ActivityChain(vec![ActivityType::Home])
    }

    pub fn types(&self) -> &[ActivityType] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: ActivityType) -> bool {
        self.0.contains(&t)
    }
}

impl fmt::Display for ActivityChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{}", t.letter())?;
        }
        Ok(())
    }
}

impl FromStr for ActivityChain {
    type Err = Error;

    /// Parses the letter encoding, e.g. `H-W-P-H`.
    fn from_str(s: &str) -> Result<Self> {
        let types = s
            .trim()
            .split('-')
            .map(|part| {
                let mut chars = part.trim().chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => ActivityType::from_letter(c.to_ascii_uppercase())
                        .ok_or_else(|| Error::Data(format!("unknown activity letter `{c}` in `{s}`"))),
                    _ => Err(Error::Data(format!("malformed chain `{s}`"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ActivityChain::new(types)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainFrequencyTable {
    rows: BTreeMap<Spc, Vec<(ActivityChain, f64)>>,
}

impl ChainFrequencyTable {
    /// Builds a table from rows whose frequencies must sum to one per category.
    pub fn new(rows: BTreeMap<Spc, Vec<(ActivityChain, f64)>>) -> Result<Self> {
        for (spc, row) in &rows {
            let sum: f64 = row.iter().map(|(_, f)| f).sum();
            if row.iter().any(|(_, f)| !(*f >= 0.0)) {
                return Err(Error::config("inputs.chains", format!("negative frequency for {spc}")));
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::config(
                    "inputs.chains",
                    format!("frequencies for {spc} sum to {sum}, expected 1"),
                ));
            }
        }
        Ok(ChainFrequencyTable { rows })
    }

    pub fn row(&self, spc: Spc) -> Option<&[(ActivityChain, f64)]> {
        self.rows.get(&spc).map(|r| r.as_slice())
    }

    pub fn rows(&self) -> impl Iterator<Item = (Spc, &[(ActivityChain, f64)])> {
        self.rows.iter().map(|(s, r)| (*s, r.as_slice()))
    }

    /// Probability that a chain drawn for `spc` contains `t`.
    pub fn marginal(&self, spc: Spc, t: ActivityType) -> f64 {
        self.row(spc)
            .map(|r| r.iter().filter(|(c, _)| c.contains(t)).map(|(_, f)| f).sum())
            .unwrap_or(0.0)
    }
}

/// Draws an index with probability proportional to `weights` (which need not be normalized).
pub(crate) fn categorical(weights: impl Iterator<Item = f64> + Clone, rng: &mut SimRng) -> usize {
    let total: f64 = weights.clone().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

pub fn assign_activity_chain(spc: Spc, table: &ChainFrequencyTable, rng: &mut SimRng) -> Result<ActivityChain> {
    let row = table
        .row(spc)
        .filter(|r| !r.is_empty())
        .ok_or_else(|| Error::config("inputs.chains", format!("no chain row for {spc}")))?;
    let i = categorical(row.iter().map(|(_, f)| *f), rng);
    Ok(row[i].0.clone())
}

/// Twenty chains shared by all categories; each category weighs them differently.
const DEFAULT_CHAINS: [&str; 20] = [
    "H",
    "H-W-H",
    "H-S-H",
    "H-P-H",
    "H-L-H",
    "H-E-H",
    "H-C-H",
    "H-O-H",
    "H-W-P-H",
    "H-W-H-L-H",
    "H-W-O-W-H",
    "H-S-H-L-H",
    "H-S-P-H",
    "H-P-L-H",
    "H-C-H-C-H",
    "H-E-P-H",
    "H-W-E-H",
    "H-S-L-H",
    "H-L-P-H",
    "H-C-P-H",
];

/// Relative weights per category in [`DEFAULT_CHAINS`] order.
fn default_weights(spc: Spc) -> [f64; 20] {
    match spc {
        Spc::Employed => [
            6.0, 38.0, 0.5, 4.0, 3.0, 2.0, 2.0, 3.0, 10.0, 8.0, 6.0, 0.2, 0.2, 2.0, 3.0, 1.5, 5.0, 0.3, 2.0,
            3.3,
        ],
        Spc::Unemployed => [
            18.0, 4.0, 2.0, 18.0, 14.0, 12.0, 4.0, 2.0, 1.0, 1.0, 0.5, 0.5, 0.5, 8.0, 2.0, 6.0, 0.5, 0.5, 5.0,
            2.5,
        ],
        Spc::Retired => [
            22.0, 0.5, 0.1, 24.0, 16.0, 12.0, 3.0, 0.5, 0.1, 0.1, 0.1, 0.1, 0.1, 9.0, 1.0, 6.0, 0.1, 0.1, 5.0,
            1.3,
        ],
        Spc::Student14Plus => [
            6.0, 3.0, 44.0, 3.0, 6.0, 1.5, 0.5, 0.5, 1.0, 1.0, 0.5, 10.0, 7.0, 2.0, 0.5, 1.0, 0.5, 8.0, 2.0,
            1.5,
        ],
        Spc::Under14 => [
            4.0, 0.0, 56.0, 2.0, 5.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 14.0, 5.0, 1.0, 0.5, 0.5, 0.0, 8.0, 1.0,
            1.0,
        ],
        Spc::Homemaker => [
            12.0, 1.0, 0.5, 16.0, 10.0, 8.0, 14.0, 0.5, 0.5, 0.5, 0.2, 0.3, 0.3, 7.0, 12.0, 5.0, 0.5, 0.2,
            4.0, 7.5,
        ],
    }
}

/// The shipped default table: Study-heavy for pupils and students, Work-heavy for the employed.
pub fn default_chain_table() -> ChainFrequencyTable {
    let chains: Vec<ActivityChain> = DEFAULT_CHAINS.iter().map(|c| c.parse().expect("valid")).collect();
    let rows = Spc::ALL
        .iter()
        .map(|&spc| {
            let w = default_weights(spc);
            let total: f64 = w.iter().sum();
            let row = chains.iter().cloned().zip(w.iter().map(|x| x / total)).collect();
            (spc, row)
        })
        .collect();
    ChainFrequencyTable::new(rows).expect("default chain table is normalized")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn table(spc: Spc, row: &[(&str, f64)]) -> ChainFrequencyTable {
        let row = row.iter().map(|(c, f)| (c.parse().unwrap(), *f)).collect();
        ChainFrequencyTable::new([(spc, row)].into_iter().collect()).unwrap()
    }

    #[test]
    fn chain_encoding_round_trips() {
        let c: ActivityChain = "H-W-P-H".parse().unwrap();
        assert_eq!(c.to_string(), "H-W-P-H");
        assert_eq!(c.len(), 4);
        assert!("W-H".parse::<ActivityChain>().is_err());
        assert!("H-X-H".parse::<ActivityChain>().is_err());
        assert_eq!("H".parse::<ActivityChain>().unwrap(), ActivityChain::stay_home());
    }

    #[test]
    fn point_mass_row() {
        let t = table(Spc::Employed, &[("H-W-H", 1.0)]);
        let mut rng = stream(1, Domain::Person, &[0]);
        for _ in 0..100 {
            assert_eq!(assign_activity_chain(Spc::Employed, &t, &mut rng).unwrap().to_string(), "H-W-H");
        }
    }

    #[test]
    fn missing_row_is_config_error() {
        let t = table(Spc::Employed, &[("H-W-H", 1.0)]);
        let mut rng = stream(1, Domain::Person, &[0]);
        assert!(assign_activity_chain(Spc::Retired, &t, &mut rng).unwrap_err().is_config());
    }

    #[test]
    fn unnormalized_rows_are_rejected() {
        let row = vec![("H".parse().unwrap(), 0.6), ("H-W-H".parse().unwrap(), 0.6)];
        assert!(ChainFrequencyTable::new([(Spc::Employed, row)].into_iter().collect()).is_err());
    }

    #[test]
    fn half_half_row_frequencies() {
        let t = table(Spc::Unemployed, &[("H", 0.5), ("H-P-H", 0.5)]);
        let mut rng = stream(2, Domain::Person, &[0]);
        let n = 10_000;
        let home = (0..n)
            .filter(|_| assign_activity_chain(Spc::Unemployed, &t, &mut rng).unwrap().len() == 1)
            .count();
        assert!((home as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn study_marginal_for_pupils() {
        let t = default_chain_table();
        let exact = t.marginal(Spc::Under14, ActivityType::Study);
        assert!(exact > 0.8);
        let mut rng = stream(3, Domain::Person, &[0]);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| assign_activity_chain(Spc::Under14, &t, &mut rng).unwrap().contains(ActivityType::Study))
            .count();
        assert!((hits as f64 / n as f64 - exact).abs() < 0.02);
    }

    #[test]
    fn default_table_shape() {
        let t = default_chain_table();
        for spc in Spc::ALL {
            let row = t.row(spc).unwrap();
            assert_eq!(row.len(), 20);
            let sum: f64 = row.iter().map(|(_, f)| f).sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
        assert!(t.marginal(Spc::Employed, ActivityType::Work) > 0.6);
        assert!(t.marginal(Spc::Student14Plus, ActivityType::Study) > 0.6);
        assert_eq!(t.marginal(Spc::Under14, ActivityType::Work), 0.0);
    }
}
