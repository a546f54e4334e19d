//! CSV tables over one or more KPI bundles.

use std::fmt::Write as _;
use std::path::Path;

use super::{Change, KpiBundle};
use crate::csvio::write_bytes;
use crate::error::{Error, Result};
use crate::types::Mode;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn taste(b: &KpiBundle) -> &'static str {
    if b.taste { "on" } else { "off" }
}

pub fn modal_split_csv(bundles: &[KpiBundle]) -> String {
    let mut s = String::from("fleetSize,taste,mode,share\n");
    for b in bundles {
        for m in Mode::ALL {
            let share = b.modal_shares.get(&m).copied().unwrap_or(0.0);
            let _ = writeln!(s, "{},{},{},{}", b.fleet_size, taste(b), m.as_str(), share);
        }
    }
    s
}

pub fn waiting_times_csv(bundles: &[KpiBundle]) -> String {
    let mut s = String::from("fleetSize,taste,served,rejected,meanSec,p50Sec,p90Sec,p95Sec\n");
    for b in bundles {
        let w = &b.waiting;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            b.fleet_size,
            taste(b),
            w.served,
            w.rejected,
            opt(w.mean_sec),
            opt(w.p50_sec),
            opt(w.p90_sec),
            opt(w.p95_sec)
        );
    }
    s
}

pub fn in_service_hourly_csv(bundles: &[KpiBundle]) -> String {
    let mut s = String::from("fleetSize,taste");
    for h in 0..24 {
        let _ = write!(s, ",h{h:02}");
    }
    s.push('\n');
    for b in bundles {
        let _ = write!(s, "{},{}", b.fleet_size, taste(b));
        for r in &b.hourly_in_service {
            let _ = write!(s, ",{r}");
        }
        s.push('\n');
    }
    s
}

pub fn peak_rates_csv(bundles: &[KpiBundle]) -> String {
    let mut s = String::from("fleetSize,taste,morning,evening,offPeak\n");
    for b in bundles {
        let p = &b.peak_rates;
        let _ = writeln!(s, "{},{},{},{},{}", b.fleet_size, taste(b), p.morning, p.evening, p.off_peak);
    }
    s
}

pub fn usage_by_spc_csv(bundles: &[KpiBundle]) -> String {
    let mut s = String::from("fleetSize,taste,spc,users\n");
    for b in bundles {
        for (spc, n) in &b.rt_users_by_spc {
            let _ = writeln!(s, "{},{},{},{}", b.fleet_size, taste(b), spc.as_str(), n);
        }
    }
    s
}

pub fn comparison_csv(changes: &[Change]) -> String {
    let mut s = String::from("fleetSize,kpi,withFactors,withoutFactors,change,absolute\n");
    for c in changes {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            c.fleet_size,
            c.kpi,
            opt(c.with_factors),
            opt(c.without_factors),
            opt(c.change),
            c.absolute
        );
    }
    s
}

/// Writes every per-bundle table into `dir`.
pub fn write_tables(dir: &Path, bundles: &[KpiBundle]) -> Result<()> {
    write_bytes(&dir.join("modal_split.csv"), modal_split_csv(bundles).as_bytes())?;
    write_bytes(&dir.join("waiting_times.csv"), waiting_times_csv(bundles).as_bytes())?;
    write_bytes(&dir.join("in_service_hourly.csv"), in_service_hourly_csv(bundles).as_bytes())?;
    write_bytes(&dir.join("peak_rates.csv"), peak_rates_csv(bundles).as_bytes())?;
    write_bytes(&dir.join("usage_by_spc.csv"), usage_by_spc_csv(bundles).as_bytes())
}

pub fn write_bundle(path: &Path, bundle: &KpiBundle) -> Result<()> {
    let mut text = serde_json::to_string_pretty(bundle).map_err(|e| Error::Data(format!("kpi serialization: {e}")))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_bundle(path: &Path) -> Result<KpiBundle> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}
