//! The day's event log and its CSV form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::csvio::write_bytes;
use crate::error::{Error, Result};
use crate::ids::{LinkId, PersonId, RequestId, TaxiId, VehicleId};
use crate::types::{ActivityType, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventType {
    ActEnd,
    Departure,
    LinkEnter,
    LinkLeave,
    Arrival,
    ActStart,
    RtRequest,
    RtDispatch,
    RtPickup,
    RtDropoff,
    Stuck,
}

impl EventType {
    pub const ALL: [EventType; 11] = [
        EventType::ActEnd,
        EventType::Departure,
        EventType::LinkEnter,
        EventType::LinkLeave,
        EventType::Arrival,
        EventType::ActStart,
        EventType::RtRequest,
        EventType::RtDispatch,
        EventType::RtPickup,
        EventType::RtDropoff,
        EventType::Stuck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::ActEnd => "actEnd",
            EventType::Departure => "departure",
            EventType::LinkEnter => "linkEnter",
            EventType::LinkLeave => "linkLeave",
            EventType::Arrival => "arrival",
            EventType::ActStart => "actStart",
            EventType::RtRequest => "rtRequest",
            EventType::RtDispatch => "rtDispatch",
            EventType::RtPickup => "rtPickup",
            EventType::RtDropoff => "rtDropoff",
            EventType::Stuck => "stuck",
        }
    }
}

impl FromStr for EventType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown event type `{s}`")))
    }
}

/// Type-specific extra field, written to the `aux` column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventAux {
    None,
    Mode(Mode),
    Activity(ActivityType),
    Request(RequestId),
    /// A request that will not be served.
    Rejected(RequestId),
}

impl fmt::Display for EventAux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventAux::None => Ok(()),
            EventAux::Mode(m) => f.write_str(m.as_str()),
            EventAux::Activity(a) => f.write_str(a.as_str()),
            EventAux::Request(r) => write!(f, "req:{r}"),
            EventAux::Rejected(r) => write!(f, "rejected:{r}"),
        }
    }
}

impl FromStr for EventAux {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Ok(EventAux::None);
        }
        let id = |rest: &str| {
            rest.parse::<u32>()
                .map(RequestId)
                .map_err(|_| Error::Data(format!("bad request id in `{s}`")))
        };
        if let Some(rest) = s.strip_prefix("req:") {
            return Ok(EventAux::Request(id(rest)?));
        }
        if let Some(rest) = s.strip_prefix("rejected:") {
            return Ok(EventAux::Rejected(id(rest)?));
        }
        if let Ok(m) = s.parse::<Mode>() {
            return Ok(EventAux::Mode(m));
        }
        Ok(EventAux::Activity(s.parse()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time_sec: u32,
    pub kind: EventType,
    pub person: Option<PersonId>,
    pub vehicle: Option<VehicleId>,
    pub link: Option<LinkId>,
    pub aux: EventAux,
}

/// Collected events; link-level events can be skipped to save memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    record_links: bool,
    enabled: bool,
}

pub const EVENT_HEADER: &str = "timeSec,type,personId,vehicleId,linkId,aux\n";

impl EventLog {
    pub fn new(enabled: bool, record_links: bool) -> Self {
        EventLog {
            events: Vec::new(),
            record_links,
            enabled,
        }
    }

    pub fn disabled() -> Self {
        EventLog::new(false, false)
    }

    pub fn full() -> Self {
        EventLog::new(true, true)
    }

    pub fn push(&mut self, e: Event) {
        let link_level = matches!(e.kind, EventType::LinkEnter | EventType::LinkLeave);
        if self.enabled && (self.record_links || !link_level) {
            self.events.push(e);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        use std::fmt::Write as _;
        let mut s = String::with_capacity(EVENT_HEADER.len() + self.events.len() * 40);
        s.push_str(EVENT_HEADER);
        for e in &self.events {
            let opt = |v: Option<String>| v.unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                e.time_sec,
                e.kind.as_str(),
                opt(e.person.map(|p| p.to_string())),
                opt(e.vehicle.map(|v| v.to_string())),
                opt(e.link.map(|l| l.to_string())),
                e.aux
            );
        }
        s.into_bytes()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_bytes(path, &self.to_csv_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<Vec<Event>> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_events(&text)
    }
}

fn parse_vehicle(s: &str) -> Result<VehicleId> {
    let bad = || Error::Data(format!("bad vehicle id `{s}`"));
    if let Some(p) = s.strip_prefix("car_") {
        return Ok(VehicleId::Car(PersonId(p.parse().map_err(|_| bad())?)));
    }
    if let Some(t) = s.strip_prefix("rt_") {
        return Ok(VehicleId::RoboTaxi(TaxiId(t.parse().map_err(|_| bad())?)));
    }
    Err(bad())
}

pub fn parse_events(text: &str) -> Result<Vec<Event>> {
    let mut lines = text.lines();
    if lines.next() != Some(EVENT_HEADER.trim_end()) {
        return Err(Error::Data("events file has an unexpected header".into()));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Data(format!("malformed event line `{line}`")));
            }
            let num = |s: &str| s.parse::<u32>().map_err(|_| Error::Data(format!("bad number `{s}`")));
            let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
            Ok(Event {
                time_sec: num(f[0])?,
                kind: f[1].parse()?,
                person: opt(f[2])?.map(PersonId),
                vehicle: if f[3].is_empty() { None } else { Some(parse_vehicle(f[3])?) },
                link: opt(f[4])?.map(LinkId),
                aux: f[5].parse()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut log = EventLog::full();
        log.push(Event {
            time_sec: 5,
            kind: EventType::Departure,
            person: Some(PersonId(3)),
            vehicle: None,
            link: Some(LinkId(7)),
            aux: EventAux::Mode(Mode::RoboTaxi),
        });
        log.push(Event {
            time_sec: 9,
            kind: EventType::RtDispatch,
            person: Some(PersonId(3)),
            vehicle: Some(VehicleId::RoboTaxi(TaxiId(2))),
            link: Some(LinkId(1)),
            aux: EventAux::Request(RequestId(0)),
        });
        log.push(Event {
            time_sec: 12,
            kind: EventType::LinkEnter,
            person: None,
            vehicle: Some(VehicleId::Car(PersonId(4))),
            link: Some(LinkId(1)),
            aux: EventAux::None,
        });
        log.push(Event {
            time_sec: 13,
            kind: EventType::ActStart,
            person: Some(PersonId(4)),
            vehicle: None,
            link: Some(LinkId(1)),
            aux: EventAux::Activity(ActivityType::Work),
        });
        log.push(Event {
            time_sec: 14,
            kind: EventType::Stuck,
            person: Some(PersonId(4)),
            vehicle: None,
            link: None,
            aux: EventAux::Rejected(RequestId(8)),
        });
        let bytes = log.to_csv_bytes();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("timeSec,type,personId,vehicleId,linkId,aux\n5,departure,3,,7,robotaxi\n"));
        assert_eq!(parse_events(&text).unwrap(), log.events);
    }

    #[test]
    fn link_events_can_be_skipped() {
        let mut log = EventLog::new(true, false);
        let e = Event {
            time_sec: 0,
            kind: EventType::LinkLeave,
            person: None,
            vehicle: None,
            link: Some(LinkId(1)),
            aux: EventAux::None,
        };
        log.push(e);
        assert!(log.is_empty());
        log.push(Event {
            kind: EventType::Arrival,
            ..e
        });
        assert_eq!(log.len(), 1);
    }
}
