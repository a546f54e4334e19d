use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{Request, RequestStatus, TaskRecord, TaskType};
use crate::csvio::{read_records, write_bytes};
use crate::error::Result;
use crate::ids::{LinkId, PersonId, RequestId, TaxiId};

pub const TASK_HEADER: &str = "vehicleId,taskType,startSec,endSec,linkFrom,linkTo,distanceKm\n";
pub const REQUEST_HEADER: &str = "requestId,personId,submissionSec,pickupSec,dropoffSec,waitSec\n";

fn opt(v: Option<u32>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn tasks_to_bytes(log: &[TaskRecord]) -> Vec<u8> {
    let mut s = String::from(TASK_HEADER);
    for r in log {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.vehicle,
            r.task.as_str(),
            r.start_sec,
            r.end_sec,
            r.link_from,
            r.link_to,
            r.distance_km
        );
    }
    s.into_bytes()
}

/// Rejected requests keep empty pickup, dropoff and wait columns.
pub fn requests_to_bytes(reqs: &[Request]) -> Vec<u8> {
    let mut s = String::from(REQUEST_HEADER);
    for r in reqs {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.id,
            r.person,
            r.submission_sec,
            opt(r.pickup_sec),
            opt(r.dropoff_sec),
            opt(r.wait_sec())
        );
    }
    s.into_bytes()
}

pub fn write_tasks(path: &Path, log: &[TaskRecord]) -> Result<()> {
    write_bytes(path, &tasks_to_bytes(log))
}

pub fn write_requests(path: &Path, reqs: &[Request]) -> Result<()> {
    write_bytes(path, &requests_to_bytes(reqs))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct TaskRow {
    vehicle_id: u32,
    task_type: TaskType,
    start_sec: u32,
    end_sec: u32,
    link_from: u32,
    link_to: u32,
    distance_km: f64,
}

pub fn read_tasks(path: &Path) -> Result<Vec<TaskRecord>> {
    let rows: Vec<TaskRow> = read_records(path)?;
    Ok(rows
        .into_iter()
        .map(|r| TaskRecord {
            vehicle: TaxiId(r.vehicle_id),
            task: r.task_type,
            start_sec: r.start_sec,
            end_sec: r.end_sec,
            link_from: LinkId(r.link_from),
            link_to: LinkId(r.link_to),
            distance_km: r.distance_km,
        })
        .collect())
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RequestRow {
    request_id: u32,
    person_id: u32,
    submission_sec: u32,
    pickup_sec: Option<u32>,
    dropoff_sec: Option<u32>,
}

/// Links and vehicles are not part of the file; status follows from the times.
pub fn read_requests(path: &Path) -> Result<Vec<Request>> {
    let rows: Vec<RequestRow> = read_records(path)?;
    Ok(rows
        .into_iter()
        .map(|r| Request {
            id: RequestId(r.request_id),
            person: PersonId(r.person_id),
            origin_link: LinkId(0),
            destination_link: LinkId(0),
            submission_sec: r.submission_sec,
            pickup_sec: r.pickup_sec,
            dropoff_sec: r.dropoff_sec,
            vehicle: None,
            status: if r.dropoff_sec.is_some() {
                RequestStatus::Served
            } else {
                RequestStatus::Rejected
            },
        })
        .collect())
}
