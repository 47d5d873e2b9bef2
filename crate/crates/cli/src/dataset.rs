//! Trajectory datasets on disk: a flat CSV of per-step vehicle states plus
//! a JSON sidecar with the candidate arrival times.
//!
//! The CSV schema is `scenario_id, step, time_s, vehicle_id, role, lane,
//! position_m, speed_mps, accel_mps2`. Highway vehicles carry role `hdv`
//! and ids 0..n in front-most-first order; a ramp vehicle, when present,
//! carries role `cav`. Floats are written shortest-round-trip, so loading
//! reproduces the generating states bit for bit and a regenerated file is
//! byte-identical.
//!
//! The CSV always records whole scenarios; the sidecar lists one entry per
//! labeled (scenario_id, vehicle_id) with one arrival time per merging
//! slot (`null` where the vehicle never reaches it), and that label set
//! defines which vehicles count as dataset trajectories. The distinction
//! matters when a split is cut mid-scenario to hit an exact count: the
//! surplus vehicles stay in the CSV as observation context (they are
//! someone's leader or follower) but carry no labels.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use confmerge::arrival::ArrivalTimes;
use confmerge::hdv::{rollout, sample_scenario, ScenarioTemplate, ScenarioTrace};
use confmerge::state::{HdvTrajectory, Observation, VehicleState};
use confmerge::zone::ZoneConfig;
use serde::{Deserialize, Serialize};

use crate::fail::{reject_input, validation, write_failed, Fail};

pub const TRAJ_HEADER: [&str; 9] = [
    "scenario_id",
    "step",
    "time_s",
    "vehicle_id",
    "role",
    "lane",
    "position_m",
    "speed_mps",
    "accel_mps2",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajRow {
    pub scenario_id: u64,
    pub step: usize,
    pub time_s: f64,
    pub vehicle_id: usize,
    pub role: String,
    pub lane: String,
    pub position_m: f64,
    pub speed_mps: f64,
    /// Applied acceleration over [step, step+1); absent on the last sample.
    pub accel_mps2: Option<f64>,
}

const ARRIVALS_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrivalsFile {
    pub version: u32,
    pub entries: Vec<ArrivalEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrivalEntry {
    pub scenario_id: u64,
    pub vehicle_id: usize,
    /// One entry per merging slot; `null` = not reached within the horizon.
    pub arrival_times_s: Vec<Option<f64>>,
}

pub fn csv_path(dir: &Path, split: &str) -> PathBuf {
    dir.join(format!("{split}.csv"))
}

pub fn arrivals_path(dir: &Path, split: &str) -> PathBuf {
    dir.join(format!("{split}_arrivals.json"))
}

/// Serializes one trace into CSV rows: every highway vehicle, then the
/// ramp vehicle (id `num_hdvs`) when the trace has one.
pub fn write_trace_rows<W: std::io::Write>(
    out: &mut csv::Writer<W>,
    trace: &ScenarioTrace,
) -> csv::Result<()> {
    let dt = trace.config.dt;
    for v in 0..trace.hdv_states.len() {
        for (step, state) in trace.hdv_states[v].iter().enumerate() {
            out.serialize(TrajRow {
                scenario_id: trace.seed,
                step,
                time_s: step as f64 * dt,
                vehicle_id: v,
                role: "hdv".into(),
                lane: "highway".into(),
                position_m: state.position,
                speed_mps: state.speed,
                accel_mps2: trace.hdv_accels[v].get(step).copied(),
            })?;
        }
    }
    if let Some(cav_states) = &trace.cav_states {
        let accels = trace.cav_accels.as_deref().unwrap_or(&[]);
        for (step, state) in cav_states.iter().enumerate() {
            out.serialize(TrajRow {
                scenario_id: trace.seed,
                step,
                time_s: step as f64 * dt,
                vehicle_id: trace.hdv_states.len(),
                role: "cav".into(),
                lane: "ramp".into(),
                position_m: state.position,
                speed_mps: state.speed,
                accel_mps2: accels.get(step).copied(),
            })?;
        }
    }
    Ok(())
}

fn arrival_entries(trace: &ScenarioTrace, keep_hdvs: usize) -> Vec<ArrivalEntry> {
    (0..keep_hdvs)
        .map(|v| ArrivalEntry {
            scenario_id: trace.seed,
            vehicle_id: v,
            arrival_times_s: trace.arrivals[v].times.clone(),
        })
        .collect()
}

/// Writes the trajectory CSV for a set of traces. Header-only when the
/// set is empty; deterministic bytes.
pub fn write_traces_csv(path: &Path, traces: &[(ScenarioTrace, usize)]) -> Result<(), Fail> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    wtr.write_record(TRAJ_HEADER)
        .map_err(|e| write_failed(path, e))?;
    for (trace, _) in traces {
        write_trace_rows(&mut wtr, trace).map_err(|e| write_failed(path, e))?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| write_failed(path, e.error()))?;
    std::fs::write(path, bytes).map_err(|e| write_failed(path, e))
}

/// Writes the arrival-time sidecar: labels for the first `label` vehicles
/// of each trace.
pub fn write_arrivals_json(path: &Path, traces: &[(ScenarioTrace, usize)]) -> Result<(), Fail> {
    let entries = traces
        .iter()
        .flat_map(|(trace, label)| arrival_entries(trace, *label))
        .collect();
    let sidecar = ArrivalsFile {
        version: ARRIVALS_VERSION,
        entries,
    };
    let mut text = serde_json::to_string_pretty(&sidecar).map_err(|e| write_failed(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| write_failed(path, e))
}

/// Writes `<split>.csv` and `<split>_arrivals.json` for a set of traces
/// with per-trace label counts.
pub fn write_split(dir: &Path, split: &str, traces: &[(ScenarioTrace, usize)]) -> Result<(), Fail> {
    write_traces_csv(&csv_path(dir, split), traces)?;
    write_arrivals_json(&arrivals_path(dir, split), traces)
}

/// Outcome of generating one split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSummary {
    pub name: String,
    pub seed_base: u64,
    pub trajectories: usize,
    pub scenarios: usize,
    pub collisions_skipped: usize,
    pub csv: String,
    pub arrivals: String,
}

/// Simulates scenarios from `base` upward until `count` vehicle
/// trajectories are collected, then writes the split files. Collided
/// rollouts are skipped (their shortened series cannot feed training or
/// calibration); the seed budget equals `count`, which a skip erodes.
pub fn generate_split(
    dir: &Path,
    name: &str,
    base: u64,
    count: usize,
    zone: &ZoneConfig,
    template: &ScenarioTemplate,
) -> Result<SplitSummary, Fail> {
    let mut kept: Vec<(ScenarioTrace, usize)> = Vec::new();
    let mut have = 0usize;
    let mut skipped = 0usize;
    for offset in 0..count as u64 {
        if have >= count {
            break;
        }
        let seed = base + offset;
        let scenario =
            sample_scenario(seed, template).map_err(|e| validation(format!("template: {e}")))?;
        let trace = rollout(&scenario, None, zone, seed);
        if trace.collision {
            skipped += 1;
            continue;
        }
        let keep = (count - have).min(trace.hdv_states.len());
        have += keep;
        kept.push((trace, keep));
    }
    if have < count {
        return Err(validation(format!(
            "seeds.{name}_count: only {have} of {count} trajectories fit in the seed \
             range [{base}, {}) ({skipped} collided scenarios skipped); \
             space the split bases further apart",
            base + count as u64
        )));
    }
    write_split(dir, name, &kept)?;
    Ok(SplitSummary {
        name: name.to_string(),
        seed_base: base,
        trajectories: have,
        scenarios: kept.len(),
        collisions_skipped: skipped,
        csv: csv_path(Path::new(""), name).to_string_lossy().into_owned(),
        arrivals: arrivals_path(Path::new(""), name)
            .to_string_lossy()
            .into_owned(),
    })
}

struct VehicleSeries {
    role: String,
    states: BTreeMap<usize, VehicleState>,
}

/// Loads a split back into per-vehicle observation/label pairs, exactly
/// reversing `write_split`: observations are rebuilt from the recorded
/// states (including the ramp vehicle's, when rows for one are present),
/// labels come from the sidecar. Only labeled vehicles become
/// trajectories; unlabeled ones serve as neighbor context. Order is
/// (scenario ascending, vehicle ascending).
pub fn load_split(dir: &Path, split: &str, zone: &ZoneConfig) -> Result<Vec<HdvTrajectory>, Fail> {
    let csv_file = csv_path(dir, split);
    let text = std::fs::read_to_string(&csv_file).map_err(|e| reject_input(&csv_file, e))?;
    let mut scenarios: BTreeMap<u64, BTreeMap<usize, VehicleSeries>> = BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    for record in rdr.deserialize::<TrajRow>() {
        let row = record.map_err(|e| reject_input(&csv_file, e))?;
        if row.role != "hdv" && row.role != "cav" {
            return Err(reject_input(
                &csv_file,
                format!("unknown role {:?} (expected \"hdv\" or \"cav\")", row.role),
            ));
        }
        let vehicle = scenarios
            .entry(row.scenario_id)
            .or_default()
            .entry(row.vehicle_id)
            .or_insert_with(|| VehicleSeries {
                role: row.role.clone(),
                states: BTreeMap::new(),
            });
        if vehicle.role != row.role {
            return Err(reject_input(
                &csv_file,
                format!(
                    "scenario {} vehicle {} switches role mid-series",
                    row.scenario_id, row.vehicle_id
                ),
            ));
        }
        let state = VehicleState {
            position: row.position_m,
            speed: row.speed_mps,
        };
        if vehicle.states.insert(row.step, state).is_some() {
            return Err(reject_input(
                &csv_file,
                format!(
                    "scenario {} vehicle {} has duplicate rows for step {}",
                    row.scenario_id, row.vehicle_id, row.step
                ),
            ));
        }
    }

    let sidecar_file = arrivals_path(dir, split);
    let sidecar_text =
        std::fs::read_to_string(&sidecar_file).map_err(|e| reject_input(&sidecar_file, e))?;
    let sidecar: ArrivalsFile =
        serde_json::from_str(&sidecar_text).map_err(|e| reject_input(&sidecar_file, e))?;
    if sidecar.version != ARRIVALS_VERSION {
        return Err(reject_input(
            &sidecar_file,
            format!(
                "version {} unsupported, expected {ARRIVALS_VERSION}",
                sidecar.version
            ),
        ));
    }
    let mut labels: BTreeMap<(u64, usize), Vec<Option<f64>>> = BTreeMap::new();
    for entry in sidecar.entries {
        if labels
            .insert((entry.scenario_id, entry.vehicle_id), entry.arrival_times_s)
            .is_some()
        {
            return Err(reject_input(
                &sidecar_file,
                format!(
                    "duplicate entry for scenario {} vehicle {}",
                    entry.scenario_id, entry.vehicle_id
                ),
            ));
        }
    }

    let want_samples = zone.horizon_steps + 1;
    let mut out = Vec::new();
    for (scenario_id, vehicles) in &scenarios {
        let mut hdvs: Vec<(usize, &VehicleSeries)> = Vec::new();
        let mut cav: Option<&VehicleSeries> = None;
        for (id, series) in vehicles {
            if series.role == "cav" {
                if cav.is_some() {
                    return Err(reject_input(
                        &csv_file,
                        format!("scenario {scenario_id} has more than one cav"),
                    ));
                }
                cav = Some(series);
            } else {
                hdvs.push((*id, series));
            }
        }
        for (slot, (id, _)) in hdvs.iter().enumerate() {
            if *id != slot {
                return Err(reject_input(
                    &csv_file,
                    format!(
                        "scenario {scenario_id}: hdv ids must be contiguous from 0 \
                         (front-most first), found id {id} in slot {slot}"
                    ),
                ));
            }
        }
        let mut step_states: Vec<Vec<VehicleState>> = vec![Vec::new(); want_samples];
        for (id, series) in &hdvs {
            contiguous_series(&csv_file, *scenario_id, *id, series, want_samples)?;
            for (step, state) in &series.states {
                step_states[*step].push(*state);
            }
        }
        let cav_steps: Option<Vec<VehicleState>> = match cav {
            Some(series) => {
                let id = vehicles
                    .iter()
                    .find(|(_, s)| s.role == "cav")
                    .map(|(id, _)| *id)
                    .unwrap_or_default();
                contiguous_series(&csv_file, *scenario_id, id, series, want_samples)?;
                Some(series.states.values().copied().collect())
            }
            None => None,
        };

        for (id, _) in &hdvs {
            let Some(times) = labels.remove(&(*scenario_id, *id)) else {
                continue;
            };
            if times.len() != zone.num_candidates() {
                return Err(reject_input(
                    &sidecar_file,
                    format!(
                        "scenario {scenario_id} vehicle {id} lists {} arrival times, \
                         zone has {} candidates",
                        times.len(),
                        zone.num_candidates()
                    ),
                ));
            }
            let observations: Vec<Observation> = (0..want_samples)
                .map(|step| {
                    let row = &step_states[step];
                    let leader = (*id > 0).then(|| row[*id - 1]);
                    let follower = row.get(*id + 1).copied();
                    let cav_state = cav_steps.as_ref().map(|s| s[step]);
                    Observation::with_sentinels(leader, row[*id], follower, cav_state)
                })
                .collect();
            out.push(HdvTrajectory {
                observations,
                arrivals: ArrivalTimes { times },
            });
        }
    }
    if let Some((scenario_id, vehicle_id)) = labels.keys().next() {
        return Err(reject_input(
            &sidecar_file,
            format!(
                "entry for scenario {scenario_id} vehicle {vehicle_id} has no matching \
                 hdv rows in the trajectory file"
            ),
        ));
    }
    Ok(out)
}

fn contiguous_series(
    csv_file: &Path,
    scenario_id: u64,
    vehicle_id: usize,
    series: &VehicleSeries,
    want_samples: usize,
) -> Result<(), Fail> {
    if series.states.len() != want_samples
        || series.states.keys().last() != Some(&(want_samples - 1))
    {
        let got = series.states.len();
        return Err(reject_input(
            csv_file,
            format!(
                "scenario {scenario_id} vehicle {vehicle_id} has {got} samples, \
                 expected steps 0..={} for the configured horizon",
                want_samples - 1
            ),
        ));
    }
    Ok(())
}
