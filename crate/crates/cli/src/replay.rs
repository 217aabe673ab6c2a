//! Offline replay: the full pipeline over scenario files, no HTTP.
//!
//! A scenario names its input files (relative to the scenario file) and the
//! time to close windows at:
//!
//! ```json
//! {"sensor_files": ["sensors.csv"], "ik_files": ["ik.jsonl"], "flush_at": 3600}
//! ```
//!
//! Output is deterministic: identical inputs give byte-identical JSON. The
//! text summary goes to stdout when `--out` is set, otherwise to stderr so
//! stdout stays pure JSON.

use anyhow::{bail, Context};
use semint_core::ingest::{parse_ik_json, parse_sensor_csv, parse_sensor_xml, SensorBatch};
use semint_core::model::{IkObservation, Timestamp};
use semint_core::pipeline::Pipeline;
use semint_core::publish::serialize_recommendations;
use semint_core::Config;
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
struct Scenario {
    #[serde(default)]
    sensor_files: Vec<PathBuf>,
    #[serde(default)]
    ik_files: Vec<PathBuf>,
    flush_at: u64,
}

pub fn replay(scenario_path: &Path, config_path: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let scenario_text = fs::read_to_string(scenario_path)
        .with_context(|| format!("reading scenario {}", scenario_path.display()))?;
    let scenario: Scenario = serde_json::from_str(&scenario_text)
        .with_context(|| format!("parsing scenario {}", scenario_path.display()))?;
    if scenario.sensor_files.is_empty() && scenario.ik_files.is_empty() {
        bail!(
            "scenario {} lists no input files",
            scenario_path.display()
        );
    }
    let base = scenario_path.parent().unwrap_or(Path::new("."));

    let config = Config::load(config_path)
        .with_context(|| format!("loading config {}", config_path.display()))?;
    let mut pipeline = Pipeline::from_config(&config)?;

    // All sensor files merge into one globally ordered batch, so the stream
    // engine sees one non-decreasing timeline.
    let mut readings = Vec::new();
    for file in &scenario.sensor_files {
        let path = base.join(file);
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let batch = if path.extension().is_some_and(|e| e == "xml") {
            parse_sensor_xml(&text)
        } else {
            parse_sensor_csv(&text)
        }
        .with_context(|| format!("{}", path.display()))?;
        readings.extend(batch.into_readings());
    }
    let batch = SensorBatch::new(readings);

    let mut observations: Vec<IkObservation> = Vec::new();
    for file in &scenario.ik_files {
        let path = base.join(file);
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let obs = parse_ik_json(line)
                .with_context(|| format!("{}:{}", path.display(), idx + 1))?;
            observations.push(obs);
        }
    }

    let newest_input = batch
        .readings()
        .iter()
        .map(|r| r.timestamp())
        .chain(observations.iter().map(|o| o.timestamp()))
        .max();
    if let Some(newest) = newest_input {
        if Timestamp::from_secs(scenario.flush_at) < newest {
            bail!(
                "flush_at {} is earlier than the newest input timestamp {newest}",
                scenario.flush_at
            );
        }
    }

    let ingested = batch.len();
    pipeline
        .ingest_batch(batch)
        .context("feeding sensor batch")?;
    let ik_count = observations.len();
    for obs in observations {
        pipeline.ingest_ik(obs);
    }
    pipeline.flush(Timestamp::from_secs(scenario.flush_at));
    pipeline.reason();
    pipeline.persist(&config)?;

    let json = format!("{}\n", serialize_recommendations(pipeline.recommendations()));
    let mut summary = String::new();
    summary.push_str(&format!("scenario: {}\n", scenario_path.display()));
    summary.push_str(&format!("sensor readings: {ingested}\n"));
    summary.push_str(&format!("ik observations: {ik_count}\n"));
    summary.push_str(&format!(
        "composite events: {}\n",
        pipeline.events_since(None).len()
    ));
    for event in pipeline.events_since(None) {
        let attrs: Vec<String> = event
            .attributes()
            .iter()
            .map(|(name, value)| format!("{name}={value}"))
            .collect();
        summary.push_str(&format!(
            "  {} [{}, {}) {}\n",
            event.name(),
            event.window_start(),
            event.window_end(),
            attrs.join(" ")
        ));
    }
    summary.push_str(&format!(
        "recommendations: {}\n",
        pipeline.recommendations().len()
    ));
    for rec in pipeline.recommendations() {
        summary.push_str(&format!(
            "  {} CF {} [{}] rule {}\n",
            rec.event(),
            rec.cf(),
            rec.categories().join(" && "),
            rec.fired_rule()
        ));
    }

    match out {
        Some(path) => {
            fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?;
            print!("{summary}");
        }
        None => {
            eprint!("{summary}");
            print!("{json}");
        }
    }
    Ok(())
}
