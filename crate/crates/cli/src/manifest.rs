//! Study manifests, signal payloads, and annotation files.
//!
//! A study on disk is a JSON manifest naming per-channel signal files plus
//! one annotations CSV:
//!
//! ```json
//! {
//!   "study_id": "synth-a000",
//!   "sample_rate_hz": 256,
//!   "channels": [
//!     { "id": "EEG1", "path": "EEG1.f32", "format": "f32le" }
//!   ],
//!   "annotations_path": "annotations.csv"
//! }
//! ```
//!
//! Signal formats: `f32le` (raw little-endian 32-bit floats) or `csv` (one
//! value per line). Annotations CSV header is `onset_s,duration_s,kind,label`
//! with kind `stage` or `event`; stage labels are Awake/NREM1/NREM2/NREM3/REM.
//! Channel paths are resolved relative to the manifest's directory.

use std::path::{Path, PathBuf};

use eegtopo_core::cohort::{EventAnnotation, Group, StudyRecord};
use eegtopo_core::signal::{MultichannelSignal, SleepStage, StageAnnotation};
use serde::{Deserialize, Serialize};

use crate::error::{read_bytes, read_to_string, write_file, CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChannelEntry {
    pub id: String,
    pub path: String,
    pub format: SignalFormat,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub enum SignalFormat {
    #[serde(rename = "f32le")]
    F32Le,
    #[serde(rename = "csv")]
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StudyManifest {
    pub study_id: String,
    pub sample_rate_hz: u32,
    pub channels: Vec<ChannelEntry>,
    pub annotations_path: String,
}

/// A loaded study plus the bookkeeping the loader reports.
#[derive(Debug, Clone)]
pub struct LoadedStudy {
    pub record: StudyRecord,
    /// NaN or infinite samples found across all channels; the samples stay
    /// in place and their epochs are dropped downstream.
    pub nonfinite_samples: usize,
}

fn read_signal_file(path: &Path, format: SignalFormat) -> Result<Vec<f64>> {
    match format {
        SignalFormat::F32Le => {
            let bytes = read_bytes(path)?;
            if bytes.len() % 4 != 0 {
                return Err(CliError::validation(format!(
                    "{}: f32le payload length {} is not a multiple of 4",
                    path.display(),
                    bytes.len()
                )));
            }
            Ok(bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect())
        }
        SignalFormat::Csv => {
            let text = read_to_string(path)?;
            text.lines()
                .enumerate()
                .filter(|(_, line)| !line.trim().is_empty())
                .map(|(row, line)| {
                    line.trim().parse::<f64>().map_err(|_| {
                        CliError::validation(format!(
                            "{}:{}: not a number: {line:?}",
                            path.display(),
                            row + 1
                        ))
                    })
                })
                .collect()
        }
    }
}

fn write_signal_f32le(path: &Path, samples: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(samples.len() * 4);
    for &v in samples {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    write_file(path, &bytes)
}

/// Parsed annotation rows, stages and events separated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    pub stages: Vec<StageAnnotation>,
    pub events: Vec<EventAnnotation>,
}

pub fn parse_annotations(path: &Path, text: &str) -> Result<Annotations> {
    let mut out = Annotations::default();
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(CliError::AnnotationRow {
            path: path.to_path_buf(),
            row: 1,
            message: "empty annotations file".into(),
        });
    };
    if header.trim() != "onset_s,duration_s,kind,label" {
        return Err(CliError::AnnotationRow {
            path: path.to_path_buf(),
            row: 1,
            message: format!("bad header {header:?}"),
        });
    }
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(4, ',');
        let (Some(onset), Some(duration), Some(kind), Some(label)) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(CliError::AnnotationRow {
                path: path.to_path_buf(),
                row,
                message: format!("expected 4 comma-separated fields, got {line:?}"),
            });
        };
        let bad_num = |what: &str, value: &str| CliError::AnnotationRow {
            path: path.to_path_buf(),
            row,
            message: format!("invalid {what}: {value:?}"),
        };
        let onset_s: f64 = onset.trim().parse().map_err(|_| bad_num("onset_s", onset))?;
        let duration_s: f64 = duration
            .trim()
            .parse()
            .map_err(|_| bad_num("duration_s", duration))?;
        match kind.trim() {
            "stage" => {
                let Some(stage) = SleepStage::parse(label.trim()) else {
                    return Err(CliError::AnnotationRow {
                        path: path.to_path_buf(),
                        row,
                        message: format!("unknown sleep stage {label:?}"),
                    });
                };
                out.stages.push(StageAnnotation {
                    onset_s,
                    duration_s,
                    stage,
                });
            }
            "event" => out.events.push(EventAnnotation {
                onset_s,
                duration_s,
                label: label.trim().to_string(),
            }),
            other => {
                return Err(CliError::AnnotationRow {
                    path: path.to_path_buf(),
                    row,
                    message: format!("unknown annotation kind {other:?}"),
                })
            }
        }
    }
    Ok(out)
}

pub fn render_annotations(annotations: &Annotations) -> String {
    let mut out = String::from("onset_s,duration_s,kind,label\n");
    for s in &annotations.stages {
        out.push_str(&format!(
            "{},{},stage,{}\n",
            fmt_f64(s.onset_s),
            fmt_f64(s.duration_s),
            s.stage.name()
        ));
    }
    for e in &annotations.events {
        out.push_str(&format!(
            "{},{},event,{}\n",
            fmt_f64(e.onset_s),
            fmt_f64(e.duration_s),
            e.label
        ));
    }
    out
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Loads the manifest at `path` and everything it references.
pub fn load_study(path: &Path) -> Result<LoadedStudy> {
    let text = read_to_string(path)?;
    let manifest: StudyManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    if manifest.channels.len() < 2 {
        return Err(CliError::Study {
            study_id: manifest.study_id.clone(),
            message: format!("need at least 2 channels, got {}", manifest.channels.len()),
        });
    }

    let mut rows = Vec::with_capacity(manifest.channels.len());
    let mut ids = Vec::with_capacity(manifest.channels.len());
    let mut want_len: Option<(usize, String)> = None;
    let mut nonfinite_samples = 0usize;
    for entry in &manifest.channels {
        let samples = read_signal_file(&base.join(&entry.path), entry.format)?;
        if let Some((len, ref first_id)) = want_len {
            if samples.len() != len {
                return Err(CliError::Study {
                    study_id: manifest.study_id.clone(),
                    message: format!(
                        "channel {} has {} samples but channel {} has {}",
                        entry.id,
                        samples.len(),
                        first_id,
                        len
                    ),
                });
            }
        } else {
            want_len = Some((samples.len(), entry.id.clone()));
        }
        nonfinite_samples += samples.iter().filter(|v| !v.is_finite()).count();
        ids.push(entry.id.clone());
        rows.push(samples);
    }

    let signal = MultichannelSignal::new(ids, manifest.sample_rate_hz, rows).map_err(|e| {
        CliError::Study {
            study_id: manifest.study_id.clone(),
            message: e.to_string(),
        }
    })?;

    let ann_path = base.join(&manifest.annotations_path);
    let annotations = parse_annotations(&ann_path, &read_to_string(&ann_path)?)?;
    let duration = signal.duration_s();
    for (row, ann) in annotations.stages.iter().enumerate() {
        if ann.onset_s < 0.0 || ann.onset_s + ann.duration_s > duration + 1e-9 {
            return Err(CliError::AnnotationRow {
                path: ann_path.clone(),
                row: row + 2,
                message: format!(
                    "stage annotation [{}, {}) extends past the {duration} s signal",
                    ann.onset_s,
                    ann.onset_s + ann.duration_s
                ),
            });
        }
    }
    for (row, ev) in annotations.events.iter().enumerate() {
        if ev.onset_s < 0.0 || ev.onset_s + ev.duration_s > duration + 1e-9 {
            return Err(CliError::AnnotationRow {
                path: ann_path.clone(),
                row: annotations.stages.len() + row + 2,
                message: format!(
                    "event annotation [{}, {}) extends past the {duration} s signal",
                    ev.onset_s,
                    ev.onset_s + ev.duration_s
                ),
            });
        }
    }

    Ok(LoadedStudy {
        record: StudyRecord {
            study_id: manifest.study_id,
            signal,
            stage_annotations: annotations.stages,
            event_annotations: annotations.events,
            group: Group::Unassigned,
        },
        nonfinite_samples,
    })
}

/// Writes a study as manifest + f32le channels + annotations CSV under
/// `dir`, returning the manifest path. Loading the result reproduces the
/// f32 payload bytes exactly.
pub fn write_study(record: &StudyRecord, dir: &Path) -> Result<PathBuf> {
    let mut channels = Vec::new();
    for (i, id) in record.signal.channel_ids().iter().enumerate() {
        let file = format!("{id}.f32");
        write_signal_f32le(&dir.join(&file), record.signal.channel(i))?;
        channels.push(ChannelEntry {
            id: id.clone(),
            path: file,
            format: SignalFormat::F32Le,
        });
    }
    let annotations = Annotations {
        stages: record.stage_annotations.clone(),
        events: record.event_annotations.clone(),
    };
    write_file(
        &dir.join("annotations.csv"),
        render_annotations(&annotations).as_bytes(),
    )?;
    let manifest = StudyManifest {
        study_id: record.study_id.clone(),
        sample_rate_hz: record.signal.sample_rate(),
        channels,
        annotations_path: "annotations.csv".into(),
    };
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::validation(e.to_string()))?;
    write_file(&manifest_path, json.as_bytes())?;
    Ok(manifest_path)
}
