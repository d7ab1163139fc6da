//! Stage driver: the functions behind the `eegtopo` subcommands.
//!
//! Each stage reads one archive (or study manifests) and writes the next,
//! so every step of the chain is inspectable and diffable on disk:
//!
//! ```text
//! simulate -> manifests -> preprocess -> distance matrices -> persist
//!          -> diagrams -> landscape -> landscapes -> test -> p-table
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use eegtopo_core::cohort::{assign_group, Group};
use eegtopo_core::inference::{
    stratified_test_matrix_with, LabeledLandscapeSet, StratifiedTable,
};
use eegtopo_core::landscape::{average_landscapes, landscape_from_diagram, PersistenceLandscape};
use eegtopo_core::persistence::{rips_h0, rips_h1};
use eegtopo_core::signal::{segment_epochs, SleepStage};
use eegtopo_core::spectrum::{epoch_band_distance_matrices_with_edges, Band};
use eegtopo_core::synth::{generate_synthetic_study, SyntheticCohortConfig};
use rayon::prelude::*;

use crate::archive::{validate_study_id, Archive, ArchiveKind, RecordKey};
use crate::config::{PipelineConfig, PoolingMode};
use crate::error::{write_file, CliError, Result};
use crate::manifest::{load_study, write_study};

/// Runs `f` on a rayon pool of `jobs` threads; 0 keeps the global default.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool")
        .install(f)
}

/// Writes a synthetic cohort as on-disk studies and returns the manifest
/// paths (apnea studies first). Also writes `studies.txt` listing them.
pub fn run_simulate(
    synth: &SyntheticCohortConfig,
    out_dir: &Path,
    jobs: usize,
) -> Result<Vec<PathBuf>> {
    synth
        .validate()
        .map_err(|e| CliError::validation(e.to_string()))?;
    let records = with_jobs(jobs, || {
        (0..synth.n_studies())
            .into_par_iter()
            .map(|i| generate_synthetic_study(synth, i))
            .collect::<std::result::Result<Vec<_>, _>>()
    })
    .map_err(|e| CliError::validation(e.to_string()))?;

    let mut manifests = Vec::with_capacity(records.len());
    let mut listing = String::new();
    for record in &records {
        let dir = out_dir.join(&record.study_id);
        let path = write_study(record, &dir)?;
        listing.push_str(&format!("{}/manifest.json\n", record.study_id));
        manifests.push(path);
    }
    write_file(&out_dir.join("studies.txt"), listing.as_bytes())?;
    Ok(manifests)
}

/// Per-stage/band record counts plus the bookkeeping totals the command
/// prints.
#[derive(Debug, Default, Clone)]
pub struct PreprocessReport {
    pub studies: usize,
    pub apnea_studies: usize,
    pub control_studies: usize,
    pub epochs_used: usize,
    pub unannotated_epochs: usize,
    pub dropped_nonfinite_epochs: usize,
    pub dropped_awake_epochs: usize,
    pub nonfinite_samples: usize,
    pub matrices: usize,
    pub per_stage_band: BTreeMap<(SleepStage, Band), usize>,
    pub warnings: Vec<String>,
}

impl PreprocessReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "studies: {} (Apnea {}, NoApnea {})\n",
            self.studies, self.apnea_studies, self.control_studies
        ));
        out.push_str(&format!(
            "epochs used: {} (unannotated {}, non-finite dropped {}, awake dropped {})\n",
            self.epochs_used,
            self.unannotated_epochs,
            self.dropped_nonfinite_epochs,
            self.dropped_awake_epochs
        ));
        if self.nonfinite_samples > 0 {
            out.push_str(&format!("non-finite samples: {}\n", self.nonfinite_samples));
        }
        out.push_str(&format!("distance matrices: {}\n", self.matrices));
        for stage in [
            SleepStage::Awake,
            SleepStage::Nrem1,
            SleepStage::Nrem2,
            SleepStage::Nrem3,
            SleepStage::Rem,
        ] {
            let per_band: Vec<String> = Band::ALL
                .iter()
                .map(|b| {
                    format!(
                        "{} {}",
                        b.name(),
                        self.per_stage_band.get(&(stage, *b)).copied().unwrap_or(0)
                    )
                })
                .collect();
            let total: usize = Band::ALL
                .iter()
                .map(|b| self.per_stage_band.get(&(stage, *b)).copied().unwrap_or(0))
                .sum();
            if total > 0 {
                out.push_str(&format!("  {}: {}\n", stage.name(), per_band.join(", ")));
            }
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

struct StudyOutput {
    study_id: String,
    group: Group,
    matrices: Vec<(RecordKey, eegtopo_core::persistence::FiniteMetric)>,
    epochs_used: usize,
    unannotated: usize,
    dropped_nonfinite: usize,
    dropped_awake: usize,
    nonfinite_samples: usize,
}

fn preprocess_one(manifest: &Path, config: &PipelineConfig) -> Result<StudyOutput> {
    let loaded = load_study(manifest)?;
    let mut record = loaded.record;
    validate_study_id(&record.study_id)?;
    let patterns: Vec<&str> = config.apnea_patterns.iter().map(|s| s.as_str()).collect();
    record = assign_group(record, &patterns);
    let study_id = record.study_id.clone();
    let wrap = |message: String| CliError::Study {
        study_id: study_id.clone(),
        message,
    };

    let filtered = eegtopo_core::filter::bandstop_filter(
        &record.signal,
        &config.notch_centers_hz,
        &eegtopo_core::filter::BandstopConfig {
            order: config.filter_order,
            half_width_hz: config.notch_half_width_hz,
            zero_phase: config.zero_phase,
        },
    )
    .map_err(|e| wrap(e.to_string()))?;

    let seg = segment_epochs(&filtered, &record.stage_annotations, config.epoch_seconds)
        .map_err(|e| wrap(e.to_string()))?;

    let kernel = config.kernel();
    let bands = config.band_edges;
    let mut dropped_awake = 0usize;
    let mut matrices = Vec::new();
    let mut epochs_used = 0usize;
    for epoch in &seg.epochs {
        if config.drop_awake && epoch.stage == SleepStage::Awake {
            dropped_awake += 1;
            continue;
        }
        epochs_used += 1;
        let mats = epoch_band_distance_matrices_with_edges(epoch, &kernel, &bands)
            .map_err(|e| wrap(e.to_string()))?;
        for m in mats {
            matrices.push((
                RecordKey {
                    study_id: record.study_id.clone(),
                    epoch: m.epoch_index,
                    band: m.band,
                    stage: m.stage,
                },
                m.values,
            ));
        }
    }

    Ok(StudyOutput {
        study_id: record.study_id,
        group: record.group,
        matrices,
        epochs_used,
        unannotated: seg.unannotated,
        dropped_nonfinite: seg.dropped_nonfinite,
        dropped_awake,
        nonfinite_samples: loaded.nonfinite_samples,
    })
}

/// Loads, groups, filters, segments, and writes one distance matrix per
/// (study, epoch, band) into a fresh archive.
pub fn run_preprocess(
    manifests: &[PathBuf],
    config: &PipelineConfig,
    out_dir: &Path,
    jobs: usize,
) -> Result<PreprocessReport> {
    if manifests.is_empty() {
        return Err(CliError::Usage("no study manifests given".into()));
    }
    config.validate()?;
    let outputs: Vec<StudyOutput> = with_jobs(jobs, || {
        manifests
            .par_iter()
            .map(|m| preprocess_one(m, config))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut archive = Archive::create(out_dir, ArchiveKind::DistanceMatrices);
    let mut report = PreprocessReport::default();
    for output in outputs {
        report.studies += 1;
        match output.group {
            Group::Apnea => report.apnea_studies += 1,
            _ => report.control_studies += 1,
        }
        report.epochs_used += output.epochs_used;
        report.unannotated_epochs += output.unannotated;
        report.dropped_nonfinite_epochs += output.dropped_nonfinite;
        report.dropped_awake_epochs += output.dropped_awake;
        report.nonfinite_samples += output.nonfinite_samples;
        if output.matrices.is_empty() {
            report
                .warnings
                .push(format!("study {} produced no matrices", output.study_id));
        }
        archive.groups.insert(output.study_id.clone(), output.group);
        for (key, matrix) in output.matrices {
            *report
                .per_stage_band
                .entry((key.stage, key.band))
                .or_default() += 1;
            report.matrices += 1;
            archive.write_matrix(key, &matrix)?;
        }
    }
    archive.finish()?;
    Ok(report)
}

/// Distance matrices -> persistence diagrams (dimensions 0 and 1).
pub fn run_persist(in_dir: &Path, out_dir: &Path, jobs: usize) -> Result<usize> {
    let input = Archive::open(in_dir)?;
    if input.kind != ArchiveKind::DistanceMatrices {
        return Err(CliError::validation(format!(
            "{}: expected a distance-matrices archive, found {}",
            in_dir.display(),
            input.kind.name()
        )));
    }
    let diagrams: Vec<(RecordKey, eegtopo_core::persistence::PersistenceDiagram)> =
        with_jobs(jobs, || {
            input
                .index
                .par_iter()
                .map(|key| {
                    let matrix = input.read_matrix(key)?;
                    let mut diagram = rips_h0(&matrix);
                    diagram.merge(
                        rips_h1(&matrix, None)
                            .map_err(|e| CliError::validation(e.to_string()))?,
                    );
                    Ok((key.clone(), diagram))
                })
                .collect::<Result<Vec<_>>>()
        })?;

    let mut out = Archive::create(out_dir, ArchiveKind::Diagrams);
    out.groups = input.groups.clone();
    let count = diagrams.len();
    for (key, diagram) in diagrams {
        out.write_diagram(key, &diagram)?;
    }
    out.finish()?;
    Ok(count)
}

/// Diagrams -> landscapes of the configured homology dimension.
pub fn run_landscape(
    in_dir: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
    jobs: usize,
) -> Result<usize> {
    config.validate()?;
    let input = Archive::open(in_dir)?;
    if input.kind != ArchiveKind::Diagrams {
        return Err(CliError::validation(format!(
            "{}: expected a diagrams archive, found {}",
            in_dir.display(),
            input.kind.name()
        )));
    }
    let grid = config.grid()?;
    let policy = config.essential_policy();
    let landscapes: Vec<(RecordKey, PersistenceLandscape)> = with_jobs(jobs, || {
        input
            .index
            .par_iter()
            .map(|key| {
                let diagram = input.read_diagram(key)?;
                let landscape = landscape_from_diagram(
                    &diagram,
                    config.homology_dim,
                    &grid,
                    config.levels,
                    policy,
                )
                .map_err(|e| CliError::validation(e.to_string()))?;
                Ok((key.clone(), landscape))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut out = Archive::create(out_dir, ArchiveKind::Landscapes);
    out.groups = input.groups.clone();
    let count = landscapes.len();
    for (key, landscape) in landscapes {
        out.write_landscape(key, &landscape)?;
    }
    out.finish()?;
    Ok(count)
}

/// Rendered p-value table plus the per-cell detail rows.
#[derive(Debug, Clone)]
pub struct TestOutput {
    pub table: StratifiedTable,
    pub rendered: String,
    pub detail: String,
}

/// Landscape archive -> the band-by-stage permutation-test table.
pub fn run_test(in_dir: &Path, config: &PipelineConfig) -> Result<TestOutput> {
    config.validate()?;
    let input = Archive::open(in_dir)?;
    if input.kind != ArchiveKind::Landscapes {
        return Err(CliError::validation(format!(
            "{}: expected a landscapes archive, found {}",
            in_dir.display(),
            input.kind.name()
        )));
    }
    let have_apnea = input.groups.values().any(|g| *g == Group::Apnea);
    let have_control = input.groups.values().any(|g| *g == Group::NoApnea);
    if !have_apnea || !have_control {
        return Err(CliError::validation(
            "landscapes cover only one group; the test needs both",
        ));
    }

    // (band, stage) -> (group, study) -> landscapes
    type CellMap = BTreeMap<(Band, SleepStage), BTreeMap<(Group, String), Vec<PersistenceLandscape>>>;
    let mut cells: CellMap = BTreeMap::new();
    for key in &input.index {
        if !SleepStage::SCORED.contains(&key.stage) {
            continue;
        }
        let Some(group) = input.groups.get(&key.study_id).copied() else {
            return Err(CliError::validation(format!(
                "study {} has no group assignment",
                key.study_id
            )));
        };
        let landscape = input.read_landscape(key)?;
        cells
            .entry((key.band, key.stage))
            .or_default()
            .entry((group, key.study_id.clone()))
            .or_default()
            .push(landscape);
    }

    let mut sets: BTreeMap<(Band, SleepStage), LabeledLandscapeSet> = BTreeMap::new();
    for (cell, studies) in cells {
        let mut group1 = Vec::new();
        let mut group2 = Vec::new();
        for ((group, _study), landscapes) in studies {
            let units: Vec<PersistenceLandscape> = match config.pooling {
                PoolingMode::PerStudy => vec![average_landscapes(&landscapes)
                    .map_err(|e| CliError::validation(e.to_string()))?],
                PoolingMode::PerEpoch => landscapes,
            };
            match group {
                Group::Apnea => group1.extend(units),
                Group::NoApnea => group2.extend(units),
                Group::Unassigned => {}
            }
        }
        if group1.is_empty() || group2.is_empty() {
            continue; // absent cell
        }
        sets.insert(
            cell,
            LabeledLandscapeSet::new(group1, group2)
                .map_err(|e| CliError::validation(e.to_string()))?,
        );
    }

    let table = stratified_test_matrix_with(&sets, config.permutations, config.seed, config.stat())
        .map_err(|e| CliError::validation(e.to_string()))?;
    let rendered = render_p_table(&table);
    let detail = render_detail(&table);
    Ok(TestOutput {
        table,
        rendered,
        detail,
    })
}

/// Five band rows by four stage columns, three decimals, `-` for absent
/// cells.
pub fn render_p_table(table: &StratifiedTable) -> String {
    let mut out = String::from("band\tNREM1\tNREM2\tNREM3\tREM\n");
    for band in Band::ALL {
        let cells: Vec<String> = SleepStage::SCORED
            .iter()
            .map(|stage| match table.get(band, *stage) {
                Some(result) => format!("{:.3}", result.p_value),
                None => "-".to_string(),
            })
            .collect();
        out.push_str(&format!("{}\t{}\n", band.name(), cells.join("\t")));
    }
    out
}

fn render_detail(table: &StratifiedTable) -> String {
    let mut out =
        String::from("band\tstage\tobserved\tpermutations\tsignificant\tp\tp_corrected\n");
    for ((band, stage), r) in table.iter() {
        out.push_str(&format!(
            "{}\t{}\t{:?}\t{}\t{}\t{:.6}\t{:.6}\n",
            band.name(),
            stage.name(),
            r.observed_stat,
            r.permutations,
            r.significant,
            r.p_value,
            r.p_value_corrected
        ));
    }
    out
}

/// Renders one archived record (diagram or landscape) as SVG.
/// Keys look like `study:epoch:band`, e.g. `synth-a000:3:Alpha`.
pub fn run_plot(archive_dir: &Path, key: &str) -> Result<String> {
    let archive = Archive::open(archive_dir)?;
    let parts: Vec<&str> = key.split(':').collect();
    let bad_key = || CliError::UnknownRecord { key: key.into() };
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "record key must be study:epoch:band, got {key:?}"
        )));
    }
    let epoch: usize = parts[1].parse().map_err(|_| bad_key())?;
    let band = Band::parse(parts[2]).ok_or_else(bad_key)?;
    let record = archive
        .find(parts[0], epoch, band)
        .ok_or_else(bad_key)?
        .clone();
    let title = format!(
        "{} epoch {} {} ({})",
        record.study_id,
        record.epoch,
        record.band.name(),
        record.stage.name()
    );
    match archive.kind {
        ArchiveKind::Diagrams => {
            let diagram = archive.read_diagram(&record)?;
            Ok(crate::plot::diagram_svg(&diagram, &title))
        }
        ArchiveKind::Landscapes => {
            let landscape = archive.read_landscape(&record)?;
            Ok(crate::plot::landscape_svg(&landscape, &title))
        }
        ArchiveKind::DistanceMatrices => Err(CliError::validation(
            "plot wants a diagrams or landscapes archive",
        )),
    }
}
