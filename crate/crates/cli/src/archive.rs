//! Stage archives: diffable directories of text records plus an index.
//!
//! Layout:
//!
//! ```text
//! <dir>/
//!   index.tsv    # eegtopo-archive kind=<kind> v1, then one TSV row per
//!                # record: study_id, epoch, band, stage, file
//!   groups.tsv   # study_id <TAB> group
//!   records/<study>__e<epoch>__<band>.<ext>
//! ```
//!
//! Record formats (`#` lines are metadata/comments):
//!
//! * distance matrix (`.dmat`): `key = value` metadata, then `channels`
//!   rows of space-separated distances.
//! * diagram (`.pdg`): one bar per line, `dim birth death`, with `inf` as
//!   the death of classes that never die.
//! * landscape (`.plsc`): one `grid <start> <step> <len> <levels>` line,
//!   then `levels` rows of `len` samples.
//!
//! Keys are unique per archive: (study_id, epoch, band) names the file and
//! the stage rides in the index and record metadata. Index rows and record
//! bodies are written in sorted key order so identical runs produce
//! byte-identical directories.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use eegtopo_core::cohort::Group;
use eegtopo_core::landscape::{LandscapeGrid, PersistenceLandscape};
use eegtopo_core::persistence::{FiniteMetric, PersistenceDiagram};
use eegtopo_core::signal::SleepStage;
use eegtopo_core::spectrum::Band;

use crate::error::{read_to_string, write_file, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchiveKind {
    DistanceMatrices,
    Diagrams,
    Landscapes,
}

impl ArchiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            ArchiveKind::DistanceMatrices => "distance-matrices",
            ArchiveKind::Diagrams => "diagrams",
            ArchiveKind::Landscapes => "landscapes",
        }
    }

    fn parse(name: &str) -> Option<ArchiveKind> {
        match name {
            "distance-matrices" => Some(ArchiveKind::DistanceMatrices),
            "diagrams" => Some(ArchiveKind::Diagrams),
            "landscapes" => Some(ArchiveKind::Landscapes),
            _ => None,
        }
    }

    fn extension(&self) -> &'static str {
        match self {
            ArchiveKind::DistanceMatrices => "dmat",
            ArchiveKind::Diagrams => "pdg",
            ArchiveKind::Landscapes => "plsc",
        }
    }
}

/// Address of one record: (study, epoch, band); the stage tags along.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RecordKey {
    pub study_id: String,
    pub epoch: usize,
    pub band: Band,
    pub stage: SleepStage,
}

impl RecordKey {
    pub fn file_name(&self, kind: ArchiveKind) -> String {
        format!(
            "{}__e{:04}__{}.{}",
            self.study_id,
            self.epoch,
            self.band.name(),
            kind.extension()
        )
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse()
        .map_err(|_| CliError::validation(format!("invalid {what}: {s:?}")))
}

/// Study ids become file-name stems; keep them portable.
pub fn validate_study_id(id: &str) -> Result<()> {
    if id.is_empty()
        || !id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    {
        return Err(CliError::validation(format!(
            "study id {id:?} may only contain ASCII letters, digits, '-' and '_'"
        )));
    }
    Ok(())
}

pub struct Archive {
    pub kind: ArchiveKind,
    pub dir: PathBuf,
    pub index: Vec<RecordKey>,
    pub groups: BTreeMap<String, Group>,
}

impl Archive {
    pub fn create(dir: &Path, kind: ArchiveKind) -> Archive {
        Archive {
            kind,
            dir: dir.to_path_buf(),
            index: Vec::new(),
            groups: BTreeMap::new(),
        }
    }

    pub fn open(dir: &Path) -> Result<Archive> {
        let index_path = dir.join("index.tsv");
        let text = read_to_string(&index_path)?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let kind = header
            .strip_prefix("# eegtopo-archive kind=")
            .and_then(|rest| rest.split_whitespace().next())
            .and_then(ArchiveKind::parse)
            .ok_or_else(|| {
                CliError::validation(format!(
                    "{}: not an eegtopo archive index",
                    index_path.display()
                ))
            })?;
        let mut index = Vec::new();
        for (idx, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |msg: String| CliError::AnnotationRow {
                path: index_path.clone(),
                row: idx + 2,
                message: msg,
            };
            if fields.len() != 5 {
                return Err(err(format!("expected 5 tab-separated fields, got {line:?}")));
            }
            let epoch = fields[1]
                .parse()
                .map_err(|_| err(format!("bad epoch {:?}", fields[1])))?;
            let band =
                Band::parse(fields[2]).ok_or_else(|| err(format!("bad band {:?}", fields[2])))?;
            let stage = SleepStage::parse(fields[3])
                .ok_or_else(|| err(format!("bad stage {:?}", fields[3])))?;
            index.push(RecordKey {
                study_id: fields[0].to_string(),
                epoch,
                band,
                stage,
            });
        }

        let groups_path = dir.join("groups.tsv");
        let mut groups = BTreeMap::new();
        if groups_path.exists() {
            for (idx, line) in read_to_string(&groups_path)?.lines().enumerate() {
                if line.trim().is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((id, group)) = line.split_once('\t') else {
                    return Err(CliError::AnnotationRow {
                        path: groups_path.clone(),
                        row: idx + 1,
                        message: format!("expected `study<TAB>group`, got {line:?}"),
                    });
                };
                let group = Group::parse(group).ok_or_else(|| CliError::AnnotationRow {
                    path: groups_path.clone(),
                    row: idx + 1,
                    message: format!("unknown group {group:?}"),
                })?;
                groups.insert(id.to_string(), group);
            }
        }
        Ok(Archive {
            kind,
            dir: dir.to_path_buf(),
            index,
            groups,
        })
    }

    pub fn record_path(&self, key: &RecordKey) -> PathBuf {
        self.dir.join("records").join(key.file_name(self.kind))
    }

    pub fn find(&self, study_id: &str, epoch: usize, band: Band) -> Option<&RecordKey> {
        self.index
            .iter()
            .find(|k| k.study_id == study_id && k.epoch == epoch && k.band == band)
    }

    /// Writes index.tsv and groups.tsv; call after all records are added.
    pub fn finish(&mut self) -> Result<()> {
        self.index.sort();
        let mut seen: Option<&RecordKey> = None;
        for key in &self.index {
            if seen == Some(key) {
                return Err(CliError::validation(format!(
                    "duplicate record key {}/{}/{}",
                    key.study_id, key.epoch, key.band
                )));
            }
            seen = Some(key);
        }
        let mut text = format!("# eegtopo-archive kind={} v1\n", self.kind.name());
        for key in &self.index {
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\trecords/{}\n",
                key.study_id,
                key.epoch,
                key.band.name(),
                key.stage.name(),
                key.file_name(self.kind)
            ));
        }
        write_file(&self.dir.join("index.tsv"), text.as_bytes())?;

        let mut groups = String::new();
        for (id, group) in &self.groups {
            groups.push_str(&format!("{id}\t{}\n", group.name()));
        }
        write_file(&self.dir.join("groups.tsv"), groups.as_bytes())
    }

    fn metadata_block(&self, key: &RecordKey, comment: bool) -> String {
        let prefix = if comment { "# " } else { "" };
        format!(
            "{prefix}study = {}\n{prefix}epoch = {}\n{prefix}band = {}\n{prefix}stage = {}\n",
            key.study_id,
            key.epoch,
            key.band.name(),
            key.stage.name()
        )
    }

    pub fn write_matrix(&mut self, key: RecordKey, matrix: &FiniteMetric) -> Result<()> {
        let mut text = String::from("# eegtopo distance-matrix v1\n");
        text.push_str(&self.metadata_block(&key, false));
        text.push_str(&format!("channels = {}\n\n", matrix.len()));
        for i in 0..matrix.len() {
            let row: Vec<String> = (0..matrix.len()).map(|j| fmt_f64(matrix.get(i, j))).collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        write_file(&self.record_path(&key), text.as_bytes())?;
        self.index.push(key);
        Ok(())
    }

    pub fn read_matrix(&self, key: &RecordKey) -> Result<FiniteMetric> {
        let path = self.record_path(key);
        let text = read_to_string(&path)?;
        let mut channels = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                if k.trim() == "channels" {
                    channels = Some(v.trim().parse::<usize>().map_err(|_| {
                        CliError::validation(format!("{}: bad channel count", path.display()))
                    })?);
                }
                continue;
            }
            let row: Result<Vec<f64>> = line
                .split_whitespace()
                .map(|v| parse_f64(v, "matrix entry"))
                .collect();
            rows.push(row?);
        }
        let n = channels
            .ok_or_else(|| CliError::validation(format!("{}: missing channels", path.display())))?;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(CliError::validation(format!(
                "{}: expected {n}x{n} matrix",
                path.display()
            )));
        }
        FiniteMetric::from_flat(n, rows.into_iter().flatten().collect())
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    }

    pub fn write_diagram(&mut self, key: RecordKey, diagram: &PersistenceDiagram) -> Result<()> {
        let mut text = String::from("# eegtopo diagram v1\n");
        text.push_str(&self.metadata_block(&key, true));
        let mut sorted = diagram.clone();
        sorted.normalize();
        for dim in 0..2 {
            for bar in sorted.finite(dim) {
                text.push_str(&format!(
                    "{dim} {} {}\n",
                    fmt_f64(bar.birth),
                    fmt_f64(bar.death)
                ));
            }
            for &birth in sorted.essential_births(dim) {
                text.push_str(&format!("{dim} {} inf\n", fmt_f64(birth)));
            }
        }
        write_file(&self.record_path(&key), text.as_bytes())?;
        self.index.push(key);
        Ok(())
    }

    pub fn read_diagram(&self, key: &RecordKey) -> Result<PersistenceDiagram> {
        let path = self.record_path(key);
        let text = read_to_string(&path)?;
        let mut diagram = PersistenceDiagram::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(CliError::validation(format!(
                    "{}: bad bar line {line:?}",
                    path.display()
                )));
            }
            let dim: usize = fields[0]
                .parse()
                .map_err(|_| CliError::validation(format!("{}: bad dim", path.display())))?;
            if dim > 1 {
                return Err(CliError::validation(format!(
                    "{}: dimension {dim} out of range",
                    path.display()
                )));
            }
            let birth = parse_f64(fields[1], "birth")?;
            let death = parse_f64(fields[2], "death")?;
            if death.is_infinite() {
                diagram.push_essential(dim, birth);
            } else {
                diagram.push_finite(dim, birth, death);
            }
        }
        Ok(diagram)
    }

    pub fn write_landscape(
        &mut self,
        key: RecordKey,
        landscape: &PersistenceLandscape,
    ) -> Result<()> {
        let mut text = String::from("# eegtopo landscape v1\n");
        text.push_str(&self.metadata_block(&key, true));
        let grid = landscape.grid();
        text.push_str(&format!(
            "grid {} {} {} {}\n",
            fmt_f64(grid.start),
            fmt_f64(grid.step),
            grid.len,
            landscape.n_levels()
        ));
        for level in landscape.levels() {
            let row: Vec<String> = level.iter().map(|v| fmt_f64(*v)).collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        write_file(&self.record_path(&key), text.as_bytes())?;
        self.index.push(key);
        Ok(())
    }

    pub fn read_landscape(&self, key: &RecordKey) -> Result<PersistenceLandscape> {
        let path = self.record_path(key);
        let text = read_to_string(&path)?;
        let mut grid: Option<(LandscapeGrid, usize)> = None;
        let mut levels: Vec<Vec<f64>> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("grid ") {
                let fields: Vec<&str> = rest.split_whitespace().collect();
                if fields.len() != 4 {
                    return Err(CliError::validation(format!(
                        "{}: bad grid line",
                        path.display()
                    )));
                }
                let start = parse_f64(fields[0], "grid start")?;
                let step = parse_f64(fields[1], "grid step")?;
                let len: usize = fields[2]
                    .parse()
                    .map_err(|_| CliError::validation(format!("{}: bad grid len", path.display())))?;
                let k: usize = fields[3]
                    .parse()
                    .map_err(|_| CliError::validation(format!("{}: bad level count", path.display())))?;
                let g = LandscapeGrid::new(start, step, len)
                    .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
                grid = Some((g, k));
                continue;
            }
            let row: Result<Vec<f64>> = line
                .split_whitespace()
                .map(|v| parse_f64(v, "landscape sample"))
                .collect();
            levels.push(row?);
        }
        let Some((grid, k)) = grid else {
            return Err(CliError::validation(format!(
                "{}: missing grid header",
                path.display()
            )));
        };
        if levels.len() != k || levels.iter().any(|r| r.len() != grid.len) {
            return Err(CliError::validation(format!(
                "{}: expected {k} rows of {} samples",
                path.display(),
                grid.len
            )));
        }
        Ok(PersistenceLandscape::from_levels(grid, levels))
    }
}
