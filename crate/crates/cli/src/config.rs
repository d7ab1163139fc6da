//! Pipeline configuration and its key-value file format.
//!
//! The file is plain text, one `key = value` per line, `#` comments. Every
//! key has a default; [`PipelineConfig::to_text`] writes the full set so a
//! config file round-trips losslessly through parse/serialize.

use eegtopo_core::landscape::{DifferenceStat, EssentialPolicy, LandscapeGrid};
use eegtopo_core::spectrum::{Band, SmoothingKernel};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Modified Daniell: uniform with half-weight endpoints.
    Daniell,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolingMode {
    /// Average per-epoch landscapes within each study; studies are the
    /// exchangeable units.
    PerStudy,
    /// Every epoch landscape is its own exchangeable unit.
    PerEpoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EssentialMode {
    Drop,
    /// Cap essential classes at the top of the landscape grid.
    Cap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub kernel_kind: KernelKind,
    pub kernel_half_width: usize,
    /// (band, lo_hz, hi_hz), half-open [lo, hi).
    pub band_edges: [(Band, f64, f64); 5],
    pub grid_start: f64,
    pub grid_step: f64,
    pub grid_len: usize,
    /// Landscape levels retained (K).
    pub levels: usize,
    /// Permutation replicates (B).
    pub permutations: usize,
    pub seed: u64,
    /// Homology dimension fed to inference (0 or 1).
    pub homology_dim: usize,
    pub pooling: PoolingMode,
    pub apnea_patterns: Vec<String>,
    pub notch_centers_hz: Vec<f64>,
    pub notch_half_width_hz: f64,
    pub filter_order: usize,
    pub zero_phase: bool,
    pub epoch_seconds: u32,
    /// Drop Awake epochs already at preprocessing. Awake never enters
    /// inference either way; by default it is retained through preprocessing.
    pub drop_awake: bool,
    pub essential_bars: EssentialMode,
    pub difference_stat: DiffStatMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffStatMode {
    Absolute,
    Signed,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kernel_kind: KernelKind::Daniell,
            kernel_half_width: 4,
            band_edges: Band::ALL.map(|b| {
                let (lo, hi) = b.edges();
                (b, lo, hi)
            }),
            grid_start: 0.0,
            grid_step: 1.0 / 255.0,
            grid_len: 256,
            levels: 6,
            permutations: 1000,
            seed: 0,
            homology_dim: 0,
            pooling: PoolingMode::PerStudy,
            apnea_patterns: eegtopo_core::DEFAULT_APNEA_PATTERNS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            notch_centers_hz: vec![60.0, 120.0],
            notch_half_width_hz: 2.0,
            filter_order: 3,
            zero_phase: false,
            epoch_seconds: 30,
            drop_awake: false,
            essential_bars: EssentialMode::Drop,
            difference_stat: DiffStatMode::Absolute,
        }
    }
}

impl PipelineConfig {
    pub fn kernel(&self) -> SmoothingKernel {
        match self.kernel_kind {
            KernelKind::Daniell => SmoothingKernel::modified_daniell(self.kernel_half_width),
            KernelKind::Uniform => SmoothingKernel::uniform(self.kernel_half_width),
        }
    }

    pub fn grid(&self) -> Result<LandscapeGrid> {
        LandscapeGrid::new(self.grid_start, self.grid_step, self.grid_len)
            .map_err(|e| CliError::validation(format!("grid: {e}")))
    }

    pub fn essential_policy(&self) -> EssentialPolicy {
        match self.essential_bars {
            EssentialMode::Drop => EssentialPolicy::Drop,
            EssentialMode::Cap => {
                let top = self.grid_start + self.grid_step * (self.grid_len - 1) as f64;
                EssentialPolicy::CapAt(top)
            }
        }
    }

    pub fn stat(&self) -> DifferenceStat {
        match self.difference_stat {
            DiffStatMode::Absolute => DifferenceStat::Absolute,
            DiffStatMode::Signed => DifferenceStat::Signed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(CliError::validation("levels must be at least 1"));
        }
        if self.permutations == 0 {
            return Err(CliError::validation("permutations must be at least 1"));
        }
        if self.homology_dim > 1 {
            return Err(CliError::validation("homology_dim must be 0 or 1"));
        }
        if self.epoch_seconds == 0 {
            return Err(CliError::validation("epoch_seconds must be positive"));
        }
        if self.grid_len == 0 || self.grid_step.is_nan() || self.grid_step <= 0.0 {
            return Err(CliError::validation("grid must be non-empty with positive step"));
        }
        for (band, lo, hi) in &self.band_edges {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(CliError::validation(format!(
                    "band {band}: edges {lo}..{hi} out of order"
                )));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# eegtopo pipeline configuration\n");
        out.push_str(&format!(
            "kernel_kind = {}\n",
            match self.kernel_kind {
                KernelKind::Daniell => "daniell",
                KernelKind::Uniform => "uniform",
            }
        ));
        out.push_str(&format!("kernel_half_width = {}\n", self.kernel_half_width));
        for (band, lo, hi) in &self.band_edges {
            out.push_str(&format!(
                "band_{} = {} {}\n",
                band.name().to_lowercase(),
                fmt_f64(*lo),
                fmt_f64(*hi)
            ));
        }
        out.push_str(&format!("grid_start = {}\n", fmt_f64(self.grid_start)));
        out.push_str(&format!("grid_step = {}\n", fmt_f64(self.grid_step)));
        out.push_str(&format!("grid_len = {}\n", self.grid_len));
        out.push_str(&format!("levels = {}\n", self.levels));
        out.push_str(&format!("permutations = {}\n", self.permutations));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("homology_dim = {}\n", self.homology_dim));
        out.push_str(&format!(
            "pooling = {}\n",
            match self.pooling {
                PoolingMode::PerStudy => "per-study",
                PoolingMode::PerEpoch => "per-epoch",
            }
        ));
        out.push_str(&format!(
            "apnea_patterns = {}\n",
            self.apnea_patterns.join(", ")
        ));
        out.push_str(&format!(
            "notch_centers_hz = {}\n",
            self.notch_centers_hz
                .iter()
                .map(|v| fmt_f64(*v))
                .collect::<Vec<_>>()
                .join(" ")
        ));
        out.push_str(&format!(
            "notch_half_width_hz = {}\n",
            fmt_f64(self.notch_half_width_hz)
        ));
        out.push_str(&format!("filter_order = {}\n", self.filter_order));
        out.push_str(&format!("zero_phase = {}\n", self.zero_phase));
        out.push_str(&format!("epoch_seconds = {}\n", self.epoch_seconds));
        out.push_str(&format!("drop_awake = {}\n", self.drop_awake));
        out.push_str(&format!(
            "essential_bars = {}\n",
            match self.essential_bars {
                EssentialMode::Drop => "drop",
                EssentialMode::Cap => "cap",
            }
        ));
        out.push_str(&format!(
            "difference_stat = {}\n",
            match self.difference_stat {
                DiffStatMode::Absolute => "absolute",
                DiffStatMode::Signed => "signed",
            }
        ));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::validation(format!(
                    "config line {}: expected `key = value`, got {raw:?}",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            apply_key(&mut config, key, value).map_err(|msg| {
                CliError::validation(format!("config line {}: {msg}", lineno + 1))
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&crate::error::read_to_string(path)?)
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn apply_key(config: &mut PipelineConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    fn num<T: std::str::FromStr>(value: &str, what: &str) -> std::result::Result<T, String> {
        value
            .parse()
            .map_err(|_| format!("invalid {what}: {value:?}"))
    }
    match key {
        "kernel_kind" => {
            config.kernel_kind = match value {
                "daniell" => KernelKind::Daniell,
                "uniform" => KernelKind::Uniform,
                _ => return Err(format!("unknown kernel kind {value:?}")),
            }
        }
        "kernel_half_width" => config.kernel_half_width = num(value, "kernel_half_width")?,
        "band_delta" | "band_theta" | "band_alpha" | "band_beta" | "band_gamma" => {
            let band = match key {
                "band_delta" => Band::Delta,
                "band_theta" => Band::Theta,
                "band_alpha" => Band::Alpha,
                "band_beta" => Band::Beta,
                _ => Band::Gamma,
            };
            let mut parts = value.split_whitespace();
            let (Some(lo), Some(hi), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(format!("{key} wants `lo hi`, got {value:?}"));
            };
            let lo: f64 = num(lo, "band edge")?;
            let hi: f64 = num(hi, "band edge")?;
            for slot in config.band_edges.iter_mut() {
                if slot.0 == band {
                    *slot = (band, lo, hi);
                }
            }
        }
        "grid_start" => config.grid_start = num(value, "grid_start")?,
        "grid_step" => config.grid_step = num(value, "grid_step")?,
        "grid_len" => config.grid_len = num(value, "grid_len")?,
        "levels" => config.levels = num(value, "levels")?,
        "permutations" => config.permutations = num(value, "permutations")?,
        "seed" => config.seed = num(value, "seed")?,
        "homology_dim" => config.homology_dim = num(value, "homology_dim")?,
        "pooling" => {
            config.pooling = match value {
                "per-study" => PoolingMode::PerStudy,
                "per-epoch" => PoolingMode::PerEpoch,
                _ => return Err(format!("unknown pooling mode {value:?}")),
            }
        }
        "apnea_patterns" => {
            config.apnea_patterns = value
                .split(',')
                .map(|p| p.trim().to_string())
                .filter(|p| !p.is_empty())
                .collect();
            if config.apnea_patterns.is_empty() {
                return Err("apnea_patterns must list at least one pattern".into());
            }
        }
        "notch_centers_hz" => {
            config.notch_centers_hz = value
                .split_whitespace()
                .map(|v| num::<f64>(v, "notch center"))
                .collect::<std::result::Result<_, _>>()?;
        }
        "notch_half_width_hz" => config.notch_half_width_hz = num(value, "notch_half_width_hz")?,
        "filter_order" => config.filter_order = num(value, "filter_order")?,
        "zero_phase" => config.zero_phase = num(value, "zero_phase")?,
        "epoch_seconds" => config.epoch_seconds = num(value, "epoch_seconds")?,
        "drop_awake" => config.drop_awake = num(value, "drop_awake")?,
        "essential_bars" => {
            config.essential_bars = match value {
                "drop" => EssentialMode::Drop,
                "cap" => EssentialMode::Cap,
                _ => return Err(format!("unknown essential_bars mode {value:?}")),
            }
        }
        "difference_stat" => {
            config.difference_stat = match value {
                "absolute" => DiffStatMode::Absolute,
                "signed" => DiffStatMode::Signed,
                _ => return Err(format!("unknown difference_stat {value:?}")),
            }
        }
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_losslessly() {
        let config = PipelineConfig::default();
        let text = config.to_text();
        let parsed = PipelineConfig::parse(&text).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    #[allow(clippy::field_reassign_with_default)]
    fn modified_values_round_trip() {
        let mut config = PipelineConfig::default();
        config.kernel_kind = KernelKind::Uniform;
        config.kernel_half_width = 2;
        config.band_edges[0] = (Band::Delta, 0.75, 3.5);
        config.grid_step = 0.01;
        config.grid_len = 128;
        config.levels = 4;
        config.permutations = 250;
        config.seed = 987654321;
        config.homology_dim = 1;
        config.pooling = PoolingMode::PerEpoch;
        config.apnea_patterns = vec!["central apnea".into()];
        config.notch_centers_hz = vec![50.0];
        config.zero_phase = true;
        config.drop_awake = true;
        config.essential_bars = EssentialMode::Cap;
        config.difference_stat = DiffStatMode::Signed;
        let parsed = PipelineConfig::parse(&config.to_text()).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(PipelineConfig::parse("nope = 1").is_err());
        assert!(PipelineConfig::parse("levels = zero").is_err());
        assert!(PipelineConfig::parse("levels 6").is_err());
        assert!(PipelineConfig::parse("permutations = 0").is_err());
        assert!(PipelineConfig::parse("band_delta = 4 0.5").is_err());
        assert!(PipelineConfig::parse("apnea_patterns = ,").is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let parsed = PipelineConfig::parse("# hello\n\nseed = 42\n").unwrap();
        assert_eq!(parsed.seed, 42);
        assert_eq!(parsed.levels, PipelineConfig::default().levels);
    }

    #[test]
    fn grid_and_policies_materialize() {
        let config = PipelineConfig::default();
        let grid = config.grid().unwrap();
        assert_eq!(grid.len, 256);
        assert_eq!(config.kernel().weights().len(), 9);
        assert!(matches!(
            config.essential_policy(),
            eegtopo_core::landscape::EssentialPolicy::Drop
        ));
    }
}
