//! Profile × repeat experiment: one watermarked and one plain trace per cell,
//! both scored with the experiment key.

use std::path::{Path, PathBuf};

use agent_guide_core::{
    detect, prf, simulate_agent, BehaviorCatalog, DetectionConfig, DetectionReport, GuidanceConfig,
    GuidanceMode, MockGenerator, Persona, ProfileTable, Trace, Watermark, WatermarkKey,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::files::{read_catalog, read_profiles, write_trace, FileError};
use crate::llm::{HttpTransport, LlmEndpointConfig, LlmGenerator};
use crate::report::{render, ExperimentReport, ReportFormat, ReportRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    #[default]
    Mock,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub key: u64,
    pub rounds: u64,
    pub repeats: u32,
    pub gamma_min: f64,
    pub n_min: usize,
    pub gamma_granularity: u64,
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_override: Option<f64>,
    pub mode: GuidanceMode,
    pub profiles: Vec<String>,
    pub generator: GeneratorKind,
    pub seed: u64,
    /// Dirichlet concentration of the mock generator's noise; `inf` disables it.
    pub kappa: f64,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles_file: Option<PathBuf>,
    pub llm: LlmEndpointConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            key: 2025,
            rounds: 50,
            repeats: 2,
            gamma_min: 0.5,
            n_min: 3,
            gamma_granularity: 100,
            tau: 2.0,
            gamma_override: None,
            mode: GuidanceMode::FixedN,
            profiles: Persona::all_builtin().map(|p| p.profile()).collect(),
            generator: GeneratorKind::Mock,
            seed: 0,
            kappa: agent_guide_core::mock::DEFAULT_KAPPA,
            output_dir: PathBuf::from("runs/default"),
            catalog_file: None,
            profiles_file: None,
            llm: LlmEndpointConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] agent_guide_core::Error),
    #[error(transparent)]
    File(#[from] FileError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("experiment aborted after {completed} of {total} cells: {cause}")]
    Aborted {
        completed: usize,
        total: usize,
        cause: String,
    },
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn guidance(&self) -> GuidanceConfig {
        GuidanceConfig {
            gamma_min: self.gamma_min,
            n_min: self.n_min,
            gamma_granularity: self.gamma_granularity,
            gamma_override: self.gamma_override,
            mode: self.mode,
        }
    }

    pub fn detection(&self) -> DetectionConfig {
        DetectionConfig {
            tau: self.tau,
            alpha: 0.05,
            guidance: self.guidance(),
        }
    }

    pub fn personas(&self) -> Result<Vec<Persona>, ExperimentError> {
        self.profiles
            .iter()
            .map(|p| p.parse::<Persona>().map_err(ExperimentError::from))
            .collect()
    }

    pub fn catalog(&self) -> Result<BehaviorCatalog, ExperimentError> {
        match &self.catalog_file {
            Some(p) => Ok(read_catalog(p)?),
            None => Ok(BehaviorCatalog::social_media()),
        }
    }

    pub fn profile_table(&self) -> Result<ProfileTable, ExperimentError> {
        match &self.profiles_file {
            Some(p) => Ok(read_profiles(p)?),
            None => Ok(ProfileTable::default()),
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.rounds == 0 {
            return Err(ExperimentError::Config("rounds must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(ExperimentError::Config("repeats must be at least 1".into()));
        }
        if self.profiles.is_empty() {
            return Err(ExperimentError::Config("no profiles selected".into()));
        }
        if self.tau.is_nan() {
            return Err(ExperimentError::Config("tau must be a number".into()));
        }
        if self.kappa.is_nan() || self.kappa <= 0.0 {
            return Err(ExperimentError::Config("kappa must be positive".into()));
        }
        Ok(())
    }
}

/// Seed for one cell stream, derived from the master seed with a label that
/// names the profile, repeat and arm, so adding profiles leaves other cells
/// untouched.
pub fn cell_seed(master: u64, profile: &str, repeat: u32, watermarked: bool, stream: &str) -> u64 {
    let arm = if watermarked { "watermarked" } else { "original" };
    prf(WatermarkKey(master), repeat as u64, &format!("{stream}:{profile}:{arm}"))
}

pub fn trace_file_name(profile: &str, repeat: u32, watermarked: bool) -> String {
    let slug: String = profile
        .to_ascii_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("-");
    let arm = if watermarked { "watermarked" } else { "original" };
    format!("{slug}-r{repeat}-{arm}.jsonl")
}

/// Simulates one arm of one cell.
pub fn simulate_cell(
    config: &ExperimentConfig,
    catalog: &BehaviorCatalog,
    table: &ProfileTable,
    persona: &Persona,
    repeat: u32,
    watermarked: bool,
) -> Result<Trace, ExperimentError> {
    let profile = persona.profile();
    let sampler_seed = cell_seed(config.seed, &profile, repeat, watermarked, "sampler");
    let watermark = Watermark {
        key: WatermarkKey(config.key),
        config: config.guidance(),
    };
    let wm = watermarked.then_some(&watermark);
    let trace = match config.generator {
        GeneratorKind::Mock => {
            let noise_seed = cell_seed(config.seed, &profile, repeat, watermarked, "noise");
            let kappa = config.kappa.is_finite().then_some(config.kappa);
            let gen = MockGenerator::new(persona.clone(), table.clone(), noise_seed)?.with_kappa(kappa);
            simulate_agent(persona, config.rounds, catalog, gen, wm, sampler_seed)?
        }
        GeneratorKind::Llm => {
            let gen = LlmGenerator::new(persona.clone(), HttpTransport::new(&config.llm), config.llm.max_retries);
            simulate_agent(persona, config.rounds, catalog, gen, wm, sampler_seed)?
        }
    };
    Ok(trace)
}

struct Cell {
    row: ReportRow,
    original: Trace,
    watermarked: Trace,
}

fn run_cell(
    config: &ExperimentConfig,
    catalog: &BehaviorCatalog,
    table: &ProfileTable,
    persona: &Persona,
    repeat: u32,
) -> Result<Cell, ExperimentError> {
    let key = WatermarkKey(config.key);
    let det = config.detection();
    let original = simulate_cell(config, catalog, table, persona, repeat, false)?;
    let watermarked = simulate_cell(config, catalog, table, persona, repeat, true)?;
    let DetectionReport { z: z_original, hits: hits_original, .. } = detect(&original, key, &det, catalog)?;
    let DetectionReport { z: z_watermarked, hits: hits_watermarked, .. } = detect(&watermarked, key, &det, catalog)?;
    let profile = persona.profile();
    let row = ReportRow {
        trace_original: format!("traces/{}", trace_file_name(&profile, repeat, false)),
        trace_watermarked: format!("traces/{}", trace_file_name(&profile, repeat, true)),
        profile,
        repeat,
        hits_original,
        hits_watermarked,
        z_original,
        z_watermarked,
        false_alarm: z_original > config.tau,
        effective: z_watermarked > config.tau,
    };
    Ok(Cell {
        row,
        original,
        watermarked,
    })
}

/// Runs every profile × repeat cell (in parallel) and returns the report
/// together with the traces, in row order. Nothing is written to disk.
pub fn run_in_memory(
    config: &ExperimentConfig,
) -> Result<(ExperimentReport, Vec<(Trace, Trace)>), ExperimentError> {
    let (report, cells, err) = run_cells(config)?;
    match err {
        Some(e) => Err(e),
        None => Ok((report, cells.into_iter().map(|c| (c.original, c.watermarked)).collect())),
    }
}

fn run_cells(
    config: &ExperimentConfig,
) -> Result<(ExperimentReport, Vec<Cell>, Option<ExperimentError>), ExperimentError> {
    config.validate()?;
    let catalog = config.catalog()?;
    let table = config.profile_table()?;
    let personas = config.personas()?;
    config.guidance().validate(catalog.len())?;

    let jobs: Vec<(&Persona, u32)> = personas
        .iter()
        .flat_map(|p| (1..=config.repeats).map(move |r| (p, r)))
        .collect();
    let total = jobs.len();
    let results: Vec<Result<Cell, ExperimentError>> = jobs
        .par_iter()
        .map(|&(p, r)| run_cell(config, &catalog, &table, p, r))
        .collect();

    let mut cells = Vec::with_capacity(total);
    let mut first_err = None;
    for res in results {
        match res {
            Ok(c) => cells.push(c),
            Err(e) if first_err.is_none() => first_err = Some(e),
            Err(_) => {}
        }
    }
    let rows = cells.iter().map(|c| c.row.clone()).collect();
    let mut report = ExperimentReport::new(config.key, config.rounds, config.tau, config.gamma_override, rows);
    let err = first_err.map(|e| ExperimentError::Aborted {
        completed: cells.len(),
        total,
        cause: e.to_string(),
    });
    if let Some(e) = &err {
        report.failure = Some(e.to_string());
    }
    Ok((report, cells, err))
}

/// Runs the experiment and persists everything under `config.output_dir`:
/// `traces/*.jsonl`, `report.json`, `report.csv` and the effective
/// `config.toml`. On failure the finished cells are still written, with the
/// report's `failure` field set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let (report, cells, err) = run_cells(config)?;
    persist(&config.output_dir, config, &report, &cells)?;
    match err {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

fn persist(dir: &Path, config: &ExperimentConfig, report: &ExperimentReport, cells: &[Cell]) -> Result<(), ExperimentError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ExperimentError::Io { path, source }
    };
    let traces = dir.join("traces");
    std::fs::create_dir_all(&traces).map_err(io(&traces))?;
    for c in cells {
        write_trace(&dir.join(&c.row.trace_original), &c.original)?;
        write_trace(&dir.join(&c.row.trace_watermarked), &c.watermarked)?;
    }
    let p = dir.join("report.json");
    std::fs::write(&p, render(report, ReportFormat::Json)).map_err(io(&p))?;
    let p = dir.join("report.csv");
    std::fs::write(&p, render(report, ReportFormat::Csv)).map_err(io(&p))?;
    let p = dir.join("config.toml");
    std::fs::write(&p, config.to_toml()).map_err(io(&p))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_experiment_setup() {
        let c = ExperimentConfig::default();
        assert_eq!(c.key, 2025);
        assert_eq!(c.rounds, 50);
        assert_eq!(c.repeats, 2);
        assert_eq!(c.gamma_min, 0.5);
        assert_eq!(c.n_min, 3);
        assert_eq!(c.tau, 2.0);
        assert_eq!(c.profiles.len(), 6);
        assert_eq!(c.gamma_override, None);
    }

    #[test]
    fn config_roundtrip_is_byte_identical() {
        let mut c = ExperimentConfig {
            gamma_override: Some(4.0),
            kappa: f64::INFINITY,
            tau: 1.75,
            ..Default::default()
        };
        c.catalog_file = Some("data/catalog.json".into());
        for cfg in [ExperimentConfig::default(), c] {
            let text = cfg.to_toml();
            let back = ExperimentConfig::from_toml(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_toml(), text);
        }
    }

    #[test]
    fn partial_config_uses_defaults() {
        let c = ExperimentConfig::from_toml("seed = 9\ngamma_override = 4.0\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.gamma_override, Some(4.0));
        assert_eq!(c.rounds, 50);
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn seeds_are_separated() {
        let a = cell_seed(1, "Active + Calm", 1, true, "sampler");
        assert_ne!(a, cell_seed(1, "Active + Calm", 1, false, "sampler"));
        assert_ne!(a, cell_seed(1, "Active + Calm", 2, true, "sampler"));
        assert_ne!(a, cell_seed(1, "Active + Sad", 1, true, "sampler"));
        assert_ne!(a, cell_seed(2, "Active + Calm", 1, true, "sampler"));
        assert_ne!(a, cell_seed(1, "Active + Calm", 1, true, "noise"));
    }

    #[test]
    fn trace_names() {
        assert_eq!(trace_file_name("Inactive + Sad", 2, true), "inactive-sad-r2-watermarked.jsonl");
    }

    #[test]
    fn single_cell_report_shape() {
        let c = ExperimentConfig {
            repeats: 1,
            profiles: vec!["Active + Calm".into()],
            ..Default::default()
        };
        let (report, traces) = run_in_memory(&c).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.averages.len(), 1);
        assert_eq!(traces.len(), 1);
        assert_eq!(render(&report, ReportFormat::Csv).lines().count(), 3);
    }

    #[test]
    fn rejects_bad_config() {
        let c = ExperimentConfig {
            profiles: vec!["Bored + Calm".into()],
            ..Default::default()
        };
        assert!(run_in_memory(&c).is_err());
        let c = ExperimentConfig {
            rounds: 0,
            ..Default::default()
        };
        assert!(matches!(run_in_memory(&c), Err(ExperimentError::Config(_))));
    }
}
