//! Config-driven pipeline stages shared by the CLI commands.

use std::path::PathBuf;

use reqimpact_core::corpus::{validate, ValidationReport};
use reqimpact_core::dataset::{build_matrix, time_split, DatasetError, MatrixBuild, MatrixInputs};
use reqimpact_core::learn::{igr_rank, run_protocol, wrapper_select, EvalReport, IgrEntry, LearnError, Selection};
use reqimpact_core::linker::{link, release_boundaries, BoundaryOutcome, LinkError};
use reqimpact_core::metrics::{ClassTextTable, Family};
use reqimpact_core::stats::StatsError;
use reqimpact_core::textsim::ExactMatch;
use reqimpact_core::{Corpus, LinkOutcome};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::export::ExportError;
use crate::ingest::{load_corpus, IngestError};
use crate::matcher::RegexKeyMatcher;
use crate::reports::{CorpusSummary, SplitManifest};
use crate::tables::{load_class_texts, load_externals, ExternalsLoad};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("bad commit pattern: {0}")]
    Pattern(#[from] regex::Error),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Domain(String),
}

impl PipelineError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.into(), source }
    }

    /// 2 for usage, config and IO problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Io { .. } | PipelineError::Pattern(_) => 2,
            PipelineError::Ingest(e) if e.is_io() => 2,
            PipelineError::Export(ExportError::Io(_)) => 2,
            _ => 1,
        }
    }
}

/// Everything read from the input files.
pub struct Loaded {
    pub corpus: Corpus,
    pub validation: ValidationReport,
    pub externals: ExternalsLoad,
    pub class_texts: ClassTextTable,
}

impl Loaded {
    pub fn summary(&self, config_hash: &str) -> CorpusSummary {
        let mut warnings = self.validation.warnings.clone();
        warnings.extend(self.externals.warnings.iter().cloned());
        CorpusSummary {
            config_hash: config_hash.to_string(),
            project_key: self.corpus.project_key().to_string(),
            validation: self.validation.clone(),
            releases: self.corpus.releases().map(<[String]>::len),
            external_rows: self.externals.rows,
            external_entries: self.externals.table.len(),
            class_texts: self.class_texts.len(),
            warnings,
        }
    }
}

pub fn load(cfg: &RunConfig) -> Result<Loaded, PipelineError> {
    cfg.validate()?;
    let releases = cfg.inputs.releases.as_ref().map(|p| cfg.resolve(p));
    let corpus = load_corpus(
        &cfg.resolve(&cfg.inputs.commits),
        &cfg.resolve(&cfg.inputs.issues),
        releases.as_deref(),
        &cfg.project_key,
    )?;
    let externals = match &cfg.inputs.externals {
        Some(p) => load_externals(&cfg.resolve(p))?,
        None => ExternalsLoad::default(),
    };
    let class_texts = match &cfg.inputs.class_texts {
        Some(p) => load_class_texts(&cfg.resolve(p))?,
        None => ClassTextTable::default(),
    };
    Ok(Loaded {
        validation: validate(&corpus),
        corpus,
        externals,
        class_texts,
    })
}

pub struct Linked {
    pub outcome: LinkOutcome,
    /// Present when any linked requirement carries a release.
    pub boundaries: Option<BoundaryOutcome>,
}

pub fn link_corpus(cfg: &RunConfig, corpus: &Corpus) -> Result<Linked, PipelineError> {
    let matcher = RegexKeyMatcher::new(&cfg.link_config())?;
    let outcome = link(corpus, &cfg.link_config(), &matcher);
    let boundaries = if outcome.changes.iter().any(|c| c.requirement.release_id.is_some()) {
        Some(release_boundaries(corpus, &outcome.changes)?)
    } else {
        None
    };
    Ok(Linked { outcome, boundaries })
}

pub fn build(cfg: &RunConfig, loaded: &Loaded, linked: &Linked) -> Result<MatrixBuild, PipelineError> {
    let link_config = cfg.link_config();
    let inputs = MatrixInputs {
        corpus: &loaded.corpus,
        link_config: &link_config,
        changes: &linked.outcome.changes,
        boundaries: linked.boundaries.as_ref(),
        externals: &loaded.externals.table,
        class_texts: &loaded.class_texts,
        term_similarity: &ExactMatch,
    };
    let built = build_matrix(&inputs, &cfg.matrix_config()?);
    built.matrix.check_rectangular()?;
    built.matrix.check_chronological()?;
    Ok(built)
}

/// Loads, links and builds in one go.
pub fn matrix(cfg: &RunConfig) -> Result<MatrixBuild, PipelineError> {
    let loaded = load(cfg)?;
    let linked = link_corpus(cfg, &loaded.corpus)?;
    build(cfg, &loaded, &linked)
}

pub fn split_manifest(cfg: &RunConfig, built: &MatrixBuild) -> Result<SplitManifest, PipelineError> {
    let m = &built.matrix;
    let split = time_split(m, cfg.sampling.train_fraction)?;
    let mut keys: Vec<&str> = m.rows.iter().map(|r| r.requirement_key.as_str()).collect();
    keys.dedup();
    Ok(SplitManifest {
        config_hash: cfg.hash(),
        features: m.features.clone(),
        rows: m.len(),
        positives: m.positives(),
        requirements: keys.len(),
        train_fraction: cfg.sampling.train_fraction,
        train_rows: split.train.len(),
        test_rows: split.test.len(),
        boundary_key: split.boundary_key,
        empty_tlcc_rows: built.empty_tlcc_rows,
        missing_class_text_rows: built.missing_class_text_rows,
        missing_external_rows: built.missing_external_rows,
        future_inputs: built.audit.iter().map(|a| a.future_inputs()).sum(),
    })
}

pub fn evaluate(cfg: &RunConfig, built: &MatrixBuild) -> Result<EvalReport, PipelineError> {
    Ok(run_protocol(&cfg.learner_spec()?, &built.matrix, &cfg.sample_spec(), &cfg.protocol())?)
}

pub fn rank(cfg: &RunConfig, built: &MatrixBuild) -> Vec<IgrEntry> {
    igr_rank(&built.matrix, cfg.igr.bins)
}

pub fn select(cfg: &RunConfig, built: &MatrixBuild) -> Result<Selection, PipelineError> {
    Ok(wrapper_select(&cfg.learner_spec()?, &built.matrix, &cfg.selection_options())?)
}

pub fn family_codes(cfg: &RunConfig) -> Result<Vec<String>, PipelineError> {
    Ok(cfg.families()?.into_iter().map(Family::code).map(String::from).collect())
}
