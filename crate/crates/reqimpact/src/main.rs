//! `reqimpact` command-line entry point.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reqimpact::config::{Overrides, RunConfig};
use reqimpact::export::{format_value, write_arff, write_csv};
use reqimpact::pipeline::{self, PipelineError};
use reqimpact::reports::{
    write_json, EvalOutput, LinkReport, SelectionOutput, SplitManifest, StatsInput, StatsReport, TestResult, ALPHA,
};
use reqimpact::synth::{generate, SynthConfig};
use reqimpact_core::learn::IgrEntry;
use reqimpact_core::stats::{fisher_exact_2x2, kruskal_wallis};
use reqimpact_core::textsim::{preprocess, CorpusStats, ExactMatch, Technique};
use sha2::{Digest, Sha256};

#[derive(Debug, Parser)]
#[command(name = "reqimpact", version, about = "Predict which classes a new requirement will touch")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "reqimpact.toml")]
    config: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Metric families, e.g. `R2RS,TLCC,SQ`.
    #[arg(long, global = true, value_delimiter = ',')]
    families: Option<Vec<String>>,
    /// Similarity techniques for R2RS and R2C, e.g. `VSM,JSD`.
    #[arg(long, global = true, value_delimiter = ',')]
    technique: Option<Vec<String>>,
    /// R2RS distributions, e.g. `Max,Top5`.
    #[arg(long, global = true, value_delimiter = ',')]
    distribution: Option<Vec<String>>,
    /// Learner code: dt, rf, nb, bag, lr.
    #[arg(long, global = true)]
    learner: Option<String>,
    #[arg(long, global = true)]
    repeats: Option<usize>,
    #[arg(long, global = true, conflicts_with = "without_r2rs")]
    with_r2rs: bool,
    #[arg(long, global = true)]
    without_r2rs: bool,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate the inputs; writes corpus-summary.json.
    Ingest,
    /// Link commits to requirements; writes link-report.json.
    Link,
    /// Build the feature matrix; writes matrix.csv, matrix.arff and split.json.
    Matrix,
    /// Run the repeated undersampling protocol; writes eval-report.json.
    Eval,
    /// Rank features by information gain ratio; writes igr-rank.csv.
    Igr,
    /// Wrapper feature selection; writes selection.json.
    Select,
    /// Compare two evaluation reports; writes stats-report.json.
    Stats {
        report_a: PathBuf,
        report_b: PathBuf,
        /// Also run Fisher's exact test on the 2x2 table `a b c d`.
        #[arg(long, num_args = 4, value_names = ["A", "B", "C", "D"])]
        fisher: Option<Vec<u64>>,
    },
    /// Summarise the artifacts in the output directory into report.md.
    Report,
    /// Write a synthetic corpus with a planted vocabulary signal.
    Synth {
        /// Target directory; receives the inputs and a reqimpact.toml.
        dir: PathBuf,
        #[arg(long, default_value_t = 80)]
        requirements: usize,
        #[arg(long, default_value_t = 220)]
        classes: usize,
    },
    /// Print every technique's score for a pair of texts.
    Similarity { query: String, other: String },
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            families: self.families.clone(),
            techniques: self.technique.clone(),
            distributions: self.distribution.clone(),
            learner: self.learner.clone(),
            repeats: self.repeats,
            out: self.out.clone(),
            r2rs: match (self.with_r2rs, self.without_r2rs) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            },
        }
    }

    fn run_config(&self) -> Result<RunConfig, PipelineError> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }

    /// `eval-report.json`, or a `-with-r2rs`/`-without-r2rs` variant.
    fn eval_file_name(&self) -> &'static str {
        if self.with_r2rs {
            "eval-report-with-r2rs.json"
        } else if self.without_r2rs {
            "eval-report-without-r2rs.json"
        } else {
            "eval-report.json"
        }
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, PipelineError> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    Ok(dir)
}

fn save_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    write_json(path, value).map_err(|e| PipelineError::io(path, e))
}

fn save_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

fn cmd_ingest(g: &GlobalArgs) -> Result<(), PipelineError> {
    let cfg = g.run_config()?;
    let loaded = pipeline::load(&cfg)?;
    let summary = loaded.summary(&cfg.hash());
    let path = out_dir(&cfg)?.join("corpus-summary.json");
    save_json(&path, &summary)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} commits, {} requirements -> {}",
        summary.validation.commits,
        summary.validation.requirements,
        path.display()
    );
    Ok(())
}

fn cmd_link(g: &GlobalArgs) -> Result<(), PipelineError> {
    let cfg = g.run_config()?;
    let loaded = pipeline::load(&cfg)?;
    let linked = pipeline::link_corpus(&cfg, &loaded.corpus)?;
    let report = LinkReport::new(&cfg.hash(), &loaded.corpus, &linked.outcome, linked.boundaries.as_ref());
    let path = out_dir(&cfg)?.join("link-report.json");
    save_json(&path, &report)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}/{} requirements linked -> {}", report.linked, report.requirements, path.display());
    Ok(())
}

fn cmd_matrix(g: &GlobalArgs) -> Result<(), PipelineError> {
    let cfg = g.run_config()?;
    let hash = cfg.hash();
    let built = pipeline::matrix(&cfg)?;
    let dir = out_dir(&cfg)?;
    let csv_path = dir.join("matrix.csv");
    let file = fs::File::create(&csv_path).map_err(|e| PipelineError::io(&csv_path, e))?;
    write_csv(&built.matrix, Some(&hash), std::io::BufWriter::new(file))?;
    let arff_path = dir.join("matrix.arff");
    let mut arff = Vec::new();
    write_arff(&built.matrix, &[format!("config_hash {hash}")], &mut arff).map_err(|e| PipelineError::io(&arff_path, e))?;
    fs::write(&arff_path, arff).map_err(|e| PipelineError::io(&arff_path, e))?;
    let manifest: SplitManifest = pipeline::split_manifest(&cfg, &built)?;
    save_json(&dir.join("split.json"), &manifest)?;
    println!(
        "{} rows x {} features ({} impacted) -> {}",
        built.matrix.len(),
        built.matrix.features.len(),
        built.matrix.positives(),
        dir.display()
    );
    Ok(())
}

fn cmd_eval(g: &GlobalArgs) -> Result<(), PipelineError> {
    let cfg = g.run_config()?;
    let built = pipeline::matrix(&cfg)?;
    let report = pipeline::evaluate(&cfg, &built)?;
    let output = EvalOutput {
        config_hash: cfg.hash(),
        families: pipeline::family_codes(&cfg)?,
        report,
    };
    let path = out_dir(&cfg)?.join(g.eval_file_name());
    save_json(&path, &output)?;
    let m = &output.report.mean;
    println!(
        "{} x{}: precision {:.3} recall {:.3} F1 {:.3} -> {}",
        output.report.learner,
        output.report.per_sample.len(),
        m.precision,
        m.recall,
        m.f1,
        path.display()
    );
    Ok(())
}

fn igr_csv(hash: &str, ranking: &[IgrEntry]) -> String {
    let mut text = format!("# config_hash {hash}\nrank,feature,igr\n");
    for e in ranking {
        let _ = writeln!(text, "{},{},{}", e.rank, e.feature, format_value(Some(e.igr)));
    }
    text
}

fn cmd_igr(g: &GlobalArgs) -> Result<(), PipelineError> {
    let cfg = g.run_config()?;
    let built = pipeline::matrix(&cfg)?;
    let ranking = pipeline::rank(&cfg, &built);
    let path = out_dir(&cfg)?.join("igr-rank.csv");
    save_text(&path, &igr_csv(&cfg.hash(), &ranking))?;
    if let Some(top) = ranking.first() {
        println!("top feature {} (IGR {:.4}) -> {}", top.feature, top.igr, path.display());
    }
    Ok(())
}

fn cmd_select(g: &GlobalArgs) -> Result<(), PipelineError> {
    let cfg = g.run_config()?;
    let built = pipeline::matrix(&cfg)?;
    let selection = pipeline::select(&cfg, &built)?;
    let path = out_dir(&cfg)?.join("selection.json");
    let output = SelectionOutput {
        config_hash: cfg.hash(),
        selection,
    };
    save_json(&path, &output)?;
    println!(
        "selected {} features (F1 {:.3}) -> {}",
        output.selection.subset.len(),
        output.selection.score,
        path.display()
    );
    Ok(())
}

fn read_eval(path: &Path) -> Result<EvalOutput, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
}

fn cmd_stats(g: &GlobalArgs, a: &Path, b: &Path, fisher: Option<&[u64]>) -> Result<(), PipelineError> {
    let reports = [read_eval(a)?, read_eval(b)?];
    let groups: Vec<Vec<f64>> = reports.iter().map(|r| r.report.per_sample.iter().map(|s| s.f1).collect()).collect();
    let kw = kruskal_wallis(&groups)?;
    let mut notes = Vec::new();
    if kw.degenerate {
        notes.push("all F1 values are equal".to_string());
    }
    if kw.small_sample {
        notes.push("a group has fewer than 5 samples; the chi-square approximation is rough".to_string());
    }
    let mut tests = vec![TestResult {
        test: "kruskal-wallis".into(),
        statistic: Some(kw.h),
        df: Some(kw.df),
        p: kw.p,
        alpha: ALPHA,
        significant: kw.p < ALPHA,
        notes,
    }];
    if let Some(&[fa, fb, fc, fd]) = fisher {
        let p = fisher_exact_2x2(fa, fb, fc, fd)?;
        tests.push(TestResult {
            test: "fisher-exact-2x2".into(),
            statistic: None,
            df: None,
            p,
            alpha: ALPHA,
            significant: p < ALPHA,
            notes: vec![format!("table [[{fa},{fb}],[{fc},{fd}]]")],
        });
    }
    let mut hasher = Sha256::new();
    for r in &reports {
        hasher.update(r.config_hash.as_bytes());
        hasher.update(b"\n");
    }
    let report = StatsReport {
        config_hash: hex::encode(hasher.finalize()),
        inputs: [a, b]
            .iter()
            .zip(&reports)
            .map(|(p, r)| StatsInput {
                path: p.display().to_string(),
                config_hash: Some(r.config_hash.clone()),
                learner: r.report.learner.clone(),
                mean_f1: r.report.mean.f1,
            })
            .collect(),
        tests,
    };
    let dir = g.out.clone().unwrap_or_else(|| a.parent().map(Path::to_path_buf).unwrap_or_default());
    fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    let path = dir.join("stats-report.json");
    save_json(&path, &report)?;
    println!("Kruskal-Wallis H {:.4}, p {:.4} -> {}", kw.h, kw.p, path.display());
    Ok(())
}

fn read_optional<T: serde::de::DeserializeOwned>(path: &Path) -> Option<T> {
    serde_json::from_str(&fs::read_to_string(path).ok()?).ok()
}

fn render_report(dir: &Path) -> Option<String> {
    let mut md = String::from("# reqimpact report\n");
    let mut any = false;
    if let Some(link) = read_optional::<LinkReport>(&dir.join("link-report.json")) {
        any = true;
        let _ = write!(
            md,
            "\n## Linking\n\nConfig `{}`. {} of {} requirements linked; {} of {} commits reference a requirement.\n",
            link.config_hash, link.linked, link.requirements, link.linked_commits, link.commits
        );
    }
    if let Some(split) = read_optional::<SplitManifest>(&dir.join("split.json")) {
        any = true;
        let _ = write!(
            md,
            "\n## Matrix\n\n{} rows ({} impacted) over {} requirements and {} features. Train {} / test {} rows, test starts at {}.\n",
            split.rows,
            split.positives,
            split.requirements,
            split.features.len(),
            split.train_rows,
            split.test_rows,
            split.boundary_key
        );
    }
    let mut evals: Vec<PathBuf> = fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("eval-report") && n.ends_with(".json"))
        })
        .collect();
    evals.sort();
    let evals: Vec<(String, EvalOutput)> = evals
        .iter()
        .filter_map(|p| Some((p.file_name()?.to_string_lossy().into_owned(), read_optional(p)?)))
        .collect();
    if !evals.is_empty() {
        any = true;
        md.push_str("\n## Evaluation\n\n| report | learner | families | samples | precision | recall | F1 (sd) |\n|---|---|---|---|---|---|---|\n");
        for (name, e) in &evals {
            let r = &e.report;
            let _ = writeln!(
                md,
                "| {name} | {} | {} | {} | {:.3} | {:.3} | {:.3} ({:.3}) |",
                r.learner,
                e.families.join(" "),
                r.per_sample.len(),
                r.mean.precision,
                r.mean.recall,
                r.mean.f1,
                r.stddev.f1
            );
        }
    }
    if let Ok(text) = fs::read_to_string(dir.join("igr-rank.csv")) {
        any = true;
        md.push_str("\n## Top features by IGR\n\n| rank | feature | IGR |\n|---|---|---|\n");
        for line in text.lines().filter(|l| !l.starts_with('#')).skip(1).take(10) {
            let _ = writeln!(md, "| {} |", line.replace(',', " | "));
        }
    }
    if let Some(sel) = read_optional::<SelectionOutput>(&dir.join("selection.json")) {
        any = true;
        let _ = write!(
            md,
            "\n## Selection\n\n{} picked {} (mean F1 {:.3}).\n",
            sel.selection.learner,
            sel.selection.subset.join(", "),
            sel.selection.score
        );
    }
    if let Some(stats) = read_optional::<StatsReport>(&dir.join("stats-report.json")) {
        any = true;
        md.push_str("\n## Statistics\n\n| test | statistic | p | significant at 0.05 |\n|---|---|---|---|\n");
        for t in &stats.tests {
            let stat = t.statistic.map(|s| format!("{s:.4}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(md, "| {} | {stat} | {:.4} | {} |", t.test, t.p, if t.significant { "yes" } else { "no" });
        }
    }
    any.then_some(md)
}

fn cmd_report(g: &GlobalArgs) -> Result<(), PipelineError> {
    let dir = match &g.out {
        Some(d) => d.clone(),
        None => g.run_config()?.output_dir(),
    };
    let md = render_report(&dir).ok_or_else(|| PipelineError::Domain(format!("no artifacts found in {}", dir.display())))?;
    let path = dir.join("report.md");
    save_text(&path, &md)?;
    println!("-> {}", path.display());
    Ok(())
}

fn cmd_synth(g: &GlobalArgs, dir: &Path, requirements: usize, classes: usize) -> Result<(), PipelineError> {
    let defaults = SynthConfig::default();
    let cfg = SynthConfig {
        requirements,
        classes,
        active_classes: defaults.active_classes.min(classes),
        seed: g.seed.unwrap_or(defaults.seed),
        ..defaults
    };
    generate(&cfg).write_to(dir).map_err(|e| PipelineError::io(dir, e))?;
    println!("synthetic corpus -> {}", dir.join("reqimpact.toml").display());
    Ok(())
}

fn cmd_similarity(query: &str, other: &str) {
    let q = preprocess(query, true);
    let o = preprocess(other, true);
    let stats = CorpusStats::from_documents([&q, &o]);
    for t in Technique::ALL {
        println!("{}\t{:.6}", t.code(), t.score(&q, &o, &stats, &ExactMatch));
    }
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let g = &cli.global;
    match &cli.command {
        Command::Ingest => cmd_ingest(g),
        Command::Link => cmd_link(g),
        Command::Matrix => cmd_matrix(g),
        Command::Eval => cmd_eval(g),
        Command::Igr => cmd_igr(g),
        Command::Select => cmd_select(g),
        Command::Stats { report_a, report_b, fisher } => cmd_stats(g, report_a, report_b, fisher.as_deref()),
        Command::Report => cmd_report(g),
        Command::Synth { dir, requirements, classes } => cmd_synth(g, dir, *requirements, *classes),
        Command::Similarity { query, other } => {
            cmd_similarity(query, other);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
