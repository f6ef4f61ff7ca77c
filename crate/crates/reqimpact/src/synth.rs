//! Seeded generator of synthetic repositories with a planted vocabulary
//! signal: every active class owns a handful of made-up words, and each
//! new-feature requirement that touches the class is written mostly in
//! those words. A task requirement in the same words opens each active
//! class's history. Inactive classes are never touched by requirements.
//! External metrics are pure noise.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use reqimpact_core::metrics::{ClassTextTable, ExternalMetricsTable, Family};
use reqimpact_core::textsim::preprocess;
use reqimpact_core::{ChangeKind, Commit, Corpus, CorpusError, FileChange, Metric, Requirement, RequirementKind, Timestamp};

use crate::ingest::{write_commit_log, write_issues, write_releases};
use crate::tables::{write_class_texts, ClassTextRecord};

const FILLER: [&str; 24] = [
    "support", "allow", "option", "user", "improve", "handling", "value", "request", "output", "input", "format", "enable",
    "custom", "setting", "display", "export", "report", "default", "provide", "extend", "simple", "common", "better", "quick",
];
const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 6] = ["", "", "r", "n", "l", "x"];
const DAY: i64 = 86_400;
/// 2015-01-01T00:00:00Z.
const EPOCH: i64 = 1_420_070_400;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub project_key: String,
    pub requirements: usize,
    pub classes: usize,
    /// Classes that requirements touch. Each one starts with a task
    /// requirement written in its vocabulary.
    pub active_classes: usize,
    pub vocab_per_class: usize,
    /// Extra planted words per requirement, drawn with replacement.
    pub planted_repeats: usize,
    pub filler_per_requirement: usize,
    /// Chance a requirement gets a second, follow-up commit.
    pub follow_up_rate: f64,
    pub bugs: usize,
    pub noise_commits: usize,
    pub releases: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            project_key: "SYN".into(),
            requirements: 80,
            classes: 220,
            active_classes: 30,
            vocab_per_class: 4,
            planted_repeats: 2,
            filler_per_requirement: 1,
            follow_up_rate: 0.3,
            bugs: 8,
            noise_commits: 40,
            releases: 4,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalRow {
    pub release_id: String,
    pub class_path: String,
    pub metric: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub project_key: String,
    pub commits: Vec<Commit>,
    pub requirements: Vec<Requirement>,
    pub releases: Vec<String>,
    pub externals: Vec<ExternalRow>,
    pub class_texts: Vec<ClassTextRecord>,
    /// Planted words per active class path.
    pub planted: BTreeMap<String, Vec<String>>,
}

/// Distinct pronounceable words whose stems are also distinct and unlike
/// the filler words.
fn make_words(rng: &mut ChaCha8Rng, count: usize) -> Vec<String> {
    let mut stems: BTreeSet<String> = FILLER.iter().flat_map(|w| preprocess(w, false).tokens().to_vec()).collect();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).expect("non-empty"));
            w.push_str(VOWELS.choose(rng).expect("non-empty"));
        }
        w.push_str(CODAS.choose(rng).expect("non-empty"));
        let toks = preprocess(&w, false);
        if toks.len() != 1 || !stems.insert(toks.tokens()[0].clone()) {
            continue;
        }
        out.push(w);
    }
    out
}

fn capitalise(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

struct Timeline {
    next: i64,
    counter: usize,
    seed: u64,
}

impl Timeline {
    fn commit(&mut self, parent: &mut Option<String>, message: String, files: Vec<FileChange>) -> Commit {
        self.counter += 1;
        self.next += 3_600;
        let mut id = hex::encode(Sha256::digest(format!("{}:{}", self.seed, self.counter)));
        id.truncate(40);
        let c = Commit {
            id: id.clone(),
            parent_ids: parent.iter().cloned().collect(),
            timestamp: Timestamp(self.next),
            message,
            file_changes: files,
        };
        *parent = Some(id);
        c
    }
}

fn modified(path: &str) -> Vec<FileChange> {
    vec![FileChange {
        path: path.to_string(),
        kind: ChangeKind::Modified,
    }]
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let active = cfg.active_classes.clamp(1, cfg.classes.max(1));
    let words = make_words(&mut rng, cfg.classes * 2 + active * cfg.vocab_per_class);
    let (name_words, vocab_words) = words.split_at(cfg.classes * 2);
    let paths: Vec<String> = (0..cfg.classes)
        .map(|i| {
            format!(
                "src/main/java/org/syn/p{}/{}{}.java",
                i % 7,
                capitalise(&name_words[2 * i]),
                capitalise(&name_words[2 * i + 1])
            )
        })
        .collect();
    let planted: BTreeMap<String, Vec<String>> = (0..active)
        .map(|i| (paths[i].clone(), vocab_words[i * cfg.vocab_per_class..(i + 1) * cfg.vocab_per_class].to_vec()))
        .collect();

    // Classes outside the first 90% exist from the root commit; the rest
    // appear later, and a few early inactive ones are deleted.
    let late_start = active.max(cfg.classes * 9 / 10);
    let late: Vec<usize> = (late_start..cfg.classes).collect();
    let deletable: Vec<usize> = (active..late_start).take(3).collect();

    let releases: Vec<String> = (1..=cfg.releases.max(1)).map(|r| format!("{r}.0")).collect();
    let mut timeline = Timeline {
        next: EPOCH,
        counter: 0,
        seed: cfg.seed,
    };
    let mut parent = None;
    let mut commits = vec![timeline.commit(
        &mut parent,
        "initial import".into(),
        (0..late_start)
            .map(|i| FileChange {
                path: paths[i].clone(),
                kind: ChangeKind::Added,
            })
            .chain([FileChange {
                path: "README.md".into(),
                kind: ChangeKind::Added,
            }])
            .collect(),
    )];

    // Interleave features, bugs and noise in one shuffled schedule, keeping
    // features in key order.
    #[derive(Clone, Copy)]
    enum Event {
        Feature,
        Bug,
        Noise,
        Create(usize),
        Delete(usize),
    }
    let mut tail: Vec<Event> = std::iter::repeat_n(Event::Bug, cfg.bugs)
        .chain(std::iter::repeat_n(Event::Noise, cfg.noise_commits))
        .chain(late.iter().map(|&i| Event::Create(i)))
        .chain(deletable.iter().map(|&i| Event::Delete(i)))
        .collect();
    tail.shuffle(&mut rng);
    let total = cfg.requirements + tail.len();
    let mut schedule: Vec<Event> = Vec::with_capacity(total);
    let mut tail_iter = tail.into_iter();
    for k in 0..cfg.requirements {
        schedule.push(Event::Feature);
        let quota = (k + 1) * (total - cfg.requirements) / cfg.requirements.max(1);
        while schedule.len() < k + 1 + quota {
            match tail_iter.next() {
                Some(e) => schedule.push(e),
                None => break,
            }
        }
    }
    schedule.extend(tail_iter);

    let mut requirements = Vec::new();
    let mut feature_no = 0;
    let mut key_no = 0;
    let mut live: BTreeSet<usize> = (0..late_start).collect();
    for (i, path) in paths.iter().enumerate().take(active) {
        key_no += 1;
        let key = format!("{}-{key_no}", cfg.project_key);
        let mut body: Vec<String> = planted[path].clone();
        body.extend((0..cfg.filler_per_requirement).map(|_| FILLER.choose(&mut rng).expect("filler").to_string()));
        body.shuffle(&mut rng);
        requirements.push(Requirement {
            key: key.clone(),
            kind: RequirementKind::Other,
            title: format!("tidy {}", body[0]),
            description: body[1..].join(" "),
            created: Timestamp(timeline.next + 60),
            release_id: None,
        });
        timeline.next += DAY / 4;
        commits.push(timeline.commit(&mut parent, format!("{key} tidy {}", name_words[2 * i]), modified(path)));
    }
    let class_of_feature: Vec<usize> = (0..cfg.requirements).map(|_| rng.random_range(0..active)).collect();
    for event in schedule {
        match event {
            Event::Feature => {
                let class = class_of_feature[feature_no];
                let release = &releases[feature_no * releases.len() / cfg.requirements.max(1)];
                feature_no += 1;
                key_no += 1;
                let key = format!("{}-{key_no}", cfg.project_key);
                let vocab = &planted[&paths[class]];
                let mut body: Vec<String> = vocab.clone();
                body.extend((0..cfg.planted_repeats).map(|_| vocab.choose(&mut rng).expect("vocab").clone()));
                body.extend((0..cfg.filler_per_requirement).map(|_| FILLER.choose(&mut rng).expect("filler").to_string()));
                body.shuffle(&mut rng);
                let split = body.len().min(3);
                requirements.push(Requirement {
                    key: key.clone(),
                    kind: RequirementKind::NewFeature,
                    title: body[..split].join(" "),
                    description: body[split..].join(" "),
                    created: Timestamp(timeline.next + 60),
                    release_id: Some(release.clone()),
                });
                timeline.next += DAY;
                commits.push(timeline.commit(&mut parent, format!("{key}: {}", body[..split].join(" ")), modified(&paths[class])));
                if rng.random_bool(cfg.follow_up_rate.clamp(0.0, 1.0)) {
                    commits.push(timeline.commit(&mut parent, format!("follow-up for {key}"), modified(&paths[class])));
                }
            }
            Event::Bug => {
                key_no += 1;
                let key = format!("{}-{key_no}", cfg.project_key);
                let path = paths[rng.random_range(0..active)].as_str();
                let text: Vec<&str> = (0..4).map(|_| *FILLER.choose(&mut rng).expect("filler")).collect();
                requirements.push(Requirement {
                    key: key.clone(),
                    kind: RequirementKind::Bug,
                    title: format!("crash in {}", text[0]),
                    description: text[1..].join(" "),
                    created: Timestamp(timeline.next + 60),
                    release_id: None,
                });
                timeline.next += DAY / 2;
                commits.push(timeline.commit(&mut parent, format!("Fix {key}"), modified(path)));
            }
            Event::Noise => {
                let pool: Vec<usize> = live.iter().copied().collect();
                let n = rng.random_range(1..=3).min(pool.len());
                let files = pool
                    .choose_multiple(&mut rng, n)
                    .map(|&i| FileChange {
                        path: paths[i].clone(),
                        kind: ChangeKind::Modified,
                    })
                    .collect();
                timeline.next += DAY / 3;
                commits.push(timeline.commit(&mut parent, "cleanup and formatting".into(), files));
            }
            Event::Create(i) => {
                live.insert(i);
                timeline.next += DAY / 3;
                commits.push(timeline.commit(
                    &mut parent,
                    "add helper".into(),
                    vec![FileChange {
                        path: paths[i].clone(),
                        kind: ChangeKind::Added,
                    }],
                ));
            }
            Event::Delete(i) => {
                live.remove(&i);
                timeline.next += DAY / 3;
                commits.push(timeline.commit(
                    &mut parent,
                    "remove dead code".into(),
                    vec![FileChange {
                        path: paths[i].clone(),
                        kind: ChangeKind::Deleted,
                    }],
                ));
            }
        }
    }

    let external_metrics: Vec<Metric> = Metric::all().filter(|m| matches!(m.family(), Family::Sq | Family::Ckjm)).collect();
    let mut externals = Vec::new();
    for release in &releases {
        for path in &paths {
            for m in &external_metrics {
                externals.push(ExternalRow {
                    release_id: release.clone(),
                    class_path: path.clone(),
                    metric: m.name(),
                    value: f64::from(rng.random_range(0..200u32)),
                });
            }
        }
    }

    let class_texts = paths
        .iter()
        .enumerate()
        .map(|(i, path)| {
            let name = format!("{}{}", capitalise(&name_words[2 * i]), capitalise(&name_words[2 * i + 1]));
            let body: String = match planted.get(path) {
                Some(v) => v.iter().map(|w| format!("    void {w}{}() {{}}\n", capitalise(&name_words[2 * i]))).collect(),
                None => format!("    int {}Count;\n", name_words[2 * i + 1]),
            };
            ClassTextRecord {
                release_id: None,
                path: path.clone(),
                text: format!("public class {name} {{\n{body}}}\n"),
            }
        })
        .collect();

    SynthCorpus {
        project_key: cfg.project_key.clone(),
        commits,
        requirements,
        releases,
        externals,
        class_texts,
        planted,
    }
}

impl SynthCorpus {
    pub fn corpus(&self) -> Result<Corpus, CorpusError> {
        Corpus::new(
            self.project_key.clone(),
            self.commits.clone(),
            self.requirements.clone(),
            Some(self.releases.clone()),
        )
    }

    pub fn externals_table(&self) -> ExternalMetricsTable {
        let mut t = ExternalMetricsTable::default();
        for r in &self.externals {
            t.insert(&r.release_id, &r.class_path, r.metric, r.value).expect("generated metric names are valid");
        }
        t
    }

    pub fn class_text_table(&self) -> ClassTextTable {
        let mut t = ClassTextTable::default();
        for r in &self.class_texts {
            t.insert(r.release_id.as_deref(), &r.path, r.text.clone());
        }
        t
    }

    /// Writes every input file plus a `reqimpact.toml` pointing at them.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        write_commit_log(&self.commits, io::BufWriter::new(fs::File::create(dir.join("commits.jsonl"))?))?;
        write_issues(&self.requirements, io::BufWriter::new(fs::File::create(dir.join("issues.jsonl"))?))?;
        write_releases(&self.releases, fs::File::create(dir.join("releases.txt"))?)?;
        write_class_texts(&self.class_texts, io::BufWriter::new(fs::File::create(dir.join("class-texts.jsonl"))?))?;
        let mut w = csv::Writer::from_writer(fs::File::create(dir.join("externals.csv"))?);
        w.write_record(["release_id", "class_path", "metric", "value"])?;
        for r in &self.externals {
            w.write_record([r.release_id.as_str(), r.class_path.as_str(), r.metric, &r.value.to_string()])?;
        }
        w.flush()?;
        let mut cfg = fs::File::create(dir.join("reqimpact.toml"))?;
        writeln!(
            cfg,
            "project_key = \"{}\"\nseed = 0\n\n[inputs]\ncommits = \"commits.jsonl\"\nissues = \"issues.jsonl\"\nreleases = \"releases.txt\"\nexternals = \"externals.csv\"\nclass_texts = \"class-texts.jsonl\"\n\n[output]\ndir = \"out\"\n\n[metrics]\nfamilies = [\"R2RS\", \"SQ\", \"CKJM\"]",
            self.project_key
        )?;
        Ok(())
    }
}
