//! Randomised invariants, 1000 cases each.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reqimpact_core::dataset::{build_matrix, time_split, undersample, MatrixBuild, MatrixConfig, MatrixInputs, TlccGranularity};
use reqimpact_core::learn::{igr_values, pca_fit};
use reqimpact_core::linker::{link, release_boundaries, KeyScanner};
use reqimpact_core::metrics::{distribution_score, tlcc_lin, tlcc_log, tlcc_scp, ClassTextTable, Distribution, ExternalMetricsTable};
use reqimpact_core::stats::{fisher_exact_2x2, kruskal_wallis, StatsError};
use reqimpact_core::textsim::{max_weight_assignment, CorpusStats, ExactMatch, Technique, TokenStream};
use reqimpact_core::{ChangeKind, Commit, Corpus, FeatureMatrix, FeatureRow, FileChange, LinkConfig, Requirement, RequirementKind, Timestamp};

const CASES: u32 = 1000;
const WORDS: [&str; 10] = ["cach", "pars", "render", "queue", "token", "index", "merg", "lock", "stream", "schema"];

fn tokens() -> impl Strategy<Value = TokenStream> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()), 0..10).prop_map(TokenStream::from_terms)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Two-sided Fisher p by summing every table at most as likely as the
/// observed one, with the usual relative tolerance.
fn fisher_oracle(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (r1, c1, n) = (a + b, a + c, a + b + c + d);
    let prob = |x: u64| binom(c1, x) * binom(n - c1, r1 - x) / binom(n, r1);
    let lo = r1.saturating_sub(n - c1);
    let hi = r1.min(c1);
    let observed = prob(a);
    (lo..=hi).map(prob).filter(|&p| p <= observed * (1.0 + 1e-7)).sum::<f64>().min(1.0)
}

fn matrix_from(values: &[Vec<Option<f64>>], labels: &[bool], keys: &[usize]) -> FeatureMatrix {
    FeatureMatrix {
        features: (0..values.first().map_or(0, Vec::len)).map(|i| format!("f{i}")).collect(),
        rows: values
            .iter()
            .zip(labels)
            .zip(keys)
            .enumerate()
            .map(|(i, ((v, &l), &k))| FeatureRow {
                requirement_key: format!("R-{k}"),
                class_path: format!("C{i}.java"),
                sequence: k,
                values: v.clone(),
                impacted: l,
            })
            .collect(),
    }
}

struct RandomProject {
    corpus: Corpus,
    stable_classes: Vec<String>,
}

/// A small random history: features, bugs and tasks linked by message,
/// follow-up commits that reference earlier keys, class creation and
/// deletion, and two releases.
fn random_project(seed: u64) -> RandomProject {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = rng.random_range(3..=7);
    let stable: Vec<String> = (0..n_classes).map(|i| format!("src/C{i}.java")).collect();
    let mut live: Vec<String> = stable.clone();
    let mut commits = vec![Commit {
        id: "c0".into(),
        parent_ids: vec![],
        timestamp: Timestamp(1000),
        message: "import".into(),
        file_changes: stable.iter().map(|p| FileChange { path: p.clone(), kind: ChangeKind::Added }).collect(),
    }];
    let mut reqs = Vec::new();
    let mut ts = 1000;
    let n_reqs = rng.random_range(2..=8);
    let mut next_extra = 0;
    let push = |commits: &mut Vec<Commit>, ts: &mut i64, message: String, files: Vec<FileChange>| {
        *ts += 100;
        let id = format!("c{}", commits.len());
        let parent = commits.last().map(|c| c.id.clone());
        commits.push(Commit {
            id,
            parent_ids: parent.into_iter().collect(),
            timestamp: Timestamp(*ts),
            message,
            file_changes: files,
        });
    };
    for k in 1..=n_reqs {
        let key = format!("P-{k}");
        let kind = *[RequirementKind::NewFeature, RequirementKind::NewFeature, RequirementKind::NewFeature, RequirementKind::Bug, RequirementKind::Other]
            .choose(&mut rng)
            .unwrap();
        let text: Vec<&str> = (0..rng.random_range(1..=6)).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
        reqs.push(Requirement {
            key: key.clone(),
            kind,
            title: text.join(" "),
            description: String::new(),
            created: Timestamp(ts + 50),
            release_id: if k * 2 <= n_reqs { Some("1.0".into()) } else { Some("2.0".into()) },
        });
        if rng.random_bool(0.2) {
            let path = format!("src/X{next_extra}.java");
            next_extra += 1;
            live.push(path.clone());
            push(&mut commits, &mut ts, "add class".into(), vec![FileChange { path, kind: ChangeKind::Added }]);
        }
        if rng.random_bool(0.15) && live.len() > stable.len() {
            let path = live.pop().unwrap();
            push(&mut commits, &mut ts, "drop class".into(), vec![FileChange { path, kind: ChangeKind::Deleted }]);
        }
        for _ in 0..rng.random_range(1..=2) {
            let n = rng.random_range(1..=live.len().min(3));
            let files = live
                .choose_multiple(&mut rng, n)
                .map(|p| FileChange { path: p.clone(), kind: ChangeKind::Modified })
                .collect();
            let mut msg = format!("{key} work");
            if k > 1 && rng.random_bool(0.3) {
                msg.push_str(&format!(" also P-{}", rng.random_range(1..k)));
            }
            push(&mut commits, &mut ts, msg, files);
        }
    }
    RandomProject {
        corpus: Corpus::new("P", commits, reqs, Some(vec!["1.0".into(), "2.0".into()])).unwrap(),
        stable_classes: stable,
    }
}

fn build(corpus: &Corpus, granularity: TlccGranularity) -> MatrixBuild {
    let cfg = LinkConfig::new("P");
    let linked = link(corpus, &cfg, &KeyScanner::new("P"));
    let boundaries = release_boundaries(corpus, &linked.changes).ok();
    build_matrix(
        &MatrixInputs {
            corpus,
            link_config: &cfg,
            changes: &linked.changes,
            boundaries: boundaries.as_ref(),
            externals: &ExternalMetricsTable::default(),
            class_texts: &ClassTextTable::default(),
            term_similarity: &ExactMatch,
        },
        &MatrixConfig {
            tlcc_granularity: granularity,
            ..MatrixConfig::default()
        },
    )
}

/// Rewrites everything dated after `q_pos` except the query's own
/// commits: later requirement texts change and later commits touch other
/// stable classes.
fn perturb_future(project: &RandomProject, query: &str, q_pos: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = &project.corpus;
    let later_keys: BTreeSet<String> = c
        .requirements()
        .iter()
        .filter(|r| {
            let first = c
                .commits()
                .iter()
                .position(|cm| KeyScannerCheck::mentions(&cm.message, &r.key));
            first.is_none_or(|p| p > q_pos)
        })
        .map(|r| r.key.clone())
        .collect();
    let reqs = c
        .requirements()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if later_keys.contains(&r.key) {
                r.title = (0..4).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ");
            }
            r
        })
        .collect();
    let commits = c
        .commits()
        .iter()
        .enumerate()
        .map(|(i, cm)| {
            let mut cm = cm.clone();
            let modifies = cm.file_changes.iter().all(|f| f.kind == ChangeKind::Modified);
            if i > q_pos && modifies && !KeyScannerCheck::mentions(&cm.message, query) {
                let n = rng.random_range(1..=project.stable_classes.len().min(3));
                cm.file_changes = project
                    .stable_classes
                    .choose_multiple(&mut rng, n)
                    .map(|p| FileChange { path: p.clone(), kind: ChangeKind::Modified })
                    .collect();
            }
            cm
        })
        .collect();
    Corpus::new("P", commits, reqs, c.releases().map(<[String]>::to_vec)).unwrap()
}

struct KeyScannerCheck;

impl KeyScannerCheck {
    fn mentions(message: &str, key: &str) -> bool {
        use reqimpact_core::linker::KeyMatcher;
        KeyScanner::new("P").requirement_keys(message).iter().any(|k| k == key)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn similarity_in_unit_range_with_identity(a in tokens(), b in tokens(), c in tokens()) {
        let stats = CorpusStats::from_documents([&a, &b, &c]);
        for t in Technique::ALL {
            let s = t.score(&a, &b, &stats, &ExactMatch);
            prop_assert!((0.0..=1.0).contains(&s), "{t:?} {s}");
            if !a.is_empty() {
                let own = t.score(&a, &a, &stats, &ExactMatch);
                let all_common = a.tokens().iter().all(|w| stats.idf(w) == 0.0);
                if !(t == Technique::Vsm && all_common) {
                    prop_assert_eq!(own, 1.0, "{:?}", t);
                }
            }
        }
        for t in [Technique::Vsm, Technique::Jsd, Technique::Opc] {
            let ab = t.score(&a, &b, &stats, &ExactMatch);
            let ba = t.score(&b, &a, &stats, &ExactMatch);
            prop_assert!((ab - ba).abs() < 1e-12, "{t:?} asymmetric");
        }
    }

    #[test]
    fn assignment_matches_brute_force(rows in 1usize..=4, cols in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| f64::from(rng.random_range(0..6u8)) / 5.0).collect()).collect();
        let (total, pick) = max_weight_assignment(&w);
        let (small, large) = (rows.min(cols), rows.max(cols));
        let best = permutations(large)
            .iter()
            .map(|p| (0..small).map(|i| if rows <= cols { w[i][p[i]] } else { w[p[i]][i] }).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((total - best).abs() < 1e-9);
        let used: Vec<usize> = pick.iter().flatten().copied().collect();
        prop_assert_eq!(used.len(), small);
        prop_assert_eq!(used.iter().collect::<BTreeSet<_>>().len(), small);
        let picked: f64 = pick.iter().enumerate().filter_map(|(r, c)| c.map(|c| w[r][c])).sum();
        prop_assert!((picked - total).abs() < 1e-9);
    }

    #[test]
    fn distributions_are_ordered(scores in prop::collection::vec(0.0f64..=1.0, 1..20)) {
        let max = distribution_score(&scores, Distribution::Max);
        let top5 = distribution_score(&scores, Distribution::Top5);
        let av = distribution_score(&scores, Distribution::Av);
        prop_assert!(max >= top5 - 1e-12 && top5 >= av - 1e-12);
        if scores.len() <= 5 {
            prop_assert!((top5 - av).abs() < 1e-12);
        }
    }

    #[test]
    fn tlcc_bounds_and_monotonicity(flags in prop::collection::vec(any::<bool>(), 1..60), at in any::<prop::sample::Index>()) {
        let scp = tlcc_scp(&flags).unwrap();
        let lin = tlcc_lin(&flags).unwrap();
        let log = tlcc_log(&flags).unwrap();
        prop_assert!((0.0..=1.0).contains(&scp));
        prop_assert!(lin <= scp + 1e-12 && lin >= 0.0 && log >= 0.0);
        let i = at.index(flags.len());
        if !flags[i] {
            let mut more = flags.clone();
            more[i] = true;
            prop_assert!(tlcc_scp(&more).unwrap() > scp);
            prop_assert!(tlcc_lin(&more).unwrap() > lin);
            prop_assert!(tlcc_log(&more).unwrap() >= log);
        }
    }

    #[test]
    fn igr_bounded_and_row_order_free(
        cells in prop::collection::vec((prop::option::weighted(0.9, 0u8..6), any::<bool>()), 1..30),
        bins in 1usize..=6,
        seed in any::<u64>(),
    ) {
        let values: Vec<Option<f64>> = cells.iter().map(|(v, _)| v.map(f64::from)).collect();
        let labels: Vec<bool> = cells.iter().map(|(_, l)| *l).collect();
        let g = igr_values(&values, &labels, bins);
        prop_assert!((0.0..=1.0).contains(&g));
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let v2: Vec<Option<f64>> = order.iter().map(|&i| values[i]).collect();
        let l2: Vec<bool> = order.iter().map(|&i| labels[i]).collect();
        prop_assert!((igr_values(&v2, &l2, bins) - g).abs() < 1e-12);
    }

    #[test]
    fn undersample_balanced_and_deterministic(labels in prop::collection::vec(any::<bool>(), 1..60), seed in any::<u64>()) {
        let values: Vec<Vec<Option<f64>>> = (0..labels.len()).map(|i| vec![Some(i as f64)]).collect();
        let keys: Vec<usize> = (0..labels.len()).collect();
        let m = matrix_from(&values, &labels, &keys);
        let pos = m.positives();
        match undersample(&m, seed) {
            Ok(s) => {
                prop_assert!(pos > 0 && pos <= m.len() - pos);
                prop_assert_eq!(s.positives(), pos);
                prop_assert_eq!(s.len(), 2 * pos);
                prop_assert_eq!(&s, &undersample(&m, seed).unwrap());
                prop_assert!(s.rows.windows(2).all(|w| w[0].sequence < w[1].sequence));
                prop_assert!(s.rows.iter().all(|r| m.rows[r.sequence] == *r));
            }
            Err(_) => prop_assert!(pos == 0 || pos > m.len() - pos),
        }
    }

    #[test]
    fn time_split_respects_requirement_boundaries(sizes in prop::collection::vec(1usize..5, 2..12), fraction in 0.05f64..0.95) {
        let keys: Vec<usize> = sizes.iter().enumerate().flat_map(|(k, &n)| std::iter::repeat_n(k, n)).collect();
        let values: Vec<Vec<Option<f64>>> = keys.iter().map(|&k| vec![Some(k as f64)]).collect();
        let labels: Vec<bool> = keys.iter().map(|k| k % 2 == 0).collect();
        let m = matrix_from(&values, &labels, &keys);
        let s = time_split(&m, fraction).unwrap();
        prop_assert_eq!(s.train.len() + s.test.len(), m.len());
        let last_train = s.train.rows.last().unwrap();
        let first_test = s.test.rows.first().unwrap();
        prop_assert!(last_train.sequence < first_test.sequence);
        prop_assert_eq!(&first_test.requirement_key, &s.boundary_key);
        // No other requirement boundary lies closer to the target.
        let cut = s.train.len();
        for i in (1..m.len()).filter(|&i| keys[i] != keys[i - 1]) {
            prop_assert!(cut.abs_diff(s.target_rows) <= i.abs_diff(s.target_rows));
        }
    }

    #[test]
    fn kruskal_wallis_identities(
        groups in prop::collection::vec(prop::collection::vec(0u8..8, 1..8), 2..5),
        seed in any::<u64>(),
    ) {
        let groups: Vec<Vec<f64>> = groups.into_iter().map(|g| g.into_iter().map(f64::from).collect()).collect();
        let Ok(kw) = kruskal_wallis(&groups) else { return Ok(()) };
        prop_assert!(kw.h >= -1e-12 && kw.p > 0.0 && kw.p <= 1.0);
        prop_assert_eq!(kw.df, groups.len() - 1);
        let mut shuffled = groups.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let again = kruskal_wallis(&shuffled).unwrap();
        prop_assert!((again.h - kw.h).abs() < 1e-9);
        let repeated = vec![groups[0].clone(); groups.len()];
        match kruskal_wallis(&repeated) {
            Ok(same) => prop_assert!(same.h.abs() < 1e-12 && (same.p - 1.0).abs() < 1e-12),
            Err(e) => {
                prop_assert_eq!(e, StatsError::TooFewObservations);
                prop_assert!(repeated.iter().map(Vec::len).sum::<usize>() < 3);
            }
        }
    }

    #[test]
    fn fisher_matches_enumeration(a in 0u64..12, b in 0u64..12, c in 0u64..12, d in 0u64..12) {
        prop_assume!(a + b > 0 && c + d > 0 && a + c > 0 && b + d > 0);
        let p = fisher_exact_2x2(a, b, c, d).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0);
        prop_assert!((p - fisher_oracle(a, b, c, d)).abs() < 1e-9);
        prop_assert!((p - fisher_exact_2x2(d, c, b, a).unwrap()).abs() < 1e-12);
        prop_assert!((p - fisher_exact_2x2(a, c, b, d).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pca_components_are_orthonormal(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 4..15), variance in 0.5f64..1.0) {
        let labels: Vec<bool> = (0..rows.len()).map(|i| i % 2 == 0).collect();
        let keys: Vec<usize> = (0..rows.len()).collect();
        let values: Vec<Vec<Option<f64>>> = rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect();
        let m = matrix_from(&values, &labels, &keys);
        let pca = pca_fit(&m, variance).unwrap();
        for (i, a) in pca.components.iter().enumerate() {
            for (j, b) in pca.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - expected).abs() < 1e-8);
            }
        }
        prop_assert!(pca.eigenvalues.windows(2).all(|w| w[0] >= w[1] - 1e-9));
        prop_assert!(pca.is_degenerate() || pca.explained >= variance - 1e-9);
    }

    #[test]
    fn rows_ignore_everything_after_their_requirement(seed in any::<u64>(), pick in any::<prop::sample::Index>(), requirement_grain in any::<bool>()) {
        let project = random_project(seed);
        let grain = if requirement_grain { TlccGranularity::Requirement } else { TlccGranularity::Release };
        let built = build(&project.corpus, grain);
        prop_assert_eq!(built.audit.iter().map(|a| a.future_inputs()).sum::<usize>(), 0);
        prop_assert!(built.matrix.check_chronological().is_ok());
        if built.audit.is_empty() {
            return Ok(());
        }
        let audit = &built.audit[pick.index(built.audit.len())];
        let key = audit.requirement_key.as_str();
        let perturbed = perturb_future(&project, key, audit.first_commit, seed ^ 0x5eed);
        let rebuilt = build(&perturbed, grain);
        let rows = |b: &MatrixBuild| b.matrix.rows.iter().filter(|r| r.requirement_key == key).cloned().collect::<Vec<_>>();
        let (before, after) = (rows(&built), rows(&rebuilt));
        prop_assert!(!before.is_empty());
        prop_assert_eq!(before.len(), after.len());
        for (x, y) in before.iter().zip(&after) {
            prop_assert_eq!(&x.class_path, &y.class_path);
            prop_assert_eq!(x.impacted, y.impacted);
            let bits = |r: &FeatureRow| r.values.iter().map(|v| v.map(f64::to_bits)).collect::<Vec<_>>();
            prop_assert_eq!(bits(x), bits(y), "{} {}", key, x.class_path);
        }
    }
}
