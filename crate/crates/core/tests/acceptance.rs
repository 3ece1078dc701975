//! Acceptance checks, one line per criterion. Run with
//!
//!     cargo test -p cardsmith --test acceptance
//!
//! Exits non-zero when any check fails.

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cardsmith::card::{scaffold, SCAFFOLD_ERROR_PATHS};
use cardsmith::demo;
use cardsmith::ingest::{
    expand_templates, EvaluationRecord, EvaluationSet, FactorSchema, IdentityTerm, Label,
    Provenance, TemplateSpec, PLACEHOLDER, UNKNOWN,
};
use cardsmith::metrics::{
    auc, confusion_at_threshold, default_grid, error_rates, parity_gaps, pinned_auc, pinned_sample,
    threshold_sweep, ConfusionCounts, ParityInput, Scored,
};
use cardsmith::report::{round3, upsert_analyses};
use cardsmith::slicer::{intersectional_slices, unitary_slices, SliceKey};
use cardsmith::uncertainty::{beta_posterior_ci, beta_quantile, bootstrap_ci, sub_seed};
use cardsmith::{
    assemble_quantitative, load_card, render_html, render_markdown, save_card, validate_card,
    AnalysisConfig, MetricId, MetricValue,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:.1?}, limit {limit:?}")
    })
}

// Metric oracle ------------------------------------------------------------

struct OracleCounts {
    tp: u64,
    fp: u64,
    fn_: u64,
    tn: u64,
}

fn oracle_counts(examples: &[(f64, bool)], threshold: f64) -> OracleCounts {
    let mut c = OracleCounts {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
    };
    for &(score, positive) in examples {
        match (score >= threshold, positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

/// Numerator and denominator straight from the definitions.
fn oracle_fraction(c: &OracleCounts, metric: MetricId) -> (u64, u64) {
    match metric {
        MetricId::Fpr => (c.fp, c.fp + c.tn),
        MetricId::Fnr => (c.fn_, c.fn_ + c.tp),
        MetricId::Fdr => (c.fp, c.fp + c.tp),
        MetricId::For => (c.fn_, c.fn_ + c.tn),
        other => panic!("{other} is not a rate"),
    }
}

/// Pair counting over every (positive, negative) pair; ties count one half.
fn oracle_auc(examples: &[(f64, bool)]) -> Option<f64> {
    let pos: Vec<f64> = examples.iter().filter(|e| e.1).map(|e| e.0).collect();
    let neg: Vec<f64> = examples.iter().filter(|e| !e.1).map(|e| e.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut doubled_wins: u64 = 0;
    for &p in &pos {
        for &n in &neg {
            doubled_wins += if p > n {
                2
            } else if p == n {
                1
            } else {
                0
            };
        }
    }
    Some(doubled_wins as f64 / (2 * pos.len() * neg.len()) as f64)
}

fn random_examples(rng: &mut ChaCha8Rng) -> Vec<(f64, bool)> {
    let n = rng.gen_range(50..=500);
    // Coarse grids produce many ties; some datasets carry a single class.
    let resolution = *[10u32, 20, 100, 1000, 1_000_000].choose(rng).unwrap();
    let prevalence = match rng.gen_range(0..20) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen_range(0.05..0.95),
    };
    (0..n)
        .map(|_| {
            let positive = rng.gen_bool(prevalence);
            let shift = if positive { 0.15 } else { 0.0 };
            let raw: f64 = (rng.gen::<f64>() * 0.85 + shift).min(1.0);
            (
                (raw * resolution as f64).round() / resolution as f64,
                positive,
            )
        })
        .collect()
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid = default_grid(0.01).map_err(|e| e.to_string())?;
    let (mut rate_checks, mut undefined_seen, mut auc_checks) = (0usize, 0usize, 0usize);
    for dataset in 0..200 {
        let raw = random_examples(&mut rng);
        let examples: Vec<Scored> = raw.iter().map(|&(s, p)| Scored::new(s, p)).collect();
        let mut thresholds = vec![0.0, 0.5, 1.0, rng.gen()];
        thresholds.push(raw[rng.gen_range(0..raw.len())].0);
        for t in thresholds {
            let oracle = oracle_counts(&raw, t);
            let counts = confusion_at_threshold(&examples, t);
            let expected = ConfusionCounts {
                tp: oracle.tp,
                fp: oracle.fp,
                fn_: oracle.fn_,
                tn: oracle.tn,
            };
            ensure(counts == expected, || {
                format!("dataset {dataset} t={t}: counts {counts:?} vs {expected:?}")
            })?;
            let rates = error_rates(&counts);
            for m in MetricId::RATES {
                let (num, den) = oracle_fraction(&oracle, m);
                let got = rates.get(m);
                let ok = if den == 0 {
                    undefined_seen += 1;
                    got == MetricValue::Undefined
                } else {
                    got == MetricValue::Defined(num as f64 / den as f64)
                        && counts.fraction(m) == Some((num, den))
                };
                ensure(ok, || {
                    format!("dataset {dataset} {m}@{t}: {got:?} vs {num}/{den}")
                })?;
                rate_checks += 1;
            }
        }
        let sweep = threshold_sweep(&examples, &grid).map_err(|e| e.to_string())?;
        for (entry, &t) in sweep.entries.iter().zip(&grid) {
            let o = oracle_counts(&raw, t);
            ensure(
                (entry.tp, entry.fp, entry.fn_, entry.tn) == (o.tp, o.fp, o.fn_, o.tn),
                || format!("dataset {dataset}: sweep entry at {t} disagrees"),
            )?;
        }
        match (auc(&examples), oracle_auc(&raw)) {
            (MetricValue::Defined(a), Some(b)) => {
                ensure((a - b).abs() <= 1e-12, || {
                    format!("dataset {dataset}: auc {a} vs {b}")
                })?;
                auc_checks += 1;
            }
            (MetricValue::Undefined, None) => {}
            (a, b) => return Err(format!("dataset {dataset}: auc {a:?} vs {b:?}")),
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "200 datasets: {rate_checks} rates exact ({undefined_seen} undefined), {auc_checks} AUCs within 1e-12, sweeps exact, {elapsed:.1?}"
    ))
}

// Slicing partition --------------------------------------------------------

fn random_population(rng: &mut ChaCha8Rng) -> EvaluationSet {
    let factors = rng.gen_range(2..=4);
    let schemas: Vec<FactorSchema> = (0..factors)
        .map(|f| {
            let mut values: Vec<String> =
                (0..rng.gen_range(2..=4)).map(|v| format!("v{v}")).collect();
            if rng.gen_bool(0.5) {
                values.push(UNKNOWN.to_string());
            }
            FactorSchema::new(&format!("f{f}"), values, Provenance::Perceived)
        })
        .collect();
    let records = (0..rng.gen_range(20..400))
        .map(|i| EvaluationRecord {
            id: format!("r{i}"),
            gold_label: if rng.gen_bool(0.4) {
                Label::Positive
            } else {
                Label::Negative
            },
            score: Some(rng.gen_range(0..=100) as f64 / 100.0),
            factor_values: schemas
                .iter()
                .map(|s| (s.name.clone(), s.values.choose(rng).unwrap().clone()))
                .collect(),
        })
        .collect();
    EvaluationSet::new("population", schemas, records).expect("valid population")
}

fn slicing_partition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = Vec::new();
    let mut slices_checked = 0;
    for fixture in 0..100 {
        let set = random_population(&mut rng);
        let mut tuple: Vec<String> = set.schemas().iter().map(|s| s.name.clone()).collect();
        tuple.shuffle(&mut rng);
        tuple.truncate(rng.gen_range(2..=tuple.len()));
        let min_cell = rng.gen_range(1..30);
        let unitary = unitary_slices(&set, &tuple, min_cell).map_err(|e| e.to_string())?;
        let inter = intersectional_slices(&set, &tuple, min_cell).map_err(|e| e.to_string())?;

        let eligible: HashSet<usize> = set
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| tuple.iter().all(|f| r.factor_values[f] != UNKNOWN))
            .map(|(i, _)| i)
            .collect();
        let mut covered = HashSet::new();
        for s in &inter {
            slices_checked += 1;
            for &i in &s.member_indices {
                if !covered.insert(i) {
                    violations.push(format!("fixture {fixture}: record {i} in two slices"));
                }
                if !s.key.matches(&set.records()[i]) {
                    violations.push(format!(
                        "fixture {fixture}: record {i} does not match {}",
                        s.key
                    ));
                }
            }
            for projection in s.key.projections() {
                let Some(parent) = unitary.iter().find(|u| u.key == projection) else {
                    violations.push(format!("fixture {fixture}: no unitary slice {projection}"));
                    continue;
                };
                let parent: HashSet<usize> = parent.member_indices.iter().copied().collect();
                if !s.member_indices.iter().all(|i| parent.contains(i)) {
                    violations.push(format!(
                        "fixture {fixture}: {} not within {projection}",
                        s.key
                    ));
                }
            }
            if s.suppressed != (s.len() < min_cell) {
                violations.push(format!(
                    "fixture {fixture}: suppression flag wrong on {}",
                    s.key
                ));
            }
        }
        if covered != eligible {
            violations.push(format!(
                "fixture {fixture}: slices cover {} records, {} eligible",
                covered.len(),
                eligible.len()
            ));
        }
    }
    ensure(violations.is_empty(), || {
        format!("{} violations, first: {}", violations.len(), violations[0])
    })?;
    Ok(format!(
        "100 fixtures, {slices_checked} intersectional slices, zero violations"
    ))
}

// Fairness equivalence -----------------------------------------------------

/// A group with `positives` positives of which `false_neg` are missed, and
/// `negatives` negatives of which `false_pos` are flagged.
fn group(positives: u64, false_neg: u64, negatives: u64, false_pos: u64) -> Vec<Scored> {
    (0..positives)
        .map(|i| Scored::new(if i < false_neg { 0.2 } else { 0.8 }, true))
        .chain((0..negatives).map(|i| Scored::new(if i < false_pos { 0.7 } else { 0.3 }, false)))
        .collect()
}

fn parity_of(groups: &[Vec<Scored>]) -> Result<(f64, f64), String> {
    let inputs: Vec<ParityInput> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| ParityInput {
            key: SliceKey::new(vec![("group".into(), format!("g{i}"))]),
            rates: error_rates(&confusion_at_threshold(g, 0.5)),
            suppressed: false,
        })
        .collect();
    let report = parity_gaps(&["group".to_string()], 0.5, &inputs).map_err(|e| e.to_string())?;
    Ok((report.opportunity_gap, report.odds_gap))
}

fn fairness_equivalence() -> Outcome {
    // Denominators are powers of two so every rate and difference is exact.
    let equal = [group(32, 8, 64, 4), group(64, 16, 128, 8)];
    let (opportunity, odds) = parity_of(&equal)?;
    ensure(opportunity == 0.0 && odds == 0.0, || {
        format!("equal rates gave gaps {opportunity}, {odds}")
    })?;

    let one_more_miss = [group(32, 8, 64, 4), group(64, 17, 128, 8)];
    let (opportunity, odds) = parity_of(&one_more_miss)?;
    let delta = 1.0 / 64.0;
    ensure(opportunity == delta && odds == delta, || {
        format!("one extra false negative: gaps {opportunity}, {odds}, expected {delta}")
    })?;

    let one_more_false_alarm = [group(32, 8, 64, 4), group(64, 16, 128, 9)];
    let (opportunity, odds) = parity_of(&one_more_false_alarm)?;
    ensure(opportunity == 0.0 && odds == 1.0 / 128.0, || {
        format!("one extra false positive: gaps {opportunity}, {odds}, expected 0 and 1/128")
    })?;

    // Same construction through the full pipeline; the card stores gaps to
    // three decimals.
    let schemas = vec![FactorSchema::new(
        "group",
        ["a", "b"],
        Provenance::SelfIdentified,
    )];
    let records: Vec<EvaluationRecord> = one_more_miss
        .iter()
        .zip(["a", "b"])
        .flat_map(|(g, name)| g.iter().map(move |s| (name, *s)))
        .enumerate()
        .map(|(i, (name, s))| EvaluationRecord {
            id: format!("r{i}"),
            gold_label: if s.positive {
                Label::Positive
            } else {
                Label::Negative
            },
            score: Some(s.score),
            factor_values: BTreeMap::from([("group".to_string(), name.to_string())]),
        })
        .collect();
    let set = EvaluationSet::new("parity", schemas, records).map_err(|e| e.to_string())?;
    let config = AnalysisConfig {
        dataset: "parity".into(),
        metrics: MetricId::RATES.to_vec(),
        thresholds: vec![0.5],
        sweep_step: None,
        ci_method: cardsmith::uncertainty::CiMethod::BetaPosterior,
        replicates: 1,
        level: 0.95,
        prior: 0.5,
        seed: None,
        min_cell: 20,
        factors: vec!["group".into()],
        intersections: vec![],
    };
    let qa = assemble_quantitative(&set, &config, "1").map_err(|e| e.to_string())?;
    let gap = qa.parity[0].opportunity_gap;
    ensure(gap == round3(delta), || {
        format!("card opportunity gap {gap}, expected {}", round3(delta))
    })?;
    Ok("equal FNRs give gap 0; one false negative moves it by exactly 1/64; FPR-only change moves odds gap only".into())
}

// Bootstrap coverage -------------------------------------------------------

fn bootstrap_coverage() -> Outcome {
    let start = Instant::now();
    let (datasets, n, true_rate) = (500u64, 200usize, 0.2);
    let mut covered = 0;
    let mut data_rng = ChaCha8Rng::seed_from_u64(4);
    for d in 0..datasets {
        // All negatives: the false positive rate is the flagged fraction.
        let examples: Vec<Scored> = (0..n)
            .map(|_| {
                Scored::new(
                    if data_rng.gen_bool(true_rate) {
                        0.9
                    } else {
                        0.1
                    },
                    false,
                )
            })
            .collect();
        let ci = bootstrap_ci(
            &examples,
            MetricId::Fpr,
            0.5,
            1000,
            0.95,
            sub_seed(4, &format!("dataset {d}")),
        )
        .map_err(|e| e.to_string())?;
        if ci.contains(true_rate) {
            covered += 1;
        }
    }
    let coverage = covered as f64 / datasets as f64;
    let elapsed = start.elapsed();
    ensure((0.90..=0.98).contains(&coverage), || {
        format!("coverage {coverage:.3} outside [0.90, 0.98]")
    })?;
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!(
        "coverage {coverage:.3} over {datasets} datasets (n={n}, B=1000), {elapsed:.1?}"
    ))
}

// Beta posterior quantiles -------------------------------------------------

/// Composite Simpson rule with `panels` (even) subintervals.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut sum = f(lo) + f(hi);
    for i in 1..panels {
        sum += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Beta(a, b) CDF by quadrature. With x = sin²θ the integrand
/// 2 sin^(2a-1)θ cos^(2b-1)θ stays bounded for a, b ≥ 1/2.
fn quadrature_beta_cdf(a: f64, b: f64, x: f64) -> f64 {
    let integrand = |t: f64| 2.0 * t.sin().powf(2.0 * a - 1.0) * t.cos().powf(2.0 * b - 1.0);
    let total = simpson(integrand, 0.0, std::f64::consts::FRAC_PI_2, 20_000);
    simpson(integrand, 0.0, x.sqrt().asin(), 20_000) / total
}

fn quadrature_beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if quadrature_beta_cdf(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn beta_quantiles() -> Outcome {
    let prior = 0.5;
    let mut worst: f64 = 0.0;
    let mut clamped = Vec::new();
    for (x, n) in [(0u64, 100u64), (5, 10), (99, 100)] {
        let (a, b) = (x as f64 + prior, (n - x) as f64 + prior);
        let level = 0.95;
        let ci = beta_posterior_ci(x, n, level, prior).map_err(|e| e.to_string())?;
        let tail = (1.0 - level) / 2.0;
        for (p, reported) in [(tail, ci.lower), (1.0 - tail, ci.upper)] {
            let expected = quadrature_beta_quantile(a, b, p);
            let got = beta_quantile(a, b, p);
            let err = (got - expected).abs();
            worst = worst.max(err);
            ensure(err <= 1e-6, || {
                format!("({x},{n}) q{p:.3}: {got} vs quadrature {expected}")
            })?;
            if ci.clamped && (reported - got).abs() > 1e-15 {
                // The interval bound was moved onto x/n.
                ensure(reported == ci.point, || {
                    format!("({x},{n}) q{p:.3}: bound {reported} is neither quantile nor point")
                })?;
                clamped.push(format!("({x},{n}) q{p:.3}"));
            } else {
                ensure(reported == got, || {
                    format!("({x},{n}) q{p:.3}: interval bound {reported} vs quantile {got}")
                })?;
            }
        }
    }
    let note = if clamped.is_empty() {
        String::new()
    } else {
        format!(
            "; interval bound clamped onto x/n at {}",
            clamped.join(", ")
        )
    };
    Ok(format!(
        "max quantile error {worst:.1e} at (0,100), (5,10), (99,100){note}"
    ))
}

// Pinned AUC ---------------------------------------------------------------

const PINNED_TERMS: [&str; 6] = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot"];
const INVERTED_TERM: &str = "delta";

fn pinned_auc_behaviour() -> Outcome {
    let toxic: Vec<String> = (0..20)
        .map(|i| format!("toxic sentence {i} about {PLACEHOLDER}"))
        .collect();
    let neutral: Vec<String> = (0..20)
        .map(|i| format!("plain sentence {i} about {PLACEHOLDER}"))
        .collect();
    let spec = TemplateSpec {
        name: "pinned".into(),
        templates: toxic.iter().chain(&neutral).cloned().collect(),
        identity_terms: PINNED_TERMS
            .iter()
            .map(|t| IdentityTerm {
                term: t.to_string(),
                factor_values: BTreeMap::from([("term".to_string(), t.to_string())]),
            })
            .collect(),
        labels: toxic
            .iter()
            .map(|t| (t.clone(), Label::Positive))
            .chain(neutral.iter().map(|t| (t.clone(), Label::Negative)))
            .collect(),
        schemas: None,
    };
    let expanded = expand_templates(&spec).map_err(|e| e.to_string())?;
    let (name, schemas, mut records) = expanded.set.into_parts();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for r in &mut records {
        let high = r.gold_label.is_positive() != (r.factor_values["term"] == INVERTED_TERM);
        let s: f64 = if high {
            rng.gen_range(0.4..1.0)
        } else {
            rng.gen_range(0.0..0.6)
        };
        r.score = Some((s * 1000.0).round() / 1000.0);
    }
    let set = EvaluationSet::new(name, schemas, records).map_err(|e| e.to_string())?;

    let root = 60_606;
    let config = AnalysisConfig {
        dataset: "pinned".into(),
        metrics: vec![MetricId::PinnedAuc],
        thresholds: vec![0.5],
        sweep_step: None,
        ci_method: cardsmith::uncertainty::CiMethod::Bootstrap,
        replicates: 200,
        level: 0.95,
        prior: 0.5,
        seed: Some(root),
        min_cell: 20,
        factors: vec!["term".into()],
        intersections: vec![],
    };
    let qa = assemble_quantitative(&set, &config, "1").map_err(|e| e.to_string())?;

    let scored: Vec<(f64, bool)> = set
        .records()
        .iter()
        .map(|r| (r.score.unwrap(), r.gold_label.is_positive()))
        .collect();
    let mut values = BTreeMap::new();
    for slice in &qa.unitary[0].slices {
        let result = slice
            .metric(MetricId::PinnedAuc, None)
            .ok_or("pinned AUC missing")?;
        let stored = result
            .value
            .get()
            .ok_or_else(|| format!("{}: undefined", slice.key))?;
        let (lo, hi) = result
            .interval()
            .ok_or_else(|| format!("{}: no interval", slice.key))?;
        ensure(lo <= stored && stored <= hi, || {
            format!("{}: {stored} outside [{lo}, {hi}]", slice.key)
        })?;

        // Rebuild the pinned set: members in record order, the background
        // is everything else, sampled by the recorded seed.
        let sample_seed = result.sample_seed.ok_or("no sample seed")?;
        ensure(
            sample_seed == sub_seed(root, &format!("{}|pinned_auc/sample", slice.key)),
            || format!("{}: sample seed not derived from the root", slice.key),
        )?;
        let members: Vec<usize> = (0..set.len())
            .filter(|&i| slice.key.matches(&set.records()[i]))
            .collect();
        let background: Vec<usize> = (0..set.len()).filter(|i| !members.contains(i)).collect();
        let sample = pinned_sample(members.len(), background.len(), sample_seed);
        ensure(
            result.sample_size == Some(sample.len()) && sample.len() == members.len(),
            || format!("{}: sample size {:?}", slice.key, result.sample_size),
        )?;
        ensure(
            sample.iter().collect::<HashSet<_>>().len() == sample.len(),
            || format!("{}: background drawn with replacement", slice.key),
        )?;
        let pinned: Vec<(f64, bool)> = members
            .iter()
            .chain(sample.iter().map(|&j| &background[j]))
            .map(|&i| scored[i])
            .collect();
        let oracle = oracle_auc(&pinned).ok_or("pinned set lacks a class")?;

        let sub: Vec<Scored> = members
            .iter()
            .map(|&i| Scored::new(scored[i].0, scored[i].1))
            .collect();
        let bg: Vec<Scored> = background
            .iter()
            .map(|&i| Scored::new(scored[i].0, scored[i].1))
            .collect();
        let direct = pinned_auc(&sub, &bg, sample_seed).map_err(|e| e.to_string())?;
        let direct = direct.value.get().ok_or("direct pinned AUC undefined")?;
        ensure((direct - oracle).abs() <= 1e-12, || {
            format!("{}: {direct} vs pair count {oracle}", slice.key)
        })?;
        ensure(stored == round3(oracle), || {
            format!("{}: card {stored} vs pair count {oracle:.6}", slice.key)
        })?;
        values.insert(slice.key.get("term").unwrap().to_string(), stored);
    }
    ensure(values.len() == PINNED_TERMS.len(), || {
        format!("{} term slices", values.len())
    })?;
    let inverted = values[INVERTED_TERM];
    let lowest_other = values
        .iter()
        .filter(|(t, _)| *t != INVERTED_TERM)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    ensure(inverted < lowest_other, || {
        format!("{INVERTED_TERM} {inverted} not below {lowest_other}")
    })?;
    Ok(format!(
        "inverted term {inverted:.3} < lowest other {lowest_other:.3}; {} slices match the pair-count oracle",
        values.len()
    ))
}

// Error-rate range scenario -------------------------------------------------

fn error_rate_range() -> Outcome {
    let start = Instant::now();
    let set = demo::smiling_evaluation_set(5000, demo::SMILING_SEED);
    let mut card = demo::smiling_card_text();
    let config = AnalysisConfig::from_metrics_spec(
        &card.metrics_spec,
        set.name(),
        vec!["gender".into(), "age".into()],
        vec![vec!["gender".into(), "age".into()]],
        Some(demo::SMILING_SEED),
    );
    ensure(config.replicates == 1000, || {
        format!("{} replicates", config.replicates)
    })?;
    let qa = assemble_quantitative(&set, &config, "1").map_err(|e| e.to_string())?;
    upsert_analyses(&mut card, qa);
    let card = load_card(&save_card(&card)).map_err(|e| e.to_string())?;
    let report = validate_card(&card);
    ensure(report.is_complete(), || {
        format!("card incomplete:\n{report}")
    })?;

    let qa = &card.quantitative_analyses.as_ref().unwrap()[0];
    let cells = &qa.intersectional[0].slices;
    ensure(cells.len() == 4, || {
        format!("{} gender x age cells", cells.len())
    })?;
    let (mut lo, mut hi, mut rates) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    for cell in cells {
        ensure(cell.n == Some(5000), || {
            format!("{}: n = {:?}", cell.key, cell.n)
        })?;
        for m in MetricId::RATES {
            let r = cell
                .metric(m, Some(0.5))
                .ok_or_else(|| format!("{}: {m} missing", cell.key))?;
            let v = r
                .value
                .get()
                .ok_or_else(|| format!("{}: {m} undefined", cell.key))?;
            ensure((0.02..=0.16).contains(&v), || {
                format!("{} {m} = {v} outside [0.02, 0.16]", cell.key)
            })?;
            let (l, u) = r
                .interval()
                .ok_or_else(|| format!("{}: {m} has no interval", cell.key))?;
            ensure(l <= v && v <= u && l < u, || {
                format!("{} {m}: bad interval [{l}, {u}] around {v}", cell.key)
            })?;
            ensure(r.replicates == Some(1000), || {
                format!("{} {m}: {:?} replicates", cell.key, r.replicates)
            })?;
            lo = lo.min(v);
            hi = hi.max(v);
            rates += 1;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "{rates} cell rates in [{lo:.3}, {hi:.3}], all with bootstrap intervals, {elapsed:.1?}"
    ))
}

// Fixtures and determinism -------------------------------------------------

fn fixtures_and_determinism() -> Outcome {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    for name in ["smiling.card.json", "toxicity.card.json"] {
        let bytes = std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let card = load_card(&bytes).map_err(|e| format!("{name}: {e}"))?;
        let report = validate_card(&card);
        ensure(report.is_complete(), || {
            format!("{name} incomplete:\n{report}")
        })?;
        ensure(save_card(&card) == bytes, || {
            format!("{name}: save(load(bytes)) differs")
        })?;
    }

    let report = validate_card(&scaffold());
    let got: Vec<String> = report.errors.iter().map(|e| e.to_string()).collect();
    let expected: Vec<String> = SCAFFOLD_ERROR_PATHS
        .iter()
        .map(|p| format!("{p}: section is empty"))
        .collect();
    ensure(got == expected, || format!("scaffold errors {got:?}"))?;

    let first = demo::smiling_card().map_err(|e| e.to_string())?;
    let second = demo::smiling_card().map_err(|e| e.to_string())?;
    ensure(save_card(&first) == save_card(&second), || {
        "two seeded runs saved different bytes".into()
    })?;
    let fixture = std::fs::read(dir.join("smiling.card.json")).map_err(|e| e.to_string())?;
    ensure(save_card(&first) == fixture, || {
        "seeded run differs from the committed fixture".into()
    })?;
    let render = |c: &cardsmith::ModelCard| -> Result<(String, String), String> {
        Ok((
            render_markdown(c).map_err(|e| e.to_string())?,
            render_html(c).map_err(|e| e.to_string())?,
        ))
    };
    ensure(render(&first)? == render(&second)?, || {
        "rendering differs between runs".into()
    })?;
    Ok(format!(
        "2 fixture cards complete and byte-stable; scaffold gives exactly {} errors; seeded runs and renders identical",
        expected.len()
    ))
}

fn main() -> ExitCode {
    let checks: [Check; 8] = [
        ("metric oracle equivalence", metric_oracle),
        ("slicing partition", slicing_partition),
        ("fairness gap equivalence", fairness_equivalence),
        ("bootstrap coverage", bootstrap_coverage),
        ("beta posterior quantiles", beta_quantiles),
        ("pinned AUC behaviour", pinned_auc_behaviour),
        ("error-rate range scenario", error_rate_range),
        (
            "fixtures, scaffold and determinism",
            fixtures_and_determinism,
        ),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} acceptance checks passed",
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
