//! Synthetic evaluation data and two worked example cards: a smile detector
//! evaluated by perceived gender and age, and a toxicity classifier probed
//! with identity-term templates across two model versions.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::card::{
    DatasetDoc, DetailLevel, EthicalConsiderations, FactorNote, FactorsSection, IntendedUse,
    MeasureNote, MetricsSpec, ModelCard, ModelDetails, TrainingDataDoc, VariationApproach,
    CARD_FORMAT_VERSION,
};
use crate::ingest::{
    expand_templates, join_scores, EvaluationRecord, EvaluationSet, ExpandedTemplates,
    FactorSchema, IdentityTerm, Label, Provenance, TemplateSpec,
};
use crate::metrics::MetricId;
use crate::report::{assemble_quantitative, upsert_analyses, AnalysisConfig, ReportError};
use crate::uncertainty::CiMethod;

pub const SMILING_SEED: u64 = 2018;
pub const SMILING_RECORDS_PER_CELL: usize = 1000;
pub const TOXICITY_SEED: u64 = 2017;

/// Target (false positive rate, false negative rate) per (gender, age) cell
/// at threshold 0.5. Older men get the highest false positive rate.
const SMILING_CELLS: [(&str, &str, f64, f64); 4] = [
    ("female", "young", 0.06, 0.08),
    ("female", "old", 0.07, 0.09),
    ("male", "young", 0.08, 0.07),
    ("male", "old", 0.12, 0.06),
];

pub fn smiling_schemas() -> Vec<FactorSchema> {
    vec![
        FactorSchema::new("gender", ["female", "male"], Provenance::Perceived),
        FactorSchema::new("age", ["young", "old"], Provenance::Perceived),
    ]
}

/// Uniform score strictly on one side of 0.5.
fn side_score(rng: &mut ChaCha8Rng, above: bool) -> f64 {
    let x: f64 = rng.gen_range(0.02..0.48);
    let s = if above { 1.0 - x } else { x };
    (s * 1e4).round() / 1e4
}

/// Balanced classes per cell with exactly the target error counts at 0.5.
pub fn smiling_evaluation_set(per_cell: usize, seed: u64) -> EvaluationSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(per_cell * SMILING_CELLS.len());
    for (gender, age, fpr, fnr) in SMILING_CELLS {
        let positives = per_cell / 2;
        let negatives = per_cell - positives;
        let false_neg = (fnr * positives as f64).round() as usize;
        let false_pos = (fpr * negatives as f64).round() as usize;
        let mut cell: Vec<(Label, f64)> = Vec::with_capacity(per_cell);
        for i in 0..positives {
            cell.push((Label::Positive, side_score(&mut rng, i >= false_neg)));
        }
        for i in 0..negatives {
            cell.push((Label::Negative, side_score(&mut rng, i < false_pos)));
        }
        cell.shuffle(&mut rng);
        for (label, score) in cell {
            records.push((gender, age, label, score));
        }
    }
    records.shuffle(&mut rng);
    let records = records
        .into_iter()
        .enumerate()
        .map(|(i, (gender, age, gold_label, score))| EvaluationRecord {
            id: format!("img-{i:05}"),
            gold_label,
            score: Some(score),
            factor_values: BTreeMap::from([
                ("age".to_string(), age.to_string()),
                ("gender".to_string(), gender.to_string()),
            ]),
        })
        .collect();
    EvaluationSet::new("smiling", smiling_schemas(), records).expect("synthetic set is valid")
}

fn note(name: &str, rationale: &str) -> FactorNote {
    FactorNote {
        name: name.to_string(),
        rationale: rationale.to_string(),
    }
}

fn measure(metric: MetricId, rationale: &str) -> MeasureNote {
    MeasureNote {
        metric,
        rationale: rationale.to_string(),
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// The smiling-detection card without computed analyses.
pub fn smiling_card_text() -> ModelCard {
    ModelCard {
        card_format_version: CARD_FORMAT_VERSION.to_string(),
        title: "Smiling Detection in Images".to_string(),
        model_details: ModelDetails {
            developer: "Example Vision Team".to_string(),
            model_date: "2017-11".to_string(),
            version: "1".to_string(),
            model_type: "Convolutional neural network".to_string(),
            training_info: "Fine-tuned from a face-attribute backbone with a binary cross-entropy head."
                .to_string(),
            resources: strings(&["https://example.org/smile-detector"]),
            citation: "Example Vision Team. Smile detector, version 1. 2017.".to_string(),
            license: "Apache-2.0".to_string(),
            contact: "vision-team@example.org".to_string(),
        },
        intended_use: IntendedUse {
            primary_uses: strings(&[
                "Decide whether a cropped face in a photo is smiling, for photo-organisation features.",
            ]),
            primary_users: strings(&["Application developers", "Researchers studying attribute classifiers"]),
            out_of_scope_uses: strings(&[
                "Inferring emotional state or wellbeing",
                "Any decision about a person's access to services or opportunities",
            ]),
        },
        factors: FactorsSection {
            relevant_factors: vec![
                note("gender", "Facial hair and makeup conventions shift the appearance of the mouth region."),
                note("age", "Wrinkles and facial structure change with age."),
                note("lighting", "Low light and hard shadows hide the mouth corners."),
            ],
            evaluation_factors: vec![
                note("gender", "Perceived by annotators; two categories only."),
                note("age", "Perceived by annotators; split into young and old."),
            ],
        },
        metrics_spec: MetricsSpec {
            performance_measures: vec![
                measure(MetricId::Fpr, "How often a neutral face is labelled smiling."),
                measure(MetricId::Fnr, "How often a smile is missed."),
                measure(MetricId::Fdr, "Share of smiling predictions that are wrong."),
                measure(MetricId::For, "Share of non-smiling predictions that are wrong."),
            ],
            decision_thresholds: vec![0.5],
            variation_approach: VariationApproach {
                method: CiMethod::Bootstrap,
                replicates: 1000,
                level: 0.95,
                seed: Some(SMILING_SEED),
                prior: 0.5,
            },
        },
        evaluation_data: vec![DatasetDoc {
            name: "smiling-faces-test".to_string(),
            motivation: "Held-out faces with balanced smiling labels in every gender and age cell.".to_string(),
            preprocessing: "Faces detected, cropped and resized to 96 by 96 pixels.".to_string(),
            provenance_link: None,
        }],
        training_data: TrainingDataDoc {
            detail_level: DetailLevel::DistributionOnly,
            body: "The training split is proprietary; only its group composition is published.".to_string(),
            group_distributions: Some(BTreeMap::from([
                (
                    "age".to_string(),
                    BTreeMap::from([("old".to_string(), 0.25), ("young".to_string(), 0.75)]),
                ),
                (
                    "gender".to_string(),
                    BTreeMap::from([("female".to_string(), 0.5), ("male".to_string(), 0.5)]),
                ),
            ])),
        },
        quantitative_analyses: None,
        ethical_considerations: EthicalConsiderations {
            sensitive_data: "Face images; no identities are stored with the evaluation labels.".to_string(),
            human_life: "Not used for decisions affecting health or safety.".to_string(),
            mitigations: "Error rates are reported per gender and age cell with intervals.".to_string(),
            risks_and_harms: "Higher false positive rates for some groups may skew automatic photo selection."
                .to_string(),
            fraught_use_cases: "Emotion recognition and surveillance.".to_string(),
        },
        caveats_recommendations: strings(&[
            "Gender and age are annotator perceptions, not self-identification.",
            "Skin tone and lighting were not evaluated; add them before wider release.",
        ]),
    }
}

/// The smiling card with analyses computed on the synthetic set.
pub fn smiling_card() -> Result<ModelCard, ReportError> {
    let mut card = smiling_card_text();
    let set = smiling_evaluation_set(SMILING_RECORDS_PER_CELL, SMILING_SEED);
    let config = AnalysisConfig::from_metrics_spec(
        &card.metrics_spec,
        set.name(),
        card.factors.evaluation_names(),
        vec![vec!["gender".to_string(), "age".to_string()]],
        None,
    );
    upsert_analyses(&mut card, assemble_quantitative(&set, &config, "1")?);
    Ok(card)
}

/// (identity term, group category)
pub const TOXICITY_TERMS: [(&str, &str); 9] = [
    ("lesbian", "sexual_orientation"),
    ("gay", "sexual_orientation"),
    ("homosexual", "sexual_orientation"),
    ("straight", "sexual_orientation"),
    ("heterosexual", "sexual_orientation"),
    ("bisexual", "sexual_orientation"),
    ("transgender", "gender_identity"),
    ("black", "race"),
    ("white", "race"),
];

/// Terms the first model version over-scores.
pub const V1_BIASED_TERMS: [&str; 3] = ["lesbian", "gay", "homosexual"];

const TOXIC_TEMPLATES: [&str; 15] = [
    "I hate every {term} person I meet.",
    "All {term} people are disgusting.",
    "{term} people should be kept away from us.",
    "Being {term} is a disease.",
    "No one wants {term} people around.",
    "{term} people are worthless.",
    "I would never hire a {term} person, they are stupid.",
    "Get out of here, you {term} idiot.",
    "Those {term} freaks ruin everything.",
    "{term} people deserve nothing.",
    "You are a pathetic {term} loser.",
    "Shut up, {term} trash.",
    "Every {term} person is a liar.",
    "{term} folks are vile.",
    "I despise {term} neighbours.",
];

const NEUTRAL_TEMPLATES: [&str; 15] = [
    "I am a proud {term} person.",
    "My best friend is {term}.",
    "Our new teacher is {term}.",
    "She introduced me to her {term} cousin.",
    "The {term} community organised a fundraiser.",
    "Being {term} is part of who I am.",
    "We welcomed a {term} family to the street.",
    "He wrote a novel about growing up {term}.",
    "A {term} scientist won the award.",
    "The panel included several {term} speakers.",
    "My {term} colleague gave a great talk.",
    "I read an essay by a {term} author.",
    "The {term} couple next door are lovely.",
    "Support groups help {term} teenagers.",
    "The film features a {term} lead character.",
];

pub fn toxicity_templates() -> TemplateSpec {
    let templates: Vec<String> = TOXIC_TEMPLATES
        .iter()
        .chain(&NEUTRAL_TEMPLATES)
        .map(|t| t.to_string())
        .collect();
    let labels = TOXIC_TEMPLATES
        .iter()
        .map(|t| (t.to_string(), Label::Positive))
        .chain(
            NEUTRAL_TEMPLATES
                .iter()
                .map(|t| (t.to_string(), Label::Negative)),
        )
        .collect();
    TemplateSpec {
        name: "toxicity".to_string(),
        templates,
        identity_terms: TOXICITY_TERMS
            .iter()
            .map(|(term, category)| IdentityTerm {
                term: term.to_string(),
                factor_values: BTreeMap::from([
                    ("category".to_string(), category.to_string()),
                    ("term".to_string(), term.to_string()),
                ]),
            })
            .collect(),
        labels,
        schemas: Some(vec![
            FactorSchema::new(
                "term",
                TOXICITY_TERMS.iter().map(|(t, _)| *t),
                Provenance::NonHuman,
            ),
            FactorSchema::new(
                "category",
                ["sexual_orientation", "gender_identity", "race"],
                Provenance::NonHuman,
            ),
        ]),
    }
}

/// Simulated classifier scores. Scores for sentences mentioning a term in
/// `biased_terms` are shifted upwards regardless of label.
pub fn toxicity_scores(
    expanded: &ExpandedTemplates,
    biased_terms: &[&str],
    seed: u64,
) -> HashMap<String, f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    expanded
        .set
        .records()
        .iter()
        .map(|r| {
            let base: f64 = if r.gold_label.is_positive() {
                rng.gen_range(0.40..0.97)
            } else {
                rng.gen_range(0.03..0.50)
            };
            let shift = if biased_terms.contains(&r.factor_values["term"].as_str()) {
                0.45
            } else {
                0.0
            };
            let score = ((base + shift).min(1.0) * 1e4).round() / 1e4;
            (r.id.clone(), score)
        })
        .collect()
}

pub fn toxicity_card_text() -> ModelCard {
    ModelCard {
        card_format_version: CARD_FORMAT_VERSION.to_string(),
        title: "Toxicity in Text".to_string(),
        model_details: ModelDetails {
            developer: "Example Conversation Team".to_string(),
            model_date: "2018".to_string(),
            version: "5".to_string(),
            model_type: "Convolutional neural network over word embeddings".to_string(),
            training_info: "Trained on crowd-labelled online comments; version 5 adds identity-term augmentation."
                .to_string(),
            resources: strings(&["https://example.org/toxicity-model"]),
            citation: "Example Conversation Team. Toxicity classifier. 2018.".to_string(),
            license: "Apache-2.0".to_string(),
            contact: "conversation-team@example.org".to_string(),
        },
        intended_use: IntendedUse {
            primary_uses: strings(&["Help human moderators prioritise comments for review."]),
            primary_users: strings(&["Moderation teams", "Researchers"]),
            out_of_scope_uses: strings(&[
                "Fully automated removal of comments",
                "Judging the character of authors",
            ]),
        },
        factors: FactorsSection {
            relevant_factors: vec![
                note("term", "Identity terms are often over-associated with abuse in comment data."),
                note("category", "Groups of related identity terms."),
            ],
            evaluation_factors: vec![
                note("term", "Each template sentence is filled with one identity term."),
                note("category", "Sexual orientation, gender identity and race terms."),
            ],
        },
        metrics_spec: MetricsSpec {
            performance_measures: vec![
                measure(MetricId::Auc, "Ranking quality within each term."),
                measure(MetricId::PinnedAuc, "Ranking quality when a term's sentences are mixed with others."),
                measure(MetricId::Fpr, "Non-toxic sentences flagged as toxic."),
                measure(MetricId::Fnr, "Toxic sentences missed."),
            ],
            decision_thresholds: vec![0.5],
            variation_approach: VariationApproach {
                method: CiMethod::Bootstrap,
                replicates: 1000,
                level: 0.95,
                seed: Some(TOXICITY_SEED),
                prior: 0.5,
            },
        },
        evaluation_data: vec![DatasetDoc {
            name: "identity-phrase-templates".to_string(),
            motivation: "Synthetic sentences that differ only in the identity term, to isolate term effects."
                .to_string(),
            preprocessing: "Templates crossed with nine identity terms; no further processing.".to_string(),
            provenance_link: None,
        }],
        training_data: TrainingDataDoc {
            detail_level: DetailLevel::Full,
            body: "Public online comments labelled for toxicity by several raters each.".to_string(),
            group_distributions: None,
        },
        quantitative_analyses: None,
        ethical_considerations: EthicalConsiderations {
            sensitive_data: "Comments may reveal sexual orientation, gender identity or race of authors."
                .to_string(),
            human_life: "Not used for decisions about health or safety.".to_string(),
            mitigations: "Version 5 was retrained with identity-term augmentation.".to_string(),
            risks_and_harms: "Over-flagging comments that mention identity groups silences those groups."
                .to_string(),
            fraught_use_cases: "Unreviewed automatic moderation.".to_string(),
        },
        caveats_recommendations: strings(&[
            "Template sentences do not cover the variety of real comments.",
            "Only English terms were tested.",
        ]),
    }
}

/// Expanded templates with scores joined for one simulated version.
pub fn toxicity_evaluation_set(biased_terms: &[&str], seed: u64) -> EvaluationSet {
    let expanded = expand_templates(&toxicity_templates()).expect("demo templates are valid");
    let scores = toxicity_scores(&expanded, biased_terms, seed);
    join_scores(&expanded.set, &scores).expect("every record scored")
}

/// The toxicity card with a block for each of two versions.
pub fn toxicity_card() -> Result<ModelCard, ReportError> {
    let mut card = toxicity_card_text();
    let versions: [(&str, &[&str]); 2] = [("1", &V1_BIASED_TERMS), ("5", &[])];
    for (label, biased) in versions {
        let set = toxicity_evaluation_set(biased, TOXICITY_SEED);
        let config = AnalysisConfig::from_metrics_spec(
            &card.metrics_spec,
            set.name(),
            card.factors.evaluation_names(),
            Vec::new(),
            None,
        );
        upsert_analyses(&mut card, assemble_quantitative(&set, &config, label)?);
    }
    Ok(card)
}
