//! Synthetic desk-scale fixtures: an RF2 release with version history, the
//! alias and connectivity files that go with it, and outpatient case tables.
//!
//! The release embeds two hand-built chains that traverse cleanly:
//! `Streptococcal infection → causes → Pharyngitis → requires test →
//! Elevated C-reactive protein → treated by → Penicillin` and
//! `cough → symptom of → pneumonia → requires test → chest X-ray → guides
//! treatment → antibiotics`, plus the diabetes triples (123, 456, 789).
//! Everything else is seeded filler.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{write_diagnoses, write_records, write_string_parquet, DiagnosisRow, RecordRow};
use crate::graph::AliasTable;
use crate::parser::write_file;
use crate::rf2::well_known::*;
use crate::rf2::{AxiomRow, ConceptRow, DescriptionRow, EffectiveTime, RelationshipRow, SctId};

pub const STREP_INFECTION: SctId = SctId::from_const(8_000_001);
pub const PHARYNGITIS: SctId = SctId::from_const(8_000_002);
pub const ELEVATED_CRP: SctId = SctId::from_const(8_000_003);
pub const PENICILLIN: SctId = SctId::from_const(8_000_004);
pub const COUGH: SctId = SctId::from_const(8_000_011);
pub const PNEUMONIA: SctId = SctId::from_const(8_000_012);
pub const CHEST_XRAY: SctId = SctId::from_const(8_000_013);
pub const ANTIBIOTICS: SctId = SctId::from_const(8_000_014);

pub const CAUSES: SctId = SctId::from_const(8_000_101);
pub const REQUIRES_TEST: SctId = SctId::from_const(8_000_102);
pub const TREATED_BY: SctId = SctId::from_const(8_000_103);
pub const SYMPTOM_OF: SctId = SctId::from_const(8_000_104);
pub const GUIDES_TREATMENT: SctId = SctId::from_const(8_000_105);

pub const INFECTION_CHAIN: &str = "Streptococcal infection → causes → Pharyngitis → requires test → \
                                   Elevated C-reactive protein → treated by → Penicillin";
pub const COUGH_CHAIN: &str = "cough → pneumonia → chest X-ray → antibiotics";

pub const RELEASE_DIR: &str = "release";
pub const CASES_DIR: &str = "cases";
pub const ALIASES_FILE: &str = "aliases.toml";
pub const PAIRS_FILE: &str = "pairs.toml";
pub const CONFIG_FILE: &str = "pipeline.toml";
pub const DIAGNOSES_FILE: &str = "diagnoses.csv";
pub const RECORDS_FILE: &str = "records.csv";
pub const SAMPLE_PARQUET: &str = "sample.parquet";

const FILLER_CONCEPT_BASE: u64 = 10_000_000;
const FILLER_DESCRIPTION_BASE: u64 = 20_000_000;
const FILLER_RELATIONSHIP_BASE: u64 = 30_000_000;
const FILLER_AXIOM_BASE: u64 = 40_000_000;
const CATEGORIES: [&str; 5] = ["finding", "disorder", "procedure", "body structure", "substance"];
const FIRST_RELEASE: u32 = 20200131;
const SECOND_RELEASE: u32 = 20230131;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixtureConfig {
    /// Filler concepts on top of the fixed ones.
    pub concepts: usize,
    pub seed: u64,
    /// Emit superseded and inactivated rows alongside the current ones.
    pub history: bool,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig { concepts: 1000, seed: 7, history: true }
    }
}

/// Rows of a generated release, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Release {
    pub concepts: Vec<ConceptRow>,
    pub descriptions: Vec<DescriptionRow>,
    pub relationships: Vec<RelationshipRow>,
    pub axioms: Vec<AxiomRow>,
}

impl Release {
    pub fn row_count(&self) -> usize {
        self.concepts.len() + self.descriptions.len() + self.relationships.len() + self.axioms.len()
    }

    /// Writes the four component files in RF2 "Full" naming.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let tag = format!("INT_{SECOND_RELEASE}");
        write_file(&dir.join(format!("sct2_Concept_Full_{tag}.txt")), &self.concepts)?;
        write_file(&dir.join(format!("sct2_Description_Full-en_{tag}.txt")), &self.descriptions)?;
        write_file(&dir.join(format!("sct2_Relationship_Full_{tag}.txt")), &self.relationships)?;
        write_file(&dir.join(format!("sct2_sRefset_OWLExpressionFull_{tag}.txt")), &self.axioms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixtureSummary {
    pub root: PathBuf,
    pub release_dir: PathBuf,
    pub concepts: usize,
    pub descriptions: usize,
    pub relationships: usize,
    pub axioms: usize,
}

fn t(yyyymmdd: u32) -> EffectiveTime {
    EffectiveTime::new(yyyymmdd).expect("fixture dates are valid")
}

fn id(v: u64) -> SctId {
    SctId::new(v).expect("fixture ids are valid")
}

struct Builder {
    release: Release,
    next_description: u64,
}

impl Builder {
    fn concept(&mut self, concept: SctId, time: u32, active: bool) {
        self.release.concepts.push(ConceptRow {
            id: concept,
            effective_time: t(time),
            active,
            module_id: CORE_MODULE,
            definition_status_id: PRIMITIVE,
        });
    }

    fn description(&mut self, desc: SctId, concept: SctId, type_id: SctId, term: &str, time: u32, active: bool) {
        self.release.descriptions.push(DescriptionRow {
            id: desc,
            effective_time: t(time),
            active,
            module_id: CORE_MODULE,
            concept_id: concept,
            language_code: "en".into(),
            type_id,
            term: term.into(),
            case_significance_id: CASE_INSENSITIVE,
        });
    }

    /// A concept with one FSN, written in the first release.
    fn named(&mut self, concept: SctId, fsn: &str) {
        self.concept(concept, FIRST_RELEASE, true);
        let d = id(self.next_description);
        self.next_description += 1;
        self.description(d, concept, FSN_TYPE, fsn, FIRST_RELEASE, true);
    }

    #[allow(clippy::too_many_arguments)]
    fn relationship(&mut self, rel: SctId, source: SctId, type_id: SctId, dest: SctId, group: u32, time: u32, active: bool) {
        self.release.relationships.push(RelationshipRow {
            id: rel,
            effective_time: t(time),
            active,
            module_id: CORE_MODULE,
            source_id: source,
            destination_id: dest,
            relationship_group: group,
            type_id,
            characteristic_type_id: INFERRED_RELATIONSHIP,
            modifier_id: EXISTENTIAL_MODIFIER,
        });
    }
}

fn fixed_part(b: &mut Builder, history: bool) {
    // diabetes triples
    b.concept(id(123), FIRST_RELEASE, true);
    b.concept(id(456), FIRST_RELEASE, true);
    b.concept(id(789), FIRST_RELEASE, true);
    b.concept(IS_A, FIRST_RELEASE, true);
    b.concept(FINDING_SITE, FIRST_RELEASE, true);
    b.description(id(1001), id(123), FSN_TYPE, "Diabetes mellitus (disorder)", FIRST_RELEASE, true);
    b.description(id(1002), id(123), SYNONYM_TYPE, "Diabetes Mellitus", FIRST_RELEASE, true);
    b.description(id(1003), id(456), FSN_TYPE, "Structure of endocrine system (body structure)", FIRST_RELEASE, true);
    b.description(id(1004), id(789), FSN_TYPE, "Drug-induced diabetes mellitus (disorder)", FIRST_RELEASE, true);
    b.description(id(1005), IS_A, FSN_TYPE, "Is a (attribute)", FIRST_RELEASE, true);
    b.description(id(1006), FINDING_SITE, FSN_TYPE, "Finding site (attribute)", FIRST_RELEASE, true);
    b.relationship(id(111), id(123), FINDING_SITE, id(456), 0, FIRST_RELEASE, true);
    b.relationship(id(222), id(123), IS_A, id(789), 0, FIRST_RELEASE, true);

    for (concept, fsn) in [
        (CAUSES, "Causes (attribute)"),
        (REQUIRES_TEST, "Requires test (attribute)"),
        (TREATED_BY, "Treated by (attribute)"),
        (SYMPTOM_OF, "Symptom of (attribute)"),
        (GUIDES_TREATMENT, "Guides treatment (attribute)"),
        (STREP_INFECTION, "Streptococcal infection (disorder)"),
        (ELEVATED_CRP, "Elevated C-reactive protein (finding)"),
        (PENICILLIN, "Penicillin (substance)"),
        (COUGH, "cough (finding)"),
        (PNEUMONIA, "pneumonia (disorder)"),
        (CHEST_XRAY, "chest X-ray (procedure)"),
        (ANTIBIOTICS, "antibiotics (product)"),
    ] {
        b.named(concept, fsn);
    }

    // Pharyngitis carries history: its FSN was reworded in the second release.
    b.concept(PHARYNGITIS, FIRST_RELEASE, true);
    let fsn = id(b.next_description);
    b.next_description += 1;
    if history {
        b.description(fsn, PHARYNGITIS, FSN_TYPE, "Sore throat (disorder)", FIRST_RELEASE, true);
    }
    b.description(fsn, PHARYNGITIS, FSN_TYPE, "Pharyngitis (disorder)", SECOND_RELEASE, true);

    let chain = [
        (5001, STREP_INFECTION, CAUSES, PHARYNGITIS),
        (5002, PHARYNGITIS, REQUIRES_TEST, ELEVATED_CRP),
        (5003, ELEVATED_CRP, TREATED_BY, PENICILLIN),
        (5011, COUGH, SYMPTOM_OF, PNEUMONIA),
        (5012, PNEUMONIA, REQUIRES_TEST, CHEST_XRAY),
        (5013, CHEST_XRAY, GUIDES_TREATMENT, ANTIBIOTICS),
    ];
    for (rel, s, ty, d) in chain {
        b.relationship(id(rel), s, ty, d, 0, FIRST_RELEASE, true);
    }
    if history {
        // a retired shortcut that must not appear in the snapshot
        b.relationship(id(5004), STREP_INFECTION, TREATED_BY, PENICILLIN, 0, FIRST_RELEASE, true);
        b.relationship(id(5004), STREP_INFECTION, TREATED_BY, PENICILLIN, 0, SECOND_RELEASE, false);
    }
}

fn filler(b: &mut Builder, config: &FixtureConfig, rng: &mut ChaCha8Rng) {
    let n = config.concepts as u64;
    let concept_id = |i: u64| id(FILLER_CONCEPT_BASE + i);
    let category = |i: u64| CATEGORIES[(i % CATEGORIES.len() as u64) as usize];
    let mut next_rel = FILLER_RELATIONSHIP_BASE;
    let mut next_axiom = FILLER_AXIOM_BASE;
    for i in 0..n {
        let c = concept_id(i);
        let retired = config.history && rng.gen_bool(0.02);
        b.concept(c, FIRST_RELEASE, true);
        if retired {
            b.concept(c, SECOND_RELEASE, false);
        } else if config.history && rng.gen_bool(0.1) {
            b.concept(c, SECOND_RELEASE, true);
        }

        let fsn = id(FILLER_DESCRIPTION_BASE + 2 * i);
        let term = format!("Fixture concept {i} ({})", category(i));
        if config.history && rng.gen_bool(0.1) {
            b.description(fsn, c, FSN_TYPE, &format!("Fixture concept {i} draft ({})", category(i)), FIRST_RELEASE, true);
            b.description(fsn, c, FSN_TYPE, &term, SECOND_RELEASE, true);
        } else {
            b.description(fsn, c, FSN_TYPE, &term, FIRST_RELEASE, true);
        }
        b.description(id(FILLER_DESCRIPTION_BASE + 2 * i + 1), c, SYNONYM_TYPE, &format!("Fixture term {i}"), FIRST_RELEASE, true);

        if i == 0 {
            b.relationship(id(next_rel), c, IS_A, id(123), 0, FIRST_RELEASE, true);
            next_rel += 1;
            continue;
        }
        let parent = concept_id(rng.gen_range(0..i));
        let rel = id(next_rel);
        next_rel += 1;
        if config.history && rng.gen_bool(0.1) {
            let old_parent = concept_id(rng.gen_range(0..i));
            b.relationship(rel, c, IS_A, old_parent, 0, FIRST_RELEASE, true);
            b.relationship(rel, c, IS_A, parent, 0, SECOND_RELEASE, true);
        } else {
            b.relationship(rel, c, IS_A, parent, 0, FIRST_RELEASE, true);
        }
        if config.history && rng.gen_bool(0.03) {
            let rel = id(next_rel);
            next_rel += 1;
            let stale = concept_id(rng.gen_range(0..i));
            b.relationship(rel, c, IS_A, stale, 0, FIRST_RELEASE, true);
            b.relationship(rel, c, IS_A, stale, 0, SECOND_RELEASE, false);
        }
        if matches!(category(i), "finding" | "disorder") && rng.gen_bool(0.3) {
            // body structures are the filler ids ≡ 3 (mod 5)
            let sites = i / 5 + u64::from(i % 5 > 3);
            if sites > 0 {
                let site = concept_id(5 * rng.gen_range(0..sites) + 3);
                if rng.gen_bool(0.2) {
                    // stated only through a class axiom
                    let expr = format!(
                        "SubClassOf(:{c} ObjectIntersectionOf(:{parent} ObjectSomeValuesFrom(:{ROLE_GROUP} ObjectSomeValuesFrom(:{FINDING_SITE} :{site}))))"
                    );
                    b.release.axioms.push(AxiomRow {
                        id: id(next_axiom),
                        effective_time: t(FIRST_RELEASE),
                        active: true,
                        module_id: CORE_MODULE,
                        refset_id: OWL_AXIOM_REFSET,
                        referenced_component_id: c,
                        owl_expression: expr,
                    });
                    next_axiom += 1;
                } else {
                    b.relationship(id(next_rel), c, FINDING_SITE, site, 1, FIRST_RELEASE, true);
                    next_rel += 1;
                }
            }
        }
    }
}

/// Generates the release rows for `config`. The same config always yields
/// the same rows in the same order.
pub fn generate_release(config: &FixtureConfig) -> Release {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut b = Builder { release: Release::default(), next_description: 6001 };
    fixed_part(&mut b, config.history);
    filler(&mut b, config, &mut rng);
    if config.history {
        // file order should not matter to the snapshot
        b.release.concepts.shuffle(&mut rng);
        b.release.descriptions.shuffle(&mut rng);
        b.release.relationships.shuffle(&mut rng);
    }
    b.release
}

pub fn fixture_aliases() -> AliasTable {
    let mut aliases = AliasTable::default();
    for (type_id, alias) in [
        (CAUSES, "causes"),
        (REQUIRES_TEST, "requires test"),
        (TREATED_BY, "treated by"),
        (SYMPTOM_OF, "symptom of"),
        (GUIDES_TREATMENT, "guides treatment"),
    ] {
        aliases.0.insert(type_id, alias.into());
    }
    aliases
}

fn pairs_toml() -> String {
    format!(
        "[[pairs]]\nsource = {STREP_INFECTION}\ndestination = {PENICILLIN}\nmax_hops = 3\n\n\
         [[pairs]]\nsource = {COUGH}\ndestination = {ANTIBIOTICS}\nmax_hops = 3\n\n\
         [[pairs]]\nsource = 123\ndestination = 456\nmax_hops = 1\n"
    )
}

fn config_toml() -> String {
    format!(
        "# Relative paths resolve against this file's directory.\n\
         [paths]\nrelease = \"{RELEASE_DIR}\"\nstore = \"store\"\nout = \"out\"\n\
         aliases = \"{ALIASES_FILE}\"\npairs = \"{PAIRS_FILE}\"\n\
         diagnoses = \"{CASES_DIR}/{DIAGNOSES_FILE}\"\nrecords = \"{CASES_DIR}/{RECORDS_FILE}\"\n\n\
         [graph]\nflush_threshold = 1000\nshards = 1\nworkers = 1\n\n\
         [search]\nmax_depth = 4\nmax_paths = 3\n\n\
         [dataset]\nschema = \"platypus\"\nbackend = \"mock\"\nknowledge = true\n\n\
         [fusion]\nstrategy = \"weighted\"\nw_moe = 0.6\nw_esft = 0.4\n"
    )
}

/// Diagnosis and record tables: the anxiety visit, a cough visit, a sore
/// throat visit, and one diagnosis with no records.
pub fn case_tables() -> (Vec<DiagnosisRow>, Vec<RecordRow>) {
    let diag = |visit: u64, g: &str, age: &str, time: &str, clinic: &str, code: &str, name: &str| DiagnosisRow {
        visit_id: visit,
        gender: g.into(),
        age: age.into(),
        age_unit: "Years".into(),
        visit_time: time.into(),
        department: "General Outpatient Clinic".into(),
        clinic_type: clinic.into(),
        code: code.into(),
        name: name.into(),
    };
    let diagnoses = vec![
        diag(236576425, "Male", "32", "45293.38157", "Clinical Psychology", "F41.101", "Anxiety Disorder"),
        diag(236576425, "Male", "32", "45293.38157", "Clinical Psychology", "F41.101", "Anxiety Disorder"),
        diag(236576426, "Female", "29", "45294.36734", "Clinical Psychology", "F32.901", "Depressive Episode"),
        diag(236576427, "Female", "61", "45300.41250", "Respiratory Medicine", "J18.9", "Pneumonia"),
        diag(236576428, "Male", "19", "45310.59028", "Otolaryngology", "J02.0", "Streptococcal pharyngitis"),
    ];
    let visits: [(u64, &str, &str, &str, &str, &str, &str, &[(&str, &str)]); 3] = [
        (
            236576425,
            "Male",
            "32",
            "2024/12/9/9",
            "Clinical Psychology",
            "F41.101: Anxiety Disorder",
            "2024/1/2",
            &[
                ("Chief Complaint", "Anxiety and tension for 4 weeks."),
                ("History of Present Illness", "Work-related intermittent anxiety over the past 4 weeks, occasionally disturbing sleep."),
                ("Past Medical History", "Anxiety first noted Jan 2020. No known drug allergies."),
                ("Physical Examination", "T 36.2 °C, P 101 bpm, R 16 rpm, BP 117/78 mmHg. Alert, cooperative."),
                ("Collateral Tests", "2024-01-02 GAD-7: 5 (mild anxiety); PHQ-9: 7 (mild depression)."),
                ("Treatment Plan", "1. Paroxetine ER 12.5 mg PO qd x 20 days. 2. Psychotherapy."),
            ],
        ),
        (
            236576427,
            "Female",
            "61",
            "2024/1/9 9:54:00",
            "Respiratory Medicine",
            "J18.9: Pneumonia",
            "2024/1/9",
            &[
                ("Chief Complaint", "Productive cough and fever for 3 days."),
                ("History of Present Illness", "Cough worsening at night, yellow sputum, no haemoptysis."),
                ("Physical Examination", "T 38.4 °C, RR 22 rpm, crackles over the right lower lobe."),
                ("Treatment Plan", "Chest imaging, then empirical antibiotics."),
            ],
        ),
        (
            236576428,
            "Male",
            "19",
            "2024/1/19 14:10:00",
            "Otolaryngology",
            "J02.0: Streptococcal pharyngitis",
            "2024/1/19",
            &[
                ("Chief Complaint", "Sore throat and fever for 2 days."),
                ("History of Present Illness", "Classmate had a confirmed Streptococcal infection last week."),
                ("Physical Examination", "Tonsillar exudate, tender anterior cervical nodes."),
                ("Treatment Plan", "Rapid antigen test; oral penicillin if positive."),
            ],
        ),
    ];
    let mut records = Vec::new();
    for (visit, g, age, time, clinic, dx, date, fields) in visits {
        for (condition, value) in fields {
            records.push(RecordRow {
                visit_id: visit,
                gender: g.into(),
                age: age.into(),
                age_unit: "Years".into(),
                visit_time: time.into(),
                department: "General Outpatient Clinic".into(),
                clinic_type: clinic.into(),
                record_type: "Initial Visit".into(),
                diagnosis: dx.into(),
                condition_type: (*condition).into(),
                value: (*value).into(),
                date: date.into(),
            });
        }
    }
    (diagnoses, records)
}

fn sample_parquet(path: &Path) -> io::Result<()> {
    let rows = vec![vec![
        "[Patient] Doctor, hello. I have had a sore throat for two days.\n[Doctor] Any fever?\nSummary:".to_string(),
        "Diagnostic information: J02.0: Streptococcal pharyngitis. Treatment plan: oral penicillin.".to_string(),
        "Based on the input from a Otolaryngology outpatient consultation, generate diagnostic conclusions and a treatment plan."
            .to_string(),
        "2024/1/19 14:10:00".to_string(),
    ]];
    write_string_parquet(path, &["input", "output", "instruction", "data_source"], &rows).map_err(io::Error::other)
}

/// Writes a complete fixture tree under `root`:
/// `release/`, `cases/`, `aliases.toml`, `pairs.toml` and `pipeline.toml`.
pub fn write_fixture(root: &Path, config: &FixtureConfig) -> io::Result<FixtureSummary> {
    let release = generate_release(config);
    let release_dir = root.join(RELEASE_DIR);
    release.write(&release_dir)?;
    fs::write(root.join(ALIASES_FILE), fixture_aliases().to_toml())?;
    fs::write(root.join(PAIRS_FILE), pairs_toml())?;
    fs::write(root.join(CONFIG_FILE), config_toml())?;
    let cases = root.join(CASES_DIR);
    fs::create_dir_all(&cases)?;
    let (diagnoses, records) = case_tables();
    write_diagnoses(&cases.join(DIAGNOSES_FILE), &diagnoses).map_err(io::Error::other)?;
    write_records(&cases.join(RECORDS_FILE), &records).map_err(io::Error::other)?;
    sample_parquet(&cases.join(SAMPLE_PARQUET))?;
    Ok(FixtureSummary {
        root: root.to_path_buf(),
        release_dir,
        concepts: release.concepts.len(),
        descriptions: release.descriptions.len(),
        relationships: release.relationships.len(),
        axioms: release.axioms.len(),
    })
}
