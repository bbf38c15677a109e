//! Template-generated corpora that stand in for real relation datasets.
//!
//! Every relation class owns three trigger phrases of two words. A mention
//! of that class places one of its phrases between the two entities,
//! interleaved with distractor words. Sibling classes (the two directions of
//! one relation, or adjacent relation types) share the first word of each
//! phrase, so only the second word tells them apart. `no_relation` mentions
//! carry only distractors between the entities. Relation mentions sometimes
//! also carry a stray trigger word from another class outside the entities.
//! The lexicon is a fixed function of the preset; the seed controls which
//! mentions are drawn.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Corpus, LabelId, LabelInventory, RelationMention, Span};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

pub const NO_RELATION: &str = "no_relation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    SemevalLike,
    TacredLike,
}

impl PresetName {
    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::SemevalLike => "semeval-like",
            PresetName::TacredLike => "tacred-like",
        }
    }

    /// Share of `no_relation` mentions.
    pub fn no_relation_share(self) -> f64 {
        match self {
            PresetName::SemevalLike => 0.174,
            PresetName::TacredLike => 0.787,
        }
    }

    /// Full label inventory, `no_relation` first.
    pub fn label_names(self) -> Vec<String> {
        let mut names = vec![NO_RELATION.to_string()];
        match self {
            PresetName::SemevalLike => {
                for rel in SEMEVAL_RELATIONS {
                    names.push(format!("{rel}(e1,e2)"));
                    names.push(format!("{rel}(e2,e1)"));
                }
            }
            PresetName::TacredLike => names.extend(TACRED_RELATIONS.iter().map(|s| s.to_string())),
        }
        names
    }

    pub fn inventory(self) -> LabelInventory {
        LabelInventory::new(self.label_names(), NO_RELATION).expect("preset labels are unique")
    }

    fn lexicon_seed(self) -> u64 {
        match self {
            PresetName::SemevalLike => 0x5e4e_0a11,
            PresetName::TacredLike => 0x7ac2_ed00,
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semeval-like" => Ok(PresetName::SemevalLike),
            "tacred-like" => Ok(PresetName::TacredLike),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

const SEMEVAL_RELATIONS: [&str; 9] = [
    "Cause-Effect",
    "Instrument-Agency",
    "Product-Producer",
    "Content-Container",
    "Entity-Origin",
    "Entity-Destination",
    "Component-Whole",
    "Member-Collection",
    "Message-Topic",
];

const TACRED_RELATIONS: [&str; 41] = [
    "org:alternate_names",
    "org:city_of_headquarters",
    "org:country_of_headquarters",
    "org:dissolved",
    "org:founded",
    "org:founded_by",
    "org:member_of",
    "org:members",
    "org:number_of_employees/members",
    "org:parents",
    "org:political/religious_affiliation",
    "org:shareholders",
    "org:stateorprovince_of_headquarters",
    "org:subsidiaries",
    "org:top_members/employees",
    "org:website",
    "per:age",
    "per:alternate_names",
    "per:cause_of_death",
    "per:charges",
    "per:children",
    "per:cities_of_residence",
    "per:city_of_birth",
    "per:city_of_death",
    "per:countries_of_residence",
    "per:country_of_birth",
    "per:country_of_death",
    "per:date_of_birth",
    "per:date_of_death",
    "per:employee_of",
    "per:origin",
    "per:other_family",
    "per:parents",
    "per:religion",
    "per:schools_attended",
    "per:siblings",
    "per:spouse",
    "per:stateorprovince_of_birth",
    "per:stateorprovince_of_death",
    "per:stateorprovinces_of_residence",
    "per:title",
];

const DISTRACTORS: [&str; 40] = [
    "the", "a", "an", "this", "that", "these", "its", "their", "our", "some", "was", "is", "were",
    "been", "has", "had", "in", "on", "at", "with", "from", "into", "over", "under", "and", "or",
    "but", "then", "also", "very", "just", "still", "today", "later", "again", "here", "there",
    "one", "two", "several",
];

const FAMILIES: usize = 3;
const ENTITY_WORDS: usize = 30;
const STRAY_TRIGGER_PROB: f64 = 0.2;

struct Phrase {
    shared: String,
    own: String,
}

struct Lexicon {
    /// Indexed by relation class id (`no_relation` has no families).
    families: Vec<Vec<Phrase>>,
    entities: Vec<String>,
}

impl Lexicon {
    fn build(preset: PresetName) -> Lexicon {
        let mut r = rng::seeded(preset.lexicon_seed());
        let mut used: HashSet<String> = DISTRACTORS.iter().map(|s| s.to_string()).collect();
        let mut fresh = |r: &mut Rng| loop {
            let w = pseudo_word(r);
            if used.insert(w.clone()) {
                break w;
            }
        };
        let k = preset.label_names().len();
        let n_rel = k - 1;
        // Relation classes 1..k are paired (1,2), (3,4), ...; a pair shares
        // the first slot of every family.
        let mut shared: Vec<Vec<String>> = Vec::new();
        for _ in 0..n_rel.div_ceil(2) {
            shared.push((0..FAMILIES).map(|_| fresh(&mut r)).collect());
        }
        let mut families = vec![Vec::new()];
        for c in 1..k {
            let pair = (c - 1) / 2;
            families.push(
                (0..FAMILIES)
                    .map(|f| Phrase {
                        shared: shared[pair][f].clone(),
                        own: fresh(&mut r),
                    })
                    .collect(),
            );
        }
        let entities = (0..ENTITY_WORDS).map(|_| fresh(&mut r)).collect();
        Lexicon { families, entities }
    }

    fn any_trigger(&self, r: &mut Rng) -> String {
        let c = r.gen_range(1..self.families.len());
        let fam = &self.families[c][r.gen_range(0..FAMILIES)];
        if r.gen_bool(0.5) {
            fam.shared.clone()
        } else {
            fam.own.clone()
        }
    }
}

fn pseudo_word(r: &mut Rng) -> String {
    const ONSETS: [&str; 16] = [
        "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr",
    ];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    const CODAS: [&str; 6] = ["", "", "n", "r", "l", "s"];
    let syllables = r.gen_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS[r.gen_range(0..ONSETS.len())]);
        w.push_str(VOWELS[r.gen_range(0..VOWELS.len())]);
    }
    w.push_str(CODAS[r.gen_range(0..CODAS.len())]);
    w
}

fn distractor(r: &mut Rng) -> String {
    DISTRACTORS[r.gen_range(0..DISTRACTORS.len())].to_string()
}

fn entity(lex: &Lexicon, r: &mut Rng) -> Vec<String> {
    let n = if r.gen_bool(0.3) { 2 } else { 1 };
    (0..n)
        .map(|_| lex.entities[r.gen_range(0..lex.entities.len())].clone())
        .collect()
}

fn filler(r: &mut Rng, max: usize) -> Vec<String> {
    let n = r.gen_range(0..=max);
    (0..n).map(|_| distractor(r)).collect()
}

fn mention(lex: &Lexicon, class: usize, r: &mut Rng) -> RelationMention {
    let mut mid: Vec<String> = if class == 0 {
        (0..r.gen_range(2..=4)).map(|_| distractor(r)).collect()
    } else {
        let fam = &lex.families[class][r.gen_range(0..FAMILIES)];
        let mut words = vec![fam.shared.clone(), fam.own.clone()];
        for _ in 0..r.gen_range(0..=2) {
            let at = r.gen_range(0..=words.len());
            words.insert(at, distractor(r));
        }
        words
    };
    let mut pre = filler(r, 2);
    let mut post = filler(r, 2);
    if class != 0 && r.gen_bool(STRAY_TRIGGER_PROB) {
        let stray = lex.any_trigger(r);
        if r.gen_bool(0.5) {
            pre.push(stray);
        } else {
            post.insert(0, stray);
        }
    }
    let e1 = entity(lex, r);
    let e2 = entity(lex, r);

    let mut tokens = pre;
    let s1 = Span::new(tokens.len(), tokens.len() + e1.len());
    tokens.extend(e1);
    tokens.append(&mut mid);
    let s2 = Span::new(tokens.len(), tokens.len() + e2.len());
    tokens.extend(e2);
    tokens.append(&mut post);
    RelationMention::new(tokens, s1, s2, Some(LabelId(class)))
        .expect("generated mentions are well formed")
}

/// Generates `n_mentions` labeled mentions. The `no_relation` count is
/// `round(share * n)`; the remaining mentions are spread over the relation
/// classes as evenly as possible.
pub fn generate_synthetic(preset: PresetName, n_mentions: usize, seed: u64) -> Result<Corpus> {
    let inventory = preset.inventory();
    let k = inventory.len();
    if n_mentions < 10 * k {
        return Err(Error::InvalidConfig(format!(
            "{preset} needs at least {} mentions, got {n_mentions}",
            10 * k
        )));
    }
    let lex = Lexicon::build(preset);
    let n_nr = (preset.no_relation_share() * n_mentions as f64).round() as usize;
    let n_rel = n_mentions - n_nr;
    let mut classes = vec![0usize; n_nr];
    for c in 1..k {
        let base = n_rel / (k - 1);
        let extra = usize::from(c - 1 < n_rel % (k - 1));
        classes.extend(std::iter::repeat_n(c, base + extra));
    }
    let mut r = rng::seeded(rng::derive(seed, "synthetic-order", 0));
    classes.shuffle(&mut r);
    let mut r = rng::seeded(rng::derive(seed, "synthetic-mentions", 0));
    let mentions = classes.into_iter().map(|c| mention(&lex, c, &mut r)).collect();
    Corpus::new(inventory, mentions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semeval_like_shape() {
        let c = generate_synthetic(PresetName::SemevalLike, 4000, 7).unwrap();
        assert_eq!(c.inventory().len(), 19);
        assert_eq!(c.len(), 4000);
        let nr = c.class_counts()[c.inventory().no_relation().index()];
        assert!((nr as f64 - 0.174 * 4000.0).abs() <= 1.0, "{nr}");
    }

    #[test]
    fn tacred_like_shape() {
        let c = generate_synthetic(PresetName::TacredLike, 2000, 7).unwrap();
        assert_eq!(c.inventory().len(), 42);
        let nr = c.class_counts()[c.inventory().no_relation().index()];
        assert!((nr as f64 - 0.787 * 2000.0).abs() <= 1.0, "{nr}");
        assert!(c.class_counts().iter().all(|&n| n > 0));
    }

    #[test]
    fn priors_hold_for_any_size() {
        for preset in [PresetName::SemevalLike, PresetName::TacredLike] {
            for n in [1000, 1234, 5001] {
                let c = generate_synthetic(preset, n, 1).unwrap();
                let nr = c.class_counts()[0] as f64 / n as f64;
                assert!((nr - preset.no_relation_share()).abs() <= 0.005);
            }
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic(PresetName::SemevalLike, 500, 3).unwrap();
        let b = generate_synthetic(PresetName::SemevalLike, 500, 3).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(PresetName::SemevalLike, 500, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unknown_preset_and_small_corpus() {
        assert!(matches!(
            "conll".parse::<PresetName>(),
            Err(Error::UnknownPreset(_))
        ));
        assert!(generate_synthetic(PresetName::SemevalLike, 100, 0).is_err());
    }

    #[test]
    fn every_relation_has_three_families() {
        let lex = Lexicon::build(PresetName::SemevalLike);
        assert!(lex.families[0].is_empty());
        for fams in &lex.families[1..] {
            assert_eq!(fams.len(), 3);
        }
    }
}
