use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::ActionSpace;
use super::goal::UserGoal;
use super::kb::{Constraints, KbRow, KnowledgeBase};
use super::ontology::{Ontology, SlotId};
use crate::error::{Error, Result};

/// Slots a booking almost always depends on. The goal generator constrains
/// them often; everything else is a rarer secondary attribute.
pub const CORE_SLOTS: [&str; 6] = ["moviename", "date", "starttime", "city", "theater", "numberofpeople"];

pub const TICKET_SLOT: &str = "ticket";
pub const TASKCOMPLETE_SLOT: &str = "taskcomplete";

/// Knobs of the synthetic goal corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoalProfile {
    pub n_goals: usize,
    /// Probability that each core slot is constrained.
    pub core_prob: f64,
    /// Inclusive range for the number of secondary constraints.
    pub min_secondary: usize,
    pub max_secondary: usize,
    /// Inclusive upper bound on extra request slots beyond `ticket`.
    pub max_extra_requests: usize,
}

impl Default for GoalProfile {
    fn default() -> Self {
        GoalProfile {
            n_goals: 128,
            core_prob: 0.4,
            min_secondary: 2,
            max_secondary: 3,
            max_extra_requests: 2,
        }
    }
}

/// Everything an episode needs that stays fixed for a run.
#[derive(Debug, Clone)]
pub struct World {
    pub ontology: Arc<Ontology>,
    pub actions: Arc<ActionSpace>,
    pub kb: Arc<KnowledgeBase>,
    pub goals: Arc<Vec<UserGoal>>,
    pub ticket: SlotId,
    pub taskcomplete: SlotId,
    /// Ids of the [`CORE_SLOTS`] present in the ontology, in priority order.
    pub priority: Vec<SlotId>,
}

impl World {
    pub fn new(ontology: Ontology, kb: KnowledgeBase, goals: Vec<UserGoal>) -> Result<Self> {
        let ticket = ontology.id(TICKET_SLOT)?;
        let taskcomplete = ontology.id(TASKCOMPLETE_SLOT)?;
        if goals.is_empty() {
            return Err(Error::InvalidArgument("goal corpus is empty".into()));
        }
        let actions = ActionSpace::new(&ontology);
        let priority = CORE_SLOTS.iter().filter_map(|n| ontology.id(n).ok()).collect();
        Ok(World {
            priority,
            ontology: Arc::new(ontology),
            actions: Arc::new(actions),
            kb: Arc::new(kb),
            goals: Arc::new(goals),
            ticket,
            taskcomplete,
        })
    }

    /// Informable slots that describe a showing (everything but the booking slots).
    pub fn attribute_slots(&self) -> Vec<SlotId> {
        attribute_slots(&self.ontology)
    }
}

fn attribute_slots(ont: &Ontology) -> Vec<SlotId> {
    ont.informable()
        .filter(|&s| ont.name(s) != TICKET_SLOT && ont.name(s) != TASKCOMPLETE_SLOT)
        .collect()
}

/// Draws a deduplicated knowledge base of `n_rows` uniform random showings.
pub fn generate_kb(ont: &Ontology, rng: &mut ChaCha8Rng, n_rows: usize) -> Result<KnowledgeBase> {
    if n_rows == 0 {
        return Err(Error::InvalidArgument("n_rows must be at least 1".into()));
    }
    let capacity: f64 = ont.informable().map(|s| ont.slot(s).values.len() as f64).product();
    if (n_rows as f64) > capacity {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {n_rows} distinct rows from a domain of {capacity}"
        )));
    }
    let mut rows: Vec<KbRow> = Vec::with_capacity(n_rows);
    let mut seen = std::collections::HashSet::new();
    while rows.len() < n_rows {
        let cells: Vec<String> = ont
            .slot_ids()
            .map(|s| {
                let spec = ont.slot(s);
                if spec.informable {
                    spec.values[rng.gen_range(0..spec.values.len())].clone()
                } else {
                    String::new()
                }
            })
            .collect();
        let row = KbRow(cells);
        if seen.insert(row.clone()) {
            rows.push(row);
        }
    }
    KnowledgeBase::new(ont, rows)
}

/// Samples goals by picking a KB row and copying a subset of its values, so
/// every goal is satisfiable by construction.
pub fn generate_goals(
    ont: &Ontology,
    kb: &KnowledgeBase,
    rng: &mut ChaCha8Rng,
    profile: &GoalProfile,
) -> Result<Vec<UserGoal>> {
    if kb.is_empty() {
        return Err(Error::InvalidArgument("knowledge base is empty".into()));
    }
    let ticket = ont.id(TICKET_SLOT)?;
    let core: Vec<SlotId> = CORE_SLOTS
        .iter()
        .filter_map(|n| ont.id(n).ok())
        .filter(|&s| ont.slot(s).informable)
        .collect();
    let secondary: Vec<SlotId> = attribute_slots(ont).into_iter().filter(|s| !core.contains(s)).collect();
    let requestable: Vec<SlotId> = attribute_slots(ont)
        .into_iter()
        .filter(|&s| ont.slot(s).requestable)
        .collect();
    let max_secondary = profile.max_secondary.min(secondary.len());
    let min_secondary = profile.min_secondary.min(max_secondary);

    let mut goals = Vec::with_capacity(profile.n_goals);
    for _ in 0..profile.n_goals {
        let row = kb.row(rng.gen_range(0..kb.len()));
        let mut inform = Constraints::new();
        for &s in &core {
            if rng.gen_bool(profile.core_prob) {
                inform.insert(s, row.get(s).to_string());
            }
        }
        let n_sec = rng.gen_range(min_secondary..=max_secondary);
        for &s in secondary.choose_multiple(rng, n_sec) {
            inform.insert(s, row.get(s).to_string());
        }
        if inform.is_empty() {
            let s = core.first().copied().unwrap_or(secondary[0]);
            inform.insert(s, row.get(s).to_string());
        }

        let mut requests = BTreeSet::new();
        requests.insert(ticket);
        let free: Vec<SlotId> = requestable
            .iter()
            .copied()
            .filter(|s| !inform.contains_key(s))
            .collect();
        let n_req = rng.gen_range(0..=profile.max_extra_requests.min(free.len()));
        requests.extend(free.choose_multiple(rng, n_req).copied());

        goals.push(UserGoal {
            inform_slots: inform,
            request_slots: requests,
        });
    }
    Ok(goals)
}

/// Deterministic function of `(seed, n_rows, profile)`.
pub fn generate_world(
    ont: &Ontology,
    seed: u64,
    n_rows: usize,
    profile: &GoalProfile,
) -> Result<(KnowledgeBase, Vec<UserGoal>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kb = generate_kb(ont, &mut rng, n_rows)?;
    let goals = generate_goals(ont, &kb, &mut rng, profile)?;
    Ok((kb, goals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::goal::goals_to_text;

    #[test]
    fn deterministic_and_seed_sensitive() {
        let ont = Ontology::movie_default();
        let p = GoalProfile::default();
        let (kb1, g1) = generate_world(&ont, 7, 100, &p).unwrap();
        let (kb2, g2) = generate_world(&ont, 7, 100, &p).unwrap();
        assert_eq!(kb1.to_text(&ont), kb2.to_text(&ont));
        assert_eq!(goals_to_text(&g1, &ont), goals_to_text(&g2, &ont));
        let (kb3, _) = generate_world(&ont, 8, 100, &p).unwrap();
        assert_ne!(kb1.to_text(&ont), kb3.to_text(&ont));
        assert_eq!(kb1.len(), 100);
        assert_eq!(g1.len(), 128);
    }

    #[test]
    fn every_goal_is_satisfiable() {
        let ont = Ontology::movie_default();
        let (kb, goals) = generate_world(&ont, 3, 50, &GoalProfile::default()).unwrap();
        let ticket = ont.id(TICKET_SLOT).unwrap();
        for g in &goals {
            assert!(!kb.query(&g.inform_slots).unwrap().is_empty());
            assert!(g.request_slots.contains(&ticket));
            assert!(g.inform_slots.keys().all(|s| !g.request_slots.contains(s)));
        }
    }

    #[test]
    fn zero_rows_is_an_error() {
        let ont = Ontology::movie_default();
        assert!(generate_world(&ont, 1, 0, &GoalProfile::default()).is_err());
    }
}
