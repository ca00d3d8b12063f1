use std::collections::BTreeSet;

use super::action::AgentAction;
use super::acts::DialogueActType;
use super::frame::{SemanticFrame, Speaker};
use super::kb::{Constraints, KnowledgeBase};
use super::ontology::{SlotId, ANYTHING, NO_MATCH};
use super::world::World;
use crate::error::Result;

/// Agent-side summary of the dialogue so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DialogueTracker {
    /// Latest value the user gave for each slot (may be `anything`).
    pub constraints: Constraints,
    /// Slots the user asked about that the agent has not informed since.
    pub pending_requests: BTreeSet<SlotId>,
    /// Target slots of the agent's inform actions so far.
    pub agent_informed: BTreeSet<SlotId>,
    pub agent_requested: BTreeSet<SlotId>,
    pub last_user: Option<SemanticFrame>,
    pub last_agent: Option<SemanticFrame>,
    /// KB row of the most recent booking.
    pub booked: Option<usize>,
    matches: Vec<usize>,
}

impl DialogueTracker {
    pub fn new(kb: &KnowledgeBase) -> Self {
        DialogueTracker {
            matches: (0..kb.len()).collect(),
            ..Default::default()
        }
    }

    /// KB rows consistent with the user's constraints, in KB order.
    pub fn matches(&self) -> &[usize] {
        &self.matches
    }

    pub fn last_user_act(&self) -> Option<DialogueActType> {
        self.last_user.as_ref().map(|f| f.act)
    }

    pub fn last_agent_act(&self) -> Option<DialogueActType> {
        self.last_agent.as_ref().map(|f| f.act)
    }

    pub fn update_user(&mut self, frame: &SemanticFrame, kb: &KnowledgeBase) -> Result<()> {
        debug_assert_eq!(frame.speaker, Speaker::User);
        let mut changed = false;
        for (&slot, value) in &frame.inform_slots {
            if self.constraints.get(&slot) != Some(value) {
                self.constraints.insert(slot, value.clone());
                changed = true;
            }
        }
        self.pending_requests.extend(frame.request_slots.iter().copied());
        if changed {
            self.matches = kb.query(&self.constraints)?;
        }
        self.last_user = Some(frame.clone());
        Ok(())
    }

    /// Fills an action template with KB values.
    ///
    /// `inform(ticket)` books the first matching row and echoes all of its
    /// showing attributes; other informs carry the first match's value for
    /// their slot, or `none` when nothing matches.
    pub fn instantiate(&self, action: &AgentAction, world: &World) -> SemanticFrame {
        let mut frame = SemanticFrame::new(action.act, Speaker::Agent);
        let top = self.matches.first().map(|&i| world.kb.row(i));
        match (action.act, action.slot) {
            (DialogueActType::Request, Some(s)) => {
                frame.request_slots.insert(s);
            }
            (DialogueActType::Inform, Some(s)) if s == world.ticket => match top {
                Some(row) => {
                    for a in world.attribute_slots() {
                        frame.inform_slots.insert(a, row.get(a).to_string());
                    }
                    frame.inform_slots.insert(s, row.get(s).to_string());
                }
                None => {
                    frame.inform_slots.insert(s, NO_MATCH.to_string());
                }
            },
            (DialogueActType::Inform, Some(s)) if s == world.taskcomplete => {
                let done = world.ontology.slot(s).values.first().cloned();
                frame
                    .inform_slots
                    .insert(s, done.unwrap_or_else(|| ANYTHING.to_string()));
            }
            (DialogueActType::Inform, Some(s)) => {
                let v = top.map_or(NO_MATCH, |row| row.get(s));
                frame.inform_slots.insert(s, v.to_string());
            }
            _ => {}
        }
        frame
    }

    pub fn update_agent(&mut self, action: &AgentAction, frame: &SemanticFrame, world: &World) {
        match (action.act, action.slot) {
            (DialogueActType::Request, Some(s)) => {
                self.agent_requested.insert(s);
            }
            (DialogueActType::Inform, Some(s)) => {
                self.agent_informed.insert(s);
                for slot in frame.inform_slots.keys() {
                    self.pending_requests.remove(slot);
                }
                if s == world.ticket {
                    self.booked = frame
                        .inform_slots
                        .get(&s)
                        .filter(|v| v.as_str() != NO_MATCH)
                        .and_then(|_| self.matches.first().copied());
                }
            }
            _ => {}
        }
        self.last_agent = Some(frame.clone());
    }
}
