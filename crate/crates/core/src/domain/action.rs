use std::fmt;

use super::acts::DialogueActType;
use super::frame::{SemanticFrame, Speaker};
use super::ontology::{Ontology, SlotId};

/// Slot-free agent acts appended after the request and inform templates.
pub const SPECIAL_ACTS: [DialogueActType; 6] = [
    DialogueActType::Greeting,
    DialogueActType::Thanks,
    DialogueActType::Deny,
    DialogueActType::ConfirmAnswer,
    DialogueActType::Closing,
    DialogueActType::ConfirmQuestion,
];

/// A frame skeleton the agent can emit. Inform values are filled in at
/// step time from the knowledge base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgentAction {
    pub index: usize,
    pub act: DialogueActType,
    pub slot: Option<SlotId>,
}

impl AgentAction {
    pub fn describe(&self, ont: &Ontology) -> String {
        match self.slot {
            Some(s) => format!("{}({})", self.act, ont.name(s)),
            None => format!("{}()", self.act),
        }
    }
}

impl fmt::Display for AgentAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            Some(s) => write!(f, "{}({})", self.act, s),
            None => write!(f, "{}()", self.act),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    actions: Vec<AgentAction>,
    request_of: Vec<Option<usize>>,
    inform_of: Vec<Option<usize>>,
}

impl ActionSpace {
    /// `request(s)` for each requestable slot, `inform(s)` for each
    /// informable slot (both in ontology order), then [`SPECIAL_ACTS`].
    pub fn new(ont: &Ontology) -> Self {
        let mut actions = Vec::new();
        let mut request_of = vec![None; ont.len()];
        let mut inform_of = vec![None; ont.len()];
        for s in ont.requestable() {
            request_of[s.0] = Some(actions.len());
            actions.push(AgentAction {
                index: actions.len(),
                act: DialogueActType::Request,
                slot: Some(s),
            });
        }
        for s in ont.informable() {
            inform_of[s.0] = Some(actions.len());
            actions.push(AgentAction {
                index: actions.len(),
                act: DialogueActType::Inform,
                slot: Some(s),
            });
        }
        for act in SPECIAL_ACTS {
            actions.push(AgentAction {
                index: actions.len(),
                act,
                slot: None,
            });
        }
        ActionSpace {
            actions,
            request_of,
            inform_of,
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&AgentAction> {
        self.actions.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AgentAction> {
        self.actions.iter()
    }

    pub fn request(&self, slot: SlotId) -> Option<usize> {
        self.request_of.get(slot.0).copied().flatten()
    }

    pub fn inform(&self, slot: SlotId) -> Option<usize> {
        self.inform_of.get(slot.0).copied().flatten()
    }

    pub fn special(&self, act: DialogueActType) -> Option<usize> {
        self.actions
            .iter()
            .find(|a| a.slot.is_none() && a.act == act)
            .map(|a| a.index)
    }

    /// Bare frame for an action; inform values are left to the caller.
    pub fn skeleton(&self, index: usize) -> Option<SemanticFrame> {
        let a = self.get(index)?;
        let mut f = SemanticFrame::new(a.act, Speaker::Agent);
        if let (DialogueActType::Request, Some(s)) = (a.act, a.slot) {
            f.request_slots.insert(s);
        }
        Some(f)
    }

    /// Recovers the action that produced an agent frame.
    ///
    /// Booking frames carry many inform slots; `primary` names the slots whose
    /// presence identifies the action (checked first, in order).
    pub fn action_for_frame(&self, frame: &SemanticFrame, primary: &[SlotId]) -> Option<usize> {
        match frame.act {
            DialogueActType::Request => {
                let s = *frame.request_slots.iter().next()?;
                self.request(s)
            }
            DialogueActType::Inform => {
                if let Some(&s) = primary.iter().find(|s| frame.inform_slots.contains_key(s)) {
                    return self.inform(s);
                }
                if frame.inform_slots.len() == 1 {
                    let s = *frame.inform_slots.keys().next()?;
                    return self.inform(s);
                }
                None
            }
            act => self.special(act),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_space_has_64_actions_and_bijective_indices() {
        let ont = Ontology::movie_default();
        let space = ActionSpace::new(&ont);
        assert_eq!(space.len(), 64);
        let mut seen = std::collections::HashSet::new();
        for (i, a) in space.iter().enumerate() {
            assert_eq!(a.index, i);
            assert!(seen.insert((a.act, a.slot)));
        }
        let city = ont.id("city").unwrap();
        assert_eq!(space.get(space.request(city).unwrap()).unwrap().slot, Some(city));
        assert_eq!(
            space.get(space.inform(city).unwrap()).unwrap().act,
            DialogueActType::Inform
        );
        assert_eq!(space.special(DialogueActType::Greeting), Some(58));
    }

    #[test]
    fn frames_map_back_to_actions() {
        let ont = Ontology::movie_default();
        let space = ActionSpace::new(&ont);
        for a in space.iter() {
            let mut f = space.skeleton(a.index).unwrap();
            if a.act == DialogueActType::Inform {
                f.inform_slots.insert(a.slot.unwrap(), "x".into());
            }
            assert_eq!(space.action_for_frame(&f, &[]), Some(a.index));
        }
    }
}
