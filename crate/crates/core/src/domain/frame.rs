use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::acts::DialogueActType;
use super::ontology::{Ontology, SlotId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Speaker {
    User,
    Agent,
}

impl Speaker {
    pub fn name(self) -> &'static str {
        match self {
            Speaker::User => "user",
            Speaker::Agent => "agent",
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Speaker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "user" => Ok(Speaker::User),
            "agent" => Ok(Speaker::Agent),
            other => Err(Error::InvalidFrame(format!("unknown speaker `{other}`"))),
        }
    }
}

/// One turn's meaning: an act with inform slot-values and requested slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticFrame {
    pub act: DialogueActType,
    pub inform_slots: BTreeMap<SlotId, String>,
    pub request_slots: BTreeSet<SlotId>,
    pub speaker: Speaker,
}

impl SemanticFrame {
    pub fn new(act: DialogueActType, speaker: Speaker) -> Self {
        SemanticFrame {
            act,
            inform_slots: BTreeMap::new(),
            request_slots: BTreeSet::new(),
            speaker,
        }
    }

    pub fn with_inform(mut self, slot: SlotId, value: impl Into<String>) -> Self {
        self.inform_slots.insert(slot, value.into());
        self
    }

    pub fn with_request(mut self, slot: SlotId) -> Self {
        self.request_slots.insert(slot);
        self
    }

    /// Checks slot flags, value domains and inform/request disjointness.
    pub fn validate(&self, ont: &Ontology) -> Result<()> {
        for (&slot, value) in &self.inform_slots {
            if slot.0 >= ont.len() {
                return Err(Error::UnknownSlot(slot.to_string()));
            }
            let spec = ont.slot(slot);
            if !spec.informable {
                return Err(Error::InvalidFrame(format!("slot `{}` is not informable", spec.name)));
            }
            if !ont.accepts(slot, value) {
                return Err(Error::InvalidFrame(format!(
                    "value `{value}` is not in the domain of `{}`",
                    spec.name
                )));
            }
        }
        for &slot in &self.request_slots {
            if slot.0 >= ont.len() {
                return Err(Error::UnknownSlot(slot.to_string()));
            }
            if !ont.slot(slot).requestable {
                return Err(Error::InvalidFrame(format!(
                    "slot `{}` is not requestable",
                    ont.name(slot)
                )));
            }
            if self.inform_slots.contains_key(&slot) {
                return Err(Error::InvalidFrame(format!(
                    "slot `{}` is both informed and requested",
                    ont.name(slot)
                )));
            }
        }
        Ok(())
    }

    /// Renders the frame in the `act(slot, slot=value)` syntax: requested
    /// slots first, then inform pairs, each group in slot order.
    pub fn render(&self, ont: &Ontology) -> String {
        let mut items: Vec<String> = self.request_slots.iter().map(|&s| ont.name(s).to_string()).collect();
        items.extend(self.inform_slots.iter().map(|(&s, v)| format!("{}={}", ont.name(s), v)));
        format!("{}({})", self.act, items.join(", "))
    }

    /// Parses `act`, `act()` or `act(item, ...)` where an item is either a
    /// bare slot name (requested) or `slot=value` (informed).
    pub fn parse(text: &str, speaker: Speaker, ont: &Ontology) -> Result<Self> {
        let text = text.trim();
        let (act_str, body) = match text.find('(') {
            Some(open) => {
                let rest = &text[open + 1..];
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::InvalidFrame(format!("missing closing parenthesis in `{text}`")))?;
                (&text[..open], inner)
            }
            None => (text, ""),
        };
        let act: DialogueActType = act_str.trim().parse()?;
        let mut frame = SemanticFrame::new(act, speaker);
        if body.contains(['(', ')']) {
            return Err(Error::InvalidFrame(format!("nested parentheses in `{text}`")));
        }
        for item in body.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            match item.split_once('=') {
                Some((slot, value)) => {
                    let slot = ont.id(slot.trim())?;
                    let value = value.trim();
                    if value.is_empty() {
                        return Err(Error::InvalidFrame(format!("empty value for `{}`", ont.name(slot))));
                    }
                    frame.inform_slots.insert(slot, value.to_string());
                }
                None => {
                    frame.request_slots.insert(ont.id(item)?);
                }
            }
        }
        frame.validate(ont)?;
        Ok(frame)
    }
}
