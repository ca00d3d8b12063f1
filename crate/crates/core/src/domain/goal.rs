use std::collections::BTreeSet;

use super::kb::Constraints;
use super::ontology::{Ontology, SlotId};
use crate::error::{Error, Result};

pub const GOALS_HEADER: &str = "advdialog-goals v1";

/// What a simulated user wants: constraints to satisfy and slots to learn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserGoal {
    pub inform_slots: Constraints,
    pub request_slots: BTreeSet<SlotId>,
}

impl UserGoal {
    /// One line: `slot=value; slot=value | slot, slot`.
    pub fn render(&self, ont: &Ontology) -> String {
        let informs: Vec<String> = self
            .inform_slots
            .iter()
            .map(|(&s, v)| format!("{}={}", ont.name(s), v))
            .collect();
        let requests: Vec<&str> = self.request_slots.iter().map(|&s| ont.name(s)).collect();
        format!("{} | {}", informs.join("; "), requests.join(", "))
    }

    pub fn parse(line: &str, ont: &Ontology) -> Result<Self> {
        let (informs, requests) = line
            .split_once('|')
            .ok_or_else(|| Error::InvalidArgument(format!("goal line lacks `|`: {line}")))?;
        let mut goal = UserGoal {
            inform_slots: Constraints::new(),
            request_slots: BTreeSet::new(),
        };
        for item in informs.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (slot, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("bad constraint `{item}`")))?;
            goal.inform_slots.insert(ont.id(slot.trim())?, value.trim().to_string());
        }
        for item in requests.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            goal.request_slots.insert(ont.id(item)?);
        }
        if goal.request_slots.is_empty() {
            return Err(Error::InvalidArgument("goal has no request slots".into()));
        }
        Ok(goal)
    }
}

pub fn goals_to_text(goals: &[UserGoal], ont: &Ontology) -> String {
    let mut out = format!("{GOALS_HEADER}\n");
    for g in goals {
        out.push_str(&g.render(ont));
        out.push('\n');
    }
    out
}

pub fn parse_goals(text: &str, ont: &Ontology) -> Result<Vec<UserGoal>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(GOALS_HEADER) {
        return Err(Error::parse("goals", 1, format!("expected header `{GOALS_HEADER}`")));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| UserGoal::parse(l, ont))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goal_line_round_trip() {
        let ont = Ontology::movie_default();
        let line = "moviename=zootopia; date=today | ticket, theater";
        let goal = UserGoal::parse(line, &ont).unwrap();
        assert_eq!(goal.inform_slots.len(), 2);
        assert_eq!(goal.request_slots.len(), 2);
        assert_eq!(UserGoal::parse(&goal.render(&ont), &ont).unwrap(), goal);
        assert!(UserGoal::parse("date=today | ", &ont).is_err());
    }
}
