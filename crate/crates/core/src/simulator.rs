//! Agenda-based simulated user.
//!
//! The user holds a stack of pending intents derived from its goal: one
//! inform per constraint and one request per wanted slot. Constraints pop
//! before requests, each group in slot order. Responses are deterministic
//! unless a slot-value noise probability is configured.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{DialogueActType, Ontology, SemanticFrame, SlotId, Speaker, UserGoal, ANYTHING, NO_MATCH};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Ongoing,
    Success,
    Failure,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        self != Outcome::Ongoing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgendaItem {
    Inform(SlotId),
    Request(SlotId),
}

impl AgendaItem {
    pub fn slot(self) -> SlotId {
        match self {
            AgendaItem::Inform(s) | AgendaItem::Request(s) => s,
        }
    }
}

/// Stack of pending user intents; the next item is at the end of `items`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agenda {
    items: Vec<AgendaItem>,
}

impl Agenda {
    pub fn from_goal(goal: &UserGoal) -> Self {
        let mut items: Vec<AgendaItem> = goal
            .request_slots
            .iter()
            .rev()
            .map(|&s| AgendaItem::Request(s))
            .collect();
        items.extend(goal.inform_slots.keys().rev().map(|&s| AgendaItem::Inform(s)));
        Agenda { items }
    }

    pub fn pop(&mut self) -> Option<AgendaItem> {
        self.items.pop()
    }

    pub fn peek(&self) -> Option<AgendaItem> {
        self.items.last().copied()
    }

    pub fn remove(&mut self, item: AgendaItem) -> bool {
        let before = self.items.len();
        self.items.retain(|&i| i != item);
        before != self.items.len()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items in pop order.
    pub fn iter(&self) -> impl Iterator<Item = &AgendaItem> {
        self.items.iter().rev()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    /// Probability that a goal value the user informs is replaced by a
    /// random value from the slot's domain.
    pub noise: f64,
    /// Wrong bookings the user corrects; later ones get a bare `deny()`.
    pub patience: usize,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        SimulatorConfig {
            noise: 0.0,
            patience: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserResponse {
    pub frame: SemanticFrame,
    pub terminal: bool,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorState {
    pub goal: UserGoal,
    pub agenda: Agenda,
    /// Information the agent has given; only ever grows.
    pub received: BTreeMap<SlotId, String>,
    /// Attributes of the most recently booked showing.
    pub booking: Option<BTreeMap<SlotId, String>>,
    pub outcome: Outcome,
    /// Bookings so far that contradicted the goal.
    pub rejected_bookings: usize,
    ticket: SlotId,
    taskcomplete: SlotId,
    config: SimulatorConfig,
}

/// Uniform draw from the goal corpus.
pub fn sample_goal<R: Rng + ?Sized>(corpus: &[UserGoal], rng: &mut R) -> Result<usize> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("goal corpus is empty".into()));
    }
    Ok(rng.gen_range(0..corpus.len()))
}

impl SimulatorState {
    pub fn new(goal: UserGoal, ticket: SlotId, taskcomplete: SlotId, config: SimulatorConfig) -> Self {
        SimulatorState {
            agenda: Agenda::from_goal(&goal),
            goal,
            received: BTreeMap::new(),
            booking: None,
            outcome: Outcome::Ongoing,
            rejected_bookings: 0,
            ticket,
            taskcomplete,
            config,
        }
    }

    pub fn booked(&self) -> bool {
        self.booking.is_some()
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome.is_terminal()
    }

    /// The opening move: a request for the first wanted slot carrying one or
    /// two constraints from the top of the agenda.
    pub fn initial_user_frame<R: Rng + ?Sized>(&mut self, ont: &Ontology, rng: &mut R) -> SemanticFrame {
        let mut frame = SemanticFrame::new(DialogueActType::Request, Speaker::User);
        if let Some(&slot) = self.goal.request_slots.iter().next() {
            self.agenda.remove(AgendaItem::Request(slot));
            frame.request_slots.insert(slot);
        }
        let wanted = rng.gen_range(1..=2);
        for _ in 0..wanted {
            match self.agenda.peek() {
                Some(AgendaItem::Inform(slot)) => {
                    self.agenda.pop();
                    let v = self.goal_value(slot, ont, rng);
                    frame.inform_slots.insert(slot, v);
                }
                _ => break,
            }
        }
        frame
    }

    /// Whether the current booking satisfies the goal and every wanted slot
    /// has been provided.
    pub fn judge(&self) -> bool {
        let Some(booking) = &self.booking else {
            return false;
        };
        self.goal.inform_slots.iter().all(|(s, v)| booking.get(s) == Some(v))
            && self.goal.request_slots.iter().all(|s| self.received.contains_key(s))
    }

    fn contradicts(&self, frame: &BTreeMap<SlotId, String>) -> bool {
        self.goal
            .inform_slots
            .iter()
            .any(|(s, want)| frame.get(s).is_some_and(|v| v != want))
    }

    /// Records what the agent said and decides whether the dialogue ends.
    ///
    /// Returns the terminal user frame when it does: `thanks` on success,
    /// `deny` on a failed completion claim, `closing` on hang-up or timeout.
    pub fn observe_agent(
        &mut self,
        agent: &SemanticFrame,
        turn: usize,
        max_turns: usize,
    ) -> Result<Option<SemanticFrame>> {
        if self.is_terminal() {
            return Err(Error::EpisodeTerminated);
        }
        for (&slot, v) in &agent.inform_slots {
            if v != NO_MATCH && v != ANYTHING {
                self.received.insert(slot, v.clone());
            }
        }
        if agent.act == DialogueActType::Inform {
            if let Some(v) = agent.inform_slots.get(&self.ticket) {
                if v != NO_MATCH {
                    if self.contradicts(&agent.inform_slots) {
                        self.rejected_bookings += 1;
                    }
                    self.booking = Some(agent.inform_slots.clone());
                }
            }
        }

        let end = if agent.act == DialogueActType::Inform && agent.inform_slots.contains_key(&self.taskcomplete) {
            if self.judge() {
                Some((Outcome::Success, DialogueActType::Thanks))
            } else {
                Some((Outcome::Failure, DialogueActType::Deny))
            }
        } else if agent.act == DialogueActType::Closing || turn >= max_turns {
            Some((Outcome::Failure, DialogueActType::Closing))
        } else {
            None
        };
        Ok(end.map(|(outcome, act)| {
            self.outcome = outcome;
            SemanticFrame::new(act, Speaker::User)
        }))
    }

    /// Non-terminal reply to an agent frame already passed to
    /// [`observe_agent`](Self::observe_agent).
    pub fn respond<R: Rng + ?Sized>(&mut self, agent: &SemanticFrame, ont: &Ontology, rng: &mut R) -> SemanticFrame {
        match agent.act {
            DialogueActType::Request if !agent.request_slots.is_empty() => {
                let slot = *agent.request_slots.iter().next().unwrap();
                let value = if self.goal.inform_slots.contains_key(&slot) {
                    self.agenda.remove(AgendaItem::Inform(slot));
                    self.goal_value(slot, ont, rng)
                } else {
                    ANYTHING.to_string()
                };
                SemanticFrame::new(DialogueActType::Inform, Speaker::User).with_inform(slot, value)
            }
            DialogueActType::Inform => {
                let contradicted = agent.inform_slots.iter().find_map(|(s, v)| {
                    let want = self.goal.inform_slots.get(s)?;
                    (v != NO_MATCH && v != want).then_some(*s)
                });
                let booking = agent.inform_slots.contains_key(&self.ticket);
                match contradicted {
                    Some(_) if booking && self.rejected_bookings > self.config.patience => {
                        SemanticFrame::new(DialogueActType::Deny, Speaker::User)
                    }
                    Some(slot) => {
                        self.agenda.remove(AgendaItem::Inform(slot));
                        let v = self.goal_value(slot, ont, rng);
                        SemanticFrame::new(DialogueActType::Inform, Speaker::User).with_inform(slot, v)
                    }
                    None => self.next_from_agenda(ont, rng),
                }
            }
            _ => self.next_from_agenda(ont, rng),
        }
    }

    fn next_from_agenda<R: Rng + ?Sized>(&mut self, ont: &Ontology, rng: &mut R) -> SemanticFrame {
        while let Some(item) = self.agenda.pop() {
            match item {
                AgendaItem::Inform(slot) => {
                    let v = self.goal_value(slot, ont, rng);
                    return SemanticFrame::new(DialogueActType::Inform, Speaker::User).with_inform(slot, v);
                }
                AgendaItem::Request(slot) if !self.received.contains_key(&slot) => {
                    return SemanticFrame::new(DialogueActType::Request, Speaker::User).with_request(slot);
                }
                AgendaItem::Request(_) => {}
            }
        }
        let missing: BTreeSet<SlotId> = self
            .goal
            .request_slots
            .iter()
            .copied()
            .filter(|s| !self.received.contains_key(s))
            .collect();
        let ask = if missing.contains(&self.ticket) {
            Some(self.ticket)
        } else {
            missing.iter().next().copied()
        };
        match ask {
            Some(slot) => SemanticFrame::new(DialogueActType::Request, Speaker::User).with_request(slot),
            None => SemanticFrame::new(DialogueActType::Thanks, Speaker::User),
        }
    }

    fn goal_value<R: Rng + ?Sized>(&self, slot: SlotId, ont: &Ontology, rng: &mut R) -> String {
        let truth = self.goal.inform_slots[&slot].clone();
        if self.config.noise > 0.0 && rng.gen_bool(self.config.noise.min(1.0)) {
            if let Some(v) = ont.slot(slot).values.choose(rng) {
                return v.clone();
            }
        }
        truth
    }

    /// Full user turn: observe the agent frame, then either end the dialogue
    /// or reply.
    pub fn user_step<R: Rng + ?Sized>(
        &mut self,
        agent: &SemanticFrame,
        ont: &Ontology,
        turn: usize,
        max_turns: usize,
        rng: &mut R,
    ) -> Result<UserResponse> {
        if let Some(frame) = self.observe_agent(agent, turn, max_turns)? {
            return Ok(UserResponse {
                frame,
                terminal: true,
                outcome: self.outcome,
            });
        }
        let frame = self.respond(agent, ont, rng);
        Ok(UserResponse {
            frame,
            terminal: false,
            outcome: Outcome::Ongoing,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Constraints;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(inform: &[(&str, &str)], request: &[&str]) -> (Ontology, SimulatorState) {
        let ont = Ontology::movie_default();
        let mut c = Constraints::new();
        for (s, v) in inform {
            c.insert(ont.id(s).unwrap(), v.to_string());
        }
        let goal = UserGoal {
            inform_slots: c,
            request_slots: request.iter().map(|s| ont.id(s).unwrap()).collect(),
        };
        let st = SimulatorState::new(
            goal,
            ont.id("ticket").unwrap(),
            ont.id("taskcomplete").unwrap(),
            SimulatorConfig::default(),
        );
        (ont, st)
    }

    fn agent(ont: &Ontology, text: &str) -> SemanticFrame {
        SemanticFrame::parse(text, Speaker::Agent, ont).unwrap()
    }

    #[test]
    fn sample_goal_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_goal(&[], &mut rng).is_err());
        let (_, st) = setup(&[], &["ticket"]);
        assert_eq!(sample_goal(std::slice::from_ref(&st.goal), &mut rng).unwrap(), 0);
    }

    #[test]
    fn agenda_pops_constraints_then_requests_in_slot_order() {
        let (ont, st) = setup(&[("genre", "drama"), ("moviename", "zootopia")], &["ticket", "theater"]);
        let names: Vec<String> = st
            .agenda
            .iter()
            .map(|i| match i {
                AgendaItem::Inform(s) => format!("i:{}", ont.name(*s)),
                AgendaItem::Request(s) => format!("r:{}", ont.name(*s)),
            })
            .collect();
        assert_eq!(names, ["i:moviename", "i:genre", "r:theater", "r:ticket"]);
    }

    #[test]
    fn opening_frame_pops_agenda() {
        let (ont, mut st) = setup(&[("moviename", "zootopia")], &["ticket"]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = st.initial_user_frame(&ont, &mut rng);
        assert_eq!(f.render(&ont), "request(ticket, moviename=zootopia)");
        assert!(st.agenda.is_empty());

        let (ont, mut bare) = setup(&[], &["ticket"]);
        let f = bare.initial_user_frame(&ont, &mut rng);
        assert_eq!(f.render(&ont), "request(ticket)");
    }

    #[test]
    fn request_is_answered_from_goal() {
        let (ont, mut st) = setup(&[("date", "today")], &["ticket"]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = st
            .user_step(&agent(&ont, "request(date)"), &ont, 1, 40, &mut rng)
            .unwrap();
        assert_eq!(r.frame.render(&ont), "inform(date=today)");
        assert!(!r.terminal);
        let r = st
            .user_step(&agent(&ont, "request(genre)"), &ont, 2, 40, &mut rng)
            .unwrap();
        assert_eq!(r.frame.render(&ont), "inform(genre=anything)");
    }

    #[test]
    fn contradiction_is_corrected() {
        let (ont, mut st) = setup(&[("date", "today"), ("genre", "drama")], &["ticket"]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = st
            .user_step(&agent(&ont, "inform(genre=comedy)"), &ont, 1, 40, &mut rng)
            .unwrap();
        assert_eq!(r.frame.render(&ont), "inform(genre=drama)");
        assert_eq!(st.agenda.len(), 2);
    }

    #[test]
    fn timeout_is_failure() {
        let (ont, mut st) = setup(&[("date", "today")], &["ticket"]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = st
            .user_step(&agent(&ont, "greeting()"), &ont, 40, 40, &mut rng)
            .unwrap();
        assert_eq!(r.frame.act, DialogueActType::Closing);
        assert!(r.terminal);
        assert_eq!(r.outcome, Outcome::Failure);
        assert!(matches!(
            st.user_step(&agent(&ont, "greeting()"), &ont, 41, 40, &mut rng),
            Err(Error::EpisodeTerminated)
        ));
    }

    #[test]
    fn successful_completion() {
        let (ont, mut st) = setup(&[("date", "today")], &["ticket", "theater"]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let booking = agent(&ont, "inform(ticket=available, date=today, theater=big picture)");
        let r = st.user_step(&booking, &ont, 3, 40, &mut rng).unwrap();
        assert!(!r.terminal);
        assert!(st.booked());
        let r = st
            .user_step(&agent(&ont, "inform(taskcomplete=done)"), &ont, 4, 40, &mut rng)
            .unwrap();
        assert_eq!(r.frame.act, DialogueActType::Thanks);
        assert_eq!(r.outcome, Outcome::Success);
    }

    #[test]
    fn completion_without_requested_info_fails() {
        let (ont, mut st) = setup(&[("date", "today")], &["ticket", "price"]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        st.user_step(
            &agent(&ont, "inform(ticket=available, date=today)"),
            &ont,
            1,
            40,
            &mut rng,
        )
        .unwrap();
        let r = st
            .user_step(&agent(&ont, "inform(taskcomplete=done)"), &ont, 2, 40, &mut rng)
            .unwrap();
        assert_eq!(r.outcome, Outcome::Failure);
        assert_eq!(r.frame.act, DialogueActType::Deny);
    }

    #[test]
    fn wrong_booking_fails_and_closing_fails() {
        let (ont, mut st) = setup(&[("date", "today")], &["ticket"]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = st
            .user_step(
                &agent(&ont, "inform(ticket=available, date=sunday)"),
                &ont,
                1,
                40,
                &mut rng,
            )
            .unwrap();
        assert_eq!(r.frame.render(&ont), "inform(date=today)");
        let r = st
            .user_step(&agent(&ont, "inform(taskcomplete=done)"), &ont, 2, 40, &mut rng)
            .unwrap();
        assert_eq!(r.outcome, Outcome::Failure);

        let (ont, mut st) = setup(&[("date", "today")], &["ticket"]);
        let r = st.user_step(&agent(&ont, "closing()"), &ont, 1, 40, &mut rng).unwrap();
        assert_eq!(r.outcome, Outcome::Failure);
    }

    #[test]
    fn exhausted_agenda_asks_for_missing_then_thanks() {
        let (ont, mut st) = setup(&[], &["ticket"]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        st.initial_user_frame(&ont, &mut rng);
        let r = st.user_step(&agent(&ont, "greeting()"), &ont, 1, 40, &mut rng).unwrap();
        assert_eq!(r.frame.render(&ont), "request(ticket)");
        st.user_step(&agent(&ont, "inform(ticket=available)"), &ont, 2, 40, &mut rng)
            .unwrap();
        let r = st.user_step(&agent(&ont, "greeting()"), &ont, 3, 40, &mut rng).unwrap();
        assert_eq!(r.frame.act, DialogueActType::Thanks);
    }
}
