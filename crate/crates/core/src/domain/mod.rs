//! Dialogue acts, slots, frames, the knowledge base, state tracking and
//! featurization.

pub mod action;
pub mod acts;
pub mod features;
pub mod frame;
pub mod goal;
pub mod kb;
pub mod ontology;
pub mod tracker;
pub mod world;

pub use action::{ActionSpace, AgentAction};
pub use acts::DialogueActType;
pub use features::{featurize, StateLayout, StateVector};
pub use frame::{SemanticFrame, Speaker};
pub use goal::UserGoal;
pub use kb::{Constraints, KbRow, KnowledgeBase};
pub use ontology::{Ontology, SlotId, ANYTHING, NO_MATCH};
pub use tracker::DialogueTracker;
pub use world::{generate_world, GoalProfile, World};
