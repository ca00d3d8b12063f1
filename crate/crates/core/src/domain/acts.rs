use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Communicative function of a dialogue turn.
///
/// The discriminant is the one-hot index used by the state featurizer and is
/// stable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DialogueActType {
    Inform = 0,
    Request = 1,
    ConfirmQuestion = 2,
    ConfirmAnswer = 3,
    Greeting = 4,
    Closing = 5,
    MultipleChoice = 6,
    Thanks = 7,
    Deny = 8,
    Welcome = 9,
    NotSure = 10,
}

impl DialogueActType {
    pub const COUNT: usize = 11;

    pub const ALL: [DialogueActType; Self::COUNT] = [
        DialogueActType::Inform,
        DialogueActType::Request,
        DialogueActType::ConfirmQuestion,
        DialogueActType::ConfirmAnswer,
        DialogueActType::Greeting,
        DialogueActType::Closing,
        DialogueActType::MultipleChoice,
        DialogueActType::Thanks,
        DialogueActType::Deny,
        DialogueActType::Welcome,
        DialogueActType::NotSure,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DialogueActType::Inform => "inform",
            DialogueActType::Request => "request",
            DialogueActType::ConfirmQuestion => "confirm_question",
            DialogueActType::ConfirmAnswer => "confirm_answer",
            DialogueActType::Greeting => "greeting",
            DialogueActType::Closing => "closing",
            DialogueActType::MultipleChoice => "multiple_choice",
            DialogueActType::Thanks => "thanks",
            DialogueActType::Deny => "deny",
            DialogueActType::Welcome => "welcome",
            DialogueActType::NotSure => "not_sure",
        }
    }
}

impl fmt::Display for DialogueActType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DialogueActType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|act| act.name() == s)
            .ok_or_else(|| Error::InvalidFrame(format!("unknown dialogue act `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_are_dense_and_stable() {
        for (i, act) in DialogueActType::ALL.iter().enumerate() {
            assert_eq!(act.index(), i);
            assert_eq!(DialogueActType::from_index(i), Some(*act));
            assert_eq!(act.name().parse::<DialogueActType>().unwrap(), *act);
        }
        assert_eq!(DialogueActType::from_index(11), None);
    }

    #[test]
    fn unknown_act_is_rejected() {
        assert!("book".parse::<DialogueActType>().is_err());
    }
}
