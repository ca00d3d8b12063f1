//! Line-delimited episode logs (`advdialog-log v1`). Fields are separated
//! by single tabs (shown here as spaces).
//!
//! ```text
//! advdialog-log v1
//! goal  12  seed  998877
//! 0  user  request(ticket, moviename=zootopia)  0
//! 1  agent  request(date)  -1
//! 1  user  inform(date=today)  0
//! ```

use crate::domain::{Ontology, SemanticFrame, Speaker};
use crate::error::{Error, Result};

pub const LOG_HEADER: &str = "advdialog-log v1";

#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub turn: usize,
    pub frame: SemanticFrame,
    /// Extrinsic reward of the agent turn; 0 for user lines.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub goal_index: usize,
    pub seed: u64,
    pub entries: Vec<LogEntry>,
}

impl EpisodeLog {
    pub fn agent_frames(&self) -> impl Iterator<Item = &SemanticFrame> {
        self.entries
            .iter()
            .filter(|e| e.frame.speaker == Speaker::Agent)
            .map(|e| &e.frame)
    }

    pub fn to_text(&self, ont: &Ontology) -> String {
        let mut out = format!("{LOG_HEADER}\ngoal\t{}\tseed\t{}\n", self.goal_index, self.seed);
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.turn,
                e.frame.speaker,
                e.frame.render(ont),
                e.reward
            ));
        }
        out
    }

    pub fn parse(text: &str, ont: &Ontology) -> Result<Self> {
        const WHAT: &str = "episode log";
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(LOG_HEADER) {
            return Err(Error::parse(WHAT, 1, format!("expected header `{LOG_HEADER}`")));
        }
        let meta: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::parse(WHAT, 2, "missing goal line"))?
            .split('\t')
            .collect();
        let (goal_index, seed) = match meta.as_slice() {
            ["goal", g, "seed", s] => (
                g.parse().map_err(|_| Error::parse(WHAT, 2, "bad goal index"))?,
                s.parse().map_err(|_| Error::parse(WHAT, 2, "bad seed"))?,
            ),
            _ => return Err(Error::parse(WHAT, 2, "expected `goal<TAB>N<TAB>seed<TAB>S`")),
        };
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 3;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::parse(WHAT, line_no, "expected 4 tab-separated fields"));
            }
            let turn = cols[0].parse().map_err(|_| Error::parse(WHAT, line_no, "bad turn"))?;
            let speaker: Speaker = cols[1]
                .parse()
                .map_err(|e: Error| Error::parse(WHAT, line_no, e.to_string()))?;
            let frame =
                SemanticFrame::parse(cols[2], speaker, ont).map_err(|e| Error::parse(WHAT, line_no, e.to_string()))?;
            let reward = cols[3].parse().map_err(|_| Error::parse(WHAT, line_no, "bad reward"))?;
            entries.push(LogEntry { turn, frame, reward });
        }
        Ok(EpisodeLog {
            goal_index,
            seed,
            entries,
        })
    }
}
