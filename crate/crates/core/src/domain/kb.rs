use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use super::ontology::{Ontology, SlotId, ANYTHING};
use crate::error::{Error, Result};

pub const KB_HEADER: &str = "advdialog-kb v1";

/// Slot → value constraints, ordered by slot index.
pub type Constraints = BTreeMap<SlotId, String>;

/// One bookable showing: a value for every informable slot.
///
/// Non-informable slots hold an empty string so rows index directly by [`SlotId`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KbRow(pub Vec<String>);

impl KbRow {
    pub fn get(&self, slot: SlotId) -> &str {
        &self.0[slot.0]
    }

    pub fn matches(&self, constraints: &Constraints) -> bool {
        constraints
            .iter()
            .all(|(slot, v)| v == ANYTHING || self.0[slot.0] == *v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    informable: Vec<SlotId>,
    slot_count: usize,
    rows: Vec<KbRow>,
}

impl KnowledgeBase {
    /// Validates completeness over the informable slots and removes duplicate
    /// rows, keeping the first occurrence.
    pub fn new(ont: &Ontology, rows: Vec<KbRow>) -> Result<Self> {
        let informable: Vec<SlotId> = ont.informable().collect();
        let mut seen = HashSet::with_capacity(rows.len());
        let mut kept = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.0.len() != ont.len() {
                return Err(Error::InvalidArgument(format!(
                    "kb row {i} has {} cells, expected {}",
                    row.0.len(),
                    ont.len()
                )));
            }
            for &slot in &informable {
                let v = row.get(slot);
                if !ont.slot(slot).values.iter().any(|d| d == v) {
                    return Err(Error::InvalidArgument(format!(
                        "kb row {i}: value `{v}` not in domain of `{}`",
                        ont.name(slot)
                    )));
                }
            }
            if seen.insert(row.clone()) {
                kept.push(row);
            }
        }
        Ok(KnowledgeBase {
            informable,
            slot_count: ont.len(),
            rows: kept,
        })
    }

    pub fn rows(&self) -> &[KbRow] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &KbRow {
        &self.rows[index]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Indices of the rows satisfying every constraint, in KB order.
    pub fn query(&self, constraints: &Constraints) -> Result<Vec<usize>> {
        for &slot in constraints.keys() {
            if slot.0 >= self.slot_count || !self.informable.contains(&slot) {
                return Err(Error::UnknownSlot(slot.to_string()));
            }
        }
        Ok(self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.matches(constraints))
            .map(|(i, _)| i)
            .collect())
    }

    /// Name-keyed variant of [`query`](Self::query).
    pub fn query_named(&self, ont: &Ontology, constraints: &[(&str, &str)]) -> Result<Vec<usize>> {
        let mut map = Constraints::new();
        for (name, value) in constraints {
            let slot = ont.id(name)?;
            if !ont.slot(slot).informable {
                return Err(Error::UnknownSlot(name.to_string()));
            }
            map.insert(slot, value.to_string());
        }
        self.query(&map)
    }

    pub fn to_text(&self, ont: &Ontology) -> String {
        let mut out = String::new();
        out.push_str(KB_HEADER);
        out.push('\n');
        let names: Vec<&str> = self.informable.iter().map(|&s| ont.name(s)).collect();
        out.push_str(&names.join("\t"));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<&str> = self.informable.iter().map(|&s| row.get(s)).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Parses the tab-separated KB format: header line, column-name line, rows.
    pub fn parse(text: &str, ont: &Ontology) -> Result<Self> {
        const WHAT: &str = "kb";
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == KB_HEADER => {}
            _ => return Err(Error::parse(WHAT, 1, format!("expected header `{KB_HEADER}`"))),
        }
        let (_, cols_line) = lines
            .next()
            .ok_or_else(|| Error::parse(WHAT, 2, "missing column line"))?;
        let mut columns = Vec::new();
        for name in cols_line.split('\t') {
            let slot = ont.id(name.trim()).map_err(|e| Error::parse(WHAT, 2, e.to_string()))?;
            columns.push(slot);
        }
        let expected: Vec<SlotId> = ont.informable().collect();
        if columns != expected {
            return Err(Error::parse(
                WHAT,
                2,
                "columns must list every informable slot in ontology order",
            ));
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != columns.len() {
                return Err(Error::parse(
                    WHAT,
                    i + 1,
                    format!("expected {} cells, found {}", columns.len(), cells.len()),
                ));
            }
            let mut row = vec![String::new(); ont.len()];
            for (&slot, cell) in columns.iter().zip(cells) {
                row[slot.0] = cell.trim().to_string();
            }
            rows.push(KbRow(row));
        }
        KnowledgeBase::new(ont, rows)
    }

    pub fn load(path: impl AsRef<Path>, ont: &Ontology) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?, ont)
    }
}
