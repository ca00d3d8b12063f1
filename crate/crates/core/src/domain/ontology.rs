use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const ONTOLOGY_HEADER: &str = "advdialog-ontology v1";

/// Value that matches every candidate in a knowledge-base lookup.
pub const ANYTHING: &str = "anything";

/// Value the agent emits when no knowledge-base row satisfies the current constraints.
pub const NO_MATCH: &str = "none";

/// Slot count of the shipped movie-booking ontology; enforced in strict mode.
pub const DEFAULT_SLOT_COUNT: usize = 29;

const DEFAULT_ONTOLOGY: &str = include_str!("../../data/movie.ontology");

/// Position of a slot in the ontology. Doubles as the slot's feature index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotId(pub usize);

impl SlotId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotSpec {
    pub name: String,
    pub informable: bool,
    pub requestable: bool,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    slots: Vec<SlotSpec>,
    by_name: HashMap<String, SlotId>,
}

impl Ontology {
    /// Builds an ontology from slot records, checking every structural invariant
    /// except the slot count.
    pub fn new(slots: Vec<SlotSpec>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::EmptyOntology);
        }
        let mut by_name = HashMap::with_capacity(slots.len());
        for (i, spec) in slots.iter().enumerate() {
            if by_name.insert(spec.name.clone(), SlotId(i)).is_some() {
                return Err(Error::DuplicateSlot(spec.name.clone()));
            }
            check_slot(spec).map_err(Error::InvalidArgument)?;
        }
        Ok(Ontology { slots, by_name })
    }

    /// The shipped 29-slot movie-ticket ontology.
    pub fn movie_default() -> Self {
        Self::parse(DEFAULT_ONTOLOGY, true).expect("shipped ontology is valid")
    }

    pub fn default_text() -> &'static str {
        DEFAULT_ONTOLOGY
    }

    pub fn load(path: impl AsRef<Path>, strict: bool) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, strict)
    }

    /// Parses the line format: a header line, then one tab-separated record per
    /// slot (`name`, informable `0|1`, requestable `0|1`, `|`-separated values).
    /// Blank lines and `#` comments are skipped. In strict mode the slot count
    /// must equal [`DEFAULT_SLOT_COUNT`].
    pub fn parse(text: &str, strict: bool) -> Result<Self> {
        const WHAT: &str = "ontology";
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == ONTOLOGY_HEADER => {}
            Some((_, other)) => {
                return Err(Error::parse(
                    WHAT,
                    1,
                    format!("expected header `{ONTOLOGY_HEADER}`, found `{}`", other.trim()),
                ))
            }
            None => return Err(Error::EmptyOntology),
        }

        let mut slots: Vec<SlotSpec> = Vec::new();
        let mut by_name: HashMap<String, SlotId> = HashMap::new();
        for (i, raw) in lines {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    WHAT,
                    line_no,
                    format!("expected 4 tab-separated fields, found {}", fields.len()),
                ));
            }
            let name = fields[0].trim().to_string();
            let informable = parse_flag(fields[1])
                .ok_or_else(|| Error::parse(WHAT, line_no, format!("bad informable flag `{}`", fields[1])))?;
            let requestable = parse_flag(fields[2])
                .ok_or_else(|| Error::parse(WHAT, line_no, format!("bad requestable flag `{}`", fields[2])))?;
            let values: Vec<String> = fields[3]
                .split('|')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(str::to_string)
                .collect();
            let spec = SlotSpec {
                name: name.clone(),
                informable,
                requestable,
                values,
            };
            check_slot(&spec).map_err(|msg| Error::parse(WHAT, line_no, msg))?;
            if by_name.contains_key(&name) {
                return Err(Error::parse(WHAT, line_no, format!("duplicate slot `{name}`")));
            }
            by_name.insert(name, SlotId(slots.len()));
            slots.push(spec);
        }

        if slots.is_empty() {
            return Err(Error::EmptyOntology);
        }
        if strict && slots.len() != DEFAULT_SLOT_COUNT {
            return Err(Error::parse(
                WHAT,
                text.lines().count(),
                format!("strict mode expects {DEFAULT_SLOT_COUNT} slots, found {}", slots.len()),
            ));
        }
        Ok(Ontology { slots, by_name })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(ONTOLOGY_HEADER);
        out.push('\n');
        for s in &self.slots {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                s.name,
                s.informable as u8,
                s.requestable as u8,
                s.values.join("|")
            ));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[SlotSpec] {
        &self.slots
    }

    pub fn slot(&self, id: SlotId) -> &SlotSpec {
        &self.slots[id.0]
    }

    pub fn slot_ids(&self) -> impl Iterator<Item = SlotId> + '_ {
        (0..self.slots.len()).map(SlotId)
    }

    pub fn name(&self, id: SlotId) -> &str {
        &self.slots[id.0].name
    }

    pub fn id(&self, name: &str) -> Result<SlotId> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownSlot(name.to_string()))
    }

    pub fn informable(&self) -> impl Iterator<Item = SlotId> + '_ {
        self.slot_ids().filter(|&s| self.slot(s).informable)
    }

    pub fn requestable(&self) -> impl Iterator<Item = SlotId> + '_ {
        self.slot_ids().filter(|&s| self.slot(s).requestable)
    }

    /// True when `value` is in the slot's domain or is a sentinel.
    pub fn accepts(&self, id: SlotId, value: &str) -> bool {
        value == ANYTHING || value == NO_MATCH || self.slot(id).values.iter().any(|v| v == value)
    }
}

fn parse_flag(field: &str) -> Option<bool> {
    match field.trim() {
        "1" | "yes" | "true" => Some(true),
        "0" | "no" | "false" => Some(false),
        _ => None,
    }
}

fn check_slot(spec: &SlotSpec) -> std::result::Result<(), String> {
    if spec.name.is_empty() || spec.name.contains(|c: char| !is_name_char(c)) {
        return Err(format!("invalid slot name `{}`", spec.name));
    }
    if !spec.informable && !spec.requestable {
        return Err(format!("slot `{}` is neither informable nor requestable", spec.name));
    }
    if spec.informable && spec.values.is_empty() {
        return Err(format!("informable slot `{}` has no values", spec.name));
    }
    for v in &spec.values {
        if v.contains([',', '(', ')', '=', '|', '\t', ';']) {
            return Err(format!(
                "value `{v}` of slot `{}` contains a reserved character",
                spec.name
            ));
        }
        if v == ANYTHING || v == NO_MATCH {
            return Err(format!("value `{v}` of slot `{}` is a reserved sentinel", spec.name));
        }
    }
    Ok(())
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}
