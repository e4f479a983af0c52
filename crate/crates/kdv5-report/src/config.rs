//! Sectioned key-value config files.
//!
//! ```text
//! # comment
//! [a2-growth growth-main]
//! t = 0.5
//! n = 8 16 32 64
//! ```
//!
//! Each `[<kind> <id>]` header opens one experiment; the lines below it are
//! `key = value` assignments handed to the kind builder. Ids must be unique
//! across the file. Every diagnostic carries the offending line number.

use crate::experiment::{Entry, ExperimentSpec};
use anyhow::{bail, Result};
use std::collections::BTreeSet;

struct RawSection {
    kind: String,
    id: String,
    line: usize,
    entries: Vec<(String, Entry)>,
}

fn split_header(body: &str, line: usize) -> Result<(String, String)> {
    let mut parts = body.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(kind), Some(id), None) => Ok((kind.to_string(), id.to_string())),
        _ => bail!("line {line}: section header must be `[<kind> <id>]`, got `[{body}]`"),
    }
}

/// Parse a config file into validated experiments. `seed_override`
/// supplies or replaces the seed of every randomized section.
pub fn load_config(text: &str, seed_override: Option<u64>) -> Result<Vec<ExperimentSpec>> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(body) = rest.strip_suffix(']') else {
                bail!("line {line}: unterminated section header {trimmed:?}");
            };
            let (kind, id) = split_header(body, line)?;
            sections.push(RawSection { kind, id, line, entries: Vec::new() });
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            bail!("line {line}: expected `key = value` or a `[<kind> <id>]` header, got {trimmed:?}");
        };
        let key = key.trim();
        if key.is_empty() {
            bail!("line {line}: empty key");
        }
        let Some(section) = sections.last_mut() else {
            bail!("line {line}: `{key} = ...` appears before any section header");
        };
        section.entries.push((
            key.to_string(),
            Entry { value: value.trim().to_string(), line: Some(line) },
        ));
    }

    let mut seen = BTreeSet::new();
    let mut specs = Vec::with_capacity(sections.len());
    for section in sections {
        if !seen.insert(section.id.clone()) {
            bail!("line {}: duplicate experiment id `{}`", section.line, section.id);
        }
        let spec =
            ExperimentSpec::build(&section.kind, &section.id, section.entries, seed_override)
                .map_err(|e| {
                    anyhow::anyhow!("section `[{} {}]` (line {}): {e}", section.kind, section.id, section.line)
                })?;
        specs.push(spec);
    }
    Ok(specs)
}
