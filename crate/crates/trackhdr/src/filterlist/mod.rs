//! Filter-list parsing and hostname labeling.
//!
//! Understands the network-rule subset of the adblock filter syntax used by
//! EasyList/EasyPrivacy: `||host^` hostname anchors, `|` start/end anchors,
//! `*` wildcards, `^` separator placeholders, `@@` exceptions, `$option`
//! suffixes, `/regex/` rules, and `!`/`[...]` comments. Cosmetic rules
//! (`##`, `#@#`, `#?#`, `#$#`) are out of scope and skipped.
//!
//! The ground-truth rule is deliberately blunt: a hostname is a tracker iff
//! at least one blocking rule matches it (evaluated against the synthetic
//! URL `https://<host>/`). By default exception rules are parsed but not
//! evaluated — a host a list author bothered to block is tracking
//! infrastructure even when an exception unbreaks some site; honoring
//! exceptions is an explicit opt-in.

mod matcher;

pub use matcher::MatchResult;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::{Dataset, IngestError, Label};
use crate::util::sha256_hex;

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("InvalidHostname: {0}")]
    InvalidHostname(String),
    #[error("ParseError: {0}")]
    Parse(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// How a rule's pattern binds to the URL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// `||pattern` — pattern starts at the hostname or at any later label
    /// boundary within it.
    HostnameAnchor,
    /// Bare pattern — matches anywhere in the URL.
    PlainSubstring,
    /// `|pattern` — pattern starts at the first byte of the URL.
    AnchoredStart,
    /// `pattern|` — pattern ends at the last byte of the URL.
    AnchoredEnd,
    /// `/pattern/` — regular expression over the whole URL.
    Regex,
}

/// One element of a compiled pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternToken {
    /// Literal text (lowercased; matching is case-insensitive).
    Literal(String),
    /// `*` — any span of characters, including none.
    Wildcard,
    /// `^` — exactly one separator character (anything but a letter, digit,
    /// `_`, `-`, `.` or `%`), or the end of the URL.
    Separator,
}

/// A parsed `$option`. Options are retained for inspection but not
/// evaluated: hostname matching has no request context (content type,
/// party-ness, frame domain) to evaluate them against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleOption {
    pub name: String,
    pub value: Option<String>,
    pub negated: bool,
}

#[derive(Debug, Clone)]
pub struct FilterRule {
    pub raw_text: String,
    pub kind: RuleKind,
    pub tokens: Vec<PatternToken>,
    /// Compiled pattern for `RuleKind::Regex` rules.
    pub regex: Option<regex::Regex>,
    pub is_exception: bool,
    /// Trailing `|`: the pattern must reach the end of the URL.
    pub anchor_end: bool,
    pub options: Vec<RuleOption>,
}

/// Per-reason counts of lines that did not become rules.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    pub comments: usize,
    pub cosmetic: usize,
    pub empty: usize,
    /// Rules whose options only make sense for content modification
    /// (`$elemhide`, `$csp=`, `$redirect`, ...), not request blocking.
    pub inapplicable_options: usize,
    pub unparseable: usize,
    /// `/regex/` rules the bounded engine refused to compile.
    pub regex_rejected: usize,
}

impl ParseDiagnostics {
    pub fn total_skipped(&self) -> usize {
        self.comments + self.cosmetic + self.empty + self.inapplicable_options
            + self.unparseable + self.regex_rejected
    }
}

/// A parsed rule set with a first-label index for fast candidate lookup.
#[derive(Debug, Clone)]
pub struct FilterSet {
    /// Rules in source order; "first matching rule" means lowest index here.
    pub rules: Vec<FilterRule>,
    pub source_digest: String,
    pub diagnostics: ParseDiagnostics,
    /// hostname-anchor rules keyed by their first complete label. A lookup
    /// through this map is a superset filter: it may return non-matching
    /// candidates but never misses a matching rule.
    index: BTreeMap<String, Vec<u32>>,
    /// Rules that cannot be keyed by a first label; always candidates.
    unindexed: Vec<u32>,
}

/// Options that mark a rule as not a request-blocking rule at all.
const INAPPLICABLE_OPTIONS: &[&str] = &[
    "elemhide", "generichide", "specifichide", "genericblock", "csp", "removeparam",
    "redirect", "redirect-rule", "rewrite", "replace", "removeheader", "badfilter",
];

/// Maximum compiled size for `/regex/` rules; oversized patterns are
/// rejected and counted rather than risking pathological memory use.
const REGEX_SIZE_LIMIT: usize = 1 << 20;

enum LineOutcome {
    Rule(FilterRule),
    Comment,
    Cosmetic,
    Empty,
    Inapplicable,
    Unparseable,
    RegexRejected,
}

/// Parses filter-list text. Individual bad lines are counted, never fatal.
pub fn parse_filter_list(text: &str) -> FilterSet {
    let mut rules = Vec::new();
    let mut diagnostics = ParseDiagnostics::default();
    for line in text.lines() {
        match parse_line(line) {
            LineOutcome::Rule(rule) => rules.push(rule),
            LineOutcome::Comment => diagnostics.comments += 1,
            LineOutcome::Cosmetic => diagnostics.cosmetic += 1,
            LineOutcome::Empty => diagnostics.empty += 1,
            LineOutcome::Inapplicable => diagnostics.inapplicable_options += 1,
            LineOutcome::Unparseable => diagnostics.unparseable += 1,
            LineOutcome::RegexRejected => diagnostics.regex_rejected += 1,
        }
    }
    let (index, unindexed) = matcher::build_index(&rules);
    FilterSet {
        rules,
        source_digest: sha256_hex(text.as_bytes()),
        diagnostics,
        index,
        unindexed,
    }
}

/// Reads and concatenates one or more list files in the given order (rule
/// precedence follows file order). The digest covers the concatenation.
pub fn load_filter_lists(paths: &[std::path::PathBuf]) -> Result<FilterSet, FilterError> {
    if paths.is_empty() {
        return Err(FilterError::Parse("no filter-list files given".into()));
    }
    let mut text = String::new();
    for path in paths {
        text.push_str(&std::fs::read_to_string(path)?);
        if !text.ends_with('\n') {
            text.push('\n');
        }
    }
    Ok(parse_filter_list(&text))
}

/// Convenience for a single file.
pub fn load_filter_list(path: &Path) -> Result<FilterSet, FilterError> {
    load_filter_lists(&[path.to_path_buf()])
}

fn parse_line(line: &str) -> LineOutcome {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return LineOutcome::Empty;
    }
    if trimmed.starts_with('!') || trimmed.starts_with('[') {
        return LineOutcome::Comment;
    }
    if ["#@#", "#?#", "#$#", "##"].iter().any(|m| trimmed.contains(m)) {
        return LineOutcome::Cosmetic;
    }

    let (is_exception, rest) = match trimmed.strip_prefix("@@") {
        Some(r) => (true, r),
        None => (false, trimmed),
    };
    if rest.is_empty() {
        return LineOutcome::Unparseable;
    }

    // Regex rules: `/body/` optionally followed by `$options`.
    if let Some(body_and_opts) = rest.strip_prefix('/') {
        let split = if let Some(stripped) = body_and_opts.strip_suffix('/') {
            Some((stripped, ""))
        } else {
            body_and_opts.rfind("/$").map(|pos| (&body_and_opts[..pos], &body_and_opts[pos + 2..]))
        };
        if let Some((body, opts_text)) = split {
            if body.is_empty() {
                return LineOutcome::Unparseable;
            }
            let options = match parse_options(opts_text) {
                Some(o) => o,
                None => return LineOutcome::Unparseable,
            };
            if has_inapplicable_option(&options) {
                return LineOutcome::Inapplicable;
            }
            return match regex::RegexBuilder::new(body)
                .case_insensitive(true)
                .size_limit(REGEX_SIZE_LIMIT)
                .build()
            {
                Ok(compiled) => LineOutcome::Rule(FilterRule {
                    raw_text: trimmed.to_string(),
                    kind: RuleKind::Regex,
                    tokens: Vec::new(),
                    regex: Some(compiled),
                    is_exception,
                    anchor_end: false,
                    options,
                }),
                Err(_) => LineOutcome::RegexRejected,
            };
        }
        // A leading '/' that is not a regex literal falls through and is
        // treated as an ordinary substring pattern.
    }

    // Split an option suffix off the last '$' — but only when the suffix
    // actually looks like an option list, since '$' may appear in patterns.
    let (pattern_text, options) = match rest.rfind('$') {
        Some(pos) if pos > 0 => match parse_options(&rest[pos + 1..]) {
            Some(opts) => (&rest[..pos], opts),
            None => (rest, Vec::new()),
        },
        _ => (rest, Vec::new()),
    };
    if has_inapplicable_option(&options) {
        return LineOutcome::Inapplicable;
    }

    let (kind, body) = if let Some(b) = pattern_text.strip_prefix("||") {
        (RuleKind::HostnameAnchor, b)
    } else if let Some(b) = pattern_text.strip_prefix('|') {
        (RuleKind::AnchoredStart, b)
    } else {
        (RuleKind::PlainSubstring, pattern_text)
    };
    let (body, anchor_end) = match body.strip_suffix('|') {
        Some(b) => (b, true),
        None => (body, false),
    };
    let kind = if kind == RuleKind::PlainSubstring && anchor_end { RuleKind::AnchoredEnd } else { kind };

    let tokens = tokenize(body);
    if tokens.is_empty() {
        return LineOutcome::Unparseable;
    }
    LineOutcome::Rule(FilterRule {
        raw_text: trimmed.to_string(),
        kind,
        tokens,
        regex: None,
        is_exception,
        anchor_end,
        options,
    })
}

/// Compiles pattern text into tokens, lowercasing literals and collapsing
/// runs of `*`.
fn tokenize(body: &str) -> Vec<PatternToken> {
    let mut tokens = Vec::new();
    let mut literal = String::new();
    for c in body.chars() {
        match c {
            '*' => {
                if !literal.is_empty() {
                    tokens.push(PatternToken::Literal(std::mem::take(&mut literal)));
                }
                if tokens.last() != Some(&PatternToken::Wildcard) {
                    tokens.push(PatternToken::Wildcard);
                }
            }
            '^' => {
                if !literal.is_empty() {
                    tokens.push(PatternToken::Literal(std::mem::take(&mut literal)));
                }
                tokens.push(PatternToken::Separator);
            }
            _ => literal.extend(c.to_lowercase()),
        }
    }
    if !literal.is_empty() {
        tokens.push(PatternToken::Literal(literal));
    }
    tokens
}

/// Parses an option suffix. Returns None when the text cannot be an option
/// list (the caller then treats the '$' as pattern text).
fn parse_options(text: &str) -> Option<Vec<RuleOption>> {
    if text.is_empty() {
        return Some(Vec::new());
    }
    let mut out = Vec::new();
    for raw in text.split(',') {
        let raw = raw.trim();
        if raw.is_empty() {
            return None;
        }
        let (negated, raw) = match raw.strip_prefix('~') {
            Some(r) => (true, r),
            None => (false, raw),
        };
        let (name, value) = match raw.split_once('=') {
            Some((n, v)) => (n, Some(v.to_string())),
            None => (raw, None),
        };
        if name.is_empty()
            || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            || !name.chars().any(|c| c.is_ascii_alphabetic())
        {
            return None;
        }
        out.push(RuleOption { name: name.to_ascii_lowercase(), value, negated });
    }
    Some(out)
}

fn has_inapplicable_option(options: &[RuleOption]) -> bool {
    options.iter().any(|o| !o.negated && INAPPLICABLE_OPTIONS.contains(&o.name.as_str()))
}

/// Labels every record of a dataset by hostname matching: tracker iff some
/// blocking rule matches. With `honor_exceptions`, a matching `@@` rule
/// forces non-tracker. Labels are a pure function of the hostname, so equal
/// hostnames always agree; an empty rule set labels everything non-tracker.
pub fn label_dataset(
    ds: &Dataset,
    filters: &FilterSet,
    honor_exceptions: bool,
) -> Result<Dataset, FilterError> {
    let mut memo: BTreeMap<&str, Label> = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for r in &ds.records {
        let label = match memo.get(r.remote_hostname.as_str()) {
            Some(l) => *l,
            None => {
                let decision = if honor_exceptions {
                    filters.match_hostname_with_exceptions(&r.remote_hostname)?
                } else {
                    filters.match_hostname(&r.remote_hostname)?
                };
                let l = if decision.matched { Label::Tracker } else { Label::NonTracker };
                memo.insert(r.remote_hostname.as_str(), l);
                l
            }
        };
        labels.insert(r.record_id, label);
    }
    let mut prov = ds.provenance.clone();
    prov.filter_digest = Some(filters.source_digest.clone());
    Ok(Dataset::new(ds.records.clone(), prov, Some(labels))?)
}
