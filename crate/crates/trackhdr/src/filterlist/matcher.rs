//! Hostname matching against compiled rules.
//!
//! Every hostname is tested against the synthetic URL `https://<host>/`, so
//! scheme- and path-dependent patterns behave the way they would for a real
//! top-level fetch of that host. Matching is byte-oriented; patterns were
//! lowercased at parse time and hostnames are required to be lowercase.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{FilterError, FilterRule, FilterSet, PatternToken, RuleKind};

/// Outcome of matching one hostname.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matched: bool,
    /// Index into `FilterSet::rules` of the first (lowest-index) rule that
    /// matched, when one did.
    pub first_rule: Option<usize>,
}

impl MatchResult {
    const MISS: MatchResult = MatchResult { matched: false, first_rule: None };
}

/// A separator for `^`: anything but an ASCII letter, digit, `_`, `-`, `.`
/// or `%`. Bytes outside ASCII are conservatively not separators.
fn is_separator(b: u8) -> bool {
    b.is_ascii() && !(b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b'%'))
}

/// Backtracking token matcher. Patterns are short (a handful of tokens), so
/// the worst case stays trivial.
fn match_tokens(tokens: &[PatternToken], text: &[u8], pos: usize, must_end: bool) -> bool {
    match tokens.first() {
        None => !must_end || pos == text.len(),
        Some(PatternToken::Literal(lit)) => {
            let lit = lit.as_bytes();
            text.len() - pos >= lit.len()
                && &text[pos..pos + lit.len()] == lit
                && match_tokens(&tokens[1..], text, pos + lit.len(), must_end)
        }
        Some(PatternToken::Separator) => {
            if pos < text.len() {
                is_separator(text[pos]) && match_tokens(&tokens[1..], text, pos + 1, must_end)
            } else {
                // `^` also matches the end of the URL, consuming nothing.
                match_tokens(&tokens[1..], text, pos, must_end)
            }
        }
        Some(PatternToken::Wildcard) => {
            (pos..=text.len()).any(|p| match_tokens(&tokens[1..], text, p, must_end))
        }
    }
}

/// Does this rule match the synthetic URL for `host`? `url` must be
/// `https://<host>/`.
fn rule_matches(rule: &FilterRule, host: &str, url: &str) -> bool {
    let bytes = url.as_bytes();
    match rule.kind {
        RuleKind::Regex => rule.regex.as_ref().map(|re| re.is_match(url)).unwrap_or(false),
        RuleKind::AnchoredStart => match_tokens(&rule.tokens, bytes, 0, rule.anchor_end),
        RuleKind::PlainSubstring | RuleKind::AnchoredEnd => {
            let must_end = rule.anchor_end || rule.kind == RuleKind::AnchoredEnd;
            (0..=bytes.len()).any(|p| match_tokens(&rule.tokens, bytes, p, must_end))
        }
        RuleKind::HostnameAnchor => {
            // `||` binds to the start of the hostname or to any position
            // just after a `.` label boundary inside it.
            let host_start = "https://".len();
            let starts = std::iter::once(host_start).chain(
                host.bytes()
                    .enumerate()
                    .filter(|(_, b)| *b == b'.')
                    .map(|(i, _)| host_start + i + 1),
            );
            let mut starts: Vec<usize> = starts.collect();
            starts.dedup();
            starts
                .into_iter()
                .any(|p| match_tokens(&rule.tokens, bytes, p, rule.anchor_end))
        }
    }
}

/// First complete hostname label of an indexable hostname-anchor rule, if
/// any. A rule is indexable when a matching hostname must contain this
/// exact label, which holds when the pattern's first literal either reaches
/// a `.` or forms a whole label (followed by a separator token or pattern
/// end without a trailing wildcard/more text).
fn index_key(rule: &FilterRule) -> Option<String> {
    if rule.kind != RuleKind::HostnameAnchor {
        return None;
    }
    let lit = match rule.tokens.first() {
        Some(PatternToken::Literal(l)) => l,
        _ => return None,
    };
    if let Some(dot) = lit.find('.') {
        if dot > 0 {
            return Some(lit[..dot].to_string());
        }
        return None;
    }
    // No dot in the first literal: it only spans a complete label if a
    // separator follows immediately (a `.` can never match `^`).
    match rule.tokens.get(1) {
        Some(PatternToken::Separator) => Some(lit.clone()),
        _ => None,
    }
}

/// Splits rules into the first-label index and the always-check list.
pub(super) fn build_index(rules: &[FilterRule]) -> (BTreeMap<String, Vec<u32>>, Vec<u32>) {
    let mut index: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    let mut unindexed = Vec::new();
    for (i, rule) in rules.iter().enumerate() {
        match index_key(rule) {
            Some(key) => index.entry(key).or_default().push(i as u32),
            None => unindexed.push(i as u32),
        }
    }
    (index, unindexed)
}

fn validate_hostname(host: &str) -> Result<(), FilterError> {
    let ok = !host.is_empty()
        && !host.contains('/')
        && !host.contains(char::is_whitespace)
        && !host.chars().any(|c| c.is_ascii_uppercase());
    if ok {
        Ok(())
    } else {
        Err(FilterError::InvalidHostname(format!(
            "{host:?} is not a normalized hostname (lowercase, no path/whitespace)"
        )))
    }
}

impl FilterSet {
    /// Candidate rule indices for a hostname: everything unindexable plus
    /// index hits for each of the hostname's labels. Sorted ascending so
    /// the scan finds the lowest-index match first.
    fn candidates(&self, host: &str) -> Vec<u32> {
        let mut cand: BTreeSet<u32> = self.unindexed.iter().copied().collect();
        for label in host.split('.') {
            if let Some(hits) = self.index.get(label) {
                cand.extend(hits.iter().copied());
            }
        }
        cand.into_iter().collect()
    }

    fn match_scan<'a, I>(&self, indices: I, host: &str, want_exception: bool) -> MatchResult
    where
        I: IntoIterator<Item = &'a u32>,
    {
        let url = format!("https://{host}/");
        for &i in indices {
            let rule = &self.rules[i as usize];
            if rule.is_exception != want_exception {
                continue;
            }
            if rule_matches(rule, host, &url) {
                return MatchResult { matched: true, first_rule: Some(i as usize) };
            }
        }
        MatchResult::MISS
    }

    /// Index-accelerated matching in the default mode: exception rules are
    /// parsed but never evaluated. Returns the lowest-index matching rule.
    pub fn match_hostname(&self, host: &str) -> Result<MatchResult, FilterError> {
        validate_hostname(host)?;
        Ok(self.match_scan(&self.candidates(host), host, false))
    }

    /// Like [`FilterSet::match_hostname`], but a matching exception rule
    /// overrides any blocking match (`matched: false`); `first_rule` then
    /// names the winning exception.
    pub fn match_hostname_with_exceptions(&self, host: &str) -> Result<MatchResult, FilterError> {
        validate_hostname(host)?;
        let candidates = self.candidates(host);
        let exception = self.match_scan(&candidates, host, true);
        if exception.matched {
            return Ok(MatchResult { matched: false, first_rule: exception.first_rule });
        }
        Ok(self.match_scan(&candidates, host, false))
    }

    /// Brute-force twin of [`FilterSet::match_hostname`] that scans every
    /// rule without the index. Exists so tests can prove the index is a
    /// superset filter; results must be identical.
    pub fn match_hostname_scan(&self, host: &str) -> Result<MatchResult, FilterError> {
        validate_hostname(host)?;
        let all: Vec<u32> = (0..self.rules.len() as u32).collect();
        Ok(self.match_scan(&all, host, false))
    }
}
