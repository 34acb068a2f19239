//! String distances used for header-name typo detection.
//!
//! Captured traffic contains mangled header names ("cteonnt-length" and
//! friends) produced by broken middleboxes scrambling real headers, so the
//! two distances that matter are Damerau-Levenshtein (insert/delete/
//! substitute/adjacent-transpose, the optimal-string-alignment variant) and
//! plain positional Hamming for equal-length names.

/// Optimal-string-alignment Damerau-Levenshtein distance over chars:
/// insertions, deletions, substitutions, and adjacent transpositions all
/// cost 1, and a substring is edited at most once.
pub fn damerau_levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let m = b.len();
    let mut prev2: Vec<usize> = vec![0; m + 1];
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur: Vec<usize> = vec![0; m + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut best = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                best = best.min(prev2[j - 2] + 1);
            }
            cur[j] = best;
        }
        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Number of positions where equal-length char slices differ.
/// Panics if lengths differ; callers gate on length equality.
pub fn hamming(a: &[char], b: &[char]) -> usize {
    assert_eq!(a.len(), b.len(), "hamming distance needs equal lengths");
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Weighted name similarity in [0, 1]:
/// `w_dl * (1 - DL/max_len) + w_h * (1 - hamming/len)`, where the Hamming
/// term applies only to equal-length names and contributes 0 otherwise.
pub fn name_similarity(a: &[char], b: &[char], w_dl: f64, w_h: f64) -> f64 {
    let max_len = a.len().max(b.len());
    if max_len == 0 {
        return 1.0;
    }
    let dl = damerau_levenshtein(a, b) as f64 / max_len as f64;
    let mut sim = w_dl * (1.0 - dl);
    if a.len() == b.len() {
        let ham = hamming(a, b) as f64 / a.len() as f64;
        sim += w_h * (1.0 - ham);
    }
    sim
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn dl(a: &str, b: &str) -> usize {
        damerau_levenshtein(&chars(a), &chars(b))
    }

    #[test]
    fn test_dl_identity_and_empty() {
        assert_eq!(dl("content-length", "content-length"), 0);
        assert_eq!(dl("", "abc"), 3);
        assert_eq!(dl("abc", ""), 3);
    }

    #[test]
    fn test_dl_single_edits() {
        assert_eq!(dl("server", "serber"), 1); // substitution
        assert_eq!(dl("server", "serverr"), 1); // insertion
        assert_eq!(dl("server", "servr"), 1); // deletion
        assert_eq!(dl("server", "sevrer"), 1); // adjacent transposition
    }

    #[test]
    fn test_dl_known_values() {
        assert_eq!(dl("kitten", "sitting"), 3);
        assert_eq!(dl("ca", "abc"), 3); // OSA restriction: full DL would give 2
        assert_eq!(dl("content-lenght", "content-length"), 1); // transposed "th"
        assert_eq!(dl("cteonnt-length", "content-length"), 4);
    }

    #[test]
    fn test_dl_symmetry() {
        for (a, b) in [("abcdef", "badcfe"), ("x-forwarded-for", "x-forwared-for"), ("a", "xyz")] {
            assert_eq!(dl(a, b), dl(b, a));
        }
    }

    #[test]
    fn test_hamming() {
        assert_eq!(hamming(&chars("abcd"), &chars("abcd")), 0);
        assert_eq!(hamming(&chars("abcd"), &chars("axcy")), 2);
    }

    #[test]
    fn test_similarity_equal_length_uses_both_terms() {
        // "cteonnt-length" vs "content-length": DL = 4, Hamming = 4, len 14.
        let sim = name_similarity(&chars("cteonnt-length"), &chars("content-length"), 0.7, 0.3);
        let expected = 0.7 * (1.0 - 4.0 / 14.0) + 0.3 * (1.0 - 4.0 / 14.0);
        assert!((sim - expected).abs() < 1e-12);
    }

    #[test]
    fn test_similarity_unequal_length_drops_hamming_term() {
        // "content-lengthh" (15) vs "content-length" (14): DL = 1.
        let sim = name_similarity(&chars("content-lengthh"), &chars("content-length"), 0.7, 0.3);
        let expected = 0.7 * (1.0 - 1.0 / 15.0);
        assert!((sim - expected).abs() < 1e-12);
    }

    #[test]
    fn test_similarity_identical_is_one() {
        let sim = name_similarity(&chars("etag"), &chars("etag"), 0.7, 0.3);
        assert!((sim - 1.0).abs() < 1e-12);
    }
}
