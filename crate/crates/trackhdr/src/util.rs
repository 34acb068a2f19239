//! Small shared helpers: content digests and quantile interpolation.

use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Hex-encoded SHA-256 of a file's contents.
pub fn sha256_file(path: &std::path::Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(sha256_hex(&bytes))
}

/// Quantile of an already-sorted slice with linear interpolation between
/// closest ranks (the "type 7" rule used by numpy's default and R's
/// `quantile(..., type = 7)`).
///
/// `p` is clamped to [0, 1]. Panics on an empty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let p = p.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = h - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Convenience: (Q1, median, Q3) of an unsorted sample.
pub fn quartiles(values: &mut [f64]) -> (f64, f64, f64) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quartiles"));
    (
        quantile_sorted(values, 0.25),
        quantile_sorted(values, 0.50),
        quantile_sorted(values, 0.75),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_sha256_known_vector() {
        // sha256("abc") from FIPS 180-2 appendix B.1
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn test_quantile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        // h = 3 * 0.25 = 0.75 -> 1 + 0.75 * (2 - 1)
        assert_eq!(quantile_sorted(&xs, 0.25), 1.75);
        assert_eq!(quantile_sorted(&xs, 0.5), 2.5);
        assert_eq!(quantile_sorted(&xs, 0.75), 3.25);
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
    }

    #[test]
    fn test_quantile_single_element() {
        assert_eq!(quantile_sorted(&[7.5], 0.25), 7.5);
        assert_eq!(quantile_sorted(&[7.5], 0.99), 7.5);
    }

    #[test]
    fn test_quartiles_odd_count() {
        let mut xs = vec![5.0, 1.0, 3.0];
        let (q1, med, q3) = quartiles(&mut xs);
        assert_eq!(med, 3.0);
        assert_eq!(q1, 2.0);
        assert_eq!(q3, 4.0);
    }
}
