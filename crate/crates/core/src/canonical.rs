//! Canonical decimal rendering and the trace hash.
//!
//! Every number that feeds a hash or a cross-run comparison goes through
//! [`fmt6`], which renders exactly six fractional digits with
//! round-half-even on the exact binary value. Negative values that round to
//! zero are rendered as `0.000000` so that `-0.0` and `0.0` hash alike.

use std::fmt::Write as _;
use std::hash::Hasher;

use fnv::FnvHasher;

/// Number of fractional digits in every canonical rendering.
pub const CANONICAL_DIGITS: usize = 6;

/// Renders `value` with six fractional digits.
pub fn fmt6(value: f64) -> String {
    let mut out = String::with_capacity(16);
    write_fmt6(&mut out, value);
    out
}

/// Appends the canonical rendering of `value` to `out`.
pub fn write_fmt6(out: &mut String, value: f64) {
    let start = out.len();
    // std float formatting rounds the exact binary value half-to-even
    let _ = write!(out, "{:.*}", CANONICAL_DIGITS, value);
    if out[start..].starts_with('-') && out[start + 1..].bytes().all(|b| b == b'0' || b == b'.') {
        out.remove(start);
    }
}

/// Quantizes `value` to the canonical six-digit grid.
pub fn quantize6(value: f64) -> f64 {
    if !value.is_finite() {
        return value;
    }
    fmt6(value).parse().unwrap_or(value)
}

/// 64-bit FNV-1a digest fed with canonical lines.
pub struct TraceHasher {
    inner: FnvHasher,
    scratch: String,
}

impl Clone for TraceHasher {
    fn clone(&self) -> Self {
        // the FNV state is exactly the running digest
        Self {
            inner: FnvHasher::with_key(self.inner.finish()),
            scratch: String::with_capacity(64),
        }
    }
}

impl Default for TraceHasher {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for TraceHasher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TraceHasher").field("digest", &self.finish()).finish()
    }
}

impl TraceHasher {
    pub fn new() -> Self {
        Self {
            inner: FnvHasher::default(),
            scratch: String::with_capacity(64),
        }
    }

    /// Feeds one record: the values space-separated, newline-terminated.
    pub fn record(&mut self, values: &[f64]) {
        self.scratch.clear();
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.scratch.push(' ');
            }
            write_fmt6(&mut self.scratch, *v);
        }
        self.scratch.push('\n');
        self.inner.write(self.scratch.as_bytes());
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) {
        self.inner.write(bytes);
    }

    pub fn finish(&self) -> u64 {
        self.inner.finish()
    }
}

/// FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}
