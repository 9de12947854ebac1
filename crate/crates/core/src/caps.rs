//! Brute-force size caps.

/// Default cap on brute-force enumeration over `2^n` assignments.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 24;

/// Current brute-force cap; the `PERMSUM_MAX_N` environment variable
/// overrides the default.
pub fn brute_force_cap() -> usize {
    std::env::var("PERMSUM_MAX_N")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_BRUTE_FORCE_CAP)
}
