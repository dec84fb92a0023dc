//! Enumeration limits. Every exhaustive routine checks its input size
//! against one of these before doing any work. Defaults can be raised or
//! lowered through environment variables (read once per process).

use std::sync::OnceLock;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caps {
    /// Occupancy compositions C(n+Q-1, Q-1) allowed in the exact tail DP.
    pub dp_states: u64,
    /// Rows materialized by explicit subset-class enumeration.
    pub subset_rows: usize,
    /// Largest class searched exhaustively for a minimal cover.
    pub exact_cover_rows: usize,
    /// Largest ground set for shatter computations.
    pub shatter_ground: usize,
    /// Largest indicator family for inclusion-exclusion.
    pub bp_class: usize,
    /// Largest N_k for sign-vector enumeration.
    pub sign_pairs: usize,
    /// Largest 2N_k for exhaustive half-subset counting.
    pub half_points: usize,
    /// Largest k for materializing a 2^k-point hat space.
    pub hat_log2: u32,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            dp_states: 10_000_000,
            subset_rows: 200_000,
            exact_cover_rows: 12,
            shatter_ground: 18,
            bp_class: 20,
            sign_pairs: 20,
            half_points: 26,
            hat_log2: 20,
        }
    }
}

fn env_or<T: std::str::FromStr>(key: &str, default: T) -> T {
    std::env::var(key)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(default)
}

impl Caps {
    /// Defaults overridden by `SUPLAB_DP_CAP`, `SUPLAB_SUBSET_CAP`,
    /// `SUPLAB_COVER_CAP`, `SUPLAB_SHATTER_CAP`, `SUPLAB_BP_CAP`,
    /// `SUPLAB_SIGN_CAP`, `SUPLAB_HALF_CAP` and `SUPLAB_HAT_CAP`.
    pub fn from_env() -> Self {
        let d = Caps::default();
        Caps {
            dp_states: env_or("SUPLAB_DP_CAP", d.dp_states),
            subset_rows: env_or("SUPLAB_SUBSET_CAP", d.subset_rows),
            exact_cover_rows: env_or("SUPLAB_COVER_CAP", d.exact_cover_rows),
            shatter_ground: env_or("SUPLAB_SHATTER_CAP", d.shatter_ground),
            bp_class: env_or("SUPLAB_BP_CAP", d.bp_class),
            sign_pairs: env_or("SUPLAB_SIGN_CAP", d.sign_pairs),
            half_points: env_or("SUPLAB_HALF_CAP", d.half_points),
            hat_log2: env_or("SUPLAB_HAT_CAP", d.hat_log2),
        }
    }

    /// Process-wide limits, read from the environment on first use.
    pub fn global() -> &'static Caps {
        static CAPS: OnceLock<Caps> = OnceLock::new();
        CAPS.get_or_init(Caps::from_env)
    }
}
