//! Library side of the `ypq` command: verification suites, reports and
//! their JSON/CSV encodings.

pub mod commands;
pub mod json;
pub mod suites;

/// Exit codes of the `ypq` binary.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
}

/// Builds the global rayon pool, capped by `YPQ_THREADS` when set.
pub fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("YPQ_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("YPQ_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("YPQ_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
