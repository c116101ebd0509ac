//! Worker-pool cap via the `KDVBVP_THREADS` environment variable.
//!
//! All parallel loops assign each output element to exactly one task and
//! reduce in fixed order inside the task, so results are bit-identical for
//! any thread count.

use once_cell::sync::OnceCell;
use rayon::ThreadPool;

static POOL: OnceCell<ThreadPool> = OnceCell::new();

pub fn pool() -> &'static ThreadPool {
    POOL.get_or_init(|| {
        let n = std::env::var("KDVBVP_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|n| *n >= 1)
            .unwrap_or_else(num_cpus);
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .thread_name(|i| format!("kdvbvp-{i}"))
            .build()
            .expect("thread pool construction")
    })
}

fn num_cpus() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    #[test]
    fn pool_is_reusable() {
        let p = super::pool();
        let s: i64 = p.install(|| (0..100i64).sum());
        assert_eq!(s, 4950);
    }
}
