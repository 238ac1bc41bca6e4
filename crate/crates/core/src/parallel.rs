//! Order-preserving map over a slice, parallel when the `parallel` feature is
//! enabled and more than one worker is requested.

#[cfg(feature = "parallel")]
mod pool {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};

    use rayon::{ThreadPool, ThreadPoolBuilder};

    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();

    pub fn get(workers: usize) -> Option<Arc<ThreadPool>> {
        let pools = POOLS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut pools = pools.lock().ok()?;
        if let Some(p) = pools.get(&workers) {
            return Some(Arc::clone(p));
        }
        let pool = Arc::new(ThreadPoolBuilder::new().num_threads(workers).build().ok()?);
        pools.insert(workers, Arc::clone(&pool));
        Some(pool)
    }
}

pub fn par_map<T, R, F>(workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if workers > 1 && items.len() > 1 {
        use rayon::prelude::*;
        // Nested calls reuse whichever pool is already running them.
        if rayon::current_thread_index().is_some() {
            return items.par_iter().map(&f).collect();
        }
        if let Some(pool) = pool::get(workers) {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
    }
    let _ = workers;
    items.iter().map(f).collect()
}
