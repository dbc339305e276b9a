//! Deterministic fork-join over a slice.
//!
//! Episodes inside a batch are independent, so they fan out across scoped
//! threads; results come back in item order regardless of scheduling, and
//! the caller reduces them serially. That keeps every float accumulation
//! order fixed.

/// Worker threads to use: the `GLIMPSE_IQA_THREADS` environment variable
/// when set, otherwise `configured` when nonzero, otherwise all cores.
pub fn thread_count(configured: usize) -> usize {
    if let Ok(v) = std::env::var("GLIMPSE_IQA_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    if configured >= 1 {
        return configured;
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Applies `f` to every item, in parallel, returning results in item
/// order. `f` gets the item's index so callers can derive per-item seeds.
pub fn map_indexed<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let threads = threads.max(1).min(items.len().max(1));
    if threads <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let mut out: Vec<Option<R>> = Vec::with_capacity(items.len());
    out.resize_with(items.len(), || None);
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let f = &f;
        for (ci, (item_chunk, out_chunk)) in
            items.chunks(chunk).zip(out.chunks_mut(chunk)).enumerate()
        {
            scope.spawn(move || {
                for (j, (item, slot)) in item_chunk.iter().zip(out_chunk.iter_mut()).enumerate() {
                    *slot = Some(f(ci * chunk + j, item));
                }
            });
        }
    });
    out.into_iter().map(|r| r.expect("worker failed to fill slot")).collect()
}
