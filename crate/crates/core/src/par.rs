//! Bounded fan-out that preserves input order.

use std::thread;

/// Applies `f` to every item with at most `max_in_flight` concurrent calls.
/// Results come back in the order of `items`.
pub fn map_bounded<T, R, F>(items: &[T], max_in_flight: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if max_in_flight <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let mut out = Vec::with_capacity(items.len());
    for chunk in items.chunks(max_in_flight) {
        let f = &f;
        thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|item| s.spawn(move || f(item))).collect();
            out.extend(handles.into_iter().map(|h| h.join().expect("worker panicked")));
        });
    }
    out
}
