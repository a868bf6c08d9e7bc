//! Small shared helpers: hashing, text slicing, and concurrency primitives.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256 of `data`.
pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Returns the prefix of `text` containing at most `max_words` whitespace-separated
/// words. The cut happens at the end of the last kept word, so the result is always
/// a literal prefix of the input (internal whitespace and punctuation untouched).
pub fn word_prefix(text: &str, max_words: usize) -> &str {
    if max_words == 0 {
        return "";
    }
    let mut words = 0usize;
    let mut in_word = false;
    for (idx, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if in_word {
                in_word = false;
                words += 1;
                if words == max_words {
                    return &text[..idx];
                }
            }
        } else {
            in_word = true;
        }
    }
    text
}

/// Number of Unicode scalar values in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Slice of `text` between character offsets `begin` (inclusive) and `end`
/// (exclusive). Returns `None` when the range is out of bounds or inverted.
pub fn char_substring(text: &str, begin: usize, end: usize) -> Option<&str> {
    if begin > end {
        return None;
    }
    let mut byte_begin = None;
    let mut byte_end = None;
    for (count, (idx, _)) in text.char_indices().enumerate() {
        if count == begin {
            byte_begin = Some(idx);
        }
        if count == end {
            byte_end = Some(idx);
            break;
        }
    }
    let total = char_len(text);
    if begin == total {
        byte_begin = Some(text.len());
    }
    if end == total {
        byte_end = Some(text.len());
    }
    Some(&text[byte_begin?..byte_end?])
}

/// Sliding-window rate limiter: at most `max_per_sec` acquisitions are allowed
/// to start within any one-second window.
pub struct RateLimiter {
    max_per_sec: usize,
    starts: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    pub fn new(max_per_sec: usize) -> Self {
        RateLimiter {
            max_per_sec: max_per_sec.max(1),
            starts: Mutex::new(VecDeque::new()),
        }
    }

    /// Blocks until starting one more operation keeps the rate within bounds.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut starts = self.starts.lock().unwrap();
                let now = Instant::now();
                while let Some(front) = starts.front() {
                    if now.duration_since(*front) >= Duration::from_secs(1) {
                        starts.pop_front();
                    } else {
                        break;
                    }
                }
                if starts.len() < self.max_per_sec {
                    starts.push_back(now);
                    None
                } else {
                    let oldest = *starts.front().unwrap();
                    Some(Duration::from_secs(1).saturating_sub(now.duration_since(oldest)))
                }
            };
            match wait {
                None => return,
                Some(d) => std::thread::sleep(d.max(Duration::from_millis(1))),
            }
        }
    }
}

/// Counting semaphore; permits are released when the guard drops.
pub struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

pub struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().unwrap();
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}

/// Runs `op` up to `max_attempts` times, sleeping `initial_backoff * 2^(n-1)`
/// between attempts. Only errors classified transient by `is_transient` are
/// retried; the last error is returned when attempts run out.
pub fn retry_with_backoff<T, E>(
    max_attempts: u32,
    initial_backoff: Duration,
    is_transient: impl Fn(&E) -> bool,
    mut op: impl FnMut() -> Result<T, E>,
) -> Result<T, E> {
    let max_attempts = max_attempts.max(1);
    let mut backoff = initial_backoff;
    for attempt in 1..=max_attempts {
        match op() {
            Ok(value) => return Ok(value),
            Err(err) => {
                if attempt == max_attempts || !is_transient(&err) {
                    return Err(err);
                }
                std::thread::sleep(backoff);
                backoff *= 2;
            }
        }
    }
    unreachable!("loop always returns");
}

/// Applies `f` to every item on up to `workers` threads, preserving input order
/// in the result. `f` receives `(index, &item)`.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().enumerate().map(|(i, item)| f(i, item)).collect();
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = Vec::with_capacity(items.len());
    slots.resize_with(items.len(), || None);
    let slots_mutex = Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= items.len() {
                    break;
                }
                let result = f(idx, &items[idx]);
                slots_mutex.lock().unwrap()[idx] = Some(result);
            });
        }
    });
    slots.into_iter().map(|slot| slot.unwrap()).collect()
}
