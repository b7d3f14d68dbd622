use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inner::{RepKey, RepresenterCache};

/// History depth: a finite window or the full history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    Finite(usize),
    Infinite,
}

impl Depth {
    /// Window size `m_k = min(k, m)` at iteration `k`.
    pub fn window(&self, k: usize) -> usize {
        match self {
            Depth::Finite(m) => k.min(*m),
            Depth::Infinite => k,
        }
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Finite(m) => write!(f, "{m}"),
            Depth::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Depth {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "inf" || t == "infinity" || t == "∞" {
            return Ok(Depth::Infinite);
        }
        t.parse::<usize>()
            .map(Depth::Finite)
            .map_err(|_| Error::InvalidArgument(format!("invalid depth '{s}'")))
    }
}

/// Cache slots for stored representers.
pub(crate) const SLOT_FP_RESID: u8 = 0;
pub(crate) const SLOT_G_OF_Q: u8 = 1;
pub(crate) const SLOT_G_OF_U: u8 = 2;

/// Everything remembered about iterate `u_j`.
///
/// `q_out = q(u_j)` is the map output `ũ_{j+1}`, so the pair `(u_j, ũ_{j+1})`
/// is aligned by construction. Residual slots are filled only by the
/// methods that need them.
#[derive(Debug, Clone)]
pub struct HistoryEntry {
    pub index: usize,
    pub u: Vec<f64>,
    pub q_out: Vec<f64>,
    /// `w(u_j) = q(u_j) − u_j` (AA).
    pub fp_resid: Option<Vec<f64>>,
    /// `g(ũ_{j+1}) = g(q(u_j))`, cached when `ũ_{j+1}` was produced (AAg).
    pub g_of_q: Option<Vec<f64>>,
    /// `g(u_j)` (NGMRES).
    pub g_of_u: Option<Vec<f64>>,
}

impl HistoryEntry {
    pub fn new(index: usize, u: Vec<f64>, q_out: Vec<f64>) -> Self {
        Self {
            index,
            u,
            q_out,
            fp_resid: None,
            g_of_q: None,
            g_of_u: None,
        }
    }
}

/// Ring buffer of past iterates, oldest → newest, plus their cached
/// Riesz representers keyed by `(slot, iterate index)`.
#[derive(Debug, Clone)]
pub struct IterationHistory {
    cap: Depth,
    entries: VecDeque<HistoryEntry>,
    pub(crate) reps: RepresenterCache,
}

impl IterationHistory {
    pub fn new(cap: Depth) -> Self {
        Self {
            cap,
            entries: VecDeque::new(),
            reps: RepresenterCache::new(),
        }
    }

    pub fn depth_cap(&self) -> Depth {
        self.cap
    }

    /// Raises (or sets) the depth cap. Evicted entries are not recovered.
    pub fn set_depth_cap(&mut self, cap: Depth) {
        self.cap = cap;
        self.trim();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries oldest → newest.
    pub fn entries(&self) -> impl DoubleEndedIterator<Item = &HistoryEntry> + ExactSizeIterator {
        self.entries.iter()
    }

    pub fn newest(&self) -> Option<&HistoryEntry> {
        self.entries.back()
    }

    /// Entry for iterate `k − lag`.
    pub fn lagged(&self, lag: usize) -> Option<&HistoryEntry> {
        let n = self.entries.len();
        (lag < n).then(|| &self.entries[n - 1 - lag])
    }

    /// Current window `m_k`: the number of differences available.
    pub fn window(&self) -> usize {
        let avail = self.entries.len().saturating_sub(1);
        match self.cap {
            Depth::Finite(m) => avail.min(m),
            Depth::Infinite => avail,
        }
    }

    pub fn representer_solves(&self) -> usize {
        self.reps.solves()
    }

    pub(crate) fn insert_representer(&mut self, key: RepKey, rep: Vec<f64>) {
        self.reps.insert(key, rep);
    }

    /// Appends the entry of the newest iterate and evicts beyond `m + 1`.
    pub fn push(&mut self, entry: HistoryEntry) -> Result<()> {
        if let Some(last) = self.entries.back() {
            if entry.index != last.index + 1 {
                return Err(Error::InvalidArgument(format!(
                    "history index {} does not follow {}",
                    entry.index, last.index
                )));
            }
        }
        self.entries.push_back(entry);
        self.trim();
        Ok(())
    }

    fn trim(&mut self) {
        if let Depth::Finite(m) = self.cap {
            while self.entries.len() > m + 1 {
                if let Some(old) = self.entries.pop_front() {
                    for slot in [SLOT_FP_RESID, SLOT_G_OF_Q, SLOT_G_OF_U] {
                        self.reps.remove((slot, old.index));
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_parsing_and_window() {
        assert_eq!("inf".parse::<Depth>().unwrap(), Depth::Infinite);
        assert_eq!("3".parse::<Depth>().unwrap(), Depth::Finite(3));
        assert!("-1".parse::<Depth>().is_err());
        assert_eq!(Depth::Finite(2).window(5), 2);
        assert_eq!(Depth::Finite(2).window(1), 1);
        assert_eq!(Depth::Infinite.window(7), 7);
    }

    #[test]
    fn ring_buffer_holds_m_plus_one() {
        let mut h = IterationHistory::new(Depth::Finite(2));
        for k in 0..6 {
            h.push(HistoryEntry::new(k, vec![k as f64], vec![k as f64 + 1.0]))
                .unwrap();
            assert!(h.len() <= 3);
            assert_eq!(h.window(), k.min(2));
        }
        let idx: Vec<usize> = h.entries().map(|e| e.index).collect();
        assert_eq!(idx, vec![3, 4, 5]);
        assert_eq!(h.lagged(0).unwrap().index, 5);
        assert_eq!(h.lagged(2).unwrap().index, 3);
        assert!(h.lagged(3).is_none());
    }

    #[test]
    fn rejects_misaligned_push() {
        let mut h = IterationHistory::new(Depth::Infinite);
        h.push(HistoryEntry::new(0, vec![0.0], vec![1.0])).unwrap();
        assert!(h.push(HistoryEntry::new(2, vec![0.0], vec![1.0])).is_err());
    }

    #[test]
    fn eviction_drops_representers() {
        let mut h = IterationHistory::new(Depth::Finite(0));
        h.push(HistoryEntry::new(0, vec![0.0], vec![1.0])).unwrap();
        h.insert_representer((SLOT_G_OF_Q, 0), vec![1.0]);
        h.push(HistoryEntry::new(1, vec![0.0], vec![1.0])).unwrap();
        assert!(h.reps.get((SLOT_G_OF_Q, 0)).is_none());
    }
}
