/// Indexed minimum over a fixed set of slots, kept as a tournament tree.
///
/// Each slot holds one pending time (`f64::INFINITY` when idle). Updating a
/// slot costs `O(log n)` and the minimum is read in `O(1)`. Ties resolve to
/// the lower slot index.
#[derive(Clone, Debug)]
pub struct EventQueue {
    times: Vec<f64>,
    /// `tree[k]` is the winning slot of the subtree rooted at node `k`.
    tree: Vec<usize>,
    leaves: usize,
}

impl EventQueue {
    pub fn new(slots: usize) -> Self {
        let leaves = slots.max(1).next_power_of_two();
        let mut q = Self {
            times: vec![f64::INFINITY; leaves],
            tree: vec![0; 2 * leaves],
            leaves,
        };
        for k in 0..leaves {
            q.tree[leaves + k] = k;
        }
        for k in (1..leaves).rev() {
            q.tree[k] = q.winner(q.tree[2 * k], q.tree[2 * k + 1]);
        }
        q
    }

    #[inline]
    fn winner(&self, a: usize, b: usize) -> usize {
        let (ta, tb) = (self.times[a], self.times[b]);
        if tb < ta || (tb == ta && b < a) {
            b
        } else {
            a
        }
    }

    pub fn set(&mut self, slot: usize, time: f64) {
        debug_assert!(!time.is_nan());
        self.times[slot] = time;
        let mut k = (self.leaves + slot) / 2;
        while k >= 1 {
            self.tree[k] = self.winner(self.tree[2 * k], self.tree[2 * k + 1]);
            k /= 2;
        }
    }

    pub fn time(&self, slot: usize) -> f64 {
        self.times[slot]
    }

    /// Slot and time of the earliest pending entry.
    pub fn peek(&self) -> (usize, f64) {
        let s = self.tree[1];
        (s, self.times[s])
    }
}
