//! Successive-cancellation list engine with lazily copied path memory.
//!
//! Every path owns, per tree stage, a pointer to an LLR slot and a
//! partial-sum slot. Forking a path only bumps reference counts; a slot is
//! replaced by a fresh one the first time a shared path writes to it. Writes
//! always overwrite a slot completely, so no data is ever copied.
//!
//! Decisions on information leaves are kept in a back-pointer table, one row
//! per information index, from which trajectories are traced on demand.

use crate::code::PolarCode;
use crate::decoders::flip::SortRecord;
use crate::decoders::Kernel;

/// One of the `2m` extensions of the `m` current paths at an information leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub parent: u16,
    pub bit: u8,
    pub pm: f64,
}

/// Per-stage slot pools with path-major pointer rows.
///
/// Stage `s` holds `slots` blocks of `2^s` values, stored back to back after
/// the blocks of all lower stages.
#[derive(Debug, Clone)]
struct Pools<T> {
    n: usize,
    slots: usize,
    data: Vec<T>,
    ptr: Vec<u16>,
    refs: Vec<u16>,
    free: Vec<u16>,
    free_len: Vec<usize>,
}

impl<T: Copy + Default> Pools<T> {
    fn new(n: usize, slots: usize) -> Self {
        Self {
            n,
            slots,
            data: vec![T::default(); slots * ((1 << n) - 1)],
            ptr: vec![0; slots * n],
            refs: vec![0; slots * n],
            free: vec![0; slots * n],
            free_len: vec![0; n],
        }
    }

    /// Offset of the first block of stage `s`.
    #[inline]
    fn base(&self, s: usize) -> usize {
        self.slots * ((1 << s) - 1)
    }

    /// Offset of the block path `l` points to at stage `s`.
    #[inline]
    fn at(&self, s: usize, l: usize) -> usize {
        self.base(s) + ((self.ptr[l * self.n + s] as usize) << s)
    }

    fn reset(&mut self) {
        self.refs.iter_mut().for_each(|r| *r = 0);
        let slots = self.slots;
        for s in 0..self.n {
            for (k, f) in self.free[s * slots..(s + 1) * slots - 1].iter_mut().enumerate() {
                *f = (slots - 1 - k) as u16;
            }
            self.free_len[s] = slots - 1;
            self.ptr[s] = 0;
            self.refs[s * slots] = 1;
        }
    }

    /// Block offset path `l` may overwrite at stage `s`, detaching it from
    /// shared blocks.
    #[inline]
    fn writable(&mut self, s: usize, l: usize) -> usize {
        let at = l * self.n + s;
        let p = self.ptr[at] as usize;
        let r = &mut self.refs[s * self.slots + p];
        if *r == 1 {
            return self.base(s) + (p << s);
        }
        *r -= 1;
        let len = &mut self.free_len[s];
        assert!(*len > 0, "slot pool exhausted");
        *len -= 1;
        let q = self.free[s * self.slots + *len] as usize;
        self.refs[s * self.slots + q] = 1;
        self.ptr[at] = q as u16;
        self.base(s) + (q << s)
    }

    fn share(&mut self, l: usize) {
        for s in 0..self.n {
            let p = self.ptr[l * self.n + s] as usize;
            self.refs[s * self.slots + p] += 1;
        }
    }

    fn release(&mut self, l: usize) {
        for s in 0..self.n {
            let p = self.ptr[l * self.n + s] as usize;
            let r = &mut self.refs[s * self.slots + p];
            *r -= 1;
            if *r == 0 {
                self.free[s * self.slots + self.free_len[s]] = p as u16;
                self.free_len[s] += 1;
            }
        }
    }

    /// Reorders pointer rows so that new path `k` starts as a copy of `parents[k]`.
    fn permute(&mut self, parents: &[u16], scratch: &mut Vec<u16>) {
        if parents.iter().enumerate().all(|(k, &p)| p as usize == k) {
            return;
        }
        let n = self.n;
        scratch.clear();
        for &p in parents {
            let p = p as usize;
            scratch.extend_from_slice(&self.ptr[p * n..(p + 1) * n]);
        }
        self.ptr[..scratch.len()].copy_from_slice(scratch);
    }
}

/// Mutable decoding state; cloning it captures a restart point.
#[derive(Debug, Clone)]
pub(crate) struct ListState {
    llr: Pools<f32>,
    sum: Pools<u8>,
    pm: Vec<f64>,
    on_truth: Vec<bool>,
    cands: Vec<Candidate>,
    num_paths: usize,
    next_leaf: usize,
    pending: bool,
    rows: usize,
    first_error: Option<usize>,
}

/// Decoder state captured at the first information index of a partition,
/// after the candidate extensions there have been evaluated but before any
/// of them is selected.
#[derive(Debug, Clone)]
pub struct PartitionSnapshot {
    pub(crate) state: ListState,
}

impl PartitionSnapshot {
    /// Leaf index at which decoding resumes.
    pub fn index(&self) -> usize {
        self.state.next_leaf
    }

    /// The pending candidates: two per surviving path (`2L` once the list is full).
    pub fn candidates(&self) -> &[Candidate] {
        &self.state.cands
    }

    /// Information rows decided before the snapshot.
    pub fn rows(&self) -> usize {
        self.state.rows
    }
}

/// Reusable SCL engine for one code and list size.
#[derive(Debug, Clone)]
pub struct ListDecoder {
    n: usize,
    list_size: usize,
    sort_from_row: usize,
    kernel: Kernel,
    is_info: Vec<bool>,
    info_row: Vec<u32>,
    info_len: usize,
    channel: Vec<f32>,
    truth: Vec<u8>,
    has_truth: bool,
    stop_on_first_error: bool,
    bp: Vec<(u16, u8)>,
    st: ListState,
    sorted: Vec<Candidate>,
    keep: Vec<Candidate>,
    parents: Vec<u16>,
    children: Vec<u8>,
    row_scratch: Vec<u16>,
    old_truth: Vec<bool>,
}

#[inline]
fn f_minsum(a: f32, b: f32) -> f32 {
    let sign = (a.to_bits() ^ b.to_bits()) & 0x8000_0000;
    f32::from_bits(a.abs().min(b.abs()).to_bits() | sign)
}

#[inline]
fn f_exact(a: f32, b: f32) -> f32 {
    let corr = (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p();
    f_minsum(a, b) + corr
}

#[inline]
fn g_one(a: f32, b: f32, u: u8) -> f32 {
    b + f32::from_bits(a.to_bits() ^ ((u as u32) << 31))
}

#[inline]
fn g_block(a: &[f32], b: &[f32], u: &[u8], dst: &mut [f32]) {
    let len = dst.len();
    let (a, b, u) = (&a[..len], &b[..len], &u[..len]);
    for k in 0..len {
        dst[k] = g_one(a[k], b[k], u[k]);
    }
}

#[inline]
fn f_block(kernel: Kernel, a: &[f32], b: &[f32], dst: &mut [f32]) {
    let len = dst.len();
    let (a, b) = (&a[..len], &b[..len]);
    match kernel {
        Kernel::MinSum => {
            for k in 0..len {
                dst[k] = f_minsum(a[k], b[k]);
            }
        }
        Kernel::Exact => {
            for k in 0..len {
                dst[k] = f_exact(a[k], b[k]);
            }
        }
    }
}

/// Metric increment for deciding `bit` on a leaf with LLR `lam`.
#[inline]
pub(crate) fn pm_increment(kernel: Kernel, lam: f32, bit: u8) -> f64 {
    let lam = lam as f64;
    match kernel {
        Kernel::MinSum => {
            let hard = (lam < 0.0) as u8;
            if hard == bit {
                0.0
            } else {
                lam.abs()
            }
        }
        Kernel::Exact => {
            let x = if bit == 0 { lam } else { -lam };
            if x > 0.0 {
                (-x).exp().ln_1p()
            } else {
                -x + x.exp().ln_1p()
            }
        }
    }
}

impl ListDecoder {
    pub fn new(code: &PolarCode, list_size: usize, kernel: Kernel) -> Self {
        assert!(
            list_size.is_power_of_two() && list_size <= 1 << 15,
            "list size must be a power of two"
        );
        let n = code.n() as usize;
        let n_len = code.len();
        let mut info_row = vec![u32::MAX; n_len];
        for (r, &i) in code.info_set().iter().enumerate() {
            info_row[i] = r as u32;
        }
        let st = ListState {
            llr: Pools::new(n, list_size),
            sum: Pools::new(n, list_size),
            pm: vec![0.0; list_size],
            on_truth: vec![true; list_size],
            cands: Vec::with_capacity(2 * list_size),
            num_paths: 1,
            next_leaf: 0,
            pending: false,
            rows: 0,
            first_error: None,
        };
        Self {
            n,
            list_size,
            sort_from_row: list_size.trailing_zeros() as usize,
            kernel,
            is_info: code.info_mask().to_vec(),
            info_row,
            info_len: code.info_len(),
            channel: vec![0.0; n_len],
            truth: vec![0; n_len],
            has_truth: false,
            stop_on_first_error: false,
            bp: vec![(0, 0); code.info_len() * list_size],
            st,
            sorted: Vec::with_capacity(2 * list_size),
            keep: Vec::with_capacity(2 * list_size),
            parents: Vec::with_capacity(list_size),
            children: vec![0; list_size],
            row_scratch: Vec::with_capacity(list_size * n),
            old_truth: vec![false; list_size],
        }
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    pub fn code_len(&self) -> usize {
        self.is_info.len()
    }

    /// Whether leaf `i` is an information index where `2L -> L` sorting happens.
    pub fn is_sorting_index(&self, i: usize) -> bool {
        i < self.is_info.len()
            && self.is_info[i]
            && self.info_row[i] as usize >= self.sort_from_row
    }

    /// Resets to the start of a frame. `truth` is the transmitted input
    /// vector `u`, used only for genie diagnostics.
    pub fn load(&mut self, llrs: &[f64], truth: Option<&[u8]>) {
        assert_eq!(llrs.len(), self.channel.len(), "LLR vector length mismatch");
        for (c, &l) in self.channel.iter_mut().zip(llrs) {
            *c = l as f32;
        }
        match truth {
            Some(u) => {
                assert_eq!(u.len(), self.truth.len(), "truth vector length mismatch");
                self.truth.copy_from_slice(u);
                self.has_truth = true;
            }
            None => self.has_truth = false,
        }
        self.stop_on_first_error = false;
        let st = &mut self.st;
        st.llr.reset();
        st.sum.reset();
        st.pm[0] = 0.0;
        st.on_truth[0] = true;
        st.cands.clear();
        st.num_paths = 1;
        st.next_leaf = 0;
        st.pending = false;
        st.rows = 0;
        st.first_error = None;
    }

    /// Stops [`ListDecoder::run_until`] as soon as every path has left the
    /// transmitted trajectory. Requires a truth vector.
    pub fn set_stop_on_first_error(&mut self, on: bool) {
        self.stop_on_first_error = on;
    }

    pub fn num_paths(&self) -> usize {
        self.st.num_paths
    }

    pub fn pm(&self, l: usize) -> f64 {
        self.st.pm[l]
    }

    pub fn pms(&self) -> &[f64] {
        &self.st.pm[..self.st.num_paths]
    }

    pub fn pms_mut(&mut self) -> &mut [f64] {
        &mut self.st.pm[..self.st.num_paths]
    }

    /// Whether path `l` agrees with the truth vector on every decided leaf.
    pub fn on_truth(&self, l: usize) -> bool {
        self.st.on_truth[l]
    }

    /// First leaf after which no path followed the truth vector.
    pub fn first_error(&self) -> Option<usize> {
        self.st.first_error
    }

    pub fn next_leaf(&self) -> usize {
        self.st.next_leaf
    }

    pub fn rows(&self) -> usize {
        self.st.rows
    }

    pub fn info_len(&self) -> usize {
        self.info_len
    }

    /// Information bits of path `l` for rows `from..rows()`.
    pub fn trace(&self, l: usize, from: usize) -> Vec<u8> {
        let rows = self.st.rows;
        let mut out = vec![0u8; rows.saturating_sub(from)];
        self.trace_into(l, from, &mut out);
        out
    }

    pub(crate) fn trace_into(&self, l: usize, from: usize, out: &mut [u8]) {
        let mut p = l;
        for r in (from..self.st.rows).rev() {
            let (parent, bit) = self.bp[r * self.list_size + p];
            out[r - from] = bit;
            p = parent as usize;
        }
    }

    /// Full input vector estimate of path `l` (requires a finished frame).
    pub fn input_vector(&self, l: usize) -> Vec<u8> {
        let bits = self.trace(l, 0);
        let mut u = vec![0u8; self.is_info.len()];
        let mut r = 0;
        for (i, &info) in self.is_info.iter().enumerate() {
            if info && r < bits.len() {
                u[i] = bits[r];
                r += 1;
            }
        }
        u
    }

    /// Index of the path with the smallest metric (first on ties).
    pub fn best_path(&self) -> usize {
        let pm = self.pms();
        (0..pm.len()).fold(0, |b, l| if pm[l] < pm[b] { l } else { b })
    }

    pub fn snapshot(&self) -> PartitionSnapshot {
        assert!(self.st.pending, "snapshot must be taken at an evaluated information leaf");
        PartitionSnapshot { state: self.st.clone() }
    }

    pub fn restore(&mut self, snap: &PartitionSnapshot) {
        self.st.clone_from(&snap.state);
    }

    /// Decodes frozen leaves up to the next information leaf and evaluates
    /// its candidates, leaving the selection pending. Returns `false` at the
    /// end of the frame.
    pub fn advance_to_info(&mut self) -> bool {
        if self.st.pending {
            return true;
        }
        let n_len = self.is_info.len();
        while self.st.next_leaf < n_len && !self.is_info[self.st.next_leaf] {
            self.frozen_leaf();
        }
        if self.st.next_leaf == n_len {
            return false;
        }
        self.evaluate_candidates();
        true
    }

    /// Decodes every leaf up to and including `last`. At indices listed in
    /// `flips` (ascending) the worst `L` candidates are kept instead of the
    /// best. The metric split of every sorting step is appended to `records`.
    pub fn run_until(&mut self, last: usize, flips: &[usize], records: &mut Vec<SortRecord>) {
        let mut flips = flips.iter().copied().peekable();
        while self.st.next_leaf <= last {
            let i = self.st.next_leaf;
            if self.is_info[i] {
                if !self.st.pending {
                    self.evaluate_candidates();
                }
                while flips.peek().is_some_and(|&f| f < i) {
                    flips.next();
                }
                let flip = flips.peek() == Some(&i);
                self.select(flip, records);
                if self.stop_on_first_error && self.st.first_error.is_some() {
                    return;
                }
            } else {
                self.frozen_leaf();
            }
        }
    }

    fn frozen_leaf(&mut self) {
        for l in 0..self.st.num_paths {
            let lam = self.compute_leaf(l);
            self.st.pm[l] += pm_increment(self.kernel, lam, 0);
            self.combine(l, 0);
        }
        self.st.next_leaf += 1;
    }

    fn evaluate_candidates(&mut self) {
        self.st.cands.clear();
        for l in 0..self.st.num_paths {
            let lam = self.compute_leaf(l);
            let pm = self.st.pm[l];
            for bit in 0..2u8 {
                self.st.cands.push(Candidate {
                    parent: l as u16,
                    bit,
                    pm: pm + pm_increment(self.kernel, lam, bit),
                });
            }
        }
        self.st.pending = true;
    }

    fn select(&mut self, flip: bool, records: &mut Vec<SortRecord>) {
        let i = self.st.next_leaf;
        let big_l = self.list_size;
        self.keep.clear();
        if self.st.cands.len() <= big_l {
            self.keep.extend_from_slice(&self.st.cands);
        } else {
            self.sorted.clear();
            self.sorted.extend_from_slice(&self.st.cands);
            self.sorted.sort_unstable_by(|a, b| {
                a.pm.total_cmp(&b.pm)
                    .then(a.parent.cmp(&b.parent))
                    .then(a.bit.cmp(&b.bit))
            });
            records.push(SortRecord {
                index: i,
                best: self.sorted[0].pm,
                first_discarded: self.sorted[big_l].pm,
            });
            if flip {
                self.keep.extend_from_slice(&self.sorted[big_l..]);
            } else {
                self.keep.extend_from_slice(&self.sorted[..big_l]);
            }
            self.keep.sort_unstable_by_key(|c| (c.parent, c.bit));
        }
        self.rebuild();
        let row = self.st.rows;
        for k in 0..self.keep.len() {
            let c = self.keep[k];
            self.bp[row * big_l + k] = (c.parent, c.bit);
            self.combine(k, c.bit);
        }
        self.st.rows += 1;
        self.st.pending = false;
        self.st.next_leaf += 1;
        if self.has_truth
            && self.st.first_error.is_none()
            && !self.st.on_truth[..self.st.num_paths].iter().any(|&t| t)
        {
            self.st.first_error = Some(i);
        }
    }

    /// Replaces the path list by `self.keep`, sharing parent memory.
    fn rebuild(&mut self) {
        let old = self.st.num_paths;
        let new = self.keep.len();
        let st = &mut self.st;
        self.children[..old].iter_mut().for_each(|c| *c = 0);
        self.parents.clear();
        for c in &self.keep {
            self.children[c.parent as usize] += 1;
            self.parents.push(c.parent);
        }
        for l in 0..old {
            match self.children[l] {
                0 => {
                    st.llr.release(l);
                    st.sum.release(l);
                }
                1 => {}
                _ => {
                    st.llr.share(l);
                    st.sum.share(l);
                }
            }
        }
        st.llr.permute(&self.parents, &mut self.row_scratch);
        st.sum.permute(&self.parents, &mut self.row_scratch);
        self.old_truth[..old].copy_from_slice(&st.on_truth[..old]);
        let i = st.next_leaf;
        for (k, c) in self.keep.iter().enumerate() {
            st.pm[k] = c.pm;
            st.on_truth[k] = self.old_truth[c.parent as usize] && c.bit == self.truth[i];
        }
        st.num_paths = new;
    }

    /// LLR of the current leaf for path `l`.
    fn compute_leaf(&mut self, l: usize) -> f32 {
        let i = self.st.next_leaf;
        let n = self.n;
        let t = if i == 0 { n } else { i.trailing_zeros() as usize };
        let kernel = self.kernel;
        let st = &mut self.st;
        // Stage 0 is never stored: the leaf value is returned directly.
        for s in (1..t.min(n - 1) + 1).rev() {
            let half = 1usize << s;
            let dst_at = st.llr.writable(s, l);
            let split = st.llr.base(s + 1);
            let par_at = if s + 1 == n { 0 } else { st.llr.at(s + 1, l) - split };
            let (lo, hi) = st.llr.data.split_at_mut(split);
            let parent: &[f32] =
                if s + 1 == n { &self.channel } else { &hi[par_at..par_at + 2 * half] };
            let (a, b) = parent.split_at(half);
            let dst = &mut lo[dst_at..dst_at + half];
            if s == t {
                let u_at = st.sum.at(s, l);
                g_block(a, b, &st.sum.data[u_at..u_at + half], dst);
            } else {
                f_block(kernel, a, b, dst);
            }
        }
        let parent: &[f32] = if n == 1 {
            &self.channel
        } else {
            let p = st.llr.at(1, l);
            &st.llr.data[p..p + 2]
        };
        if t == 0 {
            let u = st.sum.data[st.sum.at(0, l)];
            g_one(parent[0], parent[1], u)
        } else {
            match kernel {
                Kernel::MinSum => f_minsum(parent[0], parent[1]),
                Kernel::Exact => f_exact(parent[0], parent[1]),
            }
        }
    }

    /// Propagates the decision on the current leaf into the partial sums of path `l`.
    fn combine(&mut self, l: usize, bit: u8) {
        let i = self.st.next_leaf;
        if i + 1 == self.is_info.len() {
            return;
        }
        // The finished subtree is rooted at the first stage where `i` has a zero bit.
        let top = i.trailing_ones() as usize;
        let sum = &mut self.st.sum;
        let w = 1usize << top;
        let at = sum.writable(top, l);
        let split = sum.base(top);
        let (slots, n, ptr) = (sum.slots, sum.n, &sum.ptr);
        let (lo, hi) = sum.data.split_at_mut(split);
        let dst = &mut hi[at - split..at - split + w];
        dst[w - 1] = bit;
        for s in 1..=top {
            let half = 1usize << (s - 1);
            let left_at = slots * (half - 1) + ((ptr[l * n + s - 1] as usize) << (s - 1));
            let left = &lo[left_at..left_at + half];
            let (out, right) = dst[w - 2 * half..].split_at_mut(half);
            for ((o, &r), &u) in out.iter_mut().zip(right.iter()).zip(left) {
                *o = u ^ r;
            }
        }
    }
}
