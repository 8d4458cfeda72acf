//! Packing sets: `M` points pairwise at least `d_min` apart.
//!
//! Two constructors realise existence arguments at desk scale:
//!
//! * [`gv_greedy`] scans `{0,1}^m` and keeps every word at Hamming distance
//!   `>= d_min` from those already kept. The result is maximal, so the balls
//!   of radius `d_min - 1` around it cover the cube and its size is at least
//!   `2^m / V(m, d_min - 1)`.
//! * [`cs_random_packing`] draws random unit-norm `k`-sparse vectors and
//!   keeps those at squared distance `>= 1/2` from all earlier ones, then
//!   measures how far the empirical second-moment matrix is from `I/n`.
//!
//! [`trim_packing`] keeps the `⌈δM⌉` codewords with the smallest energy
//! `‖A θ_i‖²`.

use std::fmt::Write as _;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Longest word length [`gv_greedy`] will enumerate.
pub const MAX_ENUMERATION_BITS: u32 = 24;

/// Largest ambient dimension for [`cs_random_packing`].
pub const MAX_SPARSE_DIMENSION: usize = 512;

/// Squared-distance floor between sparse codewords.
pub const SPARSE_MIN_DIST_SQ: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Hamming,
    L2,
    HellingerSq,
    SetDistance,
}

impl Metric {
    pub fn tag(self) -> &'static str {
        match self {
            Metric::Hamming => "hamming",
            Metric::L2 => "l2",
            Metric::HellingerSq => "hellinger_sq",
            Metric::SetDistance => "set_distance",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "hamming" => Metric::Hamming,
            "l2" => Metric::L2,
            "hellinger_sq" => Metric::HellingerSq,
            "set_distance" => Metric::SetDistance,
            _ => return None,
        })
    }
}

/// Elements that know how to measure themselves under some metrics.
pub trait Codeword {
    /// `None` if this element type does not support `metric`.
    fn distance(&self, other: &Self, metric: Metric) -> Option<f64>;
}

impl Codeword for u32 {
    fn distance(&self, other: &Self, metric: Metric) -> Option<f64> {
        (metric == Metric::Hamming).then(|| (self ^ other).count_ones() as f64)
    }
}

/// Sign vectors in `{±1}^m`.
impl Codeword for Vec<i8> {
    fn distance(&self, other: &Self, metric: Metric) -> Option<f64> {
        (metric == Metric::Hamming).then(|| self.iter().zip(other).filter(|(a, b)| a != b).count() as f64)
    }
}

impl Codeword for Vec<f64> {
    fn distance(&self, other: &Self, metric: Metric) -> Option<f64> {
        (metric == Metric::L2).then(|| self.iter().zip(other).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
    }
}

/// A collection of elements with a claimed minimum pairwise distance.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingSet<T> {
    elements: Vec<T>,
    metric: Metric,
    d_min: f64,
}

impl<T> PackingSet<T> {
    pub fn new(elements: Vec<T>, metric: Metric, d_min: f64) -> Result<Self> {
        if !(d_min > 0.0 && d_min.is_finite()) {
            return domain(format!("minimum distance must be positive, got {d_min}"));
        }
        Ok(Self { elements, metric, d_min })
    }

    pub fn elements(&self) -> &[T] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }
}

/// Outcome of [`verify_packing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification {
    /// `+inf` when there are fewer than two elements.
    pub min_distance: f64,
    pub argmin: Option<(usize, usize)>,
    pub passed: bool,
}

/// Checks `d(e_i, e_j) >= d_min` for all pairs using the elements' own metric.
pub fn verify_packing<T: Codeword>(set: &PackingSet<T>) -> Result<Certification> {
    let metric = set.metric;
    if set.len() >= 2 && set.elements[0].distance(&set.elements[1], metric).is_none() {
        return Err(Error::Capability(format!("element type has no {} metric", metric.tag())));
    }
    Ok(verify_packing_with(set, |a, b| a.distance(b, metric).expect("checked above")))
}

/// [`verify_packing`] with an externally supplied distance.
pub fn verify_packing_with<T>(set: &PackingSet<T>, distance: impl Fn(&T, &T) -> f64) -> Certification {
    let mut min_distance = f64::INFINITY;
    let mut argmin = None;
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            let d = distance(&set.elements[i], &set.elements[j]);
            if d < min_distance || d.is_nan() {
                min_distance = d;
                argmin = Some((i, j));
            }
        }
    }
    Certification { min_distance, argmin, passed: min_distance >= set.d_min }
}

/// `V(m, r) = Σ_{i<=r} C(m, i)`.
pub fn hamming_ball_volume(m: u32, radius: u32) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for i in 0..=radius.min(m) {
        total += binom;
        binom = binom * (m - i) as u128 / (i + 1) as u128;
    }
    total
}

/// `⌈2^m / V(m, d_min - 1)⌉`.
pub fn gv_size_bound(m: u32, d_min: u32) -> u128 {
    assert!(m < 127 && d_min >= 1);
    let v = hamming_ball_volume(m, d_min - 1);
    (1u128 << m).div_ceil(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyOrder {
    Lexicographic,
    SeededRandom(u64),
}

/// Binary code in `{0,1}^m`; coordinate `i` of a word is bit `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodebook {
    m: u32,
    codewords: Vec<u32>,
    d_min_claimed: u32,
}

impl BinaryCodebook {
    pub fn new(m: u32, codewords: Vec<u32>, d_min_claimed: u32) -> Result<Self> {
        if m == 0 || m > 32 {
            return domain(format!("word length must be in 1..=32, got {m}"));
        }
        if d_min_claimed == 0 {
            return domain("claimed minimum distance must be positive");
        }
        if m < 32 {
            if let Some(w) = codewords.iter().find(|&&w| w >> m != 0) {
                return domain(format!("codeword {w:#x} has bits beyond length {m}"));
            }
        }
        Ok(Self { m, codewords, d_min_claimed })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn codewords(&self) -> &[u32] {
        &self.codewords
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn d_min_claimed(&self) -> u32 {
        self.d_min_claimed
    }

    pub fn to_packing_set(&self) -> PackingSet<u32> {
        PackingSet::new(self.codewords.clone(), Metric::Hamming, self.d_min_claimed as f64)
            .expect("positive distance")
    }

    /// Codewords as sign vectors via `0 -> +1`, `1 -> -1`.
    pub fn sign_vectors(&self) -> Vec<Vec<i8>> {
        self.codewords
            .iter()
            .map(|w| (0..self.m).map(|i| if w >> i & 1 == 0 { 1 } else { -1 }).collect())
            .collect()
    }

    pub fn verify(&self) -> Certification {
        verify_packing(&self.to_packing_set()).expect("hamming on u32")
    }

    /// Text encoding: header `m k M d_min hamming` (with `k = m`), then one
    /// line of `0`/`1` characters per codeword, coordinate 0 first. Lines
    /// starting with `#` are skipped when parsing.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {} hamming\n", self.m, self.m, self.len(), self.d_min_claimed);
        for w in &self.codewords {
            for i in 0..self.m {
                out.push(if w >> i & 1 == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let h = Header::parse(header)?;
        if h.metric != Metric::Hamming {
            return Err(parse_err(1, "binary codebooks use the hamming metric"));
        }
        let d_min: u32 = h.d_min.parse().map_err(|_| parse_err(1, "d_min must be an integer"))?;
        let m = h.m as u32;
        let mut words = Vec::with_capacity(h.count);
        for (i, line) in lines {
            if line.len() != h.m {
                return Err(parse_err(i + 1, format!("expected {} bits", h.m)));
            }
            let mut w = 0u32;
            for (bit, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => w |= 1 << bit,
                    _ => return Err(parse_err(i + 1, format!("invalid bit {ch:?}"))),
                }
            }
            words.push(w);
        }
        if words.len() != h.count {
            return Err(parse_err(1, format!("header announces {} codewords, found {}", h.count, words.len())));
        }
        Self::new(m, words, d_min)
    }
}

struct Header {
    m: usize,
    k: usize,
    count: usize,
    d_min: String,
    metric: Metric,
}

impl Header {
    fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != 5 {
            return Err(parse_err(1, "header must be `m k M d_min metric`"));
        }
        let int = |s: &str, what: &str| s.parse::<usize>().map_err(|_| parse_err(1, format!("bad {what}")));
        Ok(Self {
            m: int(fields[0], "m")?,
            k: int(fields[1], "k")?,
            count: int(fields[2], "M")?,
            d_min: fields[3].to_string(),
            metric: Metric::from_tag(fields[4]).ok_or_else(|| parse_err(1, "unknown metric"))?,
        })
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Greedy code with minimum distance `d_min` in `{0,1}^m`.
///
/// Words are visited in the given order; a word is kept unless it lies in
/// the radius-`(d_min - 1)` ball of a kept word. Balls are marked in a
/// bitmap, so the cost is about `|code| · V(m, d_min - 1)`.
pub fn gv_greedy(m: u32, d_min: u32, order: GreedyOrder) -> Result<BinaryCodebook> {
    if m == 0 || d_min == 0 || d_min > m {
        return domain(format!("need 1 <= d_min <= m, got m = {m}, d_min = {d_min}"));
    }
    if m > MAX_ENUMERATION_BITS {
        return Err(Error::Capability(format!(
            "exhaustive greedy search is limited to m <= {MAX_ENUMERATION_BITS}, got {m}"
        )));
    }
    let size = 1usize << m;
    let ball = ball_offsets(m, d_min - 1);
    let mut covered = vec![false; size];
    let mut words = Vec::new();
    let mut visit = |w: u32, covered: &mut Vec<bool>| {
        if covered[w as usize] {
            return;
        }
        words.push(w);
        for &offset in &ball {
            covered[(w ^ offset) as usize] = true;
        }
    };
    match order {
        GreedyOrder::Lexicographic => {
            for w in 0..size as u32 {
                visit(w, &mut covered);
            }
        }
        GreedyOrder::SeededRandom(seed) => {
            let mut perm: Vec<u32> = (0..size as u32).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            for w in perm {
                visit(w, &mut covered);
            }
        }
    }
    BinaryCodebook::new(m, words, d_min)
}

/// All words of weight `<= radius` in `{0,1}^m`.
fn ball_offsets(m: u32, radius: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(hamming_ball_volume(m, radius) as usize);
    fn extend(start: u32, m: u32, left: u32, acc: u32, out: &mut Vec<u32>) {
        out.push(acc);
        if left == 0 {
            return;
        }
        for bit in start..m {
            extend(bit + 1, m, left - 1, acc | 1 << bit, out);
        }
    }
    extend(0, m, radius, 0, &mut out);
    out
}

/// A sparse real vector, entries sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|e| e.1 != 0.0).count()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.1 * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// `‖u - v‖²`, accumulated coordinate-wise.
    pub fn dist_sq(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.entries.len() || j < other.entries.len() {
            let a = self.entries.get(i);
            let b = other.entries.get(j);
            let diff = match (a, b) {
                (Some(a), Some(b)) if a.0 == b.0 => {
                    i += 1;
                    j += 1;
                    a.1 - b.1
                }
                (Some(a), Some(b)) if a.0 < b.0 => {
                    i += 1;
                    a.1
                }
                (Some(_), Some(b)) => {
                    j += 1;
                    b.1
                }
                (Some(a), None) => {
                    i += 1;
                    a.1
                }
                (None, Some(b)) => {
                    j += 1;
                    b.1
                }
                (None, None) => unreachable!(),
            };
            acc += diff * diff;
        }
        acc
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for &(i, x) in &self.entries {
            v[i] = x;
        }
        v
    }
}

/// Unit-norm `k`-sparse vectors in `R^n` with pairwise squared distance at
/// least `1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePacking {
    n: usize,
    k: usize,
    codewords: Vec<SparseVector>,
    beta_hat: f64,
}

impl SparsePacking {
    /// Builds a packing from given codewords and measures `beta_hat`.
    pub fn from_codewords(n: usize, k: usize, codewords: Vec<SparseVector>) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return domain(format!("need 1 <= k <= n, got n = {n}, k = {k}"));
        }
        for (i, u) in codewords.iter().enumerate() {
            if u.entries.iter().any(|e| e.0 >= n) {
                return domain(format!("codeword {i} has an index outside 0..{n}"));
            }
            if u.nnz() > k {
                return domain(format!("codeword {i} has {} > {k} non-zeros", u.nnz()));
            }
        }
        let beta_hat = isotropy_deviation(n, &codewords);
        Ok(Self { n, k, codewords, beta_hat })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn codewords(&self) -> &[SparseVector] {
        &self.codewords
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    /// `n · ‖(1/M) Σ u_i u_iᵀ - I/n‖_op`.
    pub fn beta_hat(&self) -> f64 {
        self.beta_hat
    }

    /// Smallest pairwise squared distance (`+inf` below two codewords).
    pub fn min_dist_sq(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.codewords.len() {
            for j in i + 1..self.codewords.len() {
                best = best.min(self.codewords[i].dist_sq(&self.codewords[j]));
            }
        }
        best
    }

    pub fn to_packing_set(&self) -> PackingSet<Vec<f64>> {
        PackingSet::new(
            self.codewords.iter().map(|u| u.to_dense(self.n)).collect(),
            Metric::L2,
            SPARSE_MIN_DIST_SQ.sqrt(),
        )
        .expect("positive distance")
    }

    /// Text encoding: header `n k M d_min l2` with `d_min = sqrt(1/2)`, then
    /// one codeword per line as space-separated `index:value` pairs. Values
    /// use the shortest representation that parses back to the same bits.
    /// Lines starting with `#` are skipped when parsing.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {} l2\n", self.n, self.k, self.len(), SPARSE_MIN_DIST_SQ.sqrt());
        for u in &self.codewords {
            let mut first = true;
            for &(i, x) in &u.entries {
                if !first {
                    out.push(' ');
                }
                first = false;
                write!(out, "{i}:{x:?}").expect("write to string");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let h = Header::parse(header)?;
        if h.metric != Metric::L2 {
            return Err(parse_err(1, "sparse packings use the l2 metric"));
        }
        let mut words = Vec::with_capacity(h.count);
        for (i, line) in lines {
            let mut entries = Vec::new();
            for tok in line.split(' ').filter(|t| !t.is_empty()) {
                let (idx, val) = tok.split_once(':').ok_or_else(|| parse_err(i + 1, "expected index:value"))?;
                let idx: usize = idx.parse().map_err(|_| parse_err(i + 1, "bad index"))?;
                let val: f64 = val.parse().map_err(|_| parse_err(i + 1, "bad value"))?;
                entries.push((idx, val));
            }
            words.push(SparseVector::new(entries));
        }
        if words.len() != h.count {
            return Err(parse_err(1, format!("header announces {} codewords, found {}", h.count, words.len())));
        }
        Self::from_codewords(h.m, h.k, words)
    }
}

/// `log((n/k)^{k/4})`, the log-size of the packing whose existence the
/// probabilistic argument guarantees.
pub fn nominal_sparse_log_size(n: f64, k: f64) -> f64 {
    k / 4.0 * (n / k).ln()
}

/// Random sparse packing by rejection sampling.
///
/// Each candidate has a uniformly random support of size `k` and i.i.d.
/// standard normal entries rescaled to unit norm. A candidate is kept iff its
/// squared distance to every kept codeword is at least `1/2`. After
/// `max_attempts` candidates without reaching `m_target`, the largest packing
/// found is returned inside [`Error::IncompletePacking`].
pub fn cs_random_packing(n: usize, k: usize, m_target: usize, seed: u64, max_attempts: usize) -> Result<SparsePacking> {
    if n == 0 || k == 0 || k > n {
        return domain(format!("need 1 <= k <= n, got n = {n}, k = {k}"));
    }
    if n > MAX_SPARSE_DIMENSION {
        return Err(Error::Capability(format!(
            "dense operator norms are limited to n <= {MAX_SPARSE_DIMENSION}, got {n}"
        )));
    }
    if m_target == 0 {
        return domain("target size must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept: Vec<SparseVector> = Vec::with_capacity(m_target);
    let mut attempts = 0;
    while kept.len() < m_target && attempts < max_attempts {
        attempts += 1;
        let candidate = random_unit_sparse(&mut rng, n, k);
        if kept.iter().all(|u| u.dist_sq(&candidate) >= SPARSE_MIN_DIST_SQ) {
            kept.push(candidate);
        }
    }
    let found = kept.len();
    let packing = SparsePacking::from_codewords(n, k, kept)?;
    if found < m_target {
        return Err(Error::IncompletePacking { found, target: m_target, attempts, best: Box::new(packing) });
    }
    Ok(packing)
}

fn random_unit_sparse(rng: &mut impl Rng, n: usize, k: usize) -> SparseVector {
    loop {
        let support = index::sample(rng, n, k);
        let values: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let entries = support.into_iter().zip(values).map(|(i, v)| (i, v / norm)).collect();
        return SparseVector::new(entries);
    }
}

fn isotropy_deviation(n: usize, codewords: &[SparseVector]) -> f64 {
    if codewords.is_empty() {
        return 1.0;
    }
    let m = codewords.len() as f64;
    let inv_n = 1.0 / n as f64;
    let norm = power_operator_norm(n, |v, out| {
        for (o, x) in out.iter_mut().zip(v) {
            *o = -inv_n * x;
        }
        for u in codewords {
            let s: f64 = u.entries.iter().map(|&(i, x)| x * v[i]).sum::<f64>() / m;
            for &(i, x) in &u.entries {
                out[i] += s * x;
            }
        }
    });
    n as f64 * norm
}

/// Largest absolute eigenvalue of a symmetric matrix given as rows.
#[allow(clippy::needless_range_loop)] // the symmetry check compares (i, j) with (j, i)
pub fn operator_norm(matrix: &[Vec<f64>]) -> Result<f64> {
    let n = matrix.len();
    if matrix.iter().any(|row| row.len() != n) {
        return domain("operator_norm needs a square matrix");
    }
    let scale = matrix.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    for i in 0..n {
        for j in 0..i {
            if (matrix[i][j] - matrix[j][i]).abs() > 1e-12 * scale.max(1.0) {
                return domain(format!("matrix is not symmetric at ({i}, {j})"));
            }
        }
    }
    if n == 0 {
        return Ok(0.0);
    }
    Ok(power_operator_norm(n, |v, out| {
        for (o, row) in out.iter_mut().zip(matrix) {
            *o = row.iter().zip(v).map(|(a, x)| a * x).sum();
        }
    }))
}

const POWER_MAX_ITERATIONS: usize = 200_000;
const POWER_RESIDUAL_TOL: f64 = 1e-11;

/// Power iteration on `A²` with a Rayleigh-quotient estimate; the squared
/// operator removes the sign ambiguity when `±‖A‖` are both eigenvalues.
/// A start vector that lands in the null space is replaced by a fresh random
/// one.
fn power_operator_norm(n: usize, apply: impl Fn(&[f64], &mut [f64])) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut av = vec![0.0; n];
    let mut aav = vec![0.0; n];
    'restart: for _ in 0..4 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        normalize(&mut v);
        let mut estimate = 0.0;
        for _ in 0..POWER_MAX_ITERATIONS {
            apply(&v, &mut av);
            apply(&av, &mut aav);
            let rq: f64 = v.iter().zip(&aav).map(|(a, b)| a * b).sum();
            let norm = aav.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                if estimate == 0.0 {
                    continue 'restart;
                }
                return estimate;
            }
            estimate = rq.max(0.0).sqrt();
            let residual = aav.iter().zip(&v).map(|(x, y)| (x - rq * y).powi(2)).sum::<f64>().sqrt();
            if residual <= POWER_RESIDUAL_TOL * rq {
                return estimate;
            }
            v.iter_mut().zip(&aav).for_each(|(a, b)| *a = b / norm);
        }
        return estimate;
    }
    0.0
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Indices of the `⌈δ_M M⌉` smallest entries (ties broken by index).
///
/// For non-negative entries with mean `c`, the largest kept entry is at most
/// `c / (1 - δ_M)`.
pub fn trim_packing(row_norm_sq: &[f64], delta_m: f64) -> Result<Vec<usize>> {
    let m = row_norm_sq.len();
    if m == 0 {
        return domain("cannot trim an empty packing");
    }
    let mf = m as f64;
    let (lo, hi) = (1.0 / mf, 1.0 - 1.0 / mf);
    if !(delta_m >= lo * (1.0 - 1e-12) && delta_m <= hi * (1.0 + 1e-12)) {
        return domain(format!("δ_M = {delta_m} outside [1/M, 1 - 1/M] = [{lo}, {hi}]"));
    }
    let keep = ((delta_m * mf) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| row_norm_sq[a].total_cmp(&row_norm_sq[b]).then(a.cmp(&b)));
    idx.truncate(keep);
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volume_and_gv_bound() {
        assert_eq!(hamming_ball_volume(8, 2), 37);
        assert_eq!(hamming_ball_volume(12, 3), 299);
        assert_eq!(gv_size_bound(8, 3), 7);
        assert_eq!(gv_size_bound(12, 4), 14);
        assert_eq!(hamming_ball_volume(5, 9), 32);
    }

    #[test]
    fn unit_distance_keeps_everything() {
        let code = gv_greedy(6, 1, GreedyOrder::Lexicographic).unwrap();
        assert_eq!(code.len(), 64);
        assert!(code.verify().passed);
    }

    #[test]
    fn greedy_m8_d3_golden() {
        let code = gv_greedy(8, 3, GreedyOrder::Lexicographic).unwrap();
        assert!(code.len() >= 7);
        assert!(code.verify().passed);
        // The lexicographic greedy code of length 8 and distance 3 is the
        // shortened lexicode of size 16.
        assert_eq!(code.len(), 16);
        assert_eq!(&code.codewords()[..4], &[0, 7, 25, 30]);
    }

    #[test]
    fn greedy_rejects_bad_arguments() {
        assert!(matches!(gv_greedy(25, 3, GreedyOrder::Lexicographic), Err(Error::Capability(_))));
        assert!(gv_greedy(4, 5, GreedyOrder::Lexicographic).is_err());
        assert!(gv_greedy(4, 0, GreedyOrder::Lexicographic).is_err());
    }

    #[test]
    fn seeded_order_is_deterministic() {
        let a = gv_greedy(10, 4, GreedyOrder::SeededRandom(3)).unwrap();
        let b = gv_greedy(10, 4, GreedyOrder::SeededRandom(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.verify().passed);
        assert!(a.len() as u128 >= gv_size_bound(10, 4));
    }

    #[test]
    fn verify_edge_cases() {
        let single = PackingSet::new(vec![5u32], Metric::Hamming, 3.0).unwrap();
        let c = verify_packing(&single).unwrap();
        assert!(c.passed);
        assert_eq!(c.min_distance, f64::INFINITY);
        assert_eq!(c.argmin, None);
        let twins = PackingSet::new(vec![1u32, 6, 6], Metric::Hamming, 1.0).unwrap();
        let c = verify_packing(&twins).unwrap();
        assert!(!c.passed);
        assert_eq!(c.argmin, Some((1, 2)));
        assert_eq!(c.min_distance, 0.0);
        let wrong = PackingSet::new(vec![1u32, 2], Metric::L2, 1.0).unwrap();
        assert!(verify_packing(&wrong).is_err());
    }

    #[test]
    fn codebook_text_round_trip() {
        let code = gv_greedy(7, 3, GreedyOrder::Lexicographic).unwrap();
        let text = code.to_text();
        assert!(text.starts_with("7 7 16 3 hamming\n"));
        let back = BinaryCodebook::from_text(&text).unwrap();
        assert_eq!(back, code);
        assert_eq!(back.to_text(), text);
        assert!(BinaryCodebook::from_text("7 7 2 3 hamming\n0000000\n").is_err());
        assert!(BinaryCodebook::from_text("3 3 1 1 hamming\n01x\n").is_err());
    }

    #[test]
    fn sparse_text_round_trip_is_bit_exact() {
        let p = cs_random_packing(32, 3, 6, 11, 10_000).unwrap();
        let text = p.to_text();
        let back = SparsePacking::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        for (a, b) in p.codewords().iter().zip(back.codewords()) {
            for (x, y) in a.entries().iter().zip(b.entries()) {
                assert_eq!(x.0, y.0);
                assert_eq!(x.1.to_bits(), y.1.to_bits());
            }
        }
    }

    #[test]
    fn sparse_low_constraint_case() {
        let p = cs_random_packing(5, 5, 2, 1, 1000).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.min_dist_sq() >= 0.5);
    }

    #[test]
    fn sparse_packing_properties() {
        let p = cs_random_packing(64, 4, 16, 42, 100_000).unwrap();
        assert_eq!(p.len(), 16);
        for u in p.codewords() {
            assert!((u.norm_sq() - 1.0).abs() < 1e-12);
            assert!(u.nnz() <= 4);
        }
        assert!(p.min_dist_sq() >= 0.5);
        assert!(verify_packing(&p.to_packing_set()).unwrap().passed);
        assert!(p.beta_hat() > 0.0);
    }

    #[test]
    fn sparse_incomplete_returns_best() {
        // Only a handful of nearly orthogonal unit vectors fit in R^2.
        match cs_random_packing(2, 2, 50, 5, 2000) {
            Err(Error::IncompletePacking { found, best, .. }) => {
                assert_eq!(found, best.len());
                assert!(found >= 2);
                assert!(best.min_dist_sq() >= 0.5);
            }
            other => panic!("expected incomplete packing, got {other:?}"),
        }
        assert!(matches!(cs_random_packing(600, 4, 2, 0, 10), Err(Error::Capability(_))));
    }

    #[test]
    fn operator_norm_examples() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((operator_norm(&id).unwrap() - 1.0).abs() < 1e-12);
        let d = vec![vec![3.0, 0.0], vec![0.0, -5.0]];
        assert!((operator_norm(&d).unwrap() - 5.0).abs() < 1e-10);
        let pm = vec![vec![5.0, 0.0], vec![0.0, -5.0]];
        assert!((operator_norm(&pm).unwrap() - 5.0).abs() < 1e-10);
        assert_eq!(operator_norm(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]).unwrap(), 0.0);
        assert!(operator_norm(&[vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
        assert!(operator_norm(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn trim_examples() {
        let idx = trim_packing(&[3.0; 6], 0.5).unwrap();
        assert_eq!(idx.len(), 3);
        let idx = trim_packing(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap();
        assert_eq!(idx, vec![0, 1]);
        let max = idx.iter().map(|&i| [1.0, 2.0, 3.0, 4.0][i]).fold(0.0, f64::max);
        assert!(max <= 2.5 / 0.5);
        assert!(trim_packing(&[1.0, 2.0], 0.9).is_err());
        assert!(trim_packing(&[1.0, 2.0, 3.0], 0.1).is_err());
        assert!(trim_packing(&[], 0.5).is_err());
        // δ M lands exactly on an integer.
        assert_eq!(trim_packing(&[1.0, 2.0, 3.0], 1.0 / 3.0).unwrap().len(), 1);
    }
}
