//! Point-set storage, Euclidean distances, farthest point sampling, fill and
//! separation distances, and k-nearest-neighbor sparsity patterns.
//!
//! All operations are pure functions of their inputs. `PointSet` is immutable
//! after construction and safe to share across threads.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

/// `n` points in `R^d` with stable ids `0..n-1`.
#[derive(Clone, Debug)]
pub struct PointSet {
    coords: Vec<f64>,
    n: usize,
    d: usize,
}

impl PointSet {
    /// Builds from a flat row-major coordinate buffer of length `n * d`.
    pub fn new(coords: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if coords.is_empty() {
            return Err(Error::InvalidArgument("point set must be non-empty".into()));
        }
        if !coords.len().is_multiple_of(d) {
            return Err(Error::InvalidArgument(format!(
                "coordinate buffer length {} is not a multiple of d = {}",
                coords.len(),
                d
            )));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument(
                "all coordinates must be finite".into(),
            ));
        }
        let n = coords.len() / d;
        Ok(PointSet { coords, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("point set must be non-empty".into()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("ragged point rows".into()));
        }
        let mut coords = Vec::with_capacity(rows.len() * d);
        for r in rows {
            coords.extend_from_slice(r);
        }
        PointSet::new(coords, d)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    /// New set with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<PointSet> {
        PointSet::new(self.coords.iter().map(|c| c * factor).collect(), self.d)
    }

    /// New set holding the listed points, in the given order.
    pub fn subset(&self, ids: &[usize]) -> Result<PointSet> {
        if ids.is_empty() {
            return Err(Error::InvalidArgument("subset must be non-empty".into()));
        }
        let mut coords = Vec::with_capacity(ids.len() * self.d);
        for &i in ids {
            if i >= self.n {
                return Err(Error::InvalidArgument(format!("point id {i} out of range")));
            }
            coords.extend_from_slice(self.point(i));
        }
        PointSet::new(coords, self.d)
    }

    /// Id of the point closest to the coordinate centroid (smallest id on
    /// ties). The default sampling seed.
    pub fn centroid_seed(&self) -> usize {
        let mut centroid = vec![0.0; self.d];
        for i in 0..self.n {
            for (c, x) in centroid.iter_mut().zip(self.point(i)) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= self.n as f64;
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for i in 0..self.n {
            let dd = sq_dist(self.point(i), &centroid);
            if dd < best_d {
                best_d = dd;
                best = i;
            }
        }
        best
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        s += diff * diff;
    }
    s
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// How a landmark set was selected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionMethod {
    Fps,
    UniformRandom,
}

/// Ordered landmark ids with a per-step fill-distance trace.
///
/// `fill_trace[i]` is the fill distance of the first `i + 1` landmarks over
/// the whole set; the last entry is the final fill distance. For FPS this is
/// exactly the max-min distance attained at each step, so the trace is
/// non-increasing.
#[derive(Clone, Debug)]
pub struct LandmarkSelection {
    pub indices: Vec<usize>,
    pub fill_trace: Vec<f64>,
    pub method: SelectionMethod,
}

impl LandmarkSelection {
    pub fn k(&self) -> usize {
        self.indices.len()
    }
}

fn validate_k_seed(ps: &PointSet, k: usize, seed_index: usize) -> Result<()> {
    if k == 0 || k > ps.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {} must satisfy 1 <= k <= n = {}",
            k,
            ps.len()
        )));
    }
    if seed_index >= ps.len() {
        return Err(Error::InvalidArgument(format!(
            "seed index {} out of range (n = {})",
            seed_index,
            ps.len()
        )));
    }
    Ok(())
}

/// Farthest point sampling: greedily selects the point farthest from the
/// current selection. Ties break toward the smallest point id, so the output
/// is a total function of `(ps, k, seed_index)`.
///
/// The per-step distance update is parallel over points; the result is
/// identical to the sequential algorithm.
pub fn fps_sample(ps: &PointSet, k: usize, seed_index: usize) -> Result<LandmarkSelection> {
    validate_k_seed(ps, k, seed_index)?;
    let n = ps.len();
    let mut indices = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(k);
    let mut min_sq = vec![f64::INFINITY; n];
    let mut selected = vec![false; n];
    let mut current = seed_index;

    for step in 0..k {
        indices.push(current);
        selected[current] = true;
        let cur = ps.point(current);
        min_sq.par_iter_mut().enumerate().for_each(|(j, dj)| {
            let dd = sq_dist(ps.point(j), cur);
            if dd < *dj {
                *dj = dd;
            }
        });
        // One pass: the global max is the current fill distance (selected
        // points contribute 0); the unselected argmax is the next landmark.
        let mut fill_sq = 0.0f64;
        let mut next = current;
        let mut next_sq = -1.0f64;
        for j in 0..n {
            let dj = min_sq[j];
            if dj > fill_sq {
                fill_sq = dj;
            }
            if !selected[j] && dj > next_sq {
                next_sq = dj;
                next = j;
            }
        }
        trace.push(fill_sq.sqrt());
        if step + 1 < k {
            current = next;
        }
    }

    Ok(LandmarkSelection {
        indices,
        fill_trace: trace,
        method: SelectionMethod::Fps,
    })
}

/// Uniform random selection of `k` distinct points, deterministic per seed.
/// The fill trace records the fill distance of each selection prefix.
pub fn uniform_sample(ps: &PointSet, k: usize, rng_seed: u64) -> Result<LandmarkSelection> {
    if k == 0 || k > ps.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {} must satisfy 1 <= k <= n = {}",
            k,
            ps.len()
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let indices = rand::seq::index::sample(&mut rng, ps.len(), k).into_vec();
    let fill_trace = prefix_fill_trace(ps, &indices);
    Ok(LandmarkSelection {
        indices,
        fill_trace,
        method: SelectionMethod::UniformRandom,
    })
}

/// Fill distance of each prefix of `order` over the whole set.
fn prefix_fill_trace(ps: &PointSet, order: &[usize]) -> Vec<f64> {
    let n = ps.len();
    let mut min_sq = vec![f64::INFINITY; n];
    let mut trace = Vec::with_capacity(order.len());
    for &sel in order {
        let cur = ps.point(sel);
        min_sq.par_iter_mut().enumerate().for_each(|(j, dj)| {
            let dd = sq_dist(ps.point(j), cur);
            if dd < *dj {
                *dj = dd;
            }
        });
        let fill_sq = min_sq.iter().cloned().fold(0.0f64, f64::max);
        trace.push(fill_sq.sqrt());
    }
    trace
}

/// Fill distance of the selection over the point set: the largest distance
/// from any unselected point to the selection. Zero when every point is
/// selected.
pub fn fill_distance(ps: &PointSet, sel: &LandmarkSelection) -> Result<f64> {
    if sel.indices.is_empty() {
        return Err(Error::InvalidArgument("selection must be non-empty".into()));
    }
    let mut selected = vec![false; ps.len()];
    for &i in &sel.indices {
        if i >= ps.len() {
            return Err(Error::InvalidArgument(format!(
                "landmark id {i} out of range"
            )));
        }
        selected[i] = true;
    }
    let max_sq = (0..ps.len())
        .into_par_iter()
        .map(|j| {
            if selected[j] {
                return 0.0;
            }
            let p = ps.point(j);
            sel.indices
                .iter()
                .map(|&i| sq_dist(p, ps.point(i)))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    Ok(max_sq.sqrt())
}

/// Smallest pairwise distance within the selection. Requires k >= 2; zero for
/// duplicate points.
pub fn separation_distance(ps: &PointSet, sel: &LandmarkSelection) -> Result<f64> {
    if sel.k() < 2 {
        return Err(Error::InvalidArgument(
            "separation distance needs at least 2 landmarks".into(),
        ));
    }
    let mut min_sq = f64::INFINITY;
    for (a, &i) in sel.indices.iter().enumerate() {
        if i >= ps.len() {
            return Err(Error::InvalidArgument(format!(
                "landmark id {i} out of range"
            )));
        }
        for &j in &sel.indices[a + 1..] {
            let dd = sq_dist(ps.point(i), ps.point(j));
            if dd < min_sq {
                min_sq = dd;
            }
        }
    }
    Ok(min_sq.sqrt())
}

/// Lower-triangular sparsity pattern over positions `0..dim`, stored as
/// sorted position lists per row. Every row contains its diagonal.
#[derive(Clone, Debug)]
pub struct SparsityPattern {
    rows: Vec<Vec<usize>>,
}

impl SparsityPattern {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }
}

/// Pattern row `i` holds position `i` plus the `min(w-1, i)` nearest earlier
/// positions in the given ordering; ties break toward the smaller position.
pub fn knn_pattern(ps: &PointSet, ordering: &[usize], w: usize) -> Result<SparsityPattern> {
    if w == 0 {
        return Err(Error::InvalidArgument("w must be >= 1".into()));
    }
    if ordering.is_empty() {
        return Err(Error::InvalidArgument("ordering must be non-empty".into()));
    }
    let mut seen = vec![false; ps.len()];
    for &id in ordering {
        if id >= ps.len() {
            return Err(Error::InvalidArgument(format!(
                "point id {id} out of range"
            )));
        }
        if seen[id] {
            return Err(Error::InvalidArgument(format!(
                "ordering repeats point id {id}"
            )));
        }
        seen[id] = true;
    }

    let rows: Vec<Vec<usize>> = (0..ordering.len())
        .into_par_iter()
        .map(|i| {
            let take = (w - 1).min(i);
            let mut row: Vec<usize>;
            if take == 0 {
                row = vec![i];
            } else {
                let p = ps.point(ordering[i]);
                let mut cand: Vec<(f64, usize)> = (0..i)
                    .map(|j| (sq_dist(p, ps.point(ordering[j])), j))
                    .collect();
                cand.sort_by(|a, b| a.partial_cmp(b).unwrap());
                row = cand[..take].iter().map(|&(_, j)| j).collect();
                row.sort_unstable();
                row.push(i);
            }
            row
        })
        .collect();

    Ok(SparsityPattern { rows })
}

const BRUTE_FORCE_LIMIT: usize = 16;

fn for_each_subset<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn oracle_selection(indices: Vec<usize>) -> LandmarkSelection {
    LandmarkSelection {
        fill_trace: vec![],
        indices,
        method: SelectionMethod::Fps,
    }
}

/// Exhaustive search for the k-subset with minimal fill distance. Test
/// oracle; refuses instances with n > 16.
pub fn brute_force_optimal_fill(ps: &PointSet, k: usize) -> Result<(Vec<usize>, f64)> {
    brute_force_guard(ps, k)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_subset(ps.len(), k, |subset| {
        let sel = oracle_selection(subset.to_vec());
        let h = fill_distance(ps, &sel).expect("oracle subset is valid");
        match &best {
            Some((_, bh)) if *bh <= h => {}
            _ => best = Some((subset.to_vec(), h)),
        }
    });
    Ok(best.expect("at least one subset"))
}

/// Exhaustive search for the k-subset with maximal separation distance. Test
/// oracle; refuses instances with n > 16.
pub fn brute_force_optimal_separation(ps: &PointSet, k: usize) -> Result<(Vec<usize>, f64)> {
    brute_force_guard(ps, k)?;
    if k < 2 {
        return Err(Error::InvalidArgument(
            "separation oracle needs k >= 2".into(),
        ));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_subset(ps.len(), k, |subset| {
        let sel = oracle_selection(subset.to_vec());
        let q = separation_distance(ps, &sel).expect("oracle subset is valid");
        match &best {
            Some((_, bq)) if *bq >= q => {}
            _ => best = Some((subset.to_vec(), q)),
        }
    });
    Ok(best.expect("at least one subset"))
}

fn brute_force_guard(ps: &PointSet, k: usize) -> Result<()> {
    if ps.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(format!(
            "brute-force subset search limited to n <= {BRUTE_FORCE_LIMIT}, got n = {}",
            ps.len()
        )));
    }
    if k == 0 || k > ps.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {} must satisfy 1 <= k <= n = {}",
            k,
            ps.len()
        )));
    }
    Ok(())
}
