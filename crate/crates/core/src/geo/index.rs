//! Static k-d tree over unit-sphere vectors, used to prune nearest-basin
//! queries. Squared chord length is the metric.

#[derive(Debug, Clone, Default)]
pub(crate) struct PointIndex {
    // Implicit balanced tree: the median of items[lo..hi] sits at (lo + hi) / 2
    // and splits on axis depth % 3.
    items: Vec<([f64; 3], usize)>,
}

fn chord2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

impl PointIndex {
    pub(crate) fn build(points: impl IntoIterator<Item = [f64; 3]>) -> Self {
        let mut items: Vec<_> = points.into_iter().enumerate().map(|(i, p)| (p, i)).collect();
        let len = items.len();
        Self::arrange(&mut items, 0, len, 0);
        PointIndex { items }
    }

    fn arrange(items: &mut [([f64; 3], usize)], lo: usize, hi: usize, depth: usize) {
        if hi - lo <= 1 {
            return;
        }
        let axis = depth % 3;
        let mid = (lo + hi) / 2;
        items[lo..hi].select_nth_unstable_by(mid - lo, |a, b| {
            a.0[axis].total_cmp(&b.0[axis]).then(a.1.cmp(&b.1))
        });
        Self::arrange(items, lo, mid, depth + 1);
        Self::arrange(items, mid + 1, hi, depth + 1);
    }

    /// Smallest squared chord from `q` to any indexed point.
    pub(crate) fn nearest_chord2(&self, q: &[f64; 3]) -> Option<f64> {
        if self.items.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        self.nearest_rec(q, 0, self.items.len(), 0, &mut best);
        Some(best)
    }

    fn nearest_rec(&self, q: &[f64; 3], lo: usize, hi: usize, depth: usize, best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let (p, _) = &self.items[mid];
        *best = best.min(chord2(p, q));
        let axis = depth % 3;
        let delta = q[axis] - p[axis];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.nearest_rec(q, near.0, near.1, depth + 1, best);
        if delta * delta <= *best {
            self.nearest_rec(q, far.0, far.1, depth + 1, best);
        }
    }

    /// Indices of all points with squared chord to `q` at most `r2`.
    pub(crate) fn within(&self, q: &[f64; 3], r2: f64, out: &mut Vec<usize>) {
        self.within_rec(q, r2, 0, self.items.len(), 0, out);
    }

    fn within_rec(&self, q: &[f64; 3], r2: f64, lo: usize, hi: usize, depth: usize, out: &mut Vec<usize>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let (p, idx) = &self.items[mid];
        if chord2(p, q) <= r2 {
            out.push(*idx);
        }
        let axis = depth % 3;
        let delta = q[axis] - p[axis];
        if delta <= 0.0 || delta * delta <= r2 {
            self.within_rec(q, r2, lo, mid, depth + 1, out);
        }
        if delta >= 0.0 || delta * delta <= r2 {
            self.within_rec(q, r2, mid + 1, hi, depth + 1, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_matches_scan() {
        let pts: Vec<[f64; 3]> = (0..37)
            .map(|i| {
                let t = i as f64 * 0.7;
                [t.cos(), t.sin() * 0.3, (t * 1.3).sin()]
            })
            .collect();
        let index = PointIndex::build(pts.iter().copied());
        for j in 0..50 {
            let s = j as f64 * 0.31;
            let q = [s.sin(), s.cos(), 0.2 * s.sin()];
            let scan = pts.iter().map(|p| chord2(p, &q)).fold(f64::INFINITY, f64::min);
            assert_eq!(index.nearest_chord2(&q), Some(scan));
        }
    }

    #[test]
    fn empty_index() {
        let index = PointIndex::build(std::iter::empty());
        assert_eq!(index.nearest_chord2(&[1.0, 0.0, 0.0]), None);
    }
}
