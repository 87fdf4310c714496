//! Bucketed 2-d tree over a growing point list.
//!
//! Supports bulk construction, single-point insertion and exact k-nearest
//! queries with a caller-supplied acceptance filter. Neighbors are ordered by
//! `(distance, id)`, so equidistant points resolve to the lower id.

use crate::{Point2, Real};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const BUCKET: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Axis {
    X,
    Y,
}

#[derive(Clone, Debug)]
enum Node<T> {
    Leaf(Vec<usize>),
    Split { axis: Axis, value: T, left: usize, right: usize },
}

#[derive(Clone, Debug)]
pub struct KdTree<T> {
    points: Vec<Point2<T>>,
    nodes: Vec<Node<T>>,
}

#[derive(Clone, Copy, Debug)]
struct Entry<T> {
    d2: T,
    id: usize,
}

impl<T: Real> PartialEq for Entry<T> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<T: Real> Eq for Entry<T> {}
impl<T: Real> PartialOrd for Entry<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real> Ord for Entry<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.d2
            .partial_cmp(&o.d2)
            .unwrap_or(Ordering::Equal)
            .then(self.id.cmp(&o.id))
    }
}

#[inline]
fn coord<T: Real>(p: Point2<T>, axis: Axis) -> T {
    match axis {
        Axis::X => p.x,
        Axis::Y => p.y,
    }
}

impl<T: Real> Default for KdTree<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> KdTree<T> {
    pub fn new() -> Self {
        Self {
            points: Vec::new(),
            nodes: vec![Node::Leaf(Vec::new())],
        }
    }

    /// Balanced tree over `points`; point ids are their positions.
    pub fn build(points: &[Point2<T>]) -> Self {
        let mut tree = Self {
            points: points.to_vec(),
            nodes: Vec::new(),
        };
        let mut ids: Vec<usize> = (0..points.len()).collect();
        tree.build_node(&mut ids);
        tree
    }

    fn build_node(&mut self, ids: &mut [usize]) -> usize {
        let slot = self.nodes.len();
        if ids.len() <= BUCKET {
            self.nodes.push(Node::Leaf(ids.to_vec()));
            return slot;
        }
        let Some(axis) = self.split_axis(ids) else {
            self.nodes.push(Node::Leaf(ids.to_vec()));
            return slot;
        };
        self.nodes.push(Node::Leaf(Vec::new()));
        let mid = ids.len() / 2;
        let pts = &self.points;
        ids.select_nth_unstable_by(mid, |&a, &b| {
            coord(pts[a], axis)
                .partial_cmp(&coord(pts[b], axis))
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let value = coord(self.points[ids[mid]], axis);
        let (lo, hi) = ids.split_at_mut(mid);
        let left = self.build_node(lo);
        let right = self.build_node(hi);
        self.nodes[slot] = Node::Split { axis, value, left, right };
        slot
    }

    fn split_axis(&self, ids: &[usize]) -> Option<Axis> {
        let mut lo = Point2::new(T::infinity(), T::infinity());
        let mut hi = Point2::new(T::neg_infinity(), T::neg_infinity());
        for &i in ids {
            let p = self.points[i];
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let (sx, sy) = (hi.x - lo.x, hi.y - lo.y);
        if sx <= T::zero() && sy <= T::zero() {
            None
        } else if sx >= sy {
            Some(Axis::X)
        } else {
            Some(Axis::Y)
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: usize) -> Point2<T> {
        self.points[id]
    }

    /// Adds a point and returns its id.
    pub fn insert(&mut self, p: Point2<T>) -> usize {
        let id = self.points.len();
        self.points.push(p);
        let mut node = 0;
        loop {
            match &mut self.nodes[node] {
                Node::Split { axis, value, left, right } => {
                    node = if coord(p, *axis) < *value { *left } else { *right };
                }
                Node::Leaf(ids) => {
                    ids.push(id);
                    if ids.len() > BUCKET {
                        self.split_leaf(node);
                    }
                    return id;
                }
            }
        }
    }

    fn split_leaf(&mut self, node: usize) {
        let Node::Leaf(ids) = &self.nodes[node] else {
            return;
        };
        let mut ids = ids.clone();
        let Some(axis) = self.split_axis(&ids) else {
            return;
        };
        let pts = &self.points;
        ids.sort_by(|&a, &b| {
            coord(pts[a], axis)
                .partial_cmp(&coord(pts[b], axis))
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mid = ids.len() / 2;
        let value = coord(self.points[ids[mid]], axis);
        let right_ids = ids.split_off(mid);
        let left = self.nodes.len();
        self.nodes.push(Node::Leaf(ids));
        let right = left + 1;
        self.nodes.push(Node::Leaf(right_ids));
        self.nodes[node] = Node::Split { axis, value, left, right };
    }

    /// The `k` nearest accepted points to `q` as `(squared distance, id)`,
    /// sorted ascending.
    pub fn nearest_filtered<F>(&self, q: Point2<T>, k: usize, accept: F) -> Vec<(T, usize)>
    where
        F: Fn(usize) -> bool,
    {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, q, k, &accept, &mut heap);
        let mut out: Vec<Entry<T>> = heap.into_vec();
        out.sort();
        out.into_iter().map(|e| (e.d2, e.id)).collect()
    }

    pub fn nearest(&self, q: Point2<T>, k: usize) -> Vec<(T, usize)> {
        self.nearest_filtered(q, k, |_| true)
    }

    fn search<F>(&self, node: usize, q: Point2<T>, k: usize, accept: &F, heap: &mut BinaryHeap<Entry<T>>)
    where
        F: Fn(usize) -> bool,
    {
        match &self.nodes[node] {
            Node::Leaf(ids) => {
                for &id in ids {
                    let e = Entry {
                        d2: q.dist_sq(self.points[id]),
                        id,
                    };
                    if heap.len() == k && e >= *heap.peek().expect("full heap") {
                        continue;
                    }
                    if !accept(id) {
                        continue;
                    }
                    heap.push(e);
                    if heap.len() > k {
                        heap.pop();
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = coord(q, *axis) - *value;
                let (near, far) = if diff < T::zero() { (*left, *right) } else { (*right, *left) };
                self.search(near, q, k, accept, heap);
                if heap.len() < k || diff * diff <= heap.peek().expect("full heap").d2 {
                    self.search(far, q, k, accept, heap);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[Point2<f64>], q: Point2<f64>, k: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..points.len()).collect();
        ids.sort_by(|&a, &b| {
            q.dist_sq(points[a])
                .partial_cmp(&q.dist_sq(points[b]))
                .unwrap()
                .then(a.cmp(&b))
        });
        ids.truncate(k);
        ids
    }

    #[test]
    fn grid_ties_resolve_by_id() {
        let pts: Vec<_> = (0..3)
            .flat_map(|j| (0..3).map(move |i| Point2::new(i as f64, j as f64)))
            .collect();
        let tree = KdTree::build(&pts);
        let got: Vec<usize> = tree.nearest_filtered(pts[4], 4, |i| i != 4).into_iter().map(|e| e.1).collect();
        assert_eq!(got, vec![1, 3, 5, 7]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            raw in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..400),
            qx in -0.2..1.2f64, qy in -0.2..1.2f64, k in 1usize..30, split in 0usize..400,
        ) {
            // quantize so that distance ties actually occur
            let pts: Vec<_> = raw.iter().map(|&(x, y)| Point2::new((x * 20.0).round() / 20.0, (y * 20.0).round() / 20.0)).collect();
            let split = split.min(pts.len());
            let mut tree = KdTree::build(&pts[..split]);
            for &p in &pts[split..] {
                tree.insert(p);
            }
            let q = Point2::new(qx, qy);
            let got: Vec<usize> = tree.nearest(q, k).into_iter().map(|e| e.1).collect();
            prop_assert_eq!(got, brute(&pts, q, k));
        }
    }
}
