//! Axis-aligned bounding-volume hierarchy over triangles.
//!
//! Built once by median split along the longest centroid axis, with at most
//! [`MAX_LEAF`] primitives per leaf. Nodes are stored flat in depth-first
//! order so that the left child of an interior node immediately follows it.

use super::vec3::Vec3;

pub const MAX_LEAF: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn from_points(points: &[Vec3]) -> Aabb {
        points.iter().fold(Aabb::EMPTY, |b, &p| b.grow(p))
    }

    pub fn grow(self, p: Vec3) -> Aabb {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    /// Strict interior containment.
    pub fn contains_strict(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] > self.min[i] && p[i] < self.max[i])
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= o.max[i] && o.min[i] <= self.max[i])
    }

    /// Slab test; returns the entry distance when the ray overlaps `[0, t_max]`.
    #[inline]
    pub fn ray_entry(&self, origin: Vec3, inv_dir: Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for i in 0..3 {
            let mut near = (self.min[i] - origin[i]) * inv_dir[i];
            let mut far = (self.max[i] - origin[i]) * inv_dir[i];
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN arises for a zero direction component with the origin on a slab
            // plane; treat it as "inside this slab".
            if near.is_nan() || far.is_nan() {
                continue;
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`. Interior: index of the right child.
    offset: usize,
    /// Zero for interior nodes.
    count: usize,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub fn build(bounds: &[Aabb]) -> Bvh {
        let mut order: Vec<usize> = (0..bounds.len()).collect();
        let centroids: Vec<Vec3> = bounds.iter().map(Aabb::center).collect();
        let mut nodes = Vec::with_capacity(2 * bounds.len() / MAX_LEAF + 1);
        if !bounds.is_empty() {
            build_recursive(&mut nodes, &mut order, 0, bounds, &centroids);
        }
        Bvh { nodes, order }
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map(|n| n.bounds).unwrap_or(Aabb::EMPTY)
    }

    /// Number of primitives indexed; equals the surface count it was built from.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Visits primitives whose leaf boxes overlap the ray segment `[0, t_max]`,
    /// nearest box first. The callback receives the primitive index and the
    /// current cutoff, and may shrink the cutoff to prune farther boxes.
    pub fn traverse<F>(&self, origin: Vec3, dir: Vec3, t_max: f64, mut visit: F)
    where
        F: FnMut(usize, &mut f64),
    {
        if self.nodes.is_empty() {
            return;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut cutoff = t_max;
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        if self.nodes[0].bounds.ray_entry(origin, inv, cutoff).is_none() {
            return;
        }
        stack.push(0);
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx];
            if node.bounds.ray_entry(origin, inv, cutoff).is_none() {
                continue;
            }
            if node.count > 0 {
                for &prim in &self.order[node.offset..node.offset + node.count] {
                    visit(prim, &mut cutoff);
                }
                continue;
            }
            let (left, right) = (idx + 1, node.offset);
            let tl = self.nodes[left].bounds.ray_entry(origin, inv, cutoff);
            let tr = self.nodes[right].bounds.ray_entry(origin, inv, cutoff);
            match (tl, tr) {
                (Some(a), Some(b)) => {
                    if a <= b {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
                (Some(_), None) => stack.push(left),
                (None, Some(_)) => stack.push(right),
                (None, None) => {}
            }
        }
    }

    /// Visits primitives whose leaf boxes overlap `query` until the callback returns `true`.
    /// Returns whether the search was stopped early.
    pub fn any_in_box<F>(&self, query: &Aabb, mut test: F) -> bool
    where
        F: FnMut(usize) -> bool,
    {
        if self.nodes.is_empty() {
            return false;
        }
        let mut stack = vec![0usize];
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx];
            if !node.bounds.overlaps(query) {
                continue;
            }
            if node.count > 0 {
                for &prim in &self.order[node.offset..node.offset + node.count] {
                    if test(prim) {
                        return true;
                    }
                }
            } else {
                stack.push(node.offset);
                stack.push(idx + 1);
            }
        }
        false
    }
}

fn build_recursive(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    offset: usize,
    bounds: &[Aabb],
    centroids: &[Vec3],
) -> usize {
    let node_bounds = order
        .iter()
        .fold(Aabb::EMPTY, |b, &i| b.union(bounds[i]));
    let idx = nodes.len();
    nodes.push(Node {
        bounds: node_bounds,
        offset,
        count: order.len(),
    });
    if order.len() <= MAX_LEAF {
        return idx;
    }

    let centroid_bounds = order
        .iter()
        .fold(Aabb::EMPTY, |b, &i| b.grow(centroids[i]));
    let ext = centroid_bounds.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a][axis]
            .total_cmp(&centroids[b][axis])
            .then(a.cmp(&b))
    });

    let (left, right) = order.split_at_mut(mid);
    build_recursive(nodes, left, offset, bounds, centroids);
    let right_idx = build_recursive(nodes, right, offset + mid, bounds, centroids);
    nodes[idx].offset = right_idx;
    nodes[idx].count = 0;
    idx
}
